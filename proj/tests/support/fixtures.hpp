#pragma once

// Random problem instances and converters shared by unit and acceptance tests.

#include <cmath>
#include <random>
#include <vector>

#include "evalrl/objectives.hpp"
#include "oracles.hpp"

namespace fixtures {

using namespace evalrl;

inline std::vector<double> flatten(const PolicyParams& p) {
  std::vector<double> t;
  for (int k = 0; k < p.bin_count(); ++k) {
    for (int f = 0; f < p.feature_dim(); ++f) t.push_back(p.weights(k, f));
  }
  for (int k = 0; k < p.bin_count(); ++k) t.push_back(p.bias(k));
  return t;
}

inline std::vector<double> flatten(const PolicyGradient& g) {
  std::vector<double> t;
  for (int k = 0; k < g.weights.rows(); ++k) {
    for (int f = 0; f < g.weights.cols(); ++f) t.push_back(g.weights(k, f));
  }
  for (int k = 0; k < g.bias.size(); ++k) t.push_back(g.bias(k));
  return t;
}

inline PolicyParams unflatten(const std::vector<double>& t, const BinGrid& grid, int dim) {
  auto p = PolicyParams::zeros(grid, dim);
  std::size_t i = 0;
  for (int k = 0; k < grid.count(); ++k) {
    for (int f = 0; f < dim; ++f) p.weights(k, f) = t[i++];
  }
  for (int k = 0; k < grid.count(); ++k) p.bias(k) = t[i++];
  return p;
}

inline oracle::PlainPolicy plain(const PolicyParams& p) {
  oracle::PlainPolicy o;
  o.bins = p.bin_count();
  o.dim = p.feature_dim();
  const auto t = flatten(p);
  o.w.assign(t.begin(), t.begin() + o.bins * o.dim);
  o.b.assign(t.begin() + o.bins * o.dim, t.end());
  return o;
}

inline std::vector<double> normal_vector(std::mt19937_64& rng, int n, double sd = 1.0) {
  std::normal_distribution<double> d(0, sd);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

inline PolicyParams random_policy(std::mt19937_64& rng, const BinGrid& grid, int dim, double sd) {
  auto p = PolicyParams::zeros(grid, dim);
  std::normal_distribution<double> d(0, sd);
  for (int k = 0; k < grid.count(); ++k) {
    p.bias(k) = d(rng);
    for (int f = 0; f < dim; ++f) p.weights(k, f) = d(rng);
  }
  return p;
}

inline PolicyParams perturbed(std::mt19937_64& rng, const PolicyParams& p, double sd) {
  auto t = flatten(p);
  std::normal_distribution<double> d(0, sd);
  for (auto& x : t) x += d(rng);
  return unflatten(t, p.grid, p.feature_dim());
}

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

struct GrpoInstance {
  PolicyParams params;
  PolicyParams old;
  PolicyParams ref;
  std::vector<GroupSample> groups;
  GrpoConfig cfg;
};

inline std::vector<oracle::PlainGroup> plain_groups(const std::vector<GroupSample>& groups) {
  std::vector<oracle::PlainGroup> out;
  for (const auto& g : groups) {
    out.push_back({g.input, g.rollout.bin_indices, g.rollout.old_logprobs, g.rollout.advantages});
  }
  return out;
}

// Smallest distance of any sampled ratio to a clip boundary.
inline double boundary_margin(const GrpoInstance& in) {
  double m = INFINITY;
  const auto pi = plain(in.params);
  for (const auto& g : in.groups) {
    const auto p = pi.probs(g.input);
    for (std::size_t i = 0; i < g.rollout.size(); ++i) {
      const double ratio = p[g.rollout.bin_indices[i]] / std::exp(g.rollout.old_logprobs[i]);
      m = std::min({m, std::abs(ratio - (1 - in.cfg.clip_epsilon)),
                    std::abs(ratio - (1 + in.cfg.clip_epsilon))});
    }
  }
  return m;
}

// Bins 5..21, F 2..8, G 2..8; params drawn near old so that some ratios sit
// inside the clip interval and some outside. Redrawn until every ratio is at
// least 1e-3 from a clip boundary.
inline GrpoInstance random_grpo_instance(std::mt19937_64& rng) {
  for (;;) {
    const int bins = uniform_int(rng, 5, 21), dim = uniform_int(rng, 2, 8);
    const int G = uniform_int(rng, 2, 8), n_groups = uniform_int(rng, 1, 4);
    const BinGrid grid(bins, ScoreRange(0, 10));
    const auto base = random_policy(rng, grid, dim, 0.5);
    GrpoInstance in{base, base, base, {}, {}};
    in.old = perturbed(rng, in.params, 0.25);
    in.ref = perturbed(rng, in.params, 0.5);
    in.cfg.clip_epsilon = std::uniform_real_distribution<double>(0.1, 0.3)(rng);
    in.cfg.kl_beta = std::uniform_real_distribution<double>(0.0, 0.2)(rng);
    std::uniform_real_distribution<double> reward(-1, 1);
    for (int g = 0; g < n_groups; ++g) {
      GroupSample s;
      s.input = normal_vector(rng, dim);
      s.rollout = sample_group(in.old, s.input, "g", G, rng());
      for (auto& r : s.rollout.rewards) r = reward(rng);
      normalize_advantages(s.rollout, 1e-8);
      in.groups.push_back(std::move(s));
    }
    if (boundary_margin(in) > 1e-3) return in;
  }
}

// Oracle target: nearest grid value by exhaustive search, lower index on ties.
inline int nearest_bin(const BinGrid& grid, double v) {
  int best = 0;
  for (int k = 1; k < grid.count(); ++k) {
    if (std::abs(grid.value(k) - v) < std::abs(grid.value(best) - v)) best = k;
  }
  return best;
}

}  // namespace fixtures
