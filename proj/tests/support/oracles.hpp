#pragma once

// Independent reference implementations used only by tests. Written from the
// definitions with plain loops; nothing here calls into the library math.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "evalrl/core.hpp"

namespace oracle {

// Rank of v among xs: 1 + #smaller + (#equal - 1) / 2.
inline double definitional_rank(const std::vector<double>& xs, double v) {
  double smaller = 0, equal = 0;
  for (double x : xs) {
    if (x < v) smaller += 1;
    if (x == v) equal += 1;
  }
  return 1 + smaller + (equal - 1) / 2;
}

inline std::optional<double> pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;  // exact for the half-integer ranks fed in here
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0 || sbb == 0) return std::nullopt;
  return sab / std::sqrt(saa * sbb);
}

struct RankOracle {
  std::optional<double> rho;
  std::optional<double> tau;
};

// O(n^2) Spearman (Pearson of definitional ranks) and Kendall tau-b
// (explicit pair counting).
inline RankOracle brute_force_rank_oracles(const std::vector<evalrl::EvaluationRecord>& recs) {
  std::vector<double> x, y;
  for (const auto& r : recs) {
    x.push_back(r.predicted);
    y.push_back(r.reference);
  }
  RankOracle out;
  if (recs.size() < 2) return out;
  std::vector<double> rx, ry;
  for (double v : x) rx.push_back(definitional_rank(x, v));
  for (double v : y) ry.push_back(definitional_rank(y, v));
  out.rho = pearson(rx, ry);

  double concordant = 0, discordant = 0, tied_x_only = 0, tied_y_only = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      const double dx = x[i] - x[j], dy = y[i] - y[j];
      if (dx == 0 && dy == 0) continue;
      if (dx == 0) {
        tied_x_only += 1;
      } else if (dy == 0) {
        tied_y_only += 1;
      } else if ((dx > 0) == (dy > 0)) {
        concordant += 1;
      } else {
        discordant += 1;
      }
    }
  }
  const double px = concordant + discordant + tied_y_only;  // pairs untied in x
  const double py = concordant + discordant + tied_x_only;  // pairs untied in y
  if (px > 0 && py > 0) out.tau = (concordant - discordant) / std::sqrt(px * py);
  return out;
}

inline double clip(double v, double lo, double hi) { return v < lo ? lo : (v > hi ? hi : v); }

inline double reward_single(double s, double lo, double hi, double ref) {
  const double c = clip(s, lo, hi);
  const double d = c > ref ? c - ref : ref - c;
  return 1.0 - 2.0 * d / (hi - lo);
}

inline double reward_pair(double p, double ref) {
  const double c = clip(p, 0.0, 1.0);
  const double d = c > ref ? c - ref : ref - c;
  return 1.0 - 2.0 * d;
}

// Linear-softmax evaluator in plain vectors: W is bins x F, row-major.
struct PlainPolicy {
  int bins = 0;
  int dim = 0;
  std::vector<double> w;  // bins * dim
  std::vector<double> b;  // bins

  std::vector<double> probs(const std::vector<double>& x) const {
    std::vector<double> z(bins);
    for (int k = 0; k < bins; ++k) {
      z[k] = b[k];
      for (int f = 0; f < dim; ++f) z[k] += w[k * dim + f] * x[f];
    }
    const double m = *std::max_element(z.begin(), z.end());
    double s = 0;
    for (double& v : z) s += (v = std::exp(v - m));
    for (double& v : z) v /= s;
    return z;
  }
};

struct PlainGroup {
  std::vector<double> x;
  std::vector<int> bins;
  std::vector<double> old_logp;
  std::vector<double> adv;
};

// Eq.-by-hand GRPO objective: negated group-averaged clipped surrogate minus
// beta * KL(pi || ref).
inline double grpo_loss(const PlainPolicy& pi, const PlainPolicy& ref,
                        const std::vector<PlainGroup>& groups, double eps, double beta) {
  double total = 0;
  for (const auto& g : groups) {
    const auto p = pi.probs(g.x);
    const auto q = ref.probs(g.x);
    double surrogate = 0;
    for (std::size_t i = 0; i < g.bins.size(); ++i) {
      const double ratio = p[g.bins[i]] / std::exp(g.old_logp[i]);
      const double clipped = clip(ratio, 1 - eps, 1 + eps);
      surrogate += std::min(ratio * g.adv[i], clipped * g.adv[i]);
    }
    surrogate /= static_cast<double>(g.bins.size());
    double kl = 0;
    for (std::size_t k = 0; k < p.size(); ++k) kl += p[k] * std::log(p[k] / q[k]);
    total += surrogate - beta * kl;
  }
  return -total / static_cast<double>(groups.size());
}

inline double mle_loss(const PlainPolicy& pi, const std::vector<std::vector<double>>& xs,
                       const std::vector<int>& targets) {
  double total = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) total -= std::log(pi.probs(xs[i])[targets[i]]);
  return total / static_cast<double>(xs.size());
}

inline double ranking_loss(const std::vector<double>& w, double b,
                           const std::vector<std::pair<std::vector<double>, std::vector<double>>>& pairs,
                           double margin, double center) {
  auto score = [&](const std::vector<double>& x) {
    double s = b;
    for (std::size_t f = 0; f < x.size(); ++f) s += w[f] * x[f];
    return s;
  };
  double total = 0;
  for (const auto& [c, r] : pairs) {
    const double rc = score(c), rr = score(r);
    total += std::log(1 + std::exp(-(rc - rr - margin))) + center * (rc + rr) * (rc + rr);
  }
  return total / static_cast<double>(pairs.size());
}

// Central difference of f along every coordinate of theta.
inline std::vector<double> central_difference(const std::function<double(const std::vector<double>&)>& f,
                                              std::vector<double> theta, double h = 1e-6) {
  std::vector<double> g(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double keep = theta[i];
    theta[i] = keep + h;
    const double up = f(theta);
    theta[i] = keep - h;
    const double down = f(theta);
    theta[i] = keep;
    g[i] = (up - down) / (2 * h);
  }
  return g;
}

// ||a - b|| / max(||a||, ||b||, floor)
inline double relative_error(const std::vector<double>& a, const std::vector<double>& b,
                             double floor = 1e-8) {
  double diff = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nb), floor});
}

// Largest remainder by hand: floor shares, then +1 to the biggest remainders,
// lower index first on equal remainders.
inline std::vector<int> largest_remainder(int total, const std::vector<int>& weights) {
  long sum = 0;
  for (int w : weights) sum += w;
  std::vector<int> out(weights.size());
  std::vector<std::pair<long, int>> rem;  // (remainder numerator, index)
  int used = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const long num = static_cast<long>(total) * weights[i];
    out[i] = static_cast<int>(num / sum);
    used += out[i];
    rem.push_back({num % sum, static_cast<int>(i)});
  }
  std::stable_sort(rem.begin(), rem.end(), [](auto a, auto b) { return a.first > b.first; });
  for (int k = 0; k < total - used; ++k) out[rem[k].second] += 1;
  return out;
}

}  // namespace oracle
