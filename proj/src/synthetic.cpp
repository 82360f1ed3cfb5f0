#include "evalrl/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>

namespace evalrl {

namespace {

std::vector<double> draw_normal(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<double> v(static_cast<std::size_t>(n));
  for (auto& x : v) x = nd(rng);
  return v;
}

std::vector<double> draw_hidden(std::mt19937_64& rng, int feature_dim) {
  auto w = draw_normal(rng, feature_dim);
  if (std::all_of(w.begin(), w.end(), [](double v) { return v == 0.0; })) w[0] = 1.0;
  return w;
}

double latent_quality(std::span<const double> w, std::span<const double> x) {
  const double norm = std::sqrt(std::inner_product(w.begin(), w.end(), w.begin(), 0.0));
  return std::inner_product(w.begin(), w.end(), x.begin(), 0.0) / norm;
}

void check_sizes(int feature_dim, int n, const char* what) {
  if (feature_dim < 1) throw InputError("feature dimension must be >= 1");
  if (n < 1) throw InputError(std::string(what) + " must be >= 1");
}

}  // namespace

double noiseless_score(std::span<const double> hidden_weights, std::span<const double> x,
                       const ScoreRange& range) {
  const double mid = 0.5 * (range.min() + range.max());
  return range.clip(mid + latent_quality(hidden_weights, x) * range.width() / 6.0);
}

SyntheticSingleEnv make_synthetic_single_env(int feature_dim, int n_tasks, double noise_sd,
                                             const ScoreRange& range, std::uint64_t seed,
                                             std::string_view dimension) {
  check_sizes(feature_dim, n_tasks, "n_tasks");
  if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd)) throw InputError("noise_sd must be >= 0");
  std::mt19937_64 rng(seed);
  SyntheticSingleEnv env;
  env.hidden_weights = draw_hidden(rng, feature_dim);
  std::normal_distribution<double> noise(0.0, 1.0);
  env.tasks.reserve(static_cast<std::size_t>(n_tasks));
  for (int i = 0; i < n_tasks; ++i) {
    auto x = draw_normal(rng, feature_dim);
    double s = noiseless_score(env.hidden_weights, x, range);
    if (noise_sd > 0.0) s = range.clip(s + noise_sd * noise(rng));
    env.tasks.push_back({
        .id = std::string(dimension) + "-" + std::to_string(i),
        .features = std::move(x),
        .dimension = dimension_tag(dimension),
        .range = range,
        .reference_score = s,
    });
  }
  return env;
}

std::vector<SingleEvalTask> make_synthetic_multi_dimension_source(
    int feature_dim, int n_items, std::span<const DimensionTag> dimensions, double noise_sd,
    const ScoreRange& range, std::uint64_t seed) {
  check_sizes(feature_dim, n_items, "n_items");
  std::mt19937_64 rng(seed);
  std::vector<std::vector<double>> hidden;
  for (std::size_t d = 0; d < dimensions.size(); ++d) hidden.push_back(draw_hidden(rng, feature_dim));
  std::vector<std::vector<double>> items;
  for (int i = 0; i < n_items; ++i) items.push_back(draw_normal(rng, feature_dim));
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<SingleEvalTask> out;
  out.reserve(items.size() * dimensions.size());
  for (std::size_t d = 0; d < dimensions.size(); ++d) {
    for (std::size_t i = 0; i < items.size(); ++i) {
      double s = noiseless_score(hidden[d], items[i], range);
      if (noise_sd > 0.0) s = range.clip(s + noise_sd * noise(rng));
      out.push_back({"item-" + std::to_string(i), items[i], dimensions[d], range, s});
    }
  }
  return out;
}

int rating_level_from_quality(double quality, double scale) {
  // standard normal quintile boundaries
  static constexpr std::array<double, 4> cuts{0.8416212335729143, 0.2533471031357997,
                                              -0.2533471031357997, -0.8416212335729143};
  const double z = quality / scale;
  int level = 1;
  for (double c : cuts) {
    if (z >= c) break;
    ++level;
  }
  return level;
}

double pair_confidence(double quality_a, double quality_b, ConfidenceMode mode, double scale) {
  if (mode == ConfidenceMode::graded) {
    return confidence_from_ratings(rating_level_from_quality(quality_a, scale),
                                   rating_level_from_quality(quality_b, scale), mode);
  }
  if (quality_a > quality_b) return 1.0;
  if (quality_a < quality_b) return 0.0;
  return 0.5;
}

SyntheticPairEnv make_synthetic_pair_env(int feature_dim, int n_pairs, std::uint64_t seed,
                                         const PairEnvOptions& opts) {
  check_sizes(feature_dim, n_pairs, "n_pairs");
  if (!(opts.noise_sd >= 0.0) || !std::isfinite(opts.noise_sd)) {
    throw InputError("noise_sd must be >= 0");
  }
  std::mt19937_64 rng(seed);
  SyntheticPairEnv env;
  env.hidden_weights = draw_hidden(rng, feature_dim);
  std::normal_distribution<double> noise(0.0, 1.0);
  const double scale = std::sqrt(1.0 + opts.noise_sd * opts.noise_sd);
  for (int i = 0; i < n_pairs; ++i) {
    auto a = draw_normal(rng, feature_dim);
    auto b = draw_normal(rng, feature_dim);
    double qa = latent_quality(env.hidden_weights, a);
    double qb = latent_quality(env.hidden_weights, b);
    if (opts.noise_sd > 0.0) {
      qa += opts.noise_sd * noise(rng);
      qb += opts.noise_sd * noise(rng);
    }
    env.tasks.push_back({
        .id = "pair-" + std::to_string(i),
        .features_a = std::move(a),
        .features_b = std::move(b),
        .reference_confidence = pair_confidence(qa, qb, opts.mode, scale),
        .source_delta_r = std::nullopt,
    });
  }
  return env;
}

std::vector<RatedItem> make_synthetic_rated_items(int feature_dim, int n_prompts,
                                                  int items_per_prompt, double noise_sd,
                                                  std::uint64_t seed) {
  check_sizes(feature_dim, n_prompts, "n_prompts");
  if (items_per_prompt < 2) throw InputError("items_per_prompt must be >= 2");
  std::mt19937_64 rng(seed);
  const auto hidden = draw_hidden(rng, feature_dim);
  std::normal_distribution<double> noise(0.0, 1.0);
  const double scale = std::sqrt(1.0 + noise_sd * noise_sd);
  std::vector<RatedItem> out;
  for (int p = 0; p < n_prompts; ++p) {
    for (int k = 0; k < items_per_prompt; ++k) {
      auto x = draw_normal(rng, feature_dim);
      double q = latent_quality(hidden, x);
      if (noise_sd > 0.0) q += noise_sd * noise(rng);
      out.push_back({"prompt-" + std::to_string(p), "img-" + std::to_string(k),
                     rating_level_from_quality(q, scale), std::move(x)});
    }
  }
  return out;
}

}  // namespace evalrl
