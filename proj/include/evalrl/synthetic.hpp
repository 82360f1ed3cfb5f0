#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "evalrl/core.hpp"
#include "evalrl/data.hpp"

namespace evalrl {

// Gaussian stand-ins for (prompt, image) inputs. A hidden linear map w* gives
// each feature vector a latent quality z = w*.x / |w*| ~ N(0, 1).

struct SyntheticSingleEnv {
  std::vector<double> hidden_weights;
  std::vector<SingleEvalTask> tasks;
};

// Noiseless reference: range midpoint + z * width / 6, clipped to the range.
double noiseless_score(std::span<const double> hidden_weights, std::span<const double> x,
                       const ScoreRange& range);

// x ~ N(0, I); s_ref = clip(noiseless_score(x) + N(0, noise_sd^2)).
SyntheticSingleEnv make_synthetic_single_env(int feature_dim, int n_tasks, double noise_sd,
                                             const ScoreRange& range, std::uint64_t seed,
                                             std::string_view dimension = "overall");

// One shared pool of items scored on every dimension, each through its own
// hidden map. Task ids repeat across dimensions; (id, dimension) is unique.
std::vector<SingleEvalTask> make_synthetic_multi_dimension_source(
    int feature_dim, int n_items, std::span<const DimensionTag> dimensions, double noise_sd,
    const ScoreRange& range, std::uint64_t seed);

struct PairEnvOptions {
  double noise_sd = 0.0;  // per-side perturbation of the latent quality
  ConfidenceMode mode = ConfidenceMode::discrete;
};

struct SyntheticPairEnv {
  std::vector<double> hidden_weights;
  std::vector<PairEvalTask> tasks;
};

// 1 (best) .. 5 (worst) by standard-normal quintiles of quality / scale.
int rating_level_from_quality(double quality, double scale = 1.0);

// discrete: 1 / 0 / 0.5 on the latent qualities directly; graded: through
// rating levels and confidence_from_ratings.
double pair_confidence(double quality_a, double quality_b, ConfidenceMode mode,
                       double scale = 1.0);

SyntheticPairEnv make_synthetic_pair_env(int feature_dim, int n_pairs, std::uint64_t seed,
                                         const PairEnvOptions& opts = {});

// Prompt groups of generated items with ordinal ratings, for pair-corpus construction.
std::vector<RatedItem> make_synthetic_rated_items(int feature_dim, int n_prompts,
                                                  int items_per_prompt, double noise_sd,
                                                  std::uint64_t seed);

}  // namespace evalrl
