#pragma once

#include <span>
#include <utility>
#include <vector>

#include "evalrl/policy.hpp"

namespace evalrl {

struct GrpoConfig {
  double clip_epsilon = 0.2;
  double kl_beta = 0.04;
  int group_size = 8;
  double std_epsilon = 1e-8;
  int updates_per_batch = 1;
  int ref_sync_period = 0;  // 0 keeps the reference at the initial policy

  void validate() const;
};

struct RankingConfig {
  double margin = 0.0;
  double center_coeff = 1.0;

  void validate() const;
};

// Scalar utility r(x) = weights . x + bias for the Bradley-Terry baseline.
struct ScalarRewardParams {
  Eigen::VectorXd weights;
  double bias = 0.0;

  static ScalarRewardParams zeros(int feature_dim);
  double score(std::span<const double> x) const;
};

struct ScalarRewardGradient {
  Eigen::VectorXd weights;
  double bias = 0.0;
};

// One GRPO group together with the policy input it was sampled for.
struct GroupSample {
  GroupRollout rollout;
  FeatureVector input;
};

struct LossAndGradient {
  double loss = 0.0;
  PolicyGradient gradient;
};

// Negated clipped surrogate with exact categorical KL penalty, averaged over
// groups:
//   -mean_g [ 1/G sum_i min(rho_i A_i, clip(rho_i, 1-eps, 1+eps) A_i)
//             - beta KL(pi(.|q_g) || pi_ref(.|q_g)) ]
// with rho_i = pi(o_i|q) / pi_old(o_i|q) taken from the recorded old log-probs.
double grpo_loss(const PolicyParams& params, std::span<const GroupSample> groups,
                 const PolicyParams& ref, const GrpoConfig& cfg);

// Exact gradient of grpo_loss. Where the clipped branch is selected and binds
// the ratio term contributes nothing; ties take the unclipped branch.
LossAndGradient grpo_loss_and_gradient(const PolicyParams& params,
                                       std::span<const GroupSample> groups,
                                       const PolicyParams& ref, const GrpoConfig& cfg);

// Mean KL(pi || pi_ref) over the groups' inputs.
double mean_kl(const PolicyParams& params, std::span<const GroupSample> groups,
               const PolicyParams& ref);

// Cross-entropy to the bin nearest each reference (ties round down).
struct MleExample {
  FeatureVector input;
  double reference = 0.0;
};

double mle_loss(const PolicyParams& params, std::span<const MleExample> examples);
LossAndGradient mle_loss_and_gradient(const PolicyParams& params,
                                      std::span<const MleExample> examples);
std::vector<MleExample> mle_examples(std::span<const SingleEvalTask> tasks);

// Chosen / rejected feature vectors.
struct RankingPair {
  FeatureVector chosen;
  FeatureVector rejected;
};

// mean over pairs of -log sigmoid(r_c - r_r - m) + center_coeff * (r_c + r_r)^2
double ranking_loss(const ScalarRewardParams& params, std::span<const RankingPair> pairs,
                    const RankingConfig& cfg);
std::pair<double, ScalarRewardGradient> ranking_loss_and_gradient(
    const ScalarRewardParams& params, std::span<const RankingPair> pairs, const RankingConfig& cfg);

// Better side first; ties (confidence exactly 0.5) carry no preference and are skipped.
std::vector<RankingPair> ranking_pairs(std::span<const PairEvalTask> tasks);

}  // namespace evalrl
