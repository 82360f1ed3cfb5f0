#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "evalrl/core.hpp"
#include "evalrl/rewards.hpp"

namespace evalrl {

// Evenly spaced judgment values; bin k maps to min + k * (max - min) / (count - 1).
class BinGrid {
 public:
  BinGrid(int count, ScoreRange range);

  int count() const noexcept { return count_; }
  const ScoreRange& range() const noexcept { return range_; }
  double step() const noexcept { return range_.width() / (count_ - 1); }
  double value(int k) const;
  // Index of the bin nearest to v (after clipping); exact midpoints round down.
  int nearest(double v) const;

  friend bool operator==(const BinGrid&, const BinGrid&) = default;

 private:
  int count_;
  ScoreRange range_;
};

BinGrid default_single_grid();  // 21 bins over [0, 10]
BinGrid default_pair_grid();    // 11 bins over [0, 1]

// Linear-softmax evaluator: logits = weights * x + bias, one row per bin.
struct PolicyParams {
  Eigen::MatrixXd weights;
  Eigen::VectorXd bias;
  BinGrid grid;

  static PolicyParams zeros(const BinGrid& grid, int feature_dim);

  int feature_dim() const noexcept { return static_cast<int>(weights.cols()); }
  int bin_count() const noexcept { return static_cast<int>(bias.size()); }
  void validate() const;
};

// Same shapes as PolicyParams; used for gradients and update steps.
struct PolicyGradient {
  Eigen::MatrixXd weights;
  Eigen::VectorXd bias;

  static PolicyGradient zeros_like(const PolicyParams& p);
  PolicyGradient& operator+=(const PolicyGradient& o);
  PolicyGradient& operator*=(double s);
  double squared_norm() const { return weights.squaredNorm() + bias.squaredNorm(); }
};

void apply_update(PolicyParams& params, const PolicyGradient& grad, double learning_rate);

Eigen::VectorXd policy_logits(const PolicyParams& params, std::span<const double> features);
Eigen::VectorXd policy_log_distribution(const PolicyParams& params, std::span<const double> features);
Eigen::VectorXd policy_distribution(const PolicyParams& params, std::span<const double> features);

// Mean judgment under the policy.
double expected_value(const PolicyParams& params, std::span<const double> features);

// Judgment of the most probable bin (greedy decoding); lowest index on ties.
double greedy_value(const PolicyParams& params, std::span<const double> features);

// KL(p || q) from log-probabilities, summed exactly over bins.
double categorical_kl(const Eigen::VectorXd& log_p, const Eigen::VectorXd& log_q);

// What a judgment is scored against: a reference value on a range.
struct JudgmentTarget {
  ScoreRange range{0.0, 10.0};
  double reference = 0.0;
  OutputMode mode = OutputMode::single;
};

JudgmentTarget target_of(const SingleEvalTask& t);
JudgmentTarget target_of(const PairEvalTask& t);

// continuous_* or binary_* variant matching the target's mode.
RewardKind reward_kind_for(OutputMode mode, bool binary, double binary_tolerance = 0.0);

// Pair tasks are judged from the feature difference a - b.
FeatureVector policy_input(const SingleEvalTask& t);
FeatureVector policy_input(const PairEvalTask& t);

// Reward of one emitted judgment value under the given reward kind.
double judgment_reward(double value, const JudgmentTarget& target, const RewardKind& kind);

struct GroupRollout {
  std::string task_id;
  std::vector<int> bin_indices;
  std::vector<double> values;
  std::vector<double> old_logprobs;
  std::vector<double> rewards;
  std::vector<double> advantages;

  std::size_t size() const noexcept { return bin_indices.size(); }
};

// G i.i.d. draws from the old policy, seeded per call.
GroupRollout sample_group(const PolicyParams& old_params, std::span<const double> input,
                          std::string task_id, int group_size, std::uint64_t seed);
GroupRollout sample_group(const PolicyParams& old_params, const SingleEvalTask& task,
                          int group_size, std::uint64_t seed);
GroupRollout sample_group(const PolicyParams& old_params, const PairEvalTask& task,
                          int group_size, std::uint64_t seed);

// r_i from the reward module; A_i = (r_i - mean) / (population std + std_epsilon).
GroupRollout fill_rewards_and_advantages(GroupRollout rollout, const JudgmentTarget& target,
                                         const RewardKind& kind, double std_epsilon = 1e-8);

// In-place advantage normalisation of an already rewarded rollout.
void normalize_advantages(GroupRollout& rollout, double std_epsilon);

// Checkpoint schema: weights (row-major), bias, bin_count, range_min,
// range_max, feature_dim.
nlohmann::json to_json(const PolicyParams& p);
PolicyParams policy_from_json(const nlohmann::json& j);

}  // namespace evalrl
