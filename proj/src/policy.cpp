#include "evalrl/policy.hpp"

#include <cmath>
#include <numeric>
#include <random>

namespace evalrl {

namespace {

Eigen::Map<const Eigen::VectorXd> as_vector(std::span<const double> x) {
  return {x.data(), static_cast<Eigen::Index>(x.size())};
}

}  // namespace

BinGrid::BinGrid(int count, ScoreRange range) : count_(count), range_(range) {
  if (count < 2) throw InputError("bin grid needs at least 2 bins");
}

double BinGrid::value(int k) const {
  if (k < 0 || k >= count_) throw InputError("bin index out of range");
  if (k == count_ - 1) return range_.max();
  return range_.min() + k * step();
}

int BinGrid::nearest(double v) const {
  if (!std::isfinite(v)) throw InputError("cannot bin a non-finite value");
  const double pos = (range_.clip(v) - range_.min()) / step();
  const double lower = std::floor(pos);
  int k = static_cast<int>(lower);
  if (pos - lower > 0.5) ++k;
  return std::min(k, count_ - 1);
}

BinGrid default_single_grid() { return BinGrid(21, ScoreRange(0.0, 10.0)); }
BinGrid default_pair_grid() { return BinGrid(11, ScoreRange(0.0, 1.0)); }

PolicyParams PolicyParams::zeros(const BinGrid& grid, int feature_dim) {
  if (feature_dim < 1) throw InputError("feature dimension must be >= 1");
  return {Eigen::MatrixXd::Zero(grid.count(), feature_dim), Eigen::VectorXd::Zero(grid.count()),
          grid};
}

void PolicyParams::validate() const {
  if (weights.rows() != grid.count() || bias.size() != grid.count()) {
    throw InputError("policy shape does not match its bin grid");
  }
  if (!weights.allFinite() || !bias.allFinite()) throw InputError("policy has non-finite entries");
}

PolicyGradient PolicyGradient::zeros_like(const PolicyParams& p) {
  return {Eigen::MatrixXd::Zero(p.weights.rows(), p.weights.cols()),
          Eigen::VectorXd::Zero(p.bias.size())};
}

PolicyGradient& PolicyGradient::operator+=(const PolicyGradient& o) {
  weights += o.weights;
  bias += o.bias;
  return *this;
}

PolicyGradient& PolicyGradient::operator*=(double s) {
  weights *= s;
  bias *= s;
  return *this;
}

void apply_update(PolicyParams& params, const PolicyGradient& grad, double learning_rate) {
  params.weights -= learning_rate * grad.weights;
  params.bias -= learning_rate * grad.bias;
}

Eigen::VectorXd policy_logits(const PolicyParams& params, std::span<const double> features) {
  if (static_cast<int>(features.size()) != params.feature_dim()) {
    throw InputError("feature length " + std::to_string(features.size()) +
                     " does not match policy feature dimension " +
                     std::to_string(params.feature_dim()));
  }
  return params.weights * as_vector(features) + params.bias;
}

Eigen::VectorXd policy_log_distribution(const PolicyParams& params,
                                        std::span<const double> features) {
  Eigen::VectorXd z = policy_logits(params, features);
  const double m = z.maxCoeff();
  const double lse = m + std::log((z.array() - m).exp().sum());
  return z.array() - lse;
}

Eigen::VectorXd policy_distribution(const PolicyParams& params, std::span<const double> features) {
  Eigen::VectorXd z = policy_logits(params, features);
  Eigen::VectorXd e = (z.array() - z.maxCoeff()).exp();
  return e / e.sum();
}

double greedy_value(const PolicyParams& params, std::span<const double> features) {
  const Eigen::VectorXd z = policy_logits(params, features);
  Eigen::Index k = 0;
  z.maxCoeff(&k);
  return params.grid.value(static_cast<int>(k));
}

double expected_value(const PolicyParams& params, std::span<const double> features) {
  const Eigen::VectorXd p = policy_distribution(params, features);
  double mean = 0.0;
  for (int k = 0; k < p.size(); ++k) mean += p[k] * params.grid.value(k);
  return mean;
}

double categorical_kl(const Eigen::VectorXd& log_p, const Eigen::VectorXd& log_q) {
  return (log_p.array().exp() * (log_p - log_q).array()).sum();
}

JudgmentTarget target_of(const SingleEvalTask& t) {
  return {t.range, t.reference_score, OutputMode::single};
}

JudgmentTarget target_of(const PairEvalTask& t) {
  return {ScoreRange(0.0, 1.0), t.reference_confidence, OutputMode::pair};
}

RewardKind reward_kind_for(OutputMode mode, bool binary, double binary_tolerance) {
  if (mode == OutputMode::single) {
    return {binary ? RewardVariant::binary_single : RewardVariant::continuous_single,
            binary_tolerance};
  }
  return {binary ? RewardVariant::binary_pair : RewardVariant::continuous_pair, binary_tolerance};
}

FeatureVector policy_input(const SingleEvalTask& t) { return t.features; }

FeatureVector policy_input(const PairEvalTask& t) {
  if (t.features_a.size() != t.features_b.size()) {
    throw InputError("pair task sides differ in feature length");
  }
  FeatureVector d(t.features_a.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = t.features_a[i] - t.features_b[i];
  return d;
}

double judgment_reward(double value, const JudgmentTarget& target, const RewardKind& kind) {
  switch (kind.variant) {
    case RewardVariant::continuous_single:
      return reward_single(value, target.range, target.reference);
    case RewardVariant::continuous_pair:
      return reward_pair(value, target.reference);
    case RewardVariant::binary_single:
    case RewardVariant::binary_pair:
      return reward_binary(value, target.reference, kind.binary_tolerance);
  }
  return parse_failure_reward(kind);
}

GroupRollout sample_group(const PolicyParams& old_params, std::span<const double> input,
                          std::string task_id, int group_size, std::uint64_t seed) {
  if (group_size < 2) throw InputError("group size must be >= 2");
  const Eigen::VectorXd logp = policy_log_distribution(old_params, input);
  std::vector<double> cdf(static_cast<std::size_t>(logp.size()));
  double acc = 0.0;
  for (int k = 0; k < logp.size(); ++k) cdf[k] = acc += std::exp(logp[k]);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, acc);
  GroupRollout out;
  out.task_id = std::move(task_id);
  for (int i = 0; i < group_size; ++i) {
    const double u = unif(rng);
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    int k = static_cast<int>(std::min<std::ptrdiff_t>(it - cdf.begin(), logp.size() - 1));
    // never emit a bin whose probability underflowed to zero
    while (std::exp(logp[k]) == 0.0 && k > 0) --k;
    out.bin_indices.push_back(k);
    out.values.push_back(old_params.grid.value(k));
    out.old_logprobs.push_back(logp[k]);
  }
  out.rewards.assign(group_size, 0.0);
  out.advantages.assign(group_size, 0.0);
  return out;
}

GroupRollout sample_group(const PolicyParams& old_params, const SingleEvalTask& task,
                          int group_size, std::uint64_t seed) {
  return sample_group(old_params, task.features, task.id, group_size, seed);
}

GroupRollout sample_group(const PolicyParams& old_params, const PairEvalTask& task,
                          int group_size, std::uint64_t seed) {
  return sample_group(old_params, policy_input(task), task.id, group_size, seed);
}

void normalize_advantages(GroupRollout& rollout, double std_epsilon) {
  if (!(std_epsilon > 0.0)) throw InputError("std_epsilon must be > 0");
  const auto& r = rollout.rewards;
  if (r.empty()) throw InputError("cannot normalise an empty group");
  // Shifted by r[0] so a group of equal rewards centres to exactly zero.
  const double n = static_cast<double>(r.size());
  double mean = 0.0;
  for (double v : r) mean += v - r[0];
  mean /= n;
  double var = 0.0;
  for (double v : r) var += (v - r[0] - mean) * (v - r[0] - mean);
  const double sd = std::sqrt(var / n);
  rollout.advantages.resize(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    rollout.advantages[i] = sd > 0.0 ? (r[i] - r[0] - mean) / (sd + std_epsilon) : 0.0;
  }
}

GroupRollout fill_rewards_and_advantages(GroupRollout rollout, const JudgmentTarget& target,
                                         const RewardKind& kind, double std_epsilon) {
  rollout.rewards.resize(rollout.values.size());
  for (std::size_t i = 0; i < rollout.values.size(); ++i) {
    rollout.rewards[i] = judgment_reward(rollout.values[i], target, kind);
  }
  normalize_advantages(rollout, std_epsilon);
  return rollout;
}

nlohmann::json to_json(const PolicyParams& p) {
  std::vector<double> w;
  w.reserve(static_cast<std::size_t>(p.weights.size()));
  for (Eigen::Index r = 0; r < p.weights.rows(); ++r) {
    for (Eigen::Index c = 0; c < p.weights.cols(); ++c) w.push_back(p.weights(r, c));
  }
  return {{"weights", w},
          {"bias", std::vector<double>(p.bias.data(), p.bias.data() + p.bias.size())},
          {"bin_count", p.grid.count()},
          {"range_min", p.grid.range().min()},
          {"range_max", p.grid.range().max()},
          {"feature_dim", p.feature_dim()}};
}

PolicyParams policy_from_json(const nlohmann::json& j) {
  try {
    const int bins = j.at("bin_count").get<int>();
    const int dim = j.at("feature_dim").get<int>();
    PolicyParams p = PolicyParams::zeros(
        BinGrid(bins, ScoreRange(j.at("range_min").get<double>(), j.at("range_max").get<double>())),
        dim);
    const auto w = j.at("weights").get<std::vector<double>>();
    const auto b = j.at("bias").get<std::vector<double>>();
    if (w.size() != static_cast<std::size_t>(bins) * dim || b.size() != static_cast<std::size_t>(bins)) {
      throw InputError("checkpoint weights/bias sizes do not match bin_count x feature_dim");
    }
    for (int r = 0; r < bins; ++r) {
      for (int c = 0; c < dim; ++c) p.weights(r, c) = w[static_cast<std::size_t>(r) * dim + c];
      p.bias[r] = b[r];
    }
    p.validate();
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed checkpoint: ") + e.what());
  }
}

}  // namespace evalrl
