#include "evalrl/objectives.hpp"

#include <algorithm>
#include <cmath>

namespace evalrl {

namespace {

Eigen::Map<const Eigen::VectorXd> as_vector(std::span<const double> x) {
  return {x.data(), static_cast<Eigen::Index>(x.size())};
}

// log(1 + exp(-d)) without overflow.
double neg_log_sigmoid(double d) {
  return d >= 0.0 ? std::log1p(std::exp(-d)) : -d + std::log1p(std::exp(d));
}

double sigmoid(double d) {
  if (d >= 0.0) return 1.0 / (1.0 + std::exp(-d));
  const double e = std::exp(d);
  return e / (1.0 + e);
}

// Surrogate, KL and d(objective)/d(logits) for one group.
struct GroupTerms {
  double surrogate = 0.0;
  double kl = 0.0;
  Eigen::VectorXd dobj_dlogits;
};

GroupTerms group_terms(const PolicyParams& params, const GroupSample& g, const PolicyParams& ref,
                       const GrpoConfig& cfg, bool want_gradient) {
  const auto& r = g.rollout;
  if (r.size() == 0 || r.advantages.size() != r.size() || r.old_logprobs.size() != r.size()) {
    throw InputError("rollout vectors are empty or inconsistent");
  }
  const Eigen::VectorXd logp = policy_log_distribution(params, g.input);
  const Eigen::VectorXd logq = policy_log_distribution(ref, g.input);
  const Eigen::VectorXd p = logp.array().exp();
  const double inv_g = 1.0 / static_cast<double>(r.size());

  GroupTerms out;
  if (want_gradient) out.dobj_dlogits = Eigen::VectorXd::Zero(p.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    const int k = r.bin_indices[i];
    if (k < 0 || k >= p.size()) throw InputError("rollout bin index out of range");
    if (!std::isfinite(r.old_logprobs[i])) {
      throw InputError("sampled bin has zero probability under the old policy");
    }
    const double ratio = std::exp(logp[k] - r.old_logprobs[i]);
    const double a = r.advantages[i];
    const double unclipped = ratio * a;
    const double clipped = std::clamp(ratio, 1.0 - cfg.clip_epsilon, 1.0 + cfg.clip_epsilon) * a;
    out.surrogate += inv_g * std::min(unclipped, clipped);
    if (want_gradient && unclipped <= clipped) {
      // d ratio / d logits = ratio * (e_k - p)
      out.dobj_dlogits -= (inv_g * a * ratio) * p;
      out.dobj_dlogits[k] += inv_g * a * ratio;
    }
  }
  out.kl = categorical_kl(logp, logq);
  if (want_gradient && cfg.kl_beta != 0.0) {
    // d KL / d z_j = p_j (log p_j - log q_j - KL)
    const Eigen::VectorXd dkl = p.array() * ((logp - logq).array() - out.kl);
    out.dobj_dlogits -= cfg.kl_beta * dkl;
  }
  return out;
}

}  // namespace

void GrpoConfig::validate() const {
  if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0)) throw InputError("clip_epsilon must be in (0, 1)");
  if (!(kl_beta >= 0.0) || !std::isfinite(kl_beta)) throw InputError("kl_beta must be >= 0");
  if (group_size < 2) throw InputError("group_size must be >= 2");
  if (!(std_epsilon > 0.0)) throw InputError("std_epsilon must be > 0");
  if (updates_per_batch < 1) throw InputError("updates_per_batch must be >= 1");
  if (ref_sync_period < 0) throw InputError("ref_sync_period must be >= 0");
}

void RankingConfig::validate() const {
  if (!std::isfinite(margin) || margin < 0.0) throw InputError("margin must be finite and >= 0");
  if (!std::isfinite(center_coeff) || center_coeff < 0.0) {
    throw InputError("center_coeff must be finite and >= 0");
  }
}

ScalarRewardParams ScalarRewardParams::zeros(int feature_dim) {
  if (feature_dim < 1) throw InputError("feature dimension must be >= 1");
  return {Eigen::VectorXd::Zero(feature_dim), 0.0};
}

double ScalarRewardParams::score(std::span<const double> x) const {
  if (static_cast<Eigen::Index>(x.size()) != weights.size()) {
    throw InputError("feature length does not match reward model");
  }
  return weights.dot(as_vector(x)) + bias;
}

double grpo_loss(const PolicyParams& params, std::span<const GroupSample> groups,
                 const PolicyParams& ref, const GrpoConfig& cfg) {
  if (groups.empty()) return 0.0;
  double total = 0.0;
  for (const auto& g : groups) {
    const auto t = group_terms(params, g, ref, cfg, false);
    total += t.surrogate - cfg.kl_beta * t.kl;
  }
  return -total / static_cast<double>(groups.size());
}

LossAndGradient grpo_loss_and_gradient(const PolicyParams& params,
                                       std::span<const GroupSample> groups,
                                       const PolicyParams& ref, const GrpoConfig& cfg) {
  LossAndGradient out{0.0, PolicyGradient::zeros_like(params)};
  if (groups.empty()) return out;
  const double scale = -1.0 / static_cast<double>(groups.size());
  for (const auto& g : groups) {
    const auto t = group_terms(params, g, ref, cfg, true);
    out.loss += scale * (t.surrogate - cfg.kl_beta * t.kl);
    const Eigen::VectorXd dz = scale * t.dobj_dlogits;
    out.gradient.weights.noalias() += dz * as_vector(g.input).transpose();
    out.gradient.bias += dz;
  }
  return out;
}

double mean_kl(const PolicyParams& params, std::span<const GroupSample> groups,
               const PolicyParams& ref) {
  if (groups.empty()) return 0.0;
  double total = 0.0;
  for (const auto& g : groups) {
    total += categorical_kl(policy_log_distribution(params, g.input),
                            policy_log_distribution(ref, g.input));
  }
  return total / static_cast<double>(groups.size());
}

double mle_loss(const PolicyParams& params, std::span<const MleExample> examples) {
  return mle_loss_and_gradient(params, examples).loss;
}

LossAndGradient mle_loss_and_gradient(const PolicyParams& params,
                                      std::span<const MleExample> examples) {
  LossAndGradient out{0.0, PolicyGradient::zeros_like(params)};
  if (examples.empty()) return out;
  const double inv_n = 1.0 / static_cast<double>(examples.size());
  for (const auto& ex : examples) {
    if (!params.grid.range().contains(ex.reference)) {
      throw InputError("MLE reference outside the policy's range");
    }
    const int target = params.grid.nearest(ex.reference);
    const Eigen::VectorXd logp = policy_log_distribution(params, ex.input);
    out.loss -= inv_n * logp[target];
    Eigen::VectorXd dz = logp.array().exp();
    dz[target] -= 1.0;
    dz *= inv_n;
    out.gradient.weights.noalias() += dz * as_vector(ex.input).transpose();
    out.gradient.bias += dz;
  }
  return out;
}

std::vector<MleExample> mle_examples(std::span<const SingleEvalTask> tasks) {
  std::vector<MleExample> out;
  out.reserve(tasks.size());
  for (const auto& t : tasks) out.push_back({t.features, t.reference_score});
  return out;
}

double ranking_loss(const ScalarRewardParams& params, std::span<const RankingPair> pairs,
                    const RankingConfig& cfg) {
  return ranking_loss_and_gradient(params, pairs, cfg).first;
}

std::pair<double, ScalarRewardGradient> ranking_loss_and_gradient(
    const ScalarRewardParams& params, std::span<const RankingPair> pairs,
    const RankingConfig& cfg) {
  ScalarRewardGradient grad{Eigen::VectorXd::Zero(params.weights.size()), 0.0};
  double loss = 0.0;
  if (pairs.empty()) return {loss, grad};
  const double inv_n = 1.0 / static_cast<double>(pairs.size());
  for (const auto& pr : pairs) {
    const double rc = params.score(pr.chosen);
    const double rr = params.score(pr.rejected);
    const double d = rc - rr - cfg.margin;
    const double sum = rc + rr;
    loss += inv_n * (neg_log_sigmoid(d) + cfg.center_coeff * sum * sum);
    // d/dd of -log sigmoid(d) is -(1 - sigmoid(d)) = -sigmoid(-d)
    const double g_diff = -sigmoid(-d);
    const double g_sum = 2.0 * cfg.center_coeff * sum;
    const auto xc = as_vector(pr.chosen);
    const auto xr = as_vector(pr.rejected);
    grad.weights += inv_n * (g_diff * (xc - xr) + g_sum * (xc + xr));
    grad.bias += inv_n * 2.0 * g_sum;
  }
  return {loss, grad};
}

std::vector<RankingPair> ranking_pairs(std::span<const PairEvalTask> tasks) {
  std::vector<RankingPair> out;
  for (const auto& t : tasks) {
    if (t.reference_confidence > 0.5) {
      out.push_back({t.features_a, t.features_b});
    } else if (t.reference_confidence < 0.5) {
      out.push_back({t.features_b, t.features_a});
    }
  }
  return out;
}

}  // namespace evalrl
