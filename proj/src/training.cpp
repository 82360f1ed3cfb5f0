#include "evalrl/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

namespace evalrl {

namespace {

constexpr std::uint64_t kBatchStream = 0xB;
constexpr std::uint64_t kSampleStream = 0x5;

double sigmoid(double d) {
  if (d >= 0.0) return 1.0 / (1.0 + std::exp(-d));
  const double e = std::exp(d);
  return e / (1.0 + e);
}

bool finite(const EvaluatorState& s) {
  auto ok = [](const std::optional<PolicyParams>& p) {
    return !p || (p->weights.allFinite() && p->bias.allFinite());
  };
  return ok(s.single) && ok(s.pair) &&
         (!s.ranker || (s.ranker->weights.allFinite() && std::isfinite(s.ranker->bias)));
}

// Expected continuous reward of the policy's distribution; a logging quantity.
double expected_reward(const PolicyParams& p, std::span<const double> input,
                       const JudgmentTarget& target) {
  const Eigen::VectorXd dist = policy_distribution(p, input);
  const RewardKind kind = reward_kind_for(target.mode, false);
  double r = 0.0;
  for (int k = 0; k < dist.size(); ++k) r += dist[k] * judgment_reward(p.grid.value(k), target, kind);
  return r;
}

// Weighted merge of per-head losses: each head's mean is scaled by its share
// of the batch so the total is the mean over all groups.
struct HeadResult {
  std::size_t count = 0;
  LossAndGradient lg;
};

CurveRow grpo_step(const TrainingEnv& env, const TrainConfig& cfg, EvaluatorState& state,
                   const EvaluatorState& ref, std::span<const BatchItem> batch,
                   std::uint64_t seed, long step) {
  const EvaluatorState old = state;
  const bool binary = cfg.objective == Objective::grpo_binary;
  const RewardKind single_kind = reward_kind_for(OutputMode::single, binary, cfg.binary_tolerance_single);
  const RewardKind pair_kind = reward_kind_for(OutputMode::pair, binary, cfg.binary_tolerance_pair);
  const std::uint64_t step_seed = derive_seed(seed, static_cast<std::uint64_t>(step), kSampleStream);

  std::vector<GroupSample> single_groups, pair_groups;
  double reward_sum = 0.0, abs_adv_sum = 0.0;
  std::size_t samples = 0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const std::uint64_t s = derive_seed(step_seed, b);
    GroupSample g;
    if (!batch[b].pair) {
      const auto& task = env.single_train[batch[b].index];
      g.input = policy_input(task);
      g.rollout = fill_rewards_and_advantages(sample_group(*old.single, task, cfg.grpo.group_size, s),
                                              target_of(task), single_kind, cfg.grpo.std_epsilon);
    } else {
      const auto& task = env.pair_train[batch[b].index];
      g.input = policy_input(task);
      g.rollout = fill_rewards_and_advantages(sample_group(*old.pair, task, cfg.grpo.group_size, s),
                                              target_of(task), pair_kind, cfg.grpo.std_epsilon);
    }
    for (std::size_t i = 0; i < g.rollout.size(); ++i) {
      reward_sum += g.rollout.rewards[i];
      abs_adv_sum += std::abs(g.rollout.advantages[i]);
    }
    samples += g.rollout.size();
    (batch[b].pair ? pair_groups : single_groups).push_back(std::move(g));
  }

  CurveRow row{step, 0.0, reward_sum / samples, abs_adv_sum / samples, 0.0};
  const double n_groups = static_cast<double>(single_groups.size() + pair_groups.size());
  for (int u = 0; u < cfg.grpo.updates_per_batch; ++u) {
    double loss = 0.0, kl = 0.0;
    auto update_head = [&](std::optional<PolicyParams>& head, const std::optional<PolicyParams>& ref_head,
                           const std::vector<GroupSample>& groups) {
      if (groups.empty()) return;
      const double share = static_cast<double>(groups.size()) / n_groups;
      auto lg = grpo_loss_and_gradient(*head, groups, *ref_head, cfg.grpo);
      loss += share * lg.loss;
      if (u == 0) kl += share * mean_kl(*head, groups, *ref_head);
      lg.gradient *= share;
      apply_update(*head, lg.gradient, cfg.optimizer.learning_rate);
    };
    update_head(state.single, ref.single, single_groups);
    update_head(state.pair, ref.pair, pair_groups);
    if (u == 0) {
      row.loss = loss;
      row.mean_kl = kl;
    }
    if (!std::isfinite(loss)) {
      row.loss = loss;
      break;
    }
  }
  return row;
}

CurveRow mle_step(const TrainingEnv& env, const TrainConfig& cfg, EvaluatorState& state,
                  const EvaluatorState& ref, std::span<const BatchItem> batch, long step) {
  std::vector<MleExample> single_ex, pair_ex;
  double reward_sum = 0.0, kl_sum = 0.0;
  for (const auto& b : batch) {
    if (!b.pair) {
      const auto& t = env.single_train[b.index];
      single_ex.push_back({t.features, t.reference_score});
      reward_sum += expected_reward(*state.single, t.features, target_of(t));
      kl_sum += categorical_kl(policy_log_distribution(*state.single, t.features),
                               policy_log_distribution(*ref.single, t.features));
    } else {
      const auto& t = env.pair_train[b.index];
      const auto x = policy_input(t);
      pair_ex.push_back({x, t.reference_confidence});
      reward_sum += expected_reward(*state.pair, x, target_of(t));
      kl_sum += categorical_kl(policy_log_distribution(*state.pair, x),
                               policy_log_distribution(*ref.pair, x));
    }
  }
  const double n = static_cast<double>(batch.size());
  CurveRow row{step, 0.0, reward_sum / n, 0.0, kl_sum / n};
  auto update_head = [&](std::optional<PolicyParams>& head, const std::vector<MleExample>& ex) {
    if (ex.empty()) return;
    const double share = static_cast<double>(ex.size()) / n;
    auto lg = mle_loss_and_gradient(*head, ex);
    row.loss += share * lg.loss;
    lg.gradient *= share;
    apply_update(*head, lg.gradient, cfg.optimizer.learning_rate);
  };
  update_head(state.single, single_ex);
  update_head(state.pair, pair_ex);
  return row;
}

CurveRow ranking_step(const TrainingEnv& env, const TrainConfig& cfg, EvaluatorState& state,
                      std::span<const BatchItem> batch, long step) {
  std::vector<PairEvalTask> tasks;
  tasks.reserve(batch.size());
  double reward_sum = 0.0;
  auto& ranker = *state.ranker;
  for (const auto& b : batch) {
    const auto& t = env.pair_train[b.index];
    tasks.push_back(t);
    reward_sum += reward_pair(sigmoid(ranker.score(t.features_a) - ranker.score(t.features_b)),
                              t.reference_confidence);
  }
  CurveRow row{step, 0.0, reward_sum / static_cast<double>(batch.size()), 0.0, 0.0};
  const auto pairs = ranking_pairs(tasks);
  if (pairs.empty()) return row;
  auto [loss, grad] = ranking_loss_and_gradient(ranker, pairs, cfg.ranking);
  row.loss = loss;
  ranker.weights -= cfg.optimizer.learning_rate * grad.weights;
  ranker.bias -= cfg.optimizer.learning_rate * grad.bias;
  return row;
}

template <typename Task>
std::vector<Task> rejection_select(const PolicyParams& trained, std::span<const Task> tasks,
                                   const RejectionConfig& cfg, std::uint64_t seed) {
  if (cfg.budget < 1) throw InputError("rejection budget must be >= 1");
  if (std::isnan(cfg.threshold)) throw InputError("rejection threshold must not be NaN");
  std::vector<std::pair<double, std::size_t>> hard;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const auto target = target_of(tasks[i]);
    const auto kind = reward_kind_for(target.mode, cfg.binary, cfg.binary_tolerance);
    auto r = fill_rewards_and_advantages(sample_group(trained, tasks[i], cfg.group_size, derive_seed(seed, i)),
                                         target, kind);
    double mean = 0.0;
    for (double v : r.rewards) mean += v;
    mean /= static_cast<double>(r.rewards.size());
    if (mean < cfg.threshold) hard.emplace_back(mean, i);
  }
  if (hard.empty()) {
    throw InputError("rejection sampling kept no tasks; no mean group reward is below the threshold " +
                     std::to_string(cfg.threshold) + ", raise it");
  }
  std::sort(hard.begin(), hard.end());
  if (hard.size() > static_cast<std::size_t>(cfg.budget)) hard.resize(static_cast<std::size_t>(cfg.budget));
  std::vector<std::size_t> keep;
  for (const auto& h : hard) keep.push_back(h.second);
  std::sort(keep.begin(), keep.end());
  std::vector<Task> out;
  for (std::size_t i : keep) out.push_back(tasks[i]);
  return out;
}

}  // namespace

std::vector<BatchItem> draw_batch(const TrainingEnv& env, int batch_size, std::uint64_t seed,
                                  long step, bool pairs_only) {
  const std::size_t n_single = pairs_only ? 0 : env.single_train.size();
  const std::size_t n_total = n_single + env.pair_train.size();
  if (n_total == 0) throw InputError("no training tasks to draw a batch from");
  std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(step), kBatchStream));
  std::uniform_int_distribution<std::size_t> pick(0, n_total - 1);
  std::vector<BatchItem> batch(static_cast<std::size_t>(batch_size));
  for (auto& b : batch) {
    const std::size_t k = pick(rng);
    b = k < n_single ? BatchItem{false, k} : BatchItem{true, k - n_single};
  }
  return batch;
}

Objective parse_objective(std::string_view s) {
  if (s == "grpo_continuous") return Objective::grpo_continuous;
  if (s == "grpo_binary") return Objective::grpo_binary;
  if (s == "mle") return Objective::mle;
  if (s == "ranking") return Objective::ranking;
  throw InputError("unknown objective '" + std::string(s) +
                   "' (expected grpo_continuous, grpo_binary, mle or ranking)");
}

std::string_view to_string(Objective o) {
  switch (o) {
    case Objective::grpo_continuous: return "grpo_continuous";
    case Objective::grpo_binary: return "grpo_binary";
    case Objective::mle: return "mle";
    case Objective::ranking: return "ranking";
  }
  return "?";
}

bool is_grpo(Objective o) noexcept {
  return o == Objective::grpo_continuous || o == Objective::grpo_binary;
}

void OptimizerConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw InputError("learning_rate must be positive");
  }
  if (batch_size < 1) throw InputError("batch_size must be >= 1");
  if (steps < 0) throw InputError("steps must be >= 0");
}

void TrainConfig::validate() const {
  grpo.validate();
  ranking.validate();
  optimizer.validate();
  if (!(binary_tolerance_single >= 0.0) || !(binary_tolerance_pair >= 0.0)) {
    throw InputError("binary tolerances must be >= 0");
  }
  if (checkpoint_interval < 0) throw InputError("checkpoint_interval must be >= 0");
}

EvaluatorState initial_state(const TrainingEnv& env, Objective objective) {
  EvaluatorState s;
  if (objective == Objective::ranking) {
    s.ranker = ScalarRewardParams::zeros(env.feature_dim);
    return s;
  }
  if (env.has_single() || !env.single_test.empty()) {
    s.single = PolicyParams::zeros(env.single_grid, env.feature_dim);
  }
  if (env.has_pair() || !env.pair_test.empty()) {
    s.pair = PolicyParams::zeros(env.pair_grid, env.feature_dim);
  }
  return s;
}

std::vector<EvaluationRecord> single_records(const EvaluatorState& state,
                                             std::span<const SingleEvalTask> tasks) {
  std::vector<EvaluationRecord> out;
  out.reserve(tasks.size());
  for (const auto& t : tasks) {
    double pred = 0.0;
    if (state.single) {
      pred = greedy_value(*state.single, t.features);
    } else if (state.ranker) {
      pred = state.ranker->score(t.features);
    } else {
      throw InputError("no model can score single-wise tasks");
    }
    out.push_back({t.id, pred, t.reference_score});
  }
  return out;
}

std::vector<EvaluationRecord> pair_records(const EvaluatorState& state,
                                           std::span<const PairEvalTask> tasks) {
  std::vector<EvaluationRecord> out;
  out.reserve(tasks.size());
  for (const auto& t : tasks) {
    double pred = 0.0;
    if (state.pair) {
      pred = greedy_value(*state.pair, policy_input(t));
    } else if (state.ranker) {
      pred = sigmoid(state.ranker->score(t.features_a) - state.ranker->score(t.features_b));
    } else {
      throw InputError("no model can score pairwise tasks");
    }
    out.push_back({t.id, pred, t.reference_confidence});
  }
  return out;
}

HeldOutMetrics evaluate(const EvaluatorState& state, const TrainingEnv& env) {
  HeldOutMetrics m;
  if (!env.single_test.empty() && (state.single || state.ranker)) {
    const auto rec = single_records(state, env.single_test);
    m.single = compute_report(rec);
  }
  if (!env.pair_test.empty() && (state.pair || state.ranker)) {
    const auto rec = pair_records(state, env.pair_test);
    m.pair = compute_pairwise_report(rec);
  }
  return m;
}

TrainingReport train(const TrainingEnv& env, const TrainConfig& cfg, std::uint64_t seed,
                     const TrainStart& start) {
  cfg.validate();
  if (cfg.objective == Objective::ranking && !env.has_pair()) {
    throw InputError("the ranking objective needs pairwise training tasks");
  }
  if (!env.has_single() && !env.has_pair()) throw InputError("no training tasks");
  for (const auto& t : env.single_train) t.validate(env.feature_dim);
  for (const auto& t : env.pair_train) t.validate(env.feature_dim);

  EvaluatorState state = start.state ? *start.state : initial_state(env, cfg.objective);
  if (cfg.objective != Objective::ranking) {
    if ((env.has_single() && !state.single) || (env.has_pair() && !state.pair)) {
      throw InputError("start state lacks a policy head for the training tasks");
    }
  } else if (!state.ranker) {
    throw InputError("start state lacks a ranking model");
  }
  EvaluatorState ref = start.reference ? *start.reference : state;

  TrainingReport report;
  report.initial_metrics = evaluate(state, env);
  const bool pairs_only = cfg.objective == Objective::ranking;
  for (int i = 1; i <= cfg.optimizer.steps; ++i) {
    const long step = start.step_offset + i;
    const auto batch = draw_batch(env, cfg.optimizer.batch_size, seed, step, pairs_only);
    CurveRow row;
    switch (cfg.objective) {
      case Objective::grpo_continuous:
      case Objective::grpo_binary:
        row = grpo_step(env, cfg, state, ref, batch, seed, step);
        break;
      case Objective::mle:
        row = mle_step(env, cfg, state, ref, batch, step);
        break;
      case Objective::ranking:
        row = ranking_step(env, cfg, state, batch, step);
        break;
    }
    if (!std::isfinite(row.loss) || !finite(state)) {
      throw DivergenceError("non-finite loss at step " + std::to_string(step), step - 1);
    }
    report.curve.push_back(row);
    if (cfg.grpo.ref_sync_period > 0 && i % cfg.grpo.ref_sync_period == 0) ref = state;
    if (cfg.checkpoint_interval > 0 && i % cfg.checkpoint_interval == 0) {
      report.checkpoints.push_back({step, state});
    }
  }
  report.final_metrics = evaluate(state, env);
  report.final_state = std::move(state);
  return report;
}

std::vector<SingleEvalTask> rejection_sample_enhance(const PolicyParams& trained,
                                                     std::span<const SingleEvalTask> tasks,
                                                     const RejectionConfig& cfg,
                                                     std::uint64_t seed) {
  return rejection_select(trained, tasks, cfg, seed);
}

std::vector<PairEvalTask> rejection_sample_enhance(const PolicyParams& trained,
                                                   std::span<const PairEvalTask> tasks,
                                                   const RejectionConfig& cfg, std::uint64_t seed) {
  return rejection_select(trained, tasks, cfg, seed);
}

std::string curve_csv(std::span<const CurveRow> curve) {
  std::string out = "step,loss,mean_reward,mean_abs_advantage,mean_kl\n";
  char buf[160];
  for (const auto& r : curve) {
    std::snprintf(buf, sizeof buf, "%ld,%.17g,%.17g,%.17g,%.17g\n", r.step, r.loss, r.mean_reward,
                  r.mean_abs_advantage, r.mean_kl);
    out += buf;
  }
  return out;
}

nlohmann::json to_json(const HeldOutMetrics& m) {
  nlohmann::json j = nlohmann::json::object();
  j["single"] = m.single ? to_json(*m.single) : nlohmann::json(nullptr);
  j["pair"] = m.pair ? to_json(*m.pair) : nlohmann::json(nullptr);
  return j;
}

nlohmann::json to_json(const ScalarRewardParams& p) {
  return {{"weights", std::vector<double>(p.weights.data(), p.weights.data() + p.weights.size())},
          {"bias", p.bias},
          {"feature_dim", p.weights.size()}};
}

}  // namespace evalrl
