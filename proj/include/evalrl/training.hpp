#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "evalrl/metrics.hpp"
#include "evalrl/objectives.hpp"

namespace evalrl {

enum class Objective { grpo_continuous, grpo_binary, mle, ranking };

Objective parse_objective(std::string_view s);
std::string_view to_string(Objective o);
bool is_grpo(Objective o) noexcept;

struct OptimizerConfig {
  double learning_rate = 0.05;
  int batch_size = 64;
  int steps = 2000;

  void validate() const;
};

struct TrainConfig {
  Objective objective = Objective::grpo_continuous;
  GrpoConfig grpo;
  RankingConfig ranking;
  OptimizerConfig optimizer;
  double binary_tolerance_single = 0.0;
  double binary_tolerance_pair = 0.0;
  int checkpoint_interval = 0;  // 0 keeps no intermediate checkpoints

  void validate() const;
};

// Train / held-out task lists. Either side may be empty; a run with both is
// the mixed-corpus setting and trains one head per mode.
struct TrainingEnv {
  std::vector<SingleEvalTask> single_train;
  std::vector<SingleEvalTask> single_test;
  std::vector<PairEvalTask> pair_train;
  std::vector<PairEvalTask> pair_test;
  int feature_dim = 4;
  BinGrid single_grid = default_single_grid();
  BinGrid pair_grid = default_pair_grid();

  bool has_single() const noexcept { return !single_train.empty(); }
  bool has_pair() const noexcept { return !pair_train.empty(); }
};

struct BatchItem {
  bool pair = false;
  std::size_t index = 0;  // into pair_train when pair, else single_train

  friend bool operator==(const BatchItem&, const BatchItem&) = default;
};

// Tasks for one step, drawn uniformly with replacement from the union of the
// train lists. Depends only on (env sizes, seed, step), never on the objective.
std::vector<BatchItem> draw_batch(const TrainingEnv& env, int batch_size, std::uint64_t seed,
                                  long step, bool pairs_only = false);

struct EvaluatorState {
  std::optional<PolicyParams> single;
  std::optional<PolicyParams> pair;
  std::optional<ScalarRewardParams> ranker;
};

// Zero-initialised (uniform / constant) models for the objective and env.
EvaluatorState initial_state(const TrainingEnv& env, Objective objective);

struct CurveRow {
  long step = 0;
  double loss = 0.0;
  double mean_reward = 0.0;
  double mean_abs_advantage = 0.0;
  double mean_kl = 0.0;
};

struct HeldOutMetrics {
  std::optional<MetricReport> single;  // rank correlations of predicted scores
  std::optional<MetricReport> pair;    // preference accuracy of confidences
};

// Point predictions: the policy's most probable bin, or r(x) / sigmoid(r_a - r_b)
// for the ranking model.
HeldOutMetrics evaluate(const EvaluatorState& state, const TrainingEnv& env);
std::vector<EvaluationRecord> single_records(const EvaluatorState& state,
                                             std::span<const SingleEvalTask> tasks);
std::vector<EvaluationRecord> pair_records(const EvaluatorState& state,
                                           std::span<const PairEvalTask> tasks);

struct Checkpoint {
  long step = 0;
  EvaluatorState state;
};

struct TrainingReport {
  std::vector<CurveRow> curve;
  std::vector<Checkpoint> checkpoints;
  EvaluatorState final_state;
  HeldOutMetrics initial_metrics;
  HeldOutMetrics final_metrics;
};

struct TrainStart {
  std::optional<EvaluatorState> state;      // defaults to initial_state
  std::optional<EvaluatorState> reference;  // defaults to the start state
  long step_offset = 0;                     // numbering continues from here
};

// Batched first-order training. Task batches depend only on (seed, step), so
// arms that share a seed see identical tasks per step. Throws DivergenceError
// on a non-finite loss.
TrainingReport train(const TrainingEnv& env, const TrainConfig& cfg, std::uint64_t seed,
                     const TrainStart& start = {});

struct RejectionConfig {
  double threshold = 1.0;  // keep tasks whose mean group reward is below this
  int budget = 4000;
  int group_size = 8;
  bool binary = false;
  double binary_tolerance = 0.0;
};

// Hard-case selection: one group per task, keep those below the threshold,
// lowest mean reward first up to the budget. Kept tasks retain source order.
std::vector<SingleEvalTask> rejection_sample_enhance(const PolicyParams& trained,
                                                     std::span<const SingleEvalTask> tasks,
                                                     const RejectionConfig& cfg,
                                                     std::uint64_t seed);
std::vector<PairEvalTask> rejection_sample_enhance(const PolicyParams& trained,
                                                   std::span<const PairEvalTask> tasks,
                                                   const RejectionConfig& cfg, std::uint64_t seed);

std::string curve_csv(std::span<const CurveRow> curve);

nlohmann::json to_json(const HeldOutMetrics& m);
nlohmann::json to_json(const ScalarRewardParams& p);

}  // namespace evalrl
