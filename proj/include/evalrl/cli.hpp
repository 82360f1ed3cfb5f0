#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "evalrl/data.hpp"
#include "evalrl/prompts.hpp"
#include "evalrl/training.hpp"

namespace evalrl::cli {

struct SingleEnvConfig {
  int n_train = 2000;
  int n_test = 500;
  double noise_sd = 0.0;
  double range_min = 0.0;
  double range_max = 10.0;
  int bins = 21;
  std::string dimension = "overall";

  friend bool operator==(const SingleEnvConfig&, const SingleEnvConfig&) = default;
};

struct PairEnvConfig {
  int n_train = 2000;
  int n_test = 500;
  double noise_sd = 1.0;
  ConfidenceMode confidence = ConfidenceMode::discrete;
  int bins = 11;

  friend bool operator==(const PairEnvConfig&, const PairEnvConfig&) = default;
};

// Synthetic environments are generated from the run seed; corpus files, when
// given, replace the synthetic side they cover.
struct EnvConfig {
  int feature_dim = 4;
  std::optional<SingleEnvConfig> single = SingleEnvConfig{};
  std::optional<PairEnvConfig> pair;
  std::optional<std::filesystem::path> single_train;
  std::optional<std::filesystem::path> single_test;
  std::optional<std::filesystem::path> pair_train;
  std::optional<std::filesystem::path> pair_test;

  friend bool operator==(const EnvConfig&, const EnvConfig&) = default;
};

// Rejection-sampling selection on the trained policy followed by further
// training on the kept tasks only.
struct EnhanceConfig {
  bool enabled = false;
  double threshold = 1.0;
  int budget = 4000;
  int group_size = 8;
  int steps = 500;

  friend bool operator==(const EnhanceConfig&, const EnhanceConfig&) = default;
};

struct CorpusBuildConfig {
  bool single = true;
  bool pair = true;
  int per_dimension = 9000;
  std::vector<std::string> dimensions{"appearance_quality", "intrinsic_consistency",
                                      "relationship_consistency", "overall"};
  bool single_with_replacement = false;
  int total_pairs = 35000;
  std::array<int, 4> delta_weights{1, 2, 2, 1};
  std::array<int, 2> polarity_ratio{1, 1};
  ConfidenceMode confidence = ConfidenceMode::discrete;
  bool pair_with_replacement = false;
  // Sources; synthetic pools are generated when a path is absent.
  std::optional<std::filesystem::path> single_source;
  std::optional<std::filesystem::path> rated_items;
  int synthetic_items = 10000;
  double synthetic_noise_sd = 0.5;
  int synthetic_prompts = 4000;
  int items_per_prompt = 8;

  CorpusSpec spec() const;
  friend bool operator==(const CorpusBuildConfig&, const CorpusBuildConfig&) = default;
};

struct RunConfig {
  std::optional<std::uint64_t> seed;
  TrainConfig train;
  EnvConfig env;
  EnhanceConfig enhance;
  std::vector<std::uint64_t> ablate_seeds{1, 2, 3, 4, 5};
  CorpusBuildConfig corpus;

  // Throws InputError on missing seed, unresolvable paths or bad values.
  void validate() const;
};

// Unknown keys are rejected so that typos do not silently fall back to
// defaults. Missing keys take the defaults above.
RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& c);
RunConfig load_run_config(const std::filesystem::path& path);

// Builds the train/held-out env for one seed.
TrainingEnv make_env(const EnvConfig& c, std::uint64_t seed);

// Each command writes under out_dir and returns normally, or throws
// InputError (exit 2) / DivergenceError (exit 3).
void cmd_build_corpus(const RunConfig& c, const std::filesystem::path& out_dir);
void cmd_train(const RunConfig& c, const std::filesystem::path& out_dir);
void cmd_ablate(const RunConfig& c, const std::filesystem::path& out_dir);

struct MetricsOptions {
  std::filesystem::path records;
  OutputMode mode = OutputMode::single;
  PreferenceAccuracyOptions accuracy;
};
nlohmann::json cmd_metrics(const MetricsOptions& o);

struct RenderOptions {
  std::vector<std::string> dimensions;
  std::optional<ScoreRange> range;
  OutputMode mode = OutputMode::single;
  std::string text = "<text>";
  std::optional<std::filesystem::path> template_path;
};
std::string cmd_render_prompt(const RenderOptions& o);

// 0 success, 2 input/config error, 3 divergence.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitDivergence = 3;

}  // namespace evalrl::cli
