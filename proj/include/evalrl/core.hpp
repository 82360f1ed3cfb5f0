#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace evalrl {

using FeatureVector = std::vector<double>;

// Bad input, config or corpus content. The CLI maps this to exit code 2.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Non-finite loss during optimisation. The CLI maps this to exit code 3.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, long last_finite_step)
      : std::runtime_error(what), last_finite_step_(last_finite_step) {}
  long last_finite_step() const noexcept { return last_finite_step_; }

 private:
  long last_finite_step_;
};

class ScoreRange {
 public:
  // Throws InputError unless both bounds are finite and max > min.
  ScoreRange(double min, double max);

  double min() const noexcept { return min_; }
  double max() const noexcept { return max_; }
  double width() const noexcept { return max_ - min_; }
  bool contains(double s) const noexcept { return s >= min_ && s <= max_; }
  double clip(double s) const noexcept;

  friend bool operator==(const ScoreRange&, const ScoreRange&) = default;

 private:
  double min_;
  double max_;
};

enum class DimensionKind { perceptual, semantic };

struct DimensionTag {
  std::string name;
  DimensionKind kind = DimensionKind::semantic;

  friend bool operator==(const DimensionTag&, const DimensionTag&) = default;
};

// The tags used by the single-wise training corpus plus the faithfulness
// dimension used for out-of-domain scoring.
DimensionTag dimension_tag(std::string_view name);

struct SingleEvalTask {
  std::string id;
  FeatureVector features;
  DimensionTag dimension;
  ScoreRange range{0.0, 10.0};
  double reference_score = 0.0;

  // Throws InputError naming the offending field.
  void validate(std::optional<std::size_t> feature_dim = std::nullopt) const;

  friend bool operator==(const SingleEvalTask&, const SingleEvalTask&) = default;
};

struct PairEvalTask {
  std::string id;
  FeatureVector features_a;
  FeatureVector features_b;
  double reference_confidence = 0.5;
  std::optional<int> source_delta_r;

  void validate(std::optional<std::size_t> feature_dim = std::nullopt) const;

  friend bool operator==(const PairEvalTask&, const PairEvalTask&) = default;
};

enum class PreferenceChoice { A, B, T };

std::string_view to_string(PreferenceChoice c);
PreferenceChoice parse_choice(std::string_view s);

struct EvaluationRecord {
  std::string task_id;
  double predicted = 0.0;
  double reference = 0.0;

  friend bool operator==(const EvaluationRecord&, const EvaluationRecord&) = default;
};

// (clip(s) - min) / (max - min). Throws InputError on non-finite s.
double normalize_score(double s, const ScoreRange& range);

// T inside the tie band around 0.5, otherwise A above it and B below.
PreferenceChoice choice_from_confidence(double p, double tie_band = 0.0);

// JSONL line schemas. Field names are part of the external file format.
nlohmann::json to_json(const SingleEvalTask& t);
nlohmann::json to_json(const PairEvalTask& t);
nlohmann::json to_json(const EvaluationRecord& r);
SingleEvalTask single_task_from_json(const nlohmann::json& j);
PairEvalTask pair_task_from_json(const nlohmann::json& j);
EvaluationRecord record_from_json(const nlohmann::json& j);

std::string_view to_string(DimensionKind k);

// splitmix64-style mixing for independent per-step / per-stratum seed streams.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

}  // namespace evalrl
