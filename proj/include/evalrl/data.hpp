#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "evalrl/core.hpp"

namespace evalrl {

// One generated image with its ordinal human rating (1 best .. 5 worst).
struct RatedItem {
  std::string prompt_id;
  std::string item_id;
  int rating_level = 3;
  FeatureVector features;

  void validate(std::optional<std::size_t> feature_dim = std::nullopt) const;
  friend bool operator==(const RatedItem&, const RatedItem&) = default;
};

struct CorpusSpec {
  // single-wise
  int per_dimension = 9000;
  std::vector<DimensionTag> dimensions;
  bool sample_with_replacement = false;
  // pairwise
  int total_pairs = 35000;
  std::array<int, 4> delta_weights{1, 2, 2, 1};  // for delta r = 1..4
  std::array<int, 2> polarity_ratio{1, 1};       // positive : negative

  int total_single() const noexcept {
    return per_dimension * static_cast<int>(dimensions.size());
  }
  void validate() const;
};

// appearance quality, intrinsic / relationship attribute consistency, overall;
// 9,000 each.
CorpusSpec default_corpus_spec();

enum class ConfidenceMode { discrete, graded };

ConfidenceMode parse_confidence_mode(std::string_view s);
std::string_view to_string(ConfidenceMode m);

// discrete: 1 / 0 / 0.5 by which side is rated better; graded:
// 0.5 + 0.5 (rating_b - rating_a) / 4.
double confidence_from_ratings(int rating_a, int rating_b, ConfidenceMode mode);

// Largest-remainder split of total across weights; exact sum, remainders
// tie-broken toward the lower index.
std::vector<int> apportion(int total, std::span<const int> weights);

// Uniform sample of exactly per_dimension tasks per dimension, concatenated
// then shuffled. Throws InputError naming the first deficient dimension.
std::vector<SingleEvalTask> build_single_corpus(std::span<const SingleEvalTask> source,
                                                const CorpusSpec& spec, std::uint64_t seed);

struct StratumReport {
  int delta_r = 0;
  int candidates = 0;
  int target = 0;
  int realized = 0;
  int positive = 0;
  int negative = 0;
};

struct PairCorpus {
  std::vector<PairEvalTask> pairs;
  std::vector<StratumReport> strata;  // delta r = 1..4
};

// Within-prompt pairs stratified by rating difference, polarity balanced by
// side swaps inside each stratum.
PairCorpus build_pair_corpus(std::span<const RatedItem> items, const CorpusSpec& spec,
                             std::uint64_t seed, ConfidenceMode mode = ConfidenceMode::discrete,
                             bool with_replacement = false);

nlohmann::json to_json(const RatedItem& item);
RatedItem rated_item_from_json(const nlohmann::json& j);
nlohmann::json to_json(const StratumReport& s);

// JSONL readers validate every line and report "path:line: reason" on the
// first violation. Blank lines are skipped; an empty file is an empty corpus.
std::vector<SingleEvalTask> load_single_corpus(const std::filesystem::path& path);
std::vector<PairEvalTask> load_pair_corpus(const std::filesystem::path& path);
std::vector<RatedItem> load_rated_items(const std::filesystem::path& path);
std::vector<EvaluationRecord> load_records(const std::filesystem::path& path);

void save_corpus(std::span<const SingleEvalTask> tasks, const std::filesystem::path& path);
void save_corpus(std::span<const PairEvalTask> tasks, const std::filesystem::path& path);
void save_corpus(std::span<const RatedItem> items, const std::filesystem::path& path);
void save_corpus(std::span<const EvaluationRecord> records, const std::filesystem::path& path);

}  // namespace evalrl
