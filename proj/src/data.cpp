#include "evalrl/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>


namespace evalrl {

namespace {

constexpr std::uint64_t kFinalShuffle = 0xF1;

void check_rating(int r) {
  if (r < 1 || r > 5) throw InputError("rating level must be in {1, ..., 5}");
}

std::size_t feature_length(const SingleEvalTask& t) { return t.features.size(); }
std::size_t feature_length(const PairEvalTask& t) { return t.features_a.size(); }
std::size_t feature_length(const RatedItem& t) { return t.features.size(); }
std::size_t feature_length(const EvaluationRecord&) { return 0; }

template <typename T, typename Parse>
std::vector<T> load_jsonl(const std::filesystem::path& path, Parse parse,
                          bool check_feature_dim) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::vector<T> out;
  std::optional<std::size_t> dim;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
      } catch (const nlohmann::json::parse_error& e) {
        throw InputError(std::string("malformed JSON: ") + e.what());
      }
      T value = parse(j);
      if (check_feature_dim) {
        const std::size_t f = feature_length(value);
        if (dim && f != *dim) {
          throw InputError("feature length " + std::to_string(f) + " differs from earlier lines (" +
                           std::to_string(*dim) + ")");
        }
        dim = f;
      }
      out.push_back(std::move(value));
    } catch (const InputError& e) {
      throw InputError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

template <typename T>
void save_jsonl(std::span<const T> values, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  for (const auto& v : values) out << to_json(v).dump() << '\n';
  if (!out) throw InputError("failed writing " + path.string());
}

template <typename T>
std::vector<T> sample_indices_of(const std::vector<T>& pool, int count, bool with_replacement,
                                 std::mt19937_64& rng) {
  std::vector<T> out;
  out.reserve(static_cast<std::size_t>(count));
  if (with_replacement) {
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    for (int i = 0; i < count; ++i) out.push_back(pool[pick(rng)]);
  } else {
    std::sample(pool.begin(), pool.end(), std::back_inserter(out), count, rng);
    std::shuffle(out.begin(), out.end(), rng);
  }
  return out;
}

}  // namespace

void RatedItem::validate(std::optional<std::size_t> feature_dim) const {
  if (prompt_id.empty()) throw InputError("prompt_id must be nonempty");
  if (item_id.empty()) throw InputError("item_id must be nonempty");
  check_rating(rating_level);
  if (feature_dim && features.size() != *feature_dim) throw InputError("features has wrong length");
  for (double v : features) {
    if (!std::isfinite(v)) throw InputError("features must be finite");
  }
}

void CorpusSpec::validate() const {
  if (per_dimension < 0) throw InputError("per_dimension must be >= 0");
  for (std::size_t i = 0; i < dimensions.size(); ++i) {
    for (std::size_t j = i + 1; j < dimensions.size(); ++j) {
      if (dimensions[i].name == dimensions[j].name) {
        throw InputError("duplicate dimension '" + dimensions[i].name + "'");
      }
    }
  }
  if (total_pairs < 0) throw InputError("total_pairs must be >= 0");
  if (std::any_of(delta_weights.begin(), delta_weights.end(), [](int w) { return w < 0; }) ||
      std::all_of(delta_weights.begin(), delta_weights.end(), [](int w) { return w == 0; })) {
    throw InputError("delta_weights must be nonnegative and not all zero");
  }
  if (polarity_ratio[0] <= 0 || polarity_ratio[1] <= 0) {
    throw InputError("polarity_ratio entries must be positive");
  }
}

CorpusSpec default_corpus_spec() {
  CorpusSpec s;
  for (const char* name : {"appearance_quality", "intrinsic_consistency",
                           "relationship_consistency", "overall"}) {
    s.dimensions.push_back(dimension_tag(name));
  }
  return s;
}

ConfidenceMode parse_confidence_mode(std::string_view s) {
  if (s == "discrete") return ConfidenceMode::discrete;
  if (s == "graded") return ConfidenceMode::graded;
  throw InputError("confidence mode must be 'discrete' or 'graded'");
}

std::string_view to_string(ConfidenceMode m) {
  return m == ConfidenceMode::discrete ? "discrete" : "graded";
}

double confidence_from_ratings(int rating_a, int rating_b, ConfidenceMode mode) {
  check_rating(rating_a);
  check_rating(rating_b);
  if (mode == ConfidenceMode::graded) return 0.5 + 0.5 * (rating_b - rating_a) / 4.0;
  if (rating_a < rating_b) return 1.0;
  if (rating_a > rating_b) return 0.0;
  return 0.5;
}

std::vector<int> apportion(int total, std::span<const int> weights) {
  if (total < 0) throw InputError("cannot apportion a negative total");
  const long long wsum = std::accumulate(weights.begin(), weights.end(), 0LL);
  if (wsum <= 0) throw InputError("weights must sum to a positive value");
  std::vector<int> counts(weights.size());
  std::vector<long long> remainder(weights.size());
  long long assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] < 0) throw InputError("weights must be nonnegative");
    const long long num = static_cast<long long>(total) * weights[i];
    counts[i] = static_cast<int>(num / wsum);
    remainder[i] = num % wsum;
    assigned += counts[i];
  }
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (long long left = total - assigned, i = 0; left > 0; --left, ++i) ++counts[order[i]];
  return counts;
}

std::vector<SingleEvalTask> build_single_corpus(std::span<const SingleEvalTask> source,
                                                const CorpusSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::vector<SingleEvalTask> out;
  out.reserve(static_cast<std::size_t>(spec.total_single()));
  for (std::size_t d = 0; d < spec.dimensions.size(); ++d) {
    const auto& dim = spec.dimensions[d];
    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < source.size(); ++i) {
      if (source[i].dimension.name == dim.name) pool.push_back(i);
    }
    if (spec.per_dimension == 0) continue;
    if (pool.empty() ||
        (!spec.sample_with_replacement && pool.size() < static_cast<std::size_t>(spec.per_dimension))) {
      throw InputError("dimension '" + dim.name + "' has " + std::to_string(pool.size()) +
                       " source tasks, needs " + std::to_string(spec.per_dimension));
    }
    std::mt19937_64 rng(derive_seed(seed, d + 1));
    for (std::size_t i : sample_indices_of(pool, spec.per_dimension, spec.sample_with_replacement, rng)) {
      out.push_back(source[i]);
    }
  }
  std::mt19937_64 rng(derive_seed(seed, kFinalShuffle));
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

PairCorpus build_pair_corpus(std::span<const RatedItem> items, const CorpusSpec& spec,
                             std::uint64_t seed, ConfidenceMode mode, bool with_replacement) {
  spec.validate();
  for (const auto& item : items) item.validate();

  std::map<std::string, std::vector<std::size_t>> by_prompt;
  for (std::size_t i = 0; i < items.size(); ++i) by_prompt[items[i].prompt_id].push_back(i);

  using Candidate = std::pair<std::size_t, std::size_t>;  // (better, worse)
  std::array<std::vector<Candidate>, 4> strata;
  for (const auto& [prompt, members] : by_prompt) {
    for (std::size_t a = 0; a < members.size(); ++a) {
      for (std::size_t b = a + 1; b < members.size(); ++b) {
        const auto& ia = items[members[a]];
        const auto& ib = items[members[b]];
        const int dr = std::abs(ia.rating_level - ib.rating_level);
        if (dr == 0) continue;
        strata[dr - 1].push_back(ia.rating_level < ib.rating_level
                                     ? Candidate{members[a], members[b]}
                                     : Candidate{members[b], members[a]});
      }
    }
  }

  const auto targets = apportion(spec.total_pairs, spec.delta_weights);
  auto attainable = [&] {
    std::string s;
    for (int k = 0; k < 4; ++k) {
      if (!strata[k].empty()) {
        s += (s.empty() ? "" : ", ") + std::to_string(k + 1) + " (" +
             std::to_string(strata[k].size()) + " candidates)";
      }
    }
    return s.empty() ? std::string("none") : s;
  };

  PairCorpus out;
  for (int k = 0; k < 4; ++k) {
    StratumReport rep{k + 1, static_cast<int>(strata[k].size()), targets[k], 0, 0, 0};
    if (targets[k] > 0) {
      if (strata[k].empty()) {
        throw InputError("delta r = " + std::to_string(k + 1) +
                         " has no candidate pairs; attainable strata: " + attainable());
      }
      if (!with_replacement && strata[k].size() < static_cast<std::size_t>(targets[k])) {
        throw InputError("delta r = " + std::to_string(k + 1) + " has " +
                         std::to_string(strata[k].size()) + " candidate pairs, needs " +
                         std::to_string(targets[k]) + "; attainable strata: " + attainable());
      }
      std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(k + 1)));
      auto chosen = sample_indices_of(strata[k], targets[k], with_replacement, rng);
      const auto polarity = apportion(targets[k], spec.polarity_ratio);
      for (int i = 0; i < targets[k]; ++i) {
        const bool positive = i < polarity[0];
        const auto& [better, worse] = chosen[static_cast<std::size_t>(i)];
        const RatedItem& a = items[positive ? better : worse];
        const RatedItem& b = items[positive ? worse : better];
        out.pairs.push_back({
            .id = a.prompt_id + ":" + a.item_id + "|" + b.item_id,
            .features_a = a.features,
            .features_b = b.features,
            .reference_confidence = confidence_from_ratings(a.rating_level, b.rating_level, mode),
            .source_delta_r = k + 1,
        });
        ++(positive ? rep.positive : rep.negative);
      }
      rep.realized = targets[k];
    }
    out.strata.push_back(rep);
  }
  std::mt19937_64 rng(derive_seed(seed, kFinalShuffle));
  std::shuffle(out.pairs.begin(), out.pairs.end(), rng);
  return out;
}

nlohmann::json to_json(const RatedItem& item) {
  return {{"prompt_id", item.prompt_id},
          {"item_id", item.item_id},
          {"rating_level", item.rating_level},
          {"features", item.features}};
}

RatedItem rated_item_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InputError("expected a JSON object");
  RatedItem item;
  try {
    item.prompt_id = j.at("prompt_id").get<std::string>();
    item.item_id = j.at("item_id").get<std::string>();
    const auto& level = j.at("rating_level");
    if (!level.is_number_integer()) throw InputError("field 'rating_level' must be an integer");
    item.rating_level = level.get<int>();
    item.features = j.at("features").get<FeatureVector>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("bad rated item: ") + e.what());
  }
  item.validate();
  return item;
}

nlohmann::json to_json(const StratumReport& s) {
  return {{"delta_r", s.delta_r},   {"candidates", s.candidates}, {"target", s.target},
          {"realized", s.realized}, {"positive", s.positive},     {"negative", s.negative}};
}

std::vector<SingleEvalTask> load_single_corpus(const std::filesystem::path& path) {
  return load_jsonl<SingleEvalTask>(path, single_task_from_json, true);
}

std::vector<PairEvalTask> load_pair_corpus(const std::filesystem::path& path) {
  return load_jsonl<PairEvalTask>(path, pair_task_from_json, true);
}

std::vector<RatedItem> load_rated_items(const std::filesystem::path& path) {
  return load_jsonl<RatedItem>(path, rated_item_from_json, true);
}

std::vector<EvaluationRecord> load_records(const std::filesystem::path& path) {
  return load_jsonl<EvaluationRecord>(path, record_from_json, false);
}

void save_corpus(std::span<const SingleEvalTask> tasks, const std::filesystem::path& path) {
  save_jsonl(tasks, path);
}
void save_corpus(std::span<const PairEvalTask> tasks, const std::filesystem::path& path) {
  save_jsonl(tasks, path);
}
void save_corpus(std::span<const RatedItem> items, const std::filesystem::path& path) {
  save_jsonl(items, path);
}
void save_corpus(std::span<const EvaluationRecord> records, const std::filesystem::path& path) {
  save_jsonl(records, path);
}

}  // namespace evalrl
