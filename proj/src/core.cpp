#include "evalrl/core.hpp"

#include <algorithm>
#include <cmath>

namespace evalrl {

namespace {

void require_finite(double v, const char* field) {
  if (!std::isfinite(v)) throw InputError(std::string(field) + " must be finite");
}

void check_features(const FeatureVector& f, const char* field,
                    std::optional<std::size_t> feature_dim) {
  if (feature_dim && f.size() != *feature_dim) {
    throw InputError(std::string(field) + " has length " + std::to_string(f.size()) +
                     ", expected " + std::to_string(*feature_dim));
  }
  for (double v : f) require_finite(v, field);
}

template <typename T>
T field(const nlohmann::json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end()) throw InputError(std::string("missing field '") + name + "'");
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw InputError(std::string("field '") + name + "' has the wrong type");
  }
}

}  // namespace

ScoreRange::ScoreRange(double min, double max) : min_(min), max_(max) {
  if (!std::isfinite(min) || !std::isfinite(max)) {
    throw InputError("score range bounds must be finite");
  }
  if (!(max > min)) throw InputError("score range requires max > min");
}

double ScoreRange::clip(double s) const noexcept { return std::clamp(s, min_, max_); }

DimensionTag dimension_tag(std::string_view name) {
  // Image-intrinsic dimensions; everything else is judged against the prompt.
  const bool perceptual = name == "appearance_quality";
  return {std::string(name), perceptual ? DimensionKind::perceptual : DimensionKind::semantic};
}

std::string_view to_string(DimensionKind k) {
  return k == DimensionKind::perceptual ? "perceptual" : "semantic";
}

void SingleEvalTask::validate(std::optional<std::size_t> feature_dim) const {
  if (id.empty()) throw InputError("id must be nonempty");
  if (dimension.name.empty()) throw InputError("dimension must be nonempty");
  check_features(features, "features", feature_dim);
  require_finite(reference_score, "reference_score");
  if (!range.contains(reference_score)) {
    throw InputError("reference_score " + std::to_string(reference_score) +
                     " outside [range_min, range_max]");
  }
}

void PairEvalTask::validate(std::optional<std::size_t> feature_dim) const {
  if (id.empty()) throw InputError("id must be nonempty");
  check_features(features_a, "features_a", feature_dim);
  check_features(features_b, "features_b", features_a.size());
  require_finite(reference_confidence, "reference_confidence");
  if (reference_confidence < 0.0 || reference_confidence > 1.0) {
    throw InputError("reference_confidence must lie in [0, 1]");
  }
  if (source_delta_r && (*source_delta_r < 1 || *source_delta_r > 4)) {
    throw InputError("delta_r must be in {1, 2, 3, 4}");
  }
}

std::string_view to_string(PreferenceChoice c) {
  switch (c) {
    case PreferenceChoice::A: return "A";
    case PreferenceChoice::B: return "B";
    case PreferenceChoice::T: return "T";
  }
  return "?";
}

PreferenceChoice parse_choice(std::string_view s) {
  if (s == "A") return PreferenceChoice::A;
  if (s == "B") return PreferenceChoice::B;
  if (s == "T") return PreferenceChoice::T;
  throw InputError("preference choice must be A, B or T");
}

double normalize_score(double s, const ScoreRange& range) {
  require_finite(s, "score");
  return (range.clip(s) - range.min()) / range.width();
}

PreferenceChoice choice_from_confidence(double p, double tie_band) {
  if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
    throw InputError("confidence must lie in [0, 1]");
  }
  if (!std::isfinite(tie_band) || tie_band < 0.0 || tie_band >= 0.5) {
    throw InputError("tie band must lie in [0, 0.5)");
  }
  if (std::abs(p - 0.5) <= tie_band) return PreferenceChoice::T;
  return p > 0.5 + tie_band ? PreferenceChoice::A : PreferenceChoice::B;
}

nlohmann::json to_json(const SingleEvalTask& t) {
  return {{"id", t.id},
          {"features", t.features},
          {"dimension", t.dimension.name},
          {"range_min", t.range.min()},
          {"range_max", t.range.max()},
          {"reference_score", t.reference_score}};
}

nlohmann::json to_json(const PairEvalTask& t) {
  nlohmann::json j = {{"id", t.id},
                      {"features_a", t.features_a},
                      {"features_b", t.features_b},
                      {"reference_confidence", t.reference_confidence}};
  j["delta_r"] = t.source_delta_r ? nlohmann::json(*t.source_delta_r) : nlohmann::json(nullptr);
  return j;
}

nlohmann::json to_json(const EvaluationRecord& r) {
  return {{"task_id", r.task_id}, {"predicted", r.predicted}, {"reference", r.reference}};
}

SingleEvalTask single_task_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InputError("expected a JSON object");
  SingleEvalTask t{
      .id = field<std::string>(j, "id"),
      .features = field<FeatureVector>(j, "features"),
      .dimension = dimension_tag(field<std::string>(j, "dimension")),
      .range = ScoreRange(field<double>(j, "range_min"), field<double>(j, "range_max")),
      .reference_score = field<double>(j, "reference_score"),
  };
  t.validate();
  return t;
}

PairEvalTask pair_task_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InputError("expected a JSON object");
  PairEvalTask t{
      .id = field<std::string>(j, "id"),
      .features_a = field<FeatureVector>(j, "features_a"),
      .features_b = field<FeatureVector>(j, "features_b"),
      .reference_confidence = field<double>(j, "reference_confidence"),
      .source_delta_r = std::nullopt,
  };
  if (auto it = j.find("delta_r"); it != j.end() && !it->is_null()) {
    if (!it->is_number_integer()) throw InputError("field 'delta_r' has the wrong type");
    t.source_delta_r = it->get<int>();
  }
  t.validate();
  return t;
}

EvaluationRecord record_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InputError("expected a JSON object");
  EvaluationRecord r{
      .task_id = field<std::string>(j, "task_id"),
      .predicted = field<double>(j, "predicted"),
      .reference = field<double>(j, "reference"),
  };
  require_finite(r.predicted, "predicted");
  require_finite(r.reference, "reference");
  return r;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(base) ^ a) ^ (b * 0x632be59bd9b4e019ULL));
}

}  // namespace evalrl
