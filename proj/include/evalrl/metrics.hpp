#pragma once

#include <optional>
#include <span>
#include <vector>

#include "evalrl/core.hpp"

namespace evalrl {

// Correlations are nullopt when either side has zero rank variance (or n < 2);
// callers must not read that as 0.
std::optional<double> spearman(std::span<const EvaluationRecord> records);

// Kendall tau-b, O(n log n) (Knight's merge-sort count with tie corrections).
std::optional<double> kendall(std::span<const EvaluationRecord> records);

// Average ranks (1-based); tied values share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> values);

struct PreferenceAccuracyOptions {
  double tie_band = 0.0;
  bool exclude_reference_ties = false;
};

// Fraction of items whose predicted confidence maps to the reference choice.
// Throws InputError on length mismatch or when no item is left to score.
double preference_accuracy(std::span<const double> predicted_conf,
                           std::span<const PreferenceChoice> reference_choice,
                           const PreferenceAccuracyOptions& opts = {});

struct MetricReport {
  std::optional<double> spearman_rho;
  std::optional<double> kendall_tau;
  std::size_t n = 0;
  std::optional<double> preference_accuracy;
};

MetricReport compute_report(std::span<const EvaluationRecord> records);

// Records carry confidences: reference choices come from the reference
// confidence with a zero tie band.
MetricReport compute_pairwise_report(std::span<const EvaluationRecord> records,
                                     const PreferenceAccuracyOptions& opts = {});

nlohmann::json to_json(const MetricReport& r);

}  // namespace evalrl
