#include "evalrl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace evalrl {

namespace {

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

// Number of tied pairs, sum over tie groups of t(t-1)/2, for a sorted range.
template <typename It, typename Eq>
long long tied_pairs(It first, It last, Eq eq) {
  long long total = 0;
  while (first != last) {
    It run = first;
    long long t = 0;
    while (run != last && eq(*run, *first)) {
      ++run;
      ++t;
    }
    total += t * (t - 1) / 2;
    first = run;
  }
  return total;
}

// Sorts v ascending and returns the number of inversions (swaps).
long long merge_count(std::vector<double>& v, std::vector<double>& buf, std::size_t lo,
                      std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  long long swaps = merge_count(v, buf, lo, mid) + merge_count(v, buf, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      swaps += static_cast<long long>(mid - i);
      buf[k++] = v[j++];
    } else {
      buf[k++] = v[i++];
    }
  }
  while (i < mid) buf[k++] = v[i++];
  while (j < hi) buf[k++] = v[j++];
  std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo),
            buf.begin() + static_cast<std::ptrdiff_t>(hi), v.begin() + static_cast<std::ptrdiff_t>(lo));
  return swaps;
}

void require_finite(std::span<const EvaluationRecord> records) {
  for (const auto& r : records) {
    if (!std::isfinite(r.predicted) || !std::isfinite(r.reference)) {
      throw InputError("evaluation record '" + r.task_id + "' is not finite");
    }
  }
}

}  // namespace

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

std::optional<double> spearman(std::span<const EvaluationRecord> records) {
  require_finite(records);
  if (records.size() < 2) return std::nullopt;
  std::vector<double> pred, ref;
  pred.reserve(records.size());
  ref.reserve(records.size());
  for (const auto& r : records) {
    pred.push_back(r.predicted);
    ref.push_back(r.reference);
  }
  return pearson(average_ranks(pred), average_ranks(ref));
}

std::optional<double> kendall(std::span<const EvaluationRecord> records) {
  require_finite(records);
  const std::size_t n = records.size();
  if (n < 2) return std::nullopt;
  std::vector<std::pair<double, double>> xy;
  xy.reserve(n);
  for (const auto& r : records) xy.emplace_back(r.predicted, r.reference);
  std::sort(xy.begin(), xy.end());

  const long long n0 = static_cast<long long>(n) * static_cast<long long>(n - 1) / 2;
  const long long n1 = tied_pairs(xy.begin(), xy.end(),
                                  [](const auto& a, const auto& b) { return a.first == b.first; });
  const long long n3 = tied_pairs(xy.begin(), xy.end(), [](const auto& a, const auto& b) {
    return a.first == b.first && a.second == b.second;
  });

  std::vector<double> y(n), buf(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = xy[i].second;
  const long long swaps = merge_count(y, buf, 0, n);
  const long long n2 = tied_pairs(y.begin(), y.end(), std::equal_to<>{});

  const double denom = std::sqrt(static_cast<double>(n0 - n1) * static_cast<double>(n0 - n2));
  if (denom == 0.0) return std::nullopt;
  // concordant - discordant = n0 - n1 - n2 + n3 - 2 * swaps
  const double s = static_cast<double>(n0 - n1 - n2 + n3 - 2 * swaps);
  return std::clamp(s / denom, -1.0, 1.0);
}

double preference_accuracy(std::span<const double> predicted_conf,
                           std::span<const PreferenceChoice> reference_choice,
                           const PreferenceAccuracyOptions& opts) {
  if (predicted_conf.size() != reference_choice.size()) {
    throw InputError("predicted and reference lists differ in length");
  }
  std::size_t scored = 0, correct = 0;
  for (std::size_t i = 0; i < predicted_conf.size(); ++i) {
    if (opts.exclude_reference_ties && reference_choice[i] == PreferenceChoice::T) continue;
    ++scored;
    const double p = std::clamp(predicted_conf[i], 0.0, 1.0);
    if (choice_from_confidence(p, opts.tie_band) == reference_choice[i]) ++correct;
  }
  if (scored == 0) throw InputError("no items to score for preference accuracy");
  return static_cast<double>(correct) / static_cast<double>(scored);
}

MetricReport compute_report(std::span<const EvaluationRecord> records) {
  return {spearman(records), kendall(records), records.size(), std::nullopt};
}

MetricReport compute_pairwise_report(std::span<const EvaluationRecord> records,
                                     const PreferenceAccuracyOptions& opts) {
  MetricReport rep = compute_report(records);
  std::vector<double> pred;
  std::vector<PreferenceChoice> ref;
  for (const auto& r : records) {
    pred.push_back(r.predicted);
    ref.push_back(choice_from_confidence(r.reference, 0.0));
  }
  if (!records.empty()) rep.preference_accuracy = preference_accuracy(pred, ref, opts);
  return rep;
}

nlohmann::json to_json(const MetricReport& r) {
  auto opt = [](const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  return {{"spearman_rho", opt(r.spearman_rho)},
          {"kendall_tau", opt(r.kendall_tau)},
          {"n", r.n},
          {"preference_accuracy", opt(r.preference_accuracy)}};
}

}  // namespace evalrl
