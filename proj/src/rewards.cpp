#include "evalrl/rewards.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <regex>

namespace evalrl {

namespace {

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw InputError(std::string(what) + " must be finite");
}

// Numeric tokens, wide enough that "7.5.3" is one (malformed) token.
const std::regex& number_token() {
  static const std::regex re(R"([-+]?[0-9.]*[0-9][0-9.]*(?:[eE][-+]?[0-9]+)?)");
  return re;
}

std::optional<std::string_view> last_number_token(std::string_view s) {
  std::optional<std::string_view> last;
  for (auto it = std::cregex_iterator(s.data(), s.data() + s.size(), number_token());
       it != std::cregex_iterator(); ++it) {
    last = s.substr(static_cast<std::size_t>(it->position()), static_cast<std::size_t>(it->length()));
  }
  // a sentence-final period is not part of the number
  if (last && last->size() > 1 && last->back() == '.') last->remove_suffix(1);
  return last;
}

std::optional<double> to_number(std::string_view tok) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) return std::nullopt;
  if (!std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace

double reward_single(double s_pred, const ScoreRange& range, double s_ref) {
  require_finite(s_pred, "predicted score");
  require_finite(s_ref, "reference score");
  if (!range.contains(s_ref)) throw InputError("reference score outside its range");
  return 1.0 - 2.0 * std::abs(range.clip(s_pred) - s_ref) / range.width();
}

double reward_pair(double p_pred, double p_ref) {
  require_finite(p_pred, "predicted confidence");
  require_finite(p_ref, "reference confidence");
  if (p_ref < 0.0 || p_ref > 1.0) throw InputError("reference confidence outside [0, 1]");
  return 1.0 - 2.0 * std::abs(std::clamp(p_pred, 0.0, 1.0) - p_ref);
}

double reward_binary(double pred, double ref, double tolerance) {
  require_finite(pred, "prediction");
  require_finite(ref, "reference");
  require_finite(tolerance, "tolerance");
  if (tolerance < 0.0) throw InputError("binary tolerance must be >= 0");
  return std::abs(pred - ref) <= tolerance ? 1.0 : 0.0;
}

double parse_failure_reward(const RewardKind& kind) noexcept {
  return kind.is_binary() ? 0.0 : -1.0;
}

std::optional<double> parse_tagged_output(std::string_view text,
                                          [[maybe_unused]] OutputMode mode) {
  constexpr std::string_view open = "<answer>";
  constexpr std::string_view close = "</answer>";
  std::string_view body = text;
  if (auto o = text.rfind(open); o != std::string_view::npos) {
    auto c = text.find(close, o + open.size());
    if (c == std::string_view::npos) return std::nullopt;
    body = text.substr(o + open.size(), c - o - open.size());
  }
  auto tok = last_number_token(body);
  if (!tok) return std::nullopt;
  auto v = to_number(*tok);
  if (!v) return std::nullopt;
  return v;
}

}  // namespace evalrl
