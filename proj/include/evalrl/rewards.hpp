#pragma once

#include <optional>
#include <string_view>

#include "evalrl/core.hpp"

namespace evalrl {

enum class RewardVariant { continuous_single, continuous_pair, binary_single, binary_pair };

struct RewardKind {
  RewardVariant variant = RewardVariant::continuous_single;
  double binary_tolerance = 0.0;

  bool is_binary() const noexcept {
    return variant == RewardVariant::binary_single || variant == RewardVariant::binary_pair;
  }
};

// Distance-graded reward in [-1, 1]:
//   1 - 2 |clip(s_pred, min, max) - s_ref| / (max - min)
double reward_single(double s_pred, const ScoreRange& range, double s_ref);

// Same shape on the confidence scale: 1 - 2 |clip(p_pred, 0, 1) - p_ref|.
double reward_pair(double p_pred, double p_ref);

// 1 when |pred - ref| <= tolerance, else 0. Used for scores and confidences alike.
double reward_binary(double pred, double ref, double tolerance);

// Reward assigned to an output that could not be parsed.
double parse_failure_reward(const RewardKind& kind) noexcept;

enum class OutputMode { single, pair };

// Extracts the final numeric judgment from a model response. When the text
// carries <answer>...</answer> blocks only the last block is read; the last
// number inside it wins. Returns nullopt for empty text, no number, an
// unterminated answer tag or a malformed/non-finite final number. The value
// is returned unclipped in both modes.
std::optional<double> parse_tagged_output(std::string_view text, OutputMode mode);

}  // namespace evalrl
