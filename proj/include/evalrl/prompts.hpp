#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "evalrl/core.hpp"
#include "evalrl/rewards.hpp"

namespace evalrl {

struct DimensionSpec {
  DimensionTag tag;
  std::string goal;             // display name, e.g. "appearance quality"
  std::string definition_text;  // criteria bullet(s)
  std::string guideline_text;   // scoring anchors
  std::optional<ScoreRange> range;  // none for pairwise-only dimensions

  void validate() const;
};

// Markdown headings that open each block, in order.
inline constexpr std::array<std::string_view, 4> kBlockHeaders{
    "# Task Description", "# Annotation Input", "# Evaluation Guidelines", "# Output Format"};

// Four blocks with {{slot}} placeholders plus the literal <text> / <image>
// input markers.
//   slots: {{goal}} {{criteria}} {{guidelines}} {{range_min}} {{range_max}}
struct PromptTemplate {
  std::array<std::string, 4> blocks;
  OutputMode mode = OutputMode::single;

  // Throws InputError if headers are missing or out of order, or if <text>
  // is not present exactly once and <image> once (single) / twice (pair).
  void validate() const;
};

// Template file format: {"mode": "single"|"pair", "blocks": [4 strings]}.
PromptTemplate template_from_json(const nlohmann::json& j);
PromptTemplate load_template(const std::filesystem::path& path);
const PromptTemplate& builtin_template(OutputMode mode);

// appearance_quality, intrinsic_consistency, relationship_consistency,
// overall, faithfulness, preference
const std::vector<DimensionSpec>& builtin_dimensions();
const DimensionSpec& find_dimension(std::string_view name);
std::vector<DimensionSpec> dimensions_from_json(const nlohmann::json& j);

// Fills every slot; <text> becomes prompt_text and each <image> stays as the
// image marker. The range in force is range_override, else the dimensions'
// shared range; pair mode fixes it to [0, 1] and rejects an override.
std::string assemble_prompt(const PromptTemplate& tmpl, std::span<const DimensionSpec> dims,
                            std::string_view prompt_text, OutputMode mode,
                            std::optional<ScoreRange> range_override = std::nullopt);

// Inverse of the block layout: splits a rendered prompt at the four headers.
std::array<std::string, 4> extract_blocks(std::string_view rendered);

// "0.0", "10.0", "2.5": at least one decimal, otherwise shortest round trip.
std::string format_range_value(double v);

}  // namespace evalrl
