#include "evalrl/prompts.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace evalrl {

namespace builtin_data {
extern const std::string_view single_template;
extern const std::string_view pair_template;
extern const std::string_view dimensions;
}  // namespace builtin_data

namespace {

constexpr std::string_view kTextMarker = "<text>";
constexpr std::string_view kImageMarker = "<image>";
constexpr std::string_view kBlockSeparator = "\n\n";

std::size_t count_of(std::string_view haystack, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = haystack.find(needle); pos != std::string_view::npos;
       pos = haystack.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  for (auto pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
}

// "a", "a and b", "a, b and c"
std::string join_goals(std::span<const DimensionSpec> dims) {
  std::string out;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i > 0) out += i + 1 == dims.size() ? " and " : ", ";
    out += dims[i].goal;
  }
  return out;
}

std::string join_lines(std::span<const DimensionSpec> dims, std::string DimensionSpec::*field) {
  std::string out;
  for (const auto& d : dims) {
    if (!out.empty()) out += '\n';
    out += d.*field;
  }
  return out;
}

}  // namespace

void DimensionSpec::validate() const {
  if (tag.name.empty()) throw InputError("dimension name must be nonempty");
  if (goal.empty() || definition_text.empty() || guideline_text.empty()) {
    throw InputError("dimension '" + tag.name + "' has empty text");
  }
}

void PromptTemplate::validate() const {
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto& b = blocks[i];
    if (b.compare(0, kBlockHeaders[i].size(), kBlockHeaders[i]) != 0 ||
        (b.size() > kBlockHeaders[i].size() && b[kBlockHeaders[i].size()] != '\n')) {
      throw InputError("template block " + std::to_string(i + 1) + " must start with '" +
                       std::string(kBlockHeaders[i]) + "'");
    }
  }
  std::size_t text = 0, images = 0;
  for (const auto& b : blocks) {
    text += count_of(b, kTextMarker);
    images += count_of(b, kImageMarker);
  }
  const std::size_t want_images = mode == OutputMode::single ? 1 : 2;
  if (text != 1) throw InputError("template must contain <text> exactly once");
  if (images != want_images) {
    throw InputError("template must contain <image> exactly " + std::to_string(want_images) +
                     (want_images == 1 ? " time" : " times"));
  }
}

PromptTemplate template_from_json(const nlohmann::json& j) {
  PromptTemplate t;
  try {
    const auto mode = j.at("mode").get<std::string>();
    if (mode == "single") {
      t.mode = OutputMode::single;
    } else if (mode == "pair") {
      t.mode = OutputMode::pair;
    } else {
      throw InputError("template mode must be 'single' or 'pair'");
    }
    const auto blocks = j.at("blocks").get<std::vector<std::string>>();
    if (blocks.size() != 4) throw InputError("template must have exactly four blocks");
    std::copy(blocks.begin(), blocks.end(), t.blocks.begin());
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed template: ") + e.what());
  }
  t.validate();
  return t;
}

PromptTemplate load_template(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open template " + path.string());
  try {
    return template_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

const PromptTemplate& builtin_template(OutputMode mode) {
  static const PromptTemplate single =
      template_from_json(nlohmann::json::parse(builtin_data::single_template));
  static const PromptTemplate pair =
      template_from_json(nlohmann::json::parse(builtin_data::pair_template));
  return mode == OutputMode::single ? single : pair;
}

std::vector<DimensionSpec> dimensions_from_json(const nlohmann::json& j) {
  std::vector<DimensionSpec> out;
  try {
    for (const auto& d : j) {
      DimensionSpec spec;
      const auto kind = d.at("kind").get<std::string>();
      spec.tag = {d.at("name").get<std::string>(),
                  kind == "perceptual" ? DimensionKind::perceptual : DimensionKind::semantic};
      spec.goal = d.at("goal").get<std::string>();
      spec.definition_text = d.at("definition").get<std::string>();
      spec.guideline_text = d.at("guidelines").get<std::string>();
      if (!d.at("range_min").is_null()) {
        spec.range = ScoreRange(d.at("range_min").get<double>(), d.at("range_max").get<double>());
      }
      spec.validate();
      for (const auto& prev : out) {
        if (prev.tag.name == spec.tag.name) throw InputError("duplicate dimension " + spec.tag.name);
      }
      out.push_back(std::move(spec));
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed dimension library: ") + e.what());
  }
  return out;
}

const std::vector<DimensionSpec>& builtin_dimensions() {
  static const std::vector<DimensionSpec> dims =
      dimensions_from_json(nlohmann::json::parse(builtin_data::dimensions));
  return dims;
}

const DimensionSpec& find_dimension(std::string_view name) {
  for (const auto& d : builtin_dimensions()) {
    if (d.tag.name == name) return d;
  }
  std::string known;
  for (const auto& d : builtin_dimensions()) known += (known.empty() ? "" : ", ") + d.tag.name;
  throw InputError("unknown dimension '" + std::string(name) + "' (known: " + known + ")");
}

std::string format_range_value(double v) {
  char buf[64];
  if (std::isfinite(v) && v == std::floor(v) && std::abs(v) < 1e15) {
    std::snprintf(buf, sizeof buf, "%.1f", v);
    return buf;
  }
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string assemble_prompt(const PromptTemplate& tmpl, std::span<const DimensionSpec> dims,
                            std::string_view prompt_text, OutputMode mode,
                            std::optional<ScoreRange> range_override) {
  tmpl.validate();
  if (tmpl.mode != mode) throw InputError("template mode does not match the requested mode");
  if (dims.empty()) throw InputError("at least one dimension is required");
  for (const auto& d : dims) d.validate();

  ScoreRange range(0.0, 1.0);
  if (mode == OutputMode::pair) {
    if (range_override) throw InputError("pairwise prompts use the fixed [0, 1] confidence range");
  } else if (range_override) {
    range = *range_override;
  } else {
    std::optional<ScoreRange> shared;
    for (const auto& d : dims) {
      if (!d.range) {
        throw InputError("dimension '" + d.tag.name + "' has no score range; pass a range");
      }
      if (shared && !(*shared == *d.range)) {
        throw InputError("dimensions disagree on the score range; pass a range");
      }
      shared = d.range;
    }
    range = *shared;
  }

  const std::string goal = join_goals(dims);
  const std::string criteria = join_lines(dims, &DimensionSpec::definition_text);
  const std::string guidelines = join_lines(dims, &DimensionSpec::guideline_text);
  const std::string lo = format_range_value(range.min());
  const std::string hi = format_range_value(range.max());

  std::string out;
  for (std::size_t i = 0; i < tmpl.blocks.size(); ++i) {
    std::string block = tmpl.blocks[i];
    replace_all(block, "{{goal}}", goal);
    replace_all(block, "{{criteria}}", criteria);
    replace_all(block, "{{guidelines}}", guidelines);
    replace_all(block, "{{range_min}}", lo);
    replace_all(block, "{{range_max}}", hi);
    if (auto open = block.find("{{"); open != std::string::npos) {
      const auto close = block.find("}}", open);
      throw InputError("unfilled placeholder " +
                       block.substr(open, close == std::string::npos ? 2 : close + 2 - open) +
                       " in block " + std::to_string(i + 1));
    }
    replace_all(block, kTextMarker, prompt_text);
    if (i > 0) out += kBlockSeparator;
    out += block;
  }
  out += '\n';
  return out;
}

std::array<std::string, 4> extract_blocks(std::string_view rendered) {
  if (!rendered.empty() && rendered.back() == '\n') rendered.remove_suffix(1);
  std::array<std::size_t, 5> starts{};
  if (rendered.compare(0, kBlockHeaders[0].size(), kBlockHeaders[0]) != 0) {
    throw InputError("rendered prompt does not start with '# Task Description'");
  }
  std::size_t from = 0;
  for (std::size_t i = 1; i < 4; ++i) {
    const std::string marker = std::string(kBlockSeparator) + std::string(kBlockHeaders[i]) + "\n";
    const auto pos = rendered.find(marker, from);
    if (pos == std::string_view::npos) {
      throw InputError("rendered prompt lacks '" + std::string(kBlockHeaders[i]) + "'");
    }
    starts[i] = pos;
    from = pos + kBlockSeparator.size();
  }
  starts[4] = rendered.size();
  std::array<std::string, 4> blocks;
  for (std::size_t i = 0; i < 4; ++i) {
    const std::size_t b = i == 0 ? 0 : starts[i] + kBlockSeparator.size();
    blocks[i] = std::string(rendered.substr(b, starts[i + 1] - b));
  }
  return blocks;
}

}  // namespace evalrl
