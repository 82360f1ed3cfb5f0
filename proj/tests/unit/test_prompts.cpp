#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "evalrl/prompts.hpp"

using namespace evalrl;

namespace {

std::string read_golden(const std::string& name) {
  std::ifstream in(std::string(EVALRL_GOLDEN_DIR) + "/prompt_" + name + ".txt", std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string render(const std::string& name, OutputMode mode = OutputMode::single,
                   std::optional<ScoreRange> range = std::nullopt, std::string_view text = "<text>") {
  const std::vector<DimensionSpec> dims{find_dimension(name)};
  return assemble_prompt(builtin_template(mode), dims, text, mode, range);
}

std::size_t count(const std::string& s, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = s.find(needle); p != std::string::npos; p = s.find(needle, p + 1)) ++n;
  return n;
}

}  // namespace

TEST(Prompts, GoldenFilesForAllBuiltins) {
  for (const auto& d : builtin_dimensions()) {
    const auto mode = d.range ? OutputMode::single : OutputMode::pair;
    const auto golden = read_golden(d.tag.name);
    ASSERT_FALSE(golden.empty()) << d.tag.name;
    EXPECT_EQ(render(d.tag.name, mode), golden) << d.tag.name;
  }
}

TEST(Prompts, RegistryHasSixDimensions) {
  const auto& dims = builtin_dimensions();
  ASSERT_EQ(dims.size(), 6u);
  const std::vector<std::string> names{"appearance_quality", "intrinsic_consistency",
                                       "relationship_consistency", "overall", "faithfulness",
                                       "preference"};
  for (std::size_t i = 0; i < dims.size(); ++i) EXPECT_EQ(dims[i].tag.name, names[i]);
  EXPECT_EQ(find_dimension("appearance_quality").tag.kind, DimensionKind::perceptual);
  EXPECT_EQ(find_dimension("faithfulness").range, ScoreRange(1, 5));
  EXPECT_FALSE(find_dimension("preference").range);
  EXPECT_THROW(find_dimension("style"), InputError);
}

TEST(Prompts, FigureExamples) {
  const auto a = render("appearance_quality");
  EXPECT_NE(a.find("appearance quality"), std::string::npos);
  EXPECT_NE(a.find("between 0.0 and 10.0"), std::string::npos);
  const auto f = render("faithfulness");
  EXPECT_NE(f.find("between 1.0 and 5.0"), std::string::npos);
  EXPECT_NE(find_dimension("faithfulness").guideline_text.find(
                "counting how many elements are missed/misrepresented"),
            std::string::npos);
  EXPECT_NE(find_dimension("overall").guideline_text.find(
                "appearance, intrinsic attribute and relationship attribute qualities"),
            std::string::npos);
}

TEST(Prompts, FourBlocksAndImageSlots) {
  for (const auto& d : builtin_dimensions()) {
    const auto mode = d.range ? OutputMode::single : OutputMode::pair;
    const auto r = render(d.tag.name, mode);
    std::size_t pos = 0;
    for (const auto h : kBlockHeaders) {
      const auto at = r.find(std::string(h) + "\n", pos);
      ASSERT_NE(at, std::string::npos) << h;
      pos = at + 1;
    }
    EXPECT_EQ(count(r, "<image>"), mode == OutputMode::single ? 1u : 2u);
    EXPECT_EQ(count(r, "<text>"), 1u);
    EXPECT_EQ(count(r, "{{"), 0u);
  }
  const auto pair = render("preference", OutputMode::pair);
  EXPECT_NE(pair.find("Generated Output A"), std::string::npos);
  EXPECT_NE(pair.find("Generated Output B"), std::string::npos);
}

TEST(Prompts, RenderParseRoundTrip) {
  for (const auto& d : builtin_dimensions()) {
    const auto mode = d.range ? OutputMode::single : OutputMode::pair;
    const auto r = render(d.tag.name, mode);
    const auto blocks = extract_blocks(r);
    std::string joined;
    for (std::size_t i = 0; i < 4; ++i) {
      EXPECT_EQ(blocks[i].rfind(kBlockHeaders[i], 0), 0u);
      joined += (i ? "\n\n" : "") + blocks[i];
    }
    EXPECT_EQ(joined + "\n", r);
  }
  EXPECT_THROW(extract_blocks("no headers"), InputError);
}

TEST(Prompts, SwappingDimensionLeavesInputBlockAlone) {
  const auto a = extract_blocks(render("appearance_quality"));
  const auto b = extract_blocks(render("intrinsic_consistency"));
  EXPECT_NE(a[0], b[0]);
  EXPECT_EQ(a[1], b[1]);
  EXPECT_NE(a[2], b[2]);
  EXPECT_EQ(a[3], b[3]);
}

TEST(Prompts, RangeAdjustment) {
  const auto r = render("appearance_quality", OutputMode::single, ScoreRange(0, 5));
  EXPECT_EQ(count(r, "between 0.0 and 5.0"), 2u);
  const auto frac = render("overall", OutputMode::single, ScoreRange(-1, 2.5));
  EXPECT_NE(frac.find("between -1.0 and 2.5"), std::string::npos);
  const auto pref = render("preference", OutputMode::single, ScoreRange(0, 10));
  EXPECT_NE(pref.find("between 0.0 and 10.0"), std::string::npos);
  EXPECT_EQ(format_range_value(10), "10.0");
  EXPECT_EQ(format_range_value(0.25), "0.25");
}

TEST(Prompts, Errors) {
  EXPECT_THROW(render("preference"), InputError);  // no range in single mode
  EXPECT_THROW(render("preference", OutputMode::pair, ScoreRange(0, 1)), InputError);
  const std::vector<DimensionSpec> mixed{find_dimension("appearance_quality"), find_dimension("faithfulness")};
  EXPECT_THROW(assemble_prompt(builtin_template(OutputMode::single), mixed, "x", OutputMode::single),
               InputError);
  EXPECT_NO_THROW(assemble_prompt(builtin_template(OutputMode::single), mixed, "x", OutputMode::single,
                                  ScoreRange(0, 10)));
  EXPECT_THROW(assemble_prompt(builtin_template(OutputMode::single), {}, "x", OutputMode::single),
               InputError);
  const std::vector<DimensionSpec> one{find_dimension("overall")};
  EXPECT_THROW(assemble_prompt(builtin_template(OutputMode::pair), one, "x", OutputMode::single),
               InputError);

  auto t = builtin_template(OutputMode::single);
  t.blocks[3] += " {{tone}}";
  try {
    assemble_prompt(t, one, "x", OutputMode::single);
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("{{tone}}"), std::string::npos);
  }
}

TEST(Prompts, MultipleDimensionsAndLiteralText) {
  const std::vector<DimensionSpec> dims{find_dimension("appearance_quality"),
                                        find_dimension("intrinsic_consistency"),
                                        find_dimension("relationship_consistency")};
  const auto r = assemble_prompt(builtin_template(OutputMode::single), dims, "a {{goal}} cat",
                                 OutputMode::single);
  EXPECT_NE(r.find("**appearance quality, intrinsic attribute consistency and relationship attribute "
                   "consistency**"),
            std::string::npos);
  EXPECT_NE(r.find("- **User Input**: a {{goal}} cat\n"), std::string::npos);
  EXPECT_EQ(r, assemble_prompt(builtin_template(OutputMode::single), dims, "a {{goal}} cat",
                               OutputMode::single));
}

TEST(Templates, Validation) {
  nlohmann::json j = {{"mode", "single"},
                      {"blocks", {"# Task Description\n{{goal}}", "# Annotation Input\n<text> <image>",
                                  "# Evaluation Guidelines\n{{guidelines}}", "# Output Format\nx"}}};
  EXPECT_NO_THROW(template_from_json(j));
  auto bad = j;
  bad["blocks"].erase(3);
  EXPECT_THROW(template_from_json(bad), InputError);
  bad = j;
  bad["blocks"][1] = "# Annotation Input\n<text> <image> <image>";
  EXPECT_THROW(template_from_json(bad), InputError);
  bad["mode"] = "pair";
  EXPECT_NO_THROW(template_from_json(bad));
  bad = j;
  bad["blocks"][0] = "# Output Format\nx";
  EXPECT_THROW(template_from_json(bad), InputError);
  bad = j;
  bad["mode"] = "triple";
  EXPECT_THROW(template_from_json(bad), InputError);
  EXPECT_THROW(load_template("/nonexistent/template.json"), InputError);
}
