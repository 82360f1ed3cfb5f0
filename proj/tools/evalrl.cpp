#include <CLI11.hpp>
#include <iostream>

#include "evalrl/cli.hpp"

namespace fs = std::filesystem;
using namespace evalrl;
using namespace evalrl::cli;

namespace {

OutputMode parse_mode(const std::string& s) {
  if (s == "single") return OutputMode::single;
  if (s == "pair") return OutputMode::pair;
  throw InputError("--mode must be 'single' or 'pair'");
}

RunConfig resolve_config(const std::string& path, const std::optional<std::uint64_t>& seed) {
  RunConfig c = path.empty() ? run_config_from_json(nlohmann::json::object())
                             : load_run_config(path);
  if (seed) c.seed = seed;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Evaluator training with continuous rewards: corpora, training, metrics, prompts"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
  auto add_run_flags = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON run config")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--out", out_dir, "output directory");
  };

  auto* build = app.add_subcommand("build-corpus", "build the single-wise and pairwise corpora");
  add_run_flags(build);
  auto* train_cmd = app.add_subcommand("train", "train an evaluator and report held-out metrics");
  add_run_flags(train_cmd);
  auto* ablate = app.add_subcommand("ablate", "continuous vs binary reward over paired seeds");
  add_run_flags(ablate);

  auto* metrics = app.add_subcommand("metrics", "meta-evaluation metrics for a records file");
  std::string records;
  std::string metrics_mode = "single";
  double tie_band = 0.0;
  bool exclude_ties = false;
  metrics->add_option("--records", records, "JSONL of task_id/predicted/reference")
      ->required()
      ->check(CLI::ExistingFile);
  metrics->add_option("--mode", metrics_mode, "single (rank correlation) or pair (accuracy)");
  metrics->add_option("--tie-band", tie_band, "half-width of the tie band around 0.5");
  metrics->add_flag("--exclude-ties", exclude_ties, "drop items whose reference is a tie");

  auto* render = app.add_subcommand("render-prompt", "render a four-block evaluation prompt");
  RenderOptions ro;
  std::vector<double> range;
  std::string render_mode = "single";
  std::string template_path;
  std::string render_out;
  render->add_option("--dimension", ro.dimensions, "dimension name (repeatable)")->required();
  render->add_option("--range", range, "score range: MIN MAX")->expected(2);
  render->add_option("--mode", render_mode, "single or pair");
  render->add_option("--text", ro.text, "user input text");
  render->add_option("--template", template_path, "template JSON file")->check(CLI::ExistingFile);
  render->add_option("--out", render_out, "write the prompt to this file instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (build->parsed()) {
      cmd_build_corpus(resolve_config(config_path, seed), out_dir);
    } else if (train_cmd->parsed()) {
      cmd_train(resolve_config(config_path, seed), out_dir);
    } else if (ablate->parsed()) {
      cmd_ablate(resolve_config(config_path, seed), out_dir);
    } else if (metrics->parsed()) {
      MetricsOptions mo{records, parse_mode(metrics_mode), {tie_band, exclude_ties}};
      std::cout << cmd_metrics(mo).dump(2) << "\n";
    } else if (render->parsed()) {
      ro.mode = parse_mode(render_mode);
      if (!range.empty()) ro.range = ScoreRange(range[0], range[1]);
      if (!template_path.empty()) ro.template_path = template_path;
      const std::string text = cmd_render_prompt(ro);
      if (render_out.empty()) {
        std::cout << text;
      } else {
        std::ofstream out(render_out, std::ios::binary);
        if (!(out << text)) throw InputError("cannot write " + render_out);
      }
    }
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << e.what() << " (last finite step " << e.last_finite_step() << ")\n";
    return kExitDivergence;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitOk;
}
