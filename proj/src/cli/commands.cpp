#include <cstdio>
#include <fstream>
#include <map>

#include "evalrl/cli.hpp"
#include "evalrl/synthetic.hpp"

namespace evalrl::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kSingleEnvStream = 0x51;
constexpr std::uint64_t kPairEnvStream = 0x52;
constexpr std::uint64_t kSingleSourceStream = 0xC1;
constexpr std::uint64_t kRatedItemsStream = 0xC2;
constexpr std::uint64_t kPairCorpusStream = 0xC3;
constexpr std::uint64_t kEnhanceStream = 0xE5;

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
  if (!out) throw InputError("failed writing " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

void check_feature_dim(std::size_t got, int want, const fs::path& path) {
  if (static_cast<int>(got) != want) {
    throw InputError(path.string() + ": features have length " + std::to_string(got) +
                     " but env.feature_dim is " + std::to_string(want));
  }
}

template <class Task>
void split(std::vector<Task> all, int n_train, std::vector<Task>& train, std::vector<Task>& test) {
  train.assign(std::make_move_iterator(all.begin()), std::make_move_iterator(all.begin() + n_train));
  test.assign(std::make_move_iterator(all.begin() + n_train), std::make_move_iterator(all.end()));
}

json state_heads_json(const EvaluatorState& s) {
  json j;
  if (s.single) j["single"] = to_json(*s.single);
  if (s.pair) j["pair"] = to_json(*s.pair);
  if (s.ranker) j["ranker"] = to_json(*s.ranker);
  return j;
}

void write_checkpoint(const fs::path& dir, const std::string& stem, long step,
                      const EvaluatorState& s) {
  const json heads = state_heads_json(s);
  for (const auto& [head, params] : heads.items()) {
    json j = {{"step", step}, {"head", head}, {"params", params}};
    write_json(dir / (stem + "-" + head + ".json"), j);
  }
}

std::string step_stem(long step) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "step-%06ld", step);
  return buf;
}

}  // namespace

TrainingEnv make_env(const EnvConfig& c, std::uint64_t seed) {
  TrainingEnv env;
  env.feature_dim = c.feature_dim;
  const SingleEnvConfig sc = c.single.value_or(SingleEnvConfig{});
  const PairEnvConfig pc = c.pair.value_or(PairEnvConfig{});
  const ScoreRange range(sc.range_min, sc.range_max);
  env.single_grid = BinGrid(sc.bins, range);
  env.pair_grid = BinGrid(pc.bins, ScoreRange(0.0, 1.0));

  if (c.single && !c.single_train) {
    auto e = make_synthetic_single_env(c.feature_dim, sc.n_train + sc.n_test, sc.noise_sd, range,
                                       derive_seed(seed, kSingleEnvStream), sc.dimension);
    split(std::move(e.tasks), sc.n_train, env.single_train, env.single_test);
  }
  if (c.single_train) {
    env.single_train = load_single_corpus(*c.single_train);
    if (!env.single_train.empty()) {
      check_feature_dim(env.single_train.front().features.size(), c.feature_dim, *c.single_train);
    }
  }
  if (c.single_test) {
    env.single_test = load_single_corpus(*c.single_test);
    if (!env.single_test.empty()) {
      check_feature_dim(env.single_test.front().features.size(), c.feature_dim, *c.single_test);
    }
  }

  if (c.pair && !c.pair_train) {
    auto e = make_synthetic_pair_env(c.feature_dim, pc.n_train + pc.n_test,
                                     derive_seed(seed, kPairEnvStream),
                                     {pc.noise_sd, pc.confidence});
    split(std::move(e.tasks), pc.n_train, env.pair_train, env.pair_test);
  }
  if (c.pair_train) {
    env.pair_train = load_pair_corpus(*c.pair_train);
    if (!env.pair_train.empty()) {
      check_feature_dim(env.pair_train.front().features_a.size(), c.feature_dim, *c.pair_train);
    }
  }
  if (c.pair_test) {
    env.pair_test = load_pair_corpus(*c.pair_test);
    if (!env.pair_test.empty()) {
      check_feature_dim(env.pair_test.front().features_a.size(), c.feature_dim, *c.pair_test);
    }
  }
  return env;
}

void cmd_build_corpus(const RunConfig& c, const fs::path& out_dir) {
  c.validate();
  const auto seed = *c.seed;
  const auto& k = c.corpus;
  const CorpusSpec spec = k.spec();
  if (!k.single && !k.pair) throw InputError("corpus.single and corpus.pair are both disabled");

  json manifest = {{"command", "build-corpus"}, {"seed", seed}, {"config", to_json(c)}};
  if (k.single) {
    std::vector<SingleEvalTask> source;
    if (k.single_source) {
      source = load_single_corpus(*k.single_source);
    } else {
      source = make_synthetic_multi_dimension_source(
          c.env.feature_dim, k.synthetic_items, spec.dimensions, k.synthetic_noise_sd,
          ScoreRange(0.0, 10.0), derive_seed(seed, kSingleSourceStream));
    }
    const auto corpus = build_single_corpus(source, spec, seed);
    std::map<std::string, int> per_dim;
    for (const auto& d : spec.dimensions) per_dim[d.name] = 0;
    for (const auto& t : corpus) ++per_dim[t.dimension.name];
    save_corpus(std::span<const SingleEvalTask>(corpus), out_dir / "corpus" / "single.jsonl");
    manifest["single"] = {{"total", corpus.size()},
                          {"per_dimension", per_dim},
                          {"source", k.single_source ? k.single_source->string() : "synthetic"}};
  }
  if (k.pair) {
    std::vector<RatedItem> items;
    if (k.rated_items) {
      items = load_rated_items(*k.rated_items);
    } else {
      items = make_synthetic_rated_items(c.env.feature_dim, k.synthetic_prompts, k.items_per_prompt,
                                         k.synthetic_noise_sd, derive_seed(seed, kRatedItemsStream));
    }
    const auto corpus = build_pair_corpus(items, spec, derive_seed(seed, kPairCorpusStream),
                                          k.confidence, k.pair_with_replacement);
    json strata = json::array();
    for (const auto& s : corpus.strata) strata.push_back(to_json(s));
    save_corpus(std::span<const PairEvalTask>(corpus.pairs), out_dir / "corpus" / "pair.jsonl");
    manifest["pair"] = {{"total", corpus.pairs.size()},
                        {"strata", strata},
                        {"source", k.rated_items ? k.rated_items->string() : "synthetic"}};
  }
  write_json(out_dir / "manifest.json", manifest);
}

void cmd_train(const RunConfig& c, const fs::path& out_dir) {
  c.validate();
  const auto seed = *c.seed;
  write_json(out_dir / "manifest.json", {{"command", "train"}, {"seed", seed}, {"config", to_json(c)}});

  const TrainingEnv env = make_env(c.env, seed);
  json report_json = {{"objective", std::string(to_string(c.train.objective))}, {"seed", seed}};
  try {
    TrainingReport report = train(env, c.train, seed);
    std::vector<CurveRow> curve = report.curve;
    std::vector<Checkpoint> checkpoints = report.checkpoints;
    report_json["initial_metrics"] = to_json(report.initial_metrics);
    report_json["trained_metrics"] = to_json(report.final_metrics);
    EvaluatorState final_state = report.final_state;
    HeldOutMetrics final_metrics = report.final_metrics;

    if (c.enhance.enabled) {
      RejectionConfig rc;
      rc.threshold = c.enhance.threshold;
      rc.budget = c.enhance.budget;
      rc.group_size = c.enhance.group_size;
      rc.binary = c.train.objective == Objective::grpo_binary;
      TrainingEnv hard = env;
      if (env.has_single()) {
        rc.binary_tolerance = c.train.binary_tolerance_single;
        hard.single_train = rejection_sample_enhance(*final_state.single, env.single_train, rc,
                                                     derive_seed(seed, kEnhanceStream, 1));
      }
      if (env.has_pair()) {
        rc.binary_tolerance = c.train.binary_tolerance_pair;
        hard.pair_train = rejection_sample_enhance(*final_state.pair, env.pair_train, rc,
                                                   derive_seed(seed, kEnhanceStream, 2));
      }
      TrainConfig cfg = c.train;
      cfg.optimizer.steps = c.enhance.steps;
      TrainStart start{final_state, initial_state(env, c.train.objective),
                       c.train.optimizer.steps};
      auto enhanced = train(hard, cfg, seed, start);
      curve.insert(curve.end(), enhanced.curve.begin(), enhanced.curve.end());
      checkpoints.insert(checkpoints.end(), enhanced.checkpoints.begin(), enhanced.checkpoints.end());
      final_state = std::move(enhanced.final_state);
      final_metrics = enhanced.final_metrics;
      report_json["enhance"] = {{"kept_single", hard.single_train.size()},
                                {"kept_pair", hard.pair_train.size()},
                                {"steps", c.enhance.steps}};
    } else {
      report_json["enhance"] = nullptr;
    }

    write_text(out_dir / "curve.csv", curve_csv(curve));
    for (const auto& cp : checkpoints) {
      write_checkpoint(out_dir / "checkpoints", step_stem(cp.step), cp.step, cp.state);
    }
    const long last = curve.empty() ? 0 : curve.back().step;
    write_checkpoint(out_dir / "checkpoints", "final", last, final_state);
    report_json["final_metrics"] = to_json(final_metrics);
    report_json["status"] = "ok";
    report_json["steps_completed"] = last;
    write_json(out_dir / "report.json", report_json);
  } catch (const DivergenceError& e) {
    report_json["status"] = "diverged";
    report_json["last_finite_step"] = e.last_finite_step();
    report_json["error"] = e.what();
    write_json(out_dir / "report.json", report_json);
    throw;
  }
}

void cmd_ablate(const RunConfig& c, const fs::path& out_dir) {
  c.validate();
  if (!is_grpo(c.train.objective)) {
    throw InputError("ablate compares GRPO reward kinds; objective must be grpo_*");
  }
  write_json(out_dir / "manifest.json", {{"command", "ablate"}, {"config", to_json(c)}});

  json rows = json::array();
  double sum_single = 0.0, sum_pair = 0.0;
  int n_single = 0, n_pair = 0;
  for (const auto seed : c.ablate_seeds) {
    const TrainingEnv env = make_env(c.env, seed);
    TrainConfig cont = c.train;
    cont.objective = Objective::grpo_continuous;
    TrainConfig bin = c.train;
    bin.objective = Objective::grpo_binary;
    const auto rc = train(env, cont, seed).final_metrics;
    const auto rb = train(env, bin, seed).final_metrics;
    json row = {{"seed", seed}, {"continuous", to_json(rc)}, {"binary", to_json(rb)}};
    if (rc.single && rb.single && rc.single->spearman_rho && rb.single->spearman_rho) {
      const double d = *rc.single->spearman_rho - *rb.single->spearman_rho;
      row["delta_spearman"] = d;
      sum_single += d;
      ++n_single;
    }
    if (rc.pair && rb.pair && rc.pair->preference_accuracy && rb.pair->preference_accuracy) {
      const double d = *rc.pair->preference_accuracy - *rb.pair->preference_accuracy;
      row["delta_accuracy"] = d;
      sum_pair += d;
      ++n_pair;
    }
    rows.push_back(row);
  }
  json report = {{"seeds", rows}};
  report["mean_delta_spearman"] = n_single ? json(sum_single / n_single) : json(nullptr);
  report["mean_delta_accuracy"] = n_pair ? json(sum_pair / n_pair) : json(nullptr);
  write_json(out_dir / "report.json", report);
}

json cmd_metrics(const MetricsOptions& o) {
  const auto records = load_records(o.records);
  if (records.empty()) throw InputError(o.records.string() + ": no records");
  const MetricReport r = o.mode == OutputMode::single
                             ? compute_report(records)
                             : compute_pairwise_report(records, o.accuracy);
  return to_json(r);
}

std::string cmd_render_prompt(const RenderOptions& o) {
  if (o.dimensions.empty()) throw InputError("at least one --dimension is required");
  std::vector<DimensionSpec> dims;
  for (const auto& name : o.dimensions) dims.push_back(find_dimension(name));
  const PromptTemplate tmpl =
      o.template_path ? load_template(*o.template_path) : builtin_template(o.mode);
  return assemble_prompt(tmpl, dims, o.text, o.mode, o.range);
}

}  // namespace evalrl::cli
