#include <fstream>
#include <set>

#include "evalrl/cli.hpp"

namespace evalrl::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Reads known keys from one JSON object and rejects the rest.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw InputError(where_ + " must be an object");
  }

  template <class T>
  void get(const std::string& key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw InputError(where_ + "." + key + " has the wrong type");
    }
  }

  void get_path(const std::string& key, std::optional<fs::path>& out) {
    seen_.insert(key);
    if (!j_.contains(key) || j_.at(key).is_null()) return;
    if (!j_.at(key).is_string()) throw InputError(where_ + "." + key + " must be a path string");
    out = fs::path(j_.at(key).get<std::string>());
  }

  void get_confidence(const std::string& key, ConfidenceMode& out) {
    std::string s(to_string(out));
    get(key, s);
    out = parse_confidence_mode(s);
  }

  // Returns nullptr when absent. A null value also counts as absent.
  const json* child(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key) || j_.at(key).is_null()) return nullptr;
    return &j_.at(key);
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) throw InputError("unknown config key " + where_ + "." + k);
    }
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

json path_json(const std::optional<fs::path>& p) {
  return p ? json(p->string()) : json(nullptr);
}

void require_file(const std::optional<fs::path>& p, const std::string& what) {
  if (p && !fs::is_regular_file(*p)) throw InputError(what + " not found: " + p->string());
}

}  // namespace

CorpusSpec CorpusBuildConfig::spec() const {
  CorpusSpec s;
  s.per_dimension = per_dimension;
  s.dimensions.clear();
  for (const auto& name : dimensions) s.dimensions.push_back(dimension_tag(name));
  s.sample_with_replacement = single_with_replacement;
  s.total_pairs = total_pairs;
  s.delta_weights = delta_weights;
  s.polarity_ratio = polarity_ratio;
  return s;
}

void RunConfig::validate() const {
  if (!seed) throw InputError("config needs an explicit seed (config \"seed\" or --seed)");
  train.validate();
  if (env.feature_dim < 1) throw InputError("env.feature_dim must be >= 1");
  if (env.single) {
    const auto& s = *env.single;
    if (s.n_train < 0 || s.n_test < 0) throw InputError("env.single task counts must be >= 0");
    BinGrid(s.bins, ScoreRange(s.range_min, s.range_max));
    if (!(s.noise_sd >= 0.0)) throw InputError("env.single.noise_sd must be >= 0");
  }
  if (env.pair) {
    const auto& p = *env.pair;
    if (p.n_train < 0 || p.n_test < 0) throw InputError("env.pair task counts must be >= 0");
    BinGrid(p.bins, ScoreRange(0.0, 1.0));
    if (!(p.noise_sd >= 0.0)) throw InputError("env.pair.noise_sd must be >= 0");
  }
  require_file(env.single_train, "env.single_train");
  require_file(env.single_test, "env.single_test");
  require_file(env.pair_train, "env.pair_train");
  require_file(env.pair_test, "env.pair_test");
  if (enhance.enabled) {
    if (!is_grpo(train.objective)) throw InputError("enhance needs a GRPO objective");
    if (enhance.budget < 1) throw InputError("enhance.budget must be >= 1");
    if (enhance.group_size < 2) throw InputError("enhance.group_size must be >= 2");
    if (enhance.steps < 0) throw InputError("enhance.steps must be >= 0");
  }
  if (ablate_seeds.empty()) throw InputError("ablate.seeds must be nonempty");
  corpus.spec().validate();
  require_file(corpus.single_source, "corpus.single_source");
  require_file(corpus.rated_items, "corpus.rated_items");
  if (corpus.synthetic_items < 1 || corpus.synthetic_prompts < 1 || corpus.items_per_prompt < 2) {
    throw InputError("corpus synthetic pool sizes must be positive (items_per_prompt >= 2)");
  }
}

RunConfig run_config_from_json(const json& j) {
  RunConfig c;
  ObjectReader root(j, "config");
  if (const auto* s = root.child("seed")) {
    const bool ok = s->is_number_unsigned() || (s->is_number_integer() && s->get<std::int64_t>() >= 0);
    if (!ok) throw InputError("config.seed must be a non-negative integer");
    c.seed = s->get<std::uint64_t>();
  }

  std::string objective(to_string(c.train.objective));
  root.get("objective", objective);
  c.train.objective = parse_objective(objective);
  root.get("checkpoint_interval", c.train.checkpoint_interval);

  if (const auto* g = root.child("grpo")) {
    ObjectReader r(*g, "grpo");
    r.get("clip_epsilon", c.train.grpo.clip_epsilon);
    r.get("kl_beta", c.train.grpo.kl_beta);
    r.get("group_size", c.train.grpo.group_size);
    r.get("std_epsilon", c.train.grpo.std_epsilon);
    r.get("updates_per_batch", c.train.grpo.updates_per_batch);
    r.get("ref_sync_period", c.train.grpo.ref_sync_period);
    r.finish();
  }
  if (const auto* g = root.child("ranking")) {
    ObjectReader r(*g, "ranking");
    r.get("margin", c.train.ranking.margin);
    r.get("center_coeff", c.train.ranking.center_coeff);
    r.finish();
  }
  if (const auto* g = root.child("optimizer")) {
    ObjectReader r(*g, "optimizer");
    r.get("learning_rate", c.train.optimizer.learning_rate);
    r.get("batch_size", c.train.optimizer.batch_size);
    r.get("steps", c.train.optimizer.steps);
    r.finish();
  }
  if (const auto* g = root.child("binary_tolerance")) {
    ObjectReader r(*g, "binary_tolerance");
    r.get("single", c.train.binary_tolerance_single);
    r.get("pair", c.train.binary_tolerance_pair);
    r.finish();
  }

  if (const auto* g = root.child("env")) {
    ObjectReader r(*g, "env");
    r.get("feature_dim", c.env.feature_dim);
    if (r.has("single")) {
      const auto* s = r.child("single");
      c.env.single.reset();
      if (s) {
        SingleEnvConfig v;
        ObjectReader rs(*s, "env.single");
        rs.get("n_train", v.n_train);
        rs.get("n_test", v.n_test);
        rs.get("noise_sd", v.noise_sd);
        rs.get("range_min", v.range_min);
        rs.get("range_max", v.range_max);
        rs.get("bins", v.bins);
        rs.get("dimension", v.dimension);
        rs.finish();
        c.env.single = v;
      }
    }
    if (const auto* p = r.child("pair")) {
      PairEnvConfig v;
      ObjectReader rp(*p, "env.pair");
      rp.get("n_train", v.n_train);
      rp.get("n_test", v.n_test);
      rp.get("noise_sd", v.noise_sd);
      rp.get_confidence("confidence", v.confidence);
      rp.get("bins", v.bins);
      rp.finish();
      c.env.pair = v;
    }
    r.get_path("single_train", c.env.single_train);
    r.get_path("single_test", c.env.single_test);
    r.get_path("pair_train", c.env.pair_train);
    r.get_path("pair_test", c.env.pair_test);
    r.finish();
  }

  if (const auto* g = root.child("enhance")) {
    ObjectReader r(*g, "enhance");
    r.get("enabled", c.enhance.enabled);
    r.get("threshold", c.enhance.threshold);
    r.get("budget", c.enhance.budget);
    r.get("group_size", c.enhance.group_size);
    r.get("steps", c.enhance.steps);
    r.finish();
  }

  if (const auto* g = root.child("ablate")) {
    ObjectReader r(*g, "ablate");
    r.get("seeds", c.ablate_seeds);
    r.finish();
  }

  if (const auto* g = root.child("corpus")) {
    auto& k = c.corpus;
    ObjectReader r(*g, "corpus");
    r.get("single", k.single);
    r.get("pair", k.pair);
    r.get("per_dimension", k.per_dimension);
    r.get("dimensions", k.dimensions);
    r.get("single_with_replacement", k.single_with_replacement);
    r.get("total_pairs", k.total_pairs);
    r.get("delta_weights", k.delta_weights);
    r.get("polarity_ratio", k.polarity_ratio);
    r.get_confidence("confidence", k.confidence);
    r.get("pair_with_replacement", k.pair_with_replacement);
    r.get_path("single_source", k.single_source);
    r.get_path("rated_items", k.rated_items);
    r.get("synthetic_items", k.synthetic_items);
    r.get("synthetic_noise_sd", k.synthetic_noise_sd);
    r.get("synthetic_prompts", k.synthetic_prompts);
    r.get("items_per_prompt", k.items_per_prompt);
    r.finish();
  }
  root.finish();
  return c;
}

json to_json(const RunConfig& c) {
  const auto& t = c.train;
  json j;
  j["seed"] = c.seed ? json(*c.seed) : json(nullptr);
  j["objective"] = std::string(to_string(t.objective));
  j["checkpoint_interval"] = t.checkpoint_interval;
  j["grpo"] = {{"clip_epsilon", t.grpo.clip_epsilon},
               {"kl_beta", t.grpo.kl_beta},
               {"group_size", t.grpo.group_size},
               {"std_epsilon", t.grpo.std_epsilon},
               {"updates_per_batch", t.grpo.updates_per_batch},
               {"ref_sync_period", t.grpo.ref_sync_period}};
  j["ranking"] = {{"margin", t.ranking.margin}, {"center_coeff", t.ranking.center_coeff}};
  j["optimizer"] = {{"learning_rate", t.optimizer.learning_rate},
                    {"batch_size", t.optimizer.batch_size},
                    {"steps", t.optimizer.steps}};
  j["binary_tolerance"] = {{"single", t.binary_tolerance_single},
                           {"pair", t.binary_tolerance_pair}};

  json env = {{"feature_dim", c.env.feature_dim}};
  if (c.env.single) {
    const auto& s = *c.env.single;
    env["single"] = {{"n_train", s.n_train},     {"n_test", s.n_test},
                     {"noise_sd", s.noise_sd},   {"range_min", s.range_min},
                     {"range_max", s.range_max}, {"bins", s.bins},
                     {"dimension", s.dimension}};
  } else {
    env["single"] = nullptr;
  }
  if (c.env.pair) {
    const auto& p = *c.env.pair;
    env["pair"] = {{"n_train", p.n_train},
                   {"n_test", p.n_test},
                   {"noise_sd", p.noise_sd},
                   {"confidence", std::string(to_string(p.confidence))},
                   {"bins", p.bins}};
  } else {
    env["pair"] = nullptr;
  }
  env["single_train"] = path_json(c.env.single_train);
  env["single_test"] = path_json(c.env.single_test);
  env["pair_train"] = path_json(c.env.pair_train);
  env["pair_test"] = path_json(c.env.pair_test);
  j["env"] = env;

  j["enhance"] = {{"enabled", c.enhance.enabled},
                  {"threshold", c.enhance.threshold},
                  {"budget", c.enhance.budget},
                  {"group_size", c.enhance.group_size},
                  {"steps", c.enhance.steps}};
  j["ablate"] = {{"seeds", c.ablate_seeds}};

  const auto& k = c.corpus;
  j["corpus"] = {{"single", k.single},
                 {"pair", k.pair},
                 {"per_dimension", k.per_dimension},
                 {"dimensions", k.dimensions},
                 {"single_with_replacement", k.single_with_replacement},
                 {"total_pairs", k.total_pairs},
                 {"delta_weights", k.delta_weights},
                 {"polarity_ratio", k.polarity_ratio},
                 {"confidence", std::string(to_string(k.confidence))},
                 {"pair_with_replacement", k.pair_with_replacement},
                 {"single_source", path_json(k.single_source)},
                 {"rated_items", path_json(k.rated_items)},
                 {"synthetic_items", k.synthetic_items},
                 {"synthetic_noise_sd", k.synthetic_noise_sd},
                 {"synthetic_prompts", k.synthetic_prompts},
                 {"items_per_prompt", k.items_per_prompt}};
  return j;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  return run_config_from_json(j);
}

}  // namespace evalrl::cli
