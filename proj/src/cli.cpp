// Copyright 2026 The EmoDynamiX Authors
// SPDX-License-Identifier: Apache-2.0

#include "emodynamix/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

#include "emodynamix/error.hpp"
#include "emodynamix/features.hpp"
#include "emodynamix/synthetic.hpp"

namespace fs = std::filesystem;

namespace emx {

// ---------------------------------------------------------------- config --

void to_json(json& j, const CorpusConfig& c) {
  j = {{"schema", c.schema},         {"path", c.path},       {"train_path", c.train_path},
       {"dev_path", c.dev_path},     {"test_path", c.test_path}, {"strategies", c.strategies},
       {"split_ratio", c.split_ratio}, {"window", c.window}};
}

namespace {

template <typename V>
void read_field(const json& j, const char* key, V& out, const char* section) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<V>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string(section) + "." + key + ": " + e.what());
  }
}

void check_keys(const json& j, std::initializer_list<const char*> known, const char* section) {
  if (!j.is_object()) throw ConfigError(std::string(section) + ": expected an object");
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (const char* name : known) ok = ok || k == name;
    if (!ok) throw ConfigError(std::string(section) + ": unknown key '" + k + "'");
  }
}

}  // namespace

void from_json(const json& j, CorpusConfig& c) {
  check_keys(j, {"schema", "path", "train_path", "dev_path", "test_path", "strategies", "split_ratio", "window"},
             "corpus");
  read_field(j, "schema", c.schema, "corpus");
  read_field(j, "path", c.path, "corpus");
  read_field(j, "train_path", c.train_path, "corpus");
  read_field(j, "dev_path", c.dev_path, "corpus");
  read_field(j, "test_path", c.test_path, "corpus");
  if (j.contains("strategies")) c.strategies = j.at("strategies");
  read_field(j, "split_ratio", c.split_ratio, "corpus");
  read_field(j, "window", c.window, "corpus");
}

void to_json(json& j, const RunConfig& c) {
  j = {{"corpus", c.corpus},
       {"features", c.features},
       {"fallback_context_dim", c.fallback_context_dim},
       {"model", c.model},
       {"train", c.train},
       {"out", c.out},
       {"seed", c.seed},
       {"dtype", c.dtype},
       {"eval_split", c.eval_split},
       {"top_n", c.top_n},
       {"dot_limit", c.dot_limit}};
}

void from_json(const json& j, RunConfig& c) {
  check_keys(j,
             {"corpus", "features", "fallback_context_dim", "model", "train", "out", "seed", "dtype", "eval_split",
              "top_n", "dot_limit"},
             "config");
  if (j.contains("corpus")) c.corpus = j.at("corpus").get<CorpusConfig>();
  read_field(j, "features", c.features, "config");
  read_field(j, "fallback_context_dim", c.fallback_context_dim, "config");
  if (j.contains("model")) from_json(j.at("model"), c.model);
  if (j.contains("train")) from_json(j.at("train"), c.train);
  read_field(j, "out", c.out, "config");
  read_field(j, "seed", c.seed, "config");
  read_field(j, "dtype", c.dtype, "config");
  read_field(j, "eval_split", c.eval_split, "config");
  read_field(j, "top_n", c.top_n, "config");
  read_field(j, "dot_limit", c.dot_limit, "config");
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config file not found: " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  RunConfig c;
  from_json(j, c);
  // Relative paths in the file are taken relative to the config file.
  const fs::path base = path.parent_path();
  auto rebase = [&](std::string& p) {
    if (!p.empty() && p != "fallback" && fs::path(p).is_relative()) p = (base / p).lexically_normal().string();
  };
  rebase(c.corpus.path);
  rebase(c.corpus.train_path);
  rebase(c.corpus.dev_path);
  rebase(c.corpus.test_path);
  rebase(c.features);
  rebase(c.out);
  return c;
}

StrategySet resolve_strategies(const CorpusConfig& c) {
  const CorpusSchema schema = parse_schema(c.schema);
  if (c.strategies.is_null()) return schema_strategies(schema);
  if (c.strategies.is_string()) return builtin_strategy_set(c.strategies.get<std::string>());
  return strategy_set_from_json(c.strategies);
}

namespace {

json histogram(std::span<const WindowSample> samples, const StrategySet& s) {
  json h = json::object();
  const auto counts = class_counts(samples, s.size());
  for (std::size_t c = 0; c < s.size(); ++c) h[s.label(c)] = counts[c];
  return h;
}

}  // namespace

PreparedData prepare_data(const RunConfig& cfg) {
  const CorpusConfig& cc = cfg.corpus;
  if (cc.window == 0) throw ConfigError("corpus.window must be >= 1");
  const CorpusSchema schema = parse_schema(cc.schema);
  PreparedData data{resolve_strategies(cc), {}, {}, {}, json::object()};

  LoadStats stats;
  DialogueSplit split;
  const bool presplit = !cc.train_path.empty() || !cc.dev_path.empty() || !cc.test_path.empty();
  if (presplit) {
    auto load = [&](const std::string& p) {
      return p.empty() ? std::vector<Dialogue>{} : load_corpus(p, schema, data.strategies, &stats);
    };
    split.train = load(cc.train_path);
    split.dev = load(cc.dev_path);
    split.test = load(cc.test_path);
  } else if (!cc.path.empty()) {
    split = split_dialogues(load_corpus(cc.path, schema, data.strategies, &stats), cc.split_ratio, cfg.seed);
  } else {
    throw ConfigError("corpus: set either path or train_path/dev_path/test_path");
  }

  WindowStats wstats;
  data.train = window_samples(split.train, cc.window, &wstats);
  data.dev = window_samples(split.dev, cc.window, &wstats);
  data.test = window_samples(split.test, cc.window, &wstats);

  json splits = json::object();
  auto describe = [&](const char* name, const std::vector<Dialogue>& ds, const std::vector<WindowSample>& ss) {
    json ids = json::array();
    for (const auto& d : ds) ids.push_back(d.id);
    splits[name] = {{"dialogues", ds.size()},
                    {"samples", ss.size()},
                    {"class_histogram", histogram(ss, data.strategies)},
                    {"dialogue_ids", std::move(ids)}};
  };
  describe("train", split.train, data.train);
  describe("dev", split.dev, data.dev);
  describe("test", split.test, data.test);
  data.manifest = {{"schema", cc.schema},
                   {"strategies", strategy_set_json(data.strategies)},
                   {"seed", cfg.seed},
                   {"presplit", presplit},
                   {"window", cc.window},
                   {"dialogues_read", stats.dialogues_read},
                   {"dropped_low_quality", stats.dropped_low_quality},
                   {"skipped_no_history", wstats.skipped_no_history},
                   {"total_samples", data.train.size() + data.dev.size() + data.test.size()},
                   {"splits", std::move(splits)}};
  return data;
}

// -------------------------------------------------------------- commands --

namespace {

struct Flags {
  std::string config;
  std::uint64_t seed = 0;
  std::string features;
  std::string ablate;
  std::string out;
  std::string checkpoint;
  std::string dtype;
  std::string split;
  bool dot = false;
  std::vector<double> taus = {0.1, 0.5, 1.0, 2.0};
  std::size_t steps = 0;
  // synth
  std::size_t dialogues = 60;
  std::size_t strategies = 3;
  std::size_t context_dim = 32;
};

struct Context {
  RunConfig cfg;
  Flags flags;
  CLI::App* sub = nullptr;
  std::ostream& out;
  std::ostream& err;

  bool given(const char* name) const { return sub->count(name) > 0; }
  fs::path out_dir() const { return fs::path(cfg.out); }
  fs::path checkpoint_path() const {
    return flags.checkpoint.empty() ? out_dir() / "checkpoint.emx" : fs::path(flags.checkpoint);
  }
};

RunConfig resolve_config(const Flags& f, const CLI::App& sub) {
  RunConfig cfg = f.config.empty() ? RunConfig{} : load_run_config(f.config);
  // Flags win over the file.
  if (sub.count("--seed")) cfg.seed = f.seed;
  if (sub.count("--features")) cfg.features = f.features;
  if (sub.count("--ablate")) cfg.model.ablations = parse_ablation(f.ablate);
  if (sub.count("--out")) cfg.out = f.out;
  if (sub.count("--dtype")) cfg.dtype = f.dtype;
  if (sub.count("--split")) cfg.eval_split = f.split;
  if (sub.count("--steps")) {
    cfg.train.total_steps = f.steps;
    cfg.train.warmup_steps = std::min(cfg.train.warmup_steps, f.steps);
  }
  cfg.train.seed = cfg.seed;
  parse_dtype(cfg.dtype);
  if (cfg.eval_split != "train" && cfg.eval_split != "dev" && cfg.eval_split != "test") {
    throw ConfigError("eval_split must be train, dev or test");
  }
  return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw LookupError("cannot write " + path.string());
  f << text;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

// Sets the dimensions that follow from the data and the feature source.
void bind_dimensions(RunConfig& cfg, const StrategySet& s, const FeatureProvider& p) {
  cfg.model.n_strategies = s.size();
  cfg.model.context_dim = p.context_dim();
  cfg.model.n_emotions = kNumEmotions;
  cfg.model.validate();
  cfg.train.validate();
}

const std::vector<WindowSample>& pick_split(const PreparedData& d, const std::string& name) {
  if (name == "train") return d.train;
  if (name == "dev") return d.dev;
  return d.test;
}

std::vector<double> loss_weights(const RunConfig& cfg, std::span<const WindowSample> train, const StrategySet& s,
                                 std::ostream& err) {
  if (cfg.train.class_weighted) {
    try {
      return class_weights(train, s);
    } catch (const ValidationError& e) {
      err << "warning: " << e.what() << "; using uniform class weights\n";
    }
  }
  return std::vector<double>(s.size(), 1.0);
}

template <typename T>
struct TrainedRun {
  Model<T> model;
  TrainResult<T> result;
};

// Trains on cfg's train split with dev selection; writes the log and the best
// checkpoint under `dir`.
template <typename T>
TrainedRun<T> run_training(const RunConfig& cfg, const PreparedData& data, const FeatureProvider& provider,
                           const fs::path& dir, const fs::path& ckpt, std::ostream& err) {
  const auto train_ex = build_examples(data.train, provider, data.strategies, cfg.model.graph_options());
  const auto dev_ex = build_examples(data.dev, provider, data.strategies, cfg.model.graph_options());
  const auto weights = loss_weights(cfg, data.train, data.strategies, err);

  Model<T> model(cfg.model, cfg.seed);
  fs::create_directories(dir);
  std::ofstream log(dir / "train_log.jsonl");
  if (!log) throw LookupError("cannot write " + (dir / "train_log.jsonl").string());
  auto on_log = [&](const LogRecord& r) {
    log << json(r).dump() << '\n';
    if (r.dev_macro_f1) {
      err << "step " << r.step << "  loss " << r.loss << "  dev macro-F1 " << *r.dev_macro_f1 << '\n';
    }
  };
  TrainResult<T> result = train(model, train_ex, dev_ex, weights, data.strategies, cfg.train, on_log);
  model.params().assign_values(result.best_params);
  save_model(ckpt, model, data.strategies, cfg.train,
             json{{"best_step", result.best_step}, {"features", cfg.features}, {"seed", cfg.seed}});
  return {std::move(model), std::move(result)};
}

template <typename T>
EvalReport evaluate_split(Model<T>& model, const RunConfig& cfg, const PreparedData& data,
                          const FeatureProvider& provider, const std::string& split) {
  const auto& samples = pick_split(data, split);
  if (samples.empty()) throw ValidationError("the " + split + " split has no samples");
  const auto ex = build_examples(samples, provider, data.strategies, model.config().graph_options());
  return evaluate(model, ex, data.strategies, cfg.train.checked);
}

template <typename T>
void check_compatible(const LoadedModel<T>& m, const PreparedData& data, const FeatureProvider& provider,
                      const fs::path& ckpt) {
  if (!(m.strategies == data.strategies)) {
    throw ValidationError(ckpt.string() + ": checkpoint strategy set '" + m.strategies.name() +
                          "' differs from the corpus strategy set '" + data.strategies.name() + "'");
  }
  if (m.model.config().context_dim != provider.context_dim()) {
    throw ValidationError(ckpt.string() + ": checkpoint expects context dim " +
                          std::to_string(m.model.config().context_dim) + ", features provide " +
                          std::to_string(provider.context_dim()));
  }
}

json summary(const char* command, const RunConfig& cfg) {
  return {{"command", command}, {"config", cfg}};
}

int cmd_ingest(Context& ctx) {
  const PreparedData data = prepare_data(ctx.cfg);
  const fs::path dir = ctx.out_dir();
  fs::create_directories(dir);
  for (const char* name : {"train", "dev", "test"}) {
    std::ostringstream buf;
    write_samples(buf, pick_split(data, name), data.strategies);
    write_text(dir / ("samples_" + std::string(name) + ".jsonl"), buf.str());
    if (pick_split(data, name).empty()) ctx.err << "warning: " << name << " split is empty\n";
  }
  write_json(dir / "split_manifest.json", data.manifest);
  json s = summary("ingest", ctx.cfg);
  s["manifest"] = data.manifest;
  write_json(dir / "ingest_summary.json", s);
  ctx.out << "samples: train " << data.train.size() << ", dev " << data.dev.size() << ", test " << data.test.size()
          << '\n';
  return 0;
}

template <typename T>
int cmd_init(Context& ctx) {
  const PreparedData data = prepare_data(ctx.cfg);
  auto provider = make_provider(ctx.cfg.features, ctx.cfg.fallback_context_dim);
  bind_dimensions(ctx.cfg, data.strategies, *provider);
  Model<T> model(ctx.cfg.model, ctx.cfg.seed);
  fs::create_directories(ctx.out_dir());
  if (ctx.checkpoint_path().has_parent_path()) fs::create_directories(ctx.checkpoint_path().parent_path());
  save_model(ctx.checkpoint_path(), model, data.strategies, ctx.cfg.train, json{{"initialized_only", true}});
  json s = summary("init", ctx.cfg);
  s["checkpoint"] = ctx.checkpoint_path().string();
  write_json(ctx.out_dir() / "init_summary.json", s);
  ctx.out << "wrote " << ctx.checkpoint_path().string() << '\n';
  return 0;
}

template <typename T>
int cmd_train(Context& ctx) {
  const PreparedData data = prepare_data(ctx.cfg);
  auto provider = make_provider(ctx.cfg.features, ctx.cfg.fallback_context_dim);
  bind_dimensions(ctx.cfg, data.strategies, *provider);
  auto run = run_training<T>(ctx.cfg, data, *provider, ctx.out_dir(), ctx.checkpoint_path(), ctx.err);
  json s = summary("train", ctx.cfg);
  s["checkpoint"] = ctx.checkpoint_path().string();
  s["best_step"] = run.result.best_step;
  s["best_dev"] = run.result.best_dev;
  s["final_loss"] = run.result.log.back().loss;
  s["final_tau"] = static_cast<double>(run.model.tau());
  write_json(ctx.out_dir() / "train_summary.json", s);
  ctx.out << "best dev " << select_metric_name(ctx.cfg.train.select_metric) << " " << run.result.best_metric
          << " at step " << run.result.best_step << '\n';
  return 0;
}

template <typename T>
int cmd_eval(Context& ctx) {
  const PreparedData data = prepare_data(ctx.cfg);
  auto provider = make_provider(ctx.cfg.features, ctx.cfg.fallback_context_dim);
  const fs::path ckpt = ctx.checkpoint_path();
  LoadedModel<T> loaded = load_model<T>(ckpt);
  check_compatible(loaded, data, *provider, ckpt);
  ctx.cfg.model = loaded.model.config();
  const EvalReport report = evaluate_split(loaded.model, ctx.cfg, data, *provider, ctx.cfg.eval_split);
  const fs::path dir = ctx.out_dir();
  write_json(dir / "eval_report.json", report);
  write_text(dir / "confusion.csv", confusion_csv(report.confusion, report.labels));
  write_text(dir / "confusion_normalized.csv", confusion_csv(report.confusion, report.labels, true));
  json s = summary("eval", ctx.cfg);
  s["checkpoint"] = ckpt.string();
  s["split"] = ctx.cfg.eval_split;
  s["report"] = report;
  write_json(dir / "eval_summary.json", s);
  ctx.out << ctx.cfg.eval_split << ": macro-F1 " << report.macro_f1 << "  weighted-F1 " << report.weighted_f1
          << "  B " << report.bias << '\n';
  return 0;
}

template <typename T>
int cmd_trace(Context& ctx) {
  const PreparedData data = prepare_data(ctx.cfg);
  auto provider = make_provider(ctx.cfg.features, ctx.cfg.fallback_context_dim);
  const fs::path ckpt = ctx.checkpoint_path();
  LoadedModel<T> loaded = load_model<T>(ckpt);
  check_compatible(loaded, data, *provider, ckpt);
  ctx.cfg.model = loaded.model.config();

  const auto& samples = pick_split(data, ctx.cfg.eval_split);
  if (samples.empty()) throw ValidationError("the " + ctx.cfg.eval_split + " split has no samples");
  const auto ex = build_examples(samples, *provider, data.strategies, ctx.cfg.model.graph_options());

  const fs::path dir = ctx.out_dir();
  fs::create_directories(dir);
  std::ofstream lines(dir / "traces.jsonl");
  std::vector<DecisionTrace> traces;
  std::size_t emotion_records = 0, neutral_records = 0;
  for (std::size_t i = 0; i < ex.size(); ++i) {
    traces.push_back(trace_sample(loaded.model, ex[i], ctx.cfg.train.checked));
    lines << json(traces.back()).dump() << '\n';
    for (const auto& e : ex[i].bundle.emotions) {
      ++emotion_records;
      neutral_records += static_cast<std::size_t>(std::max_element(e.z.begin(), e.z.end()) - e.z.begin()) ==
                         kNeutralEmotion;
    }
    if (ctx.flags.dot && i < ctx.cfg.dot_limit) {
      const auto& k = traces.back().key;
      write_text(dir / "dot" / (k.dialogue_id + "_" + std::to_string(k.target_position) + ".dot"),
                 trace_dot(traces.back(), ex[i], data.strategies));
    }
  }
  const auto patterns = disagreement_report(traces, ctx.cfg.top_n);
  const auto all_patterns = disagreement_report(traces, 0);
  std::size_t mismatches = 0;
  for (const auto& t : traces) mismatches += !t.correct();
  json rows = json::array();
  for (const auto& p : patterns) rows.push_back(pattern_json(p, data.strategies));
  const json report = {
      {"samples", traces.size()},
      {"mismatches", mismatches},
      {"patterns", std::move(rows)},
      {"neutral_share", neutral_share(all_patterns)},
      {"overall_neutral_rate",
       emotion_records ? static_cast<double>(neutral_records) / static_cast<double>(emotion_records) : 0.0}};
  write_json(dir / "disagreements.json", report);
  json s = summary("trace", ctx.cfg);
  s["checkpoint"] = ckpt.string();
  s["disagreements"] = report;
  write_json(dir / "trace_summary.json", s);
  ctx.out << "traced " << traces.size() << " samples, " << mismatches << " mismatches\n";
  return 0;
}

template <typename T>
int cmd_ablate(Context& ctx) {
  const PreparedData data = prepare_data(ctx.cfg);
  auto provider = make_provider(ctx.cfg.features, ctx.cfg.fallback_context_dim);
  bind_dimensions(ctx.cfg, data.strategies, *provider);
  json rows = json::array();
  std::ostringstream csv;
  csv << "variant,macro_f1,weighted_f1,bias,accuracy,best_step\n";
  for (const auto& variant : ablation_variants()) {
    RunConfig cfg = ctx.cfg;
    cfg.model.ablations = parse_ablation(variant);
    const fs::path dir = ctx.out_dir() / "ablate" / variant;
    ctx.err << "== " << variant << '\n';
    auto run = run_training<T>(cfg, data, *provider, dir, dir / "checkpoint.emx", ctx.err);
    const EvalReport report = evaluate_split(run.model, cfg, data, *provider, cfg.eval_split);
    write_json(dir / "eval_report.json", report);
    rows.push_back({{"variant", variant},
                    {"macro_f1", report.macro_f1},
                    {"weighted_f1", report.weighted_f1},
                    {"bias", report.bias},
                    {"accuracy", report.accuracy},
                    {"best_step", run.result.best_step}});
    csv << variant << ',' << report.macro_f1 << ',' << report.weighted_f1 << ',' << report.bias << ','
        << report.accuracy << ',' << run.result.best_step << '\n';
  }
  write_text(ctx.out_dir() / "ablation.csv", csv.str());
  json s = summary("ablate", ctx.cfg);
  s["results"] = rows;
  write_json(ctx.out_dir() / "ablation_summary.json", s);
  ctx.out << csv.str();
  return 0;
}

template <typename T>
int cmd_tau_sweep(Context& ctx) {
  const PreparedData data = prepare_data(ctx.cfg);
  auto provider = make_provider(ctx.cfg.features, ctx.cfg.fallback_context_dim);
  bind_dimensions(ctx.cfg, data.strategies, *provider);
  if (ctx.flags.taus.empty()) throw ConfigError("--taus needs at least one value");
  json rows = json::array();
  std::ostringstream csv;
  csv << "tau_init,final_tau,macro_f1,weighted_f1,bias,accuracy\n";
  for (double tau : ctx.flags.taus) {
    RunConfig cfg = ctx.cfg;
    cfg.model.tau_init = tau;
    cfg.model.validate();
    std::ostringstream name;
    name << "tau_" << tau;
    const fs::path dir = ctx.out_dir() / "tau_sweep" / name.str();
    ctx.err << "== tau_init " << tau << '\n';
    auto run = run_training<T>(cfg, data, *provider, dir, dir / "checkpoint.emx", ctx.err);
    const EvalReport report = evaluate_split(run.model, cfg, data, *provider, cfg.eval_split);
    const double final_tau = static_cast<double>(run.model.tau());
    rows.push_back({{"tau_init", tau},
                    {"final_tau", final_tau},
                    {"macro_f1", report.macro_f1},
                    {"weighted_f1", report.weighted_f1},
                    {"bias", report.bias},
                    {"accuracy", report.accuracy}});
    csv << tau << ',' << final_tau << ',' << report.macro_f1 << ',' << report.weighted_f1 << ',' << report.bias
        << ',' << report.accuracy << '\n';
  }
  write_text(ctx.out_dir() / "tau_sweep.csv", csv.str());
  json s = summary("tau-sweep", ctx.cfg);
  s["taus"] = ctx.flags.taus;
  s["results"] = rows;
  write_json(ctx.out_dir() / "tau_sweep_summary.json", s);
  ctx.out << csv.str();
  return 0;
}

// Writes a synthetic corpus, its feature file and a ready-to-run config.
int cmd_synth(Context& ctx) {
  SyntheticConfig sc;
  sc.dialogues = ctx.flags.dialogues;
  sc.n_strategies = ctx.flags.strategies;
  sc.d_ctx = ctx.flags.context_dim;
  sc.seed = ctx.cfg.seed;
  const SyntheticData data = make_synthetic(sc);
  const fs::path dir = ctx.out_dir();

  std::ostringstream corpus;
  write_corpus(corpus, data.dialogues, data.strategies);
  write_text(dir / "corpus.jsonl", corpus.str());
  std::ostringstream features;
  write_feature_header(features, default_feature_header(sc.d_ctx));
  for (const auto& [key, bundle] : data.features) write_feature_record(features, bundle);
  write_text(dir / "features.jsonl", features.str());

  RunConfig cfg = ctx.cfg;
  cfg.corpus = CorpusConfig{};
  cfg.corpus.schema = "generic";
  cfg.corpus.path = "corpus.jsonl";
  cfg.corpus.strategies = strategy_set_json(data.strategies);
  cfg.features = "features.jsonl";
  if (!ctx.given("--config")) {
    cfg.model.hidden = 32;
    cfg.model.layers = 2;
    cfg.model.mlp_hidden = 32;
    cfg.train.total_steps = 600;
    cfg.train.warmup_steps = 50;
    cfg.train.lr = 3e-3;
    cfg.train.weight_decay = 0.0;
  }
  cfg.out = "run";
  write_json(dir / "config.json", cfg);
  ctx.out << "wrote " << data.dialogues.size() << " dialogues, " << data.features.size() << " samples to "
          << dir.string() << '\n';
  return 0;
}

template <typename T>
int dispatch(const std::string& name, Context& ctx) {
  if (name == "ingest") return cmd_ingest(ctx);
  if (name == "init") return cmd_init<T>(ctx);
  if (name == "train") return cmd_train<T>(ctx);
  if (name == "eval") return cmd_eval<T>(ctx);
  if (name == "trace") return cmd_trace<T>(ctx);
  if (name == "ablate") return cmd_ablate<T>(ctx);
  if (name == "tau-sweep") return cmd_tau_sweep<T>(ctx);
  if (name == "synth") return cmd_synth(ctx);
  throw ConfigError("unknown command " + name);
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"EmoDynamiX dialogue-strategy predictor"};
  app.require_subcommand(1);
  Flags flags;

  auto common = [&](CLI::App* s) {
    s->add_option("--config", flags.config, "JSON run config");
    s->add_option("--seed", flags.seed, "seed for split, init and batching");
    s->add_option("--features", flags.features, "feature file path or 'fallback'");
    s->add_option("--ablate", flags.ablate, "full, no_graph, no_mixed_emotion, no_discourse or no_dummy");
    s->add_option("--out", flags.out, "output directory");
    s->add_option("--checkpoint", flags.checkpoint, "checkpoint path (default <out>/checkpoint.emx)");
    s->add_option("--dtype", flags.dtype, "f32 or f64");
    s->add_option("--split", flags.split, "split to evaluate or trace: train, dev or test");
    s->add_option("--steps", flags.steps, "override train.total_steps");
  };
  std::vector<CLI::App*> subs = {
      app.add_subcommand("ingest", "window and split a corpus; write samples and a split manifest"),
      app.add_subcommand("init", "write an untrained checkpoint"),
      app.add_subcommand("train", "train with dev-set model selection"),
      app.add_subcommand("eval", "evaluate a checkpoint"),
      app.add_subcommand("trace", "export dummy-node attention traces and disagreement patterns"),
      app.add_subcommand("ablate", "train and evaluate the full model and the four ablations"),
      app.add_subcommand("tau-sweep", "train and evaluate for several initial temperatures"),
      app.add_subcommand("synth", "generate a synthetic corpus with planted emotion features"),
  };
  for (auto* s : subs) common(s);
  subs[4]->add_flag("--dot", flags.dot, "also write graphviz files");
  subs[6]->add_option("--taus", flags.taus, "comma-separated initial temperatures")->delimiter(',');
  subs[7]->add_option("--dialogues", flags.dialogues, "number of dialogues");
  subs[7]->add_option("--strategies", flags.strategies, "number of strategies");
  subs[7]->add_option("--context-dim", flags.context_dim, "context embedding width");

  std::vector<const char*> argv = {"emodynamix"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n' << app.help();
    return 1;
  }

  CLI::App* sub = app.get_subcommands().front();
  try {
    Context ctx{resolve_config(flags, *sub), flags, sub, out, err};
    if (ctx.cfg.dtype == "f64") return dispatch<double>(sub->get_name(), ctx);
    return dispatch<float>(sub->get_name(), ctx);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 1;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return 3;
  } catch (const Error& e) {
    err << "data error: " << e.what() << '\n';
    return 2;
  } catch (const fs::filesystem_error& e) {
    err << "data error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace emx
