// Copyright 2026 The EmoDynamiX Authors
// SPDX-License-Identifier: Apache-2.0

#include "emodynamix/serialize.hpp"

#include <set>

#include "emodynamix/error.hpp"

namespace emx {

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const char* what) {
  if (!j.is_object()) throw ConfigError(std::string(what) + ": expected an object");
  for (const auto& [k, v] : j.items()) {
    if (!known.count(k)) throw ConfigError(std::string(what) + ": unknown key '" + k + "'");
  }
}

template <typename V>
void read_opt(const json& j, const char* key, V& out, const char* what) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<V>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string(what) + "." + key + ": " + e.what());
  }
}

template <typename V>
json opt_json(const std::optional<V>& v) {
  return v ? json(*v) : json(nullptr);
}

}  // namespace

void to_json(json& j, const Ablations& a) {
  j = {{"no_graph", a.no_graph},
       {"no_mixed_emotion", a.no_mixed_emotion},
       {"no_discourse", a.no_discourse},
       {"no_dummy", a.no_dummy}};
}

void from_json(const json& j, Ablations& a) {
  if (j.is_string()) {
    a = parse_ablation(j.get<std::string>());
    return;
  }
  reject_unknown(j, {"no_graph", "no_mixed_emotion", "no_discourse", "no_dummy"}, "ablations");
  read_opt(j, "no_graph", a.no_graph, "ablations");
  read_opt(j, "no_mixed_emotion", a.no_mixed_emotion, "ablations");
  read_opt(j, "no_discourse", a.no_discourse, "ablations");
  read_opt(j, "no_dummy", a.no_dummy, "ablations");
}

void to_json(json& j, const ModelConfig& c) {
  j = {{"hidden", c.hidden},           {"layers", c.layers},
       {"heads", c.heads},             {"context_dim", c.context_dim},
       {"n_strategies", c.n_strategies}, {"n_emotions", c.n_emotions},
       {"tau_init", c.tau_init},       {"mlp_hidden", c.mlp_hidden},
       {"leaky_slope", c.leaky_slope}, {"reverse_discourse", c.reverse_discourse},
       {"ablations", c.ablations}};
}

void from_json(const json& j, ModelConfig& c) {
  reject_unknown(j,
                 {"hidden", "layers", "heads", "context_dim", "n_strategies", "n_emotions", "tau_init", "mlp_hidden",
                  "leaky_slope", "reverse_discourse", "ablations"},
                 "model");
  read_opt(j, "hidden", c.hidden, "model");
  read_opt(j, "layers", c.layers, "model");
  read_opt(j, "heads", c.heads, "model");
  read_opt(j, "context_dim", c.context_dim, "model");
  read_opt(j, "n_strategies", c.n_strategies, "model");
  read_opt(j, "n_emotions", c.n_emotions, "model");
  read_opt(j, "tau_init", c.tau_init, "model");
  read_opt(j, "mlp_hidden", c.mlp_hidden, "model");
  read_opt(j, "leaky_slope", c.leaky_slope, "model");
  read_opt(j, "reverse_discourse", c.reverse_discourse, "model");
  if (j.contains("ablations")) c.ablations = j.at("ablations").get<Ablations>();
}

void to_json(json& j, const TrainConfig& c) {
  j = {{"lr", c.lr},
       {"warmup_steps", c.warmup_steps},
       {"total_steps", c.total_steps},
       {"batch_size", c.batch_size},
       {"weight_decay", c.weight_decay},
       {"seed", c.seed},
       {"select_metric", select_metric_name(c.select_metric)},
       {"eval_every", c.eval_every},
       {"class_weighted", c.class_weighted},
       {"checked", c.checked}};
}

void from_json(const json& j, TrainConfig& c) {
  reject_unknown(j,
                 {"lr", "warmup_steps", "total_steps", "batch_size", "weight_decay", "seed", "select_metric",
                  "eval_every", "class_weighted", "checked"},
                 "train");
  read_opt(j, "lr", c.lr, "train");
  read_opt(j, "warmup_steps", c.warmup_steps, "train");
  read_opt(j, "total_steps", c.total_steps, "train");
  read_opt(j, "batch_size", c.batch_size, "train");
  read_opt(j, "weight_decay", c.weight_decay, "train");
  read_opt(j, "seed", c.seed, "train");
  std::string metric = select_metric_name(c.select_metric);
  read_opt(j, "select_metric", metric, "train");
  c.select_metric = parse_select_metric(metric);
  read_opt(j, "eval_every", c.eval_every, "train");
  read_opt(j, "class_weighted", c.class_weighted, "train");
  read_opt(j, "checked", c.checked, "train");
}

void to_json(json& j, const ClassScore& s) {
  j = {{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}, {"support", s.support}};
}

void to_json(json& j, const EvalReport& r) {
  json cm = json::array();
  for (std::size_t i = 0; i < r.confusion.classes(); ++i) {
    json row = json::array();
    for (std::size_t k = 0; k < r.confusion.classes(); ++k) row.push_back(r.confusion(i, k));
    cm.push_back(std::move(row));
  }
  json per_class = json::array();
  for (std::size_t c = 0; c < r.per_class.size(); ++c) {
    json e = r.per_class[c];
    e["label"] = r.labels.at(c);
    per_class.push_back(std::move(e));
  }
  j = {{"samples", r.confusion.total()},
       {"macro_f1", r.macro_f1},
       {"weighted_f1", r.weighted_f1},
       {"accuracy", r.accuracy},
       {"bias", r.bias},
       {"preferences", r.preferences},
       {"labels", r.labels},
       {"confusion", std::move(cm)},
       {"per_class", std::move(per_class)}};
}

void to_json(json& j, const LogRecord& r) {
  j = {{"step", r.step},
       {"loss", r.loss},
       {"lr", r.lr},
       {"dev_macro_f1", opt_json(r.dev_macro_f1)},
       {"dev_weighted_f1", opt_json(r.dev_weighted_f1)},
       {"dev_bias", opt_json(r.dev_bias)}};
}

void to_json(json& j, const DecisionTrace& t) {
  json layers = json::array();
  for (const auto& layer : t.layers) {
    json edges = json::array();
    for (const auto& e : layer) {
      edges.push_back({{"src", e.src}, {"kind", edge_kind_name(e.kind)}, {"alpha", e.alpha}, {"heads", e.head_alpha}});
    }
    layers.push_back(std::move(edges));
  }
  j = {{"dialogue_id", t.key.dialogue_id},
       {"target_position", t.key.target_position},
       {"predicted", t.predicted},
       {"target", t.target},
       {"probabilities", t.probabilities},
       {"dominant_emotion", t.dominant_emotion ? json(emotion_labels()[*t.dominant_emotion]) : json(nullptr)},
       {"dominant_turn", opt_json(t.dominant_turn)},
       {"layers", std::move(layers)}};
}

json pattern_json(const DisagreementPattern& p, const StrategySet& s) {
  json emotions = json::object();
  for (std::size_t e = 0; e < kNumEmotions; ++e) emotions[emotion_labels()[e]] = p.emotion_counts[e];
  return {{"target", s.label(p.target)},
          {"predicted", s.label(p.predicted)},
          {"count", p.count},
          {"dominant_emotions", std::move(emotions)},
          {"no_emotion", p.no_emotion}};
}

json strategy_set_json(const StrategySet& s) { return {{"name", s.name()}, {"labels", s.labels()}}; }

StrategySet strategy_set_from_json(const json& j) {
  try {
    return StrategySet(j.at("name").get<std::string>(), j.at("labels").get<std::vector<std::string>>());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("strategy set: ") + e.what());
  }
}

template <typename T>
void save_model(const std::filesystem::path& path, const Model<T>& model, const StrategySet& strategies,
                const std::optional<TrainConfig>& train, const json& extra) {
  json meta = {{"model", model.config()}, {"strategies", strategy_set_json(strategies)}};
  if (train) meta["train"] = *train;
  if (!extra.empty()) meta["extra"] = extra;
  write_checkpoint(path, to_checkpoint(model.params(), meta.dump()));
}

template <typename T>
LoadedModel<T> load_model(const std::filesystem::path& path) {
  const CheckpointFile ckpt = read_checkpoint(path);
  json meta;
  try {
    meta = json::parse(ckpt.metadata);
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": checkpoint metadata is not JSON: " + e.what(), 0);
  }
  if (!meta.contains("model") || !meta.contains("strategies")) {
    throw ValidationError(path.string() + ": checkpoint metadata lacks model config or strategy set");
  }
  LoadedModel<T> out{Model<T>(meta.at("model").get<ModelConfig>(), 0), strategy_set_from_json(meta.at("strategies")),
                     meta};
  load_into(ckpt, out.model.params());
  return out;
}

template void save_model<float>(const std::filesystem::path&, const Model<float>&, const StrategySet&,
                                const std::optional<TrainConfig>&, const json&);
template void save_model<double>(const std::filesystem::path&, const Model<double>&, const StrategySet&,
                                 const std::optional<TrainConfig>&, const json&);
template LoadedModel<float> load_model<float>(const std::filesystem::path&);
template LoadedModel<double> load_model<double>(const std::filesystem::path&);

}  // namespace emx
