// Copyright 2026 The EmoDynamiX Authors
// SPDX-License-Identifier: Apache-2.0

#include "emodynamix/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <random>
#include <utility>

#include "emodynamix/error.hpp"

namespace emx {

Ablations parse_ablation(const std::string& name) {
  Ablations a;
  if (name.empty() || name == "full" || name == "none") return a;
  if (name == "no_graph") {
    a.no_graph = true;
  } else if (name == "no_mixed_emotion") {
    a.no_mixed_emotion = true;
  } else if (name == "no_discourse") {
    a.no_discourse = true;
  } else if (name == "no_dummy") {
    a.no_dummy = true;
  } else {
    throw ConfigError("unknown ablation '" + name +
                      "' (expected full, no_graph, no_mixed_emotion, no_discourse or no_dummy)");
  }
  return a;
}

std::string ablation_name(const Ablations& a) {
  std::string out;
  auto add = [&](bool on, const char* n) {
    if (on) out += (out.empty() ? "" : "+") + std::string(n);
  };
  add(a.no_graph, "no_graph");
  add(a.no_mixed_emotion, "no_mixed_emotion");
  add(a.no_discourse, "no_discourse");
  add(a.no_dummy, "no_dummy");
  return out.empty() ? "full" : out;
}

void ModelConfig::validate() const {
  if (hidden == 0 || heads == 0 || hidden % heads != 0) {
    throw ConfigError("hidden (" + std::to_string(hidden) + ") must be a positive multiple of heads (" +
                      std::to_string(heads) + ")");
  }
  if (layers < 1) throw ConfigError("layers must be >= 1");
  if (!(tau_init > 0.0) || !std::isfinite(tau_init)) throw ConfigError("tau_init must be > 0");
  if (context_dim == 0) throw ConfigError("context_dim must be >= 1");
  if (n_strategies < 2) throw ConfigError("need at least 2 strategies");
  if (n_emotions < 2) throw ConfigError("need at least 2 emotions");
  if (mlp_hidden == 0) throw ConfigError("mlp_hidden must be >= 1");
  if (ablations.no_graph && ablations.no_dummy) throw ConfigError("no_graph and no_dummy are mutually exclusive");
}

template <typename T>
std::size_t ForwardOutput<T>::predicted() const {
  return static_cast<std::size_t>(std::max_element(probabilities.begin(), probabilities.end()) -
                                  probabilities.begin());
}

template <typename T>
std::string Model<T>::rgat_name(std::size_t layer, std::size_t kind, const char* what) {
  return "rgat." + std::to_string(layer) + ".r" + std::to_string(kind) + "." + what;
}

template <typename T>
Model<T>::Model(ModelConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
  cfg_.validate();
  std::mt19937_64 rng(seed);
  // Glorot-uniform bound sqrt(6 / (fan_in + fan_out)).
  auto uniform = [&](Shape shape, std::size_t fan_in, std::size_t fan_out) {
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-a, a);
    Tensor<T> t(std::move(shape));
    for (auto& x : t.data()) x = static_cast<T>(dist(rng));
    return t;
  };
  const std::size_t h = cfg_.hidden, K = cfg_.heads, hh = cfg_.head_dim();

  params_.add("emotion_codebook", uniform({cfg_.n_emotions, h}, cfg_.n_emotions, h));
  params_.add("strategy_codebook", uniform({cfg_.n_strategies, h}, cfg_.n_strategies, h));
  params_.add("dummy", Tensor<T>(Shape{h}));
  for (std::size_t l = 0; l < cfg_.layers; ++l) {
    for (std::size_t r = 0; r < kNumEdgeKinds; ++r) {
      params_.add(rgat_name(l, r, "query"), uniform({K, hh}, hh, 1));
      params_.add(rgat_name(l, r, "key"), uniform({K, hh}, hh, 1));
      params_.add(rgat_name(l, r, "value"), uniform({h, h}, h, hh));
    }
  }
  const std::size_t in = cfg_.context_dim + cfg_.readout_dim();
  params_.add("head.hidden.weight", uniform({cfg_.mlp_hidden, in}, in, cfg_.mlp_hidden));
  params_.add("head.hidden.bias", Tensor<T>(Shape{cfg_.mlp_hidden}));
  params_.add("head.out.weight", uniform({cfg_.n_strategies, cfg_.mlp_hidden}, cfg_.mlp_hidden, cfg_.n_strategies));
  params_.add("head.out.bias", Tensor<T>(Shape{cfg_.n_strategies}));
  params_.add("log_tau", Tensor<T>::vector({static_cast<T>(std::log(cfg_.tau_init))}));
}

template <typename T>
T Model<T>::tau() const {
  return std::exp(params_["log_tau"].value[0]);
}

namespace {

template <typename T>
Tensor<T> to_tensor(std::span<const double> v) {
  std::vector<T> out(v.begin(), v.end());
  return Tensor<T>::vector(std::move(out));
}

}  // namespace

template <typename T>
Var<T> Model<T>::emotion_embed(Tape<T>& tape, std::span<const double> z) {
  if (z.size() != cfg_.n_emotions) {
    throw ShapeError("emotion_embed: got " + std::to_string(z.size()) + " logits, expected " +
                     std::to_string(cfg_.n_emotions));
  }
  Var<T> codebook = tape.param(params_["emotion_codebook"]);
  if (cfg_.ablations.no_mixed_emotion) {
    std::vector<double> one_hot(z.size(), 0.0);
    one_hot[static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin())] = 1.0;
    return ops::embedding_select(codebook, tape.constant(to_tensor<T>(one_hot)));
  }
  Var<T> log_tau = tape.param(params_["log_tau"]);
  Var<T> inv_tau = ops::exp(ops::scale(log_tau, T(-1)));
  Var<T> p = ops::softmax(ops::scale_by(tape.constant(to_tensor<T>(z)), inv_tau));
  return ops::embedding_select(codebook, p);
}

template <typename T>
Var<T> Model<T>::strategy_embed(Tape<T>& tape, std::span<const double> one_hot) {
  const bool ok = one_hot.size() == cfg_.n_strategies && std::count(one_hot.begin(), one_hot.end(), 1.0) == 1 &&
                  std::count(one_hot.begin(), one_hot.end(), 0.0) + 1 ==
                      static_cast<std::ptrdiff_t>(one_hot.size());
  if (!ok) throw ValidationError("strategy_embed: input is not a one-hot vector over the strategy set");
  return ops::embedding_select(tape.param(params_["strategy_codebook"]), tape.constant(to_tensor<T>(one_hot)));
}

template <typename T>
Var<T> Model<T>::node_init(Tape<T>& tape, const GraphNode& node) {
  switch (node.kind) {
    case NodeKind::emotion: return emotion_embed(tape, node.payload);
    case NodeKind::strategy: return strategy_embed(tape, node.payload);
    case NodeKind::dummy: return tape.param(params_["dummy"]);
  }
  throw ValidationError("unknown node kind");
}

template <typename T>
std::vector<Var<T>> Model<T>::rgat_forward(Tape<T>& tape, const HeteroGraph& g, std::span<const Var<T>> nodes,
                                           std::size_t layer, std::vector<EdgeAttention>* trace) {
  if (nodes.size() != g.size()) {
    throw ShapeError("rgat_forward: " + std::to_string(nodes.size()) + " node embeddings for a graph of " +
                     std::to_string(g.size()) + " nodes");
  }
  if (layer >= cfg_.layers) throw ShapeError("rgat_forward: layer index out of range");
  const std::size_t K = cfg_.heads, hh = cfg_.head_dim();
  const T slope = static_cast<T>(cfg_.leaky_slope);

  std::vector<std::optional<Var<T>>> split(nodes.size());
  auto heads_of = [&](std::size_t i) {
    if (!split[i]) split[i] = ops::reshape(nodes[i], Shape{K, hh});
    return *split[i];
  };
  // Per-head scalar score of node i under relation r: row k of W dotted with slice k of g_i.
  std::map<std::pair<std::size_t, std::size_t>, Var<T>> q_cache, k_cache, v_cache;
  auto score = [&](auto& cache, const char* what, std::size_t i, std::size_t r) {
    auto key = std::make_pair(i, r);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
    Var<T> w = tape.param(params_[rgat_name(layer, r, what)]);
    Var<T> s = ops::sum(ops::mul(w, heads_of(i)), 1);
    cache.emplace(key, s);
    return s;
  };
  auto value = [&](std::size_t j, std::size_t r) {
    auto key = std::make_pair(j, r);
    if (auto it = v_cache.find(key); it != v_cache.end()) return it->second;
    Var<T> v = ops::matmul(tape.param(params_[rgat_name(layer, r, "value")]), nodes[j]);
    v_cache.emplace(key, v);
    return v;
  };

  const auto in = g.in_edges();
  std::vector<Var<T>> out(nodes.begin(), nodes.end());
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (in[i].empty()) continue;  // pure residual
    std::vector<Var<T>> logits, values;
    logits.reserve(in[i].size());
    values.reserve(in[i].size());
    for (std::size_t e : in[i]) {
      const GraphEdge& edge = g.edges[e];
      Var<T> q = score(q_cache, "query", i, edge.kind);
      Var<T> k = score(k_cache, "key", edge.src, edge.kind);
      logits.push_back(ops::leaky_relu(ops::add(q, k), slope));
      values.push_back(value(edge.src, edge.kind));
    }
    // Normalise over every in-edge of i, across relations, separately per head.
    Var<T> alpha = ops::softmax(ops::stack_rows<T>(logits), 0);
    Var<T> weighted = ops::mul(ops::repeat_cols(alpha, hh), ops::stack_rows<T>(values));
    Var<T> h = ops::leaky_relu(ops::sum(weighted, 0), slope);
    out[i] = ops::add(h, nodes[i]);

    if (trace) {
      const Tensor<T>& a = alpha.value();
      for (std::size_t r = 0; r < in[i].size(); ++r) {
        const GraphEdge& edge = g.edges[in[i][r]];
        EdgeAttention ea{edge.src, edge.dst, edge.kind, std::vector<double>(K)};
        for (std::size_t k = 0; k < K; ++k) ea.alpha[k] = static_cast<double>(a.at(r, k));
        trace->push_back(std::move(ea));
      }
    }
  }
  return out;
}

template <typename T>
Var<T> Model<T>::readout(Tape<T>& tape, const HeteroGraph& g, std::span<const Var<T>> nodes) {
  if (!cfg_.ablations.no_dummy) return nodes[g.dummy()];
  // Mean-max pooling over the turn nodes.
  Var<T> turns = ops::stack_rows<T>(nodes.first(g.dummy()));
  std::vector<Var<T>> parts = {ops::mean(turns, 0), ops::max(turns, 0)};
  (void)tape;
  return ops::concat<T>(parts);
}

template <typename T>
ForwardOutput<T> Model<T>::forward(Tape<T>& tape, const HeteroGraph& g, std::span<const double> context) {
  if (context.size() != cfg_.context_dim) {
    throw ShapeError("forward: context has " + std::to_string(context.size()) + " entries, model expects " +
                     std::to_string(cfg_.context_dim));
  }
  if (!cfg_.ablations.no_graph && g.n_strategies != cfg_.n_strategies) {
    throw ShapeError("forward: graph built for " + std::to_string(g.n_strategies) + " strategies, model has " +
                     std::to_string(cfg_.n_strategies));
  }
  ForwardOutput<T> out;
  Var<T> graph_vec;
  if (cfg_.ablations.no_graph) {
    graph_vec = tape.constant(Tensor<T>(Shape{cfg_.hidden}));
  } else {
    std::vector<Var<T>> nodes;
    nodes.reserve(g.size());
    for (const auto& n : g.nodes) nodes.push_back(node_init(tape, n));
    for (std::size_t l = 0; l < cfg_.layers; ++l) {
      out.trace.layers.emplace_back();
      nodes = rgat_forward(tape, g, nodes, l, &out.trace.layers.back());
    }
    graph_vec = readout(tape, g, nodes);
  }

  std::vector<Var<T>> parts = {tape.constant(to_tensor<T>(context)), graph_vec};
  Var<T> x = ops::concat<T>(parts);
  Var<T> hidden = ops::leaky_relu(ops::add(ops::matmul(tape.param(params_["head.hidden.weight"]), x),
                                           tape.param(params_["head.hidden.bias"])),
                                  static_cast<T>(cfg_.leaky_slope));
  out.logits = ops::add(ops::matmul(tape.param(params_["head.out.weight"]), hidden),
                        tape.param(params_["head.out.bias"]));

  const Tensor<T>& z = out.logits.value();
  const double mx = static_cast<double>(*std::max_element(z.data().begin(), z.data().end()));
  double total = 0.0;
  out.probabilities.resize(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) total += out.probabilities[i] = std::exp(static_cast<double>(z[i]) - mx);
  for (double& p : out.probabilities) p /= total;
  return out;
}

template <typename T>
Var<T> Model<T>::loss(Var<T> logits, std::size_t target, std::span<const double> weights) {
  if (weights.size() != logits.value().size() || target >= weights.size()) {
    throw ShapeError("loss: " + std::to_string(weights.size()) + " class weights, " +
                     std::to_string(logits.value().size()) + " logits, target " + std::to_string(target));
  }
  return ops::scale(ops::pick(ops::log_softmax(logits), target), static_cast<T>(-weights[target]));
}

template struct ForwardOutput<float>;
template struct ForwardOutput<double>;
template class Model<float>;
template class Model<double>;

}  // namespace emx
