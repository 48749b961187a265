// Copyright 2026 The EmoDynamiX Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "emodynamix/graph.hpp"
#include "emodynamix/tape.hpp"

namespace emx {

struct Ablations {
  bool no_graph = false;          // classifier sees the context embedding and a zero graph vector
  bool no_mixed_emotion = false;  // emotion nodes select the argmax codebook row
  bool no_discourse = false;      // discourse edges replaced by a sequential Continuation chain
  bool no_dummy = false;          // graph readout is mean-max pooling over non-dummy nodes

  bool any() const { return no_graph || no_mixed_emotion || no_discourse || no_dummy; }
  bool operator==(const Ablations&) const = default;
};

// "full" (or "none"), "no_graph", "no_mixed_emotion", "no_discourse", "no_dummy".
Ablations parse_ablation(const std::string& name);
std::string ablation_name(const Ablations& a);
inline const std::vector<std::string>& ablation_variants() {
  static const std::vector<std::string> v = {"full", "no_graph", "no_mixed_emotion", "no_discourse", "no_dummy"};
  return v;
}

struct ModelConfig {
  std::size_t hidden = 512;  // graph embedding width h
  std::size_t layers = 3;
  std::size_t heads = 4;
  std::size_t context_dim = 256;
  std::size_t n_strategies = 8;
  std::size_t n_emotions = 7;
  double tau_init = 0.5;
  std::size_t mlp_hidden = 256;
  double leaky_slope = 0.2;
  bool reverse_discourse = false;
  Ablations ablations;

  // Throws ConfigError.
  void validate() const;
  std::size_t head_dim() const { return hidden / heads; }
  std::size_t readout_dim() const { return ablations.no_dummy ? 2 * hidden : hidden; }
  GraphOptions graph_options() const { return {reverse_discourse, ablations.no_discourse}; }

  bool operator==(const ModelConfig&) const = default;
};

// Attention of one edge at one layer, one value per head.
struct EdgeAttention {
  std::size_t src = 0;
  std::size_t dst = 0;
  std::size_t kind = 0;
  std::vector<double> alpha;
};

struct AttentionTrace {
  std::vector<std::vector<EdgeAttention>> layers;
};

template <typename T>
struct ForwardOutput {
  Var<T> logits;
  std::vector<double> probabilities;
  AttentionTrace trace;

  std::size_t predicted() const;
};

// Parameters:
//   emotion_codebook   |E| x h
//   strategy_codebook  |S| x h
//   dummy              h
//   rgat.<l>.<r>.query / .key   K x h/K   (head k reads slice k of its node)
//   rgat.<l>.<r>.value         h x h      (rows k*h/K .. hold head k)
//   head.hidden.weight/.bias, head.out.weight/.bias
//   log_tau            1
template <typename T>
class Model {
 public:
  Model(ModelConfig cfg, std::uint64_t seed);

  const ModelConfig& config() const noexcept { return cfg_; }
  ParameterSet<T>& params() noexcept { return params_; }
  const ParameterSet<T>& params() const noexcept { return params_; }

  static std::string rgat_name(std::size_t layer, std::size_t kind, const char* what);

  T tau() const;

  // p = softmax(z / tau); returns p . E. Under no_mixed_emotion p is the
  // one-hot of argmax(z).
  Var<T> emotion_embed(Tape<T>& tape, std::span<const double> z);
  // Row of the strategy codebook picked by a one-hot vector.
  Var<T> strategy_embed(Tape<T>& tape, std::span<const double> one_hot);
  Var<T> node_init(Tape<T>& tape, const GraphNode& node);

  // One relational attention layer with residual connection. When `trace`
  // is non-null the per-edge, per-head attention is appended to it.
  std::vector<Var<T>> rgat_forward(Tape<T>& tape, const HeteroGraph& g, std::span<const Var<T>> nodes,
                                   std::size_t layer, std::vector<EdgeAttention>* trace = nullptr);

  ForwardOutput<T> forward(Tape<T>& tape, const HeteroGraph& g, std::span<const double> context);

  // -weights[target] * log softmax(logits)[target]
  static Var<T> loss(Var<T> logits, std::size_t target, std::span<const double> weights);

 private:
  Var<T> readout(Tape<T>& tape, const HeteroGraph& g, std::span<const Var<T>> nodes);

  ModelConfig cfg_;
  ParameterSet<T> params_;
};

extern template class Model<float>;
extern template class Model<double>;
extern template struct ForwardOutput<float>;
extern template struct ForwardOutput<double>;

}  // namespace emx
