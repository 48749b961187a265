// Copyright 2026 The EmoDynamiX Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "emodynamix/features.hpp"
#include "emodynamix/model.hpp"
#include "emodynamix/train.hpp"

namespace emx {

// One dummy in-edge at one layer.
struct TraceEdge {
  std::size_t src = 0;  // history index
  std::size_t kind = 0;
  double alpha = 0.0;              // mean over heads
  std::vector<double> head_alpha;  // per head
};

struct DecisionTrace {
  SampleKey key;
  std::vector<std::vector<TraceEdge>> layers;
  std::size_t predicted = 0;
  std::size_t target = 0;
  std::vector<double> probabilities;
  // Emotion of the user node whose inter_reference edge has the highest
  // final-layer alpha; absent when the history has no user turn or the model
  // runs without the graph.
  std::optional<std::size_t> dominant_emotion;
  std::optional<std::size_t> dominant_turn;

  bool correct() const noexcept { return predicted == target; }
};

// Forward pass restricted to the dummy node's in-edges. Does not touch the
// parameters.
template <typename T>
DecisionTrace trace_sample(Model<T>& model, const Example& example, bool checked = true);

struct DisagreementPattern {
  std::size_t target = 0;
  std::size_t predicted = 0;
  std::size_t count = 0;
  std::array<std::size_t, kNumEmotions> emotion_counts{};
  std::size_t no_emotion = 0;  // traces without a dominant emotion
};

// Mismatched (target, predicted) pairs by descending count, ties by
// (target, predicted); at most `top_n` rows (0 keeps all).
std::vector<DisagreementPattern> disagreement_report(std::span<const DecisionTrace> traces, std::size_t top_n = 10);

// Fraction of mismatched traces whose dominant emotion is Neutral, among
// those with a dominant emotion. Zero when there are none.
double neutral_share(std::span<const DisagreementPattern> patterns);

// Graphviz description of the sample graph with final-layer dummy weights on
// the aggregation edges.
std::string trace_dot(const DecisionTrace& trace, const Example& example, const StrategySet& strategies);

}  // namespace emx
