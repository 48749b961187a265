// Copyright 2026 The EmoDynamiX Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <compare>
#include <cstddef>
#include <string>
#include <vector>

#include "emodynamix/corpus.hpp"
#include "emodynamix/features.hpp"

namespace emx {

enum class NodeKind { emotion, strategy, dummy };

std::string node_kind_name(NodeKind k);

// Edge kinds 0..15 are the discourse relations; then the two aggregation kinds.
inline constexpr std::size_t kSelfReference = kNumDiscourseRelations;
inline constexpr std::size_t kInterReference = kNumDiscourseRelations + 1;
inline constexpr std::size_t kNumEdgeKinds = kNumDiscourseRelations + 2;

std::string edge_kind_name(std::size_t kind);
inline bool is_discourse_kind(std::size_t kind) { return kind < kNumDiscourseRelations; }

struct GraphNode {
  NodeKind kind = NodeKind::dummy;
  // Emotion logits z for emotion nodes, strategy one-hot for strategy nodes,
  // empty for the dummy node.
  std::vector<double> payload;

  bool operator==(const GraphNode&) const = default;
};

struct GraphEdge {
  std::size_t src = 0;
  std::size_t dst = 0;
  std::size_t kind = 0;

  auto operator<=>(const GraphEdge&) const = default;
};

// One node per history turn (same order) followed by the dummy target node.
struct HeteroGraph {
  std::vector<GraphNode> nodes;
  std::vector<GraphEdge> edges;  // canonical order: sorted by (src, dst, kind)
  std::size_t n_strategies = 0;

  std::size_t size() const noexcept { return nodes.size(); }
  std::size_t dummy() const noexcept { return nodes.size() - 1; }
  // in_edges()[i] lists indices into `edges` whose dst is i, in edge order.
  std::vector<std::vector<std::size_t>> in_edges() const;

  bool operator==(const HeteroGraph&) const = default;
};

struct GraphOptions {
  bool reverse_discourse = false;  // also add dst -> src for every discourse edge
  bool sequential_discourse = false;  // ignore bundle edges, chain turns with Continuation
};

HeteroGraph build_graph(const WindowSample& sample, const FeatureBundle& bundle, const StrategySet& s,
                        const GraphOptions& opts = {});

// Every invariant violation, with node/edge coordinates. Empty means valid.
std::vector<std::string> validate_graph(const HeteroGraph& g);

// Sorts edges by (src, dst, kind) and drops duplicates.
void canonicalize(HeteroGraph& g);

// Plain-text adjacency listing: one line per node, then one line per edge.
std::string dump_graph(const HeteroGraph& g, const StrategySet* s = nullptr);

}  // namespace emx
