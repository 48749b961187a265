// Copyright 2026 The EmoDynamiX Authors
// SPDX-License-Identifier: Apache-2.0

#include "emodynamix/graph.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "emodynamix/error.hpp"

namespace emx {

std::string node_kind_name(NodeKind k) {
  switch (k) {
    case NodeKind::emotion: return "emotion";
    case NodeKind::strategy: return "strategy";
    case NodeKind::dummy: return "dummy";
  }
  return "?";
}

std::string edge_kind_name(std::size_t kind) {
  if (kind == kSelfReference) return "self_reference";
  if (kind == kInterReference) return "inter_reference";
  if (kind < kNumDiscourseRelations) return discourse_relations()[kind];
  return "invalid(" + std::to_string(kind) + ")";
}

std::vector<std::vector<std::size_t>> HeteroGraph::in_edges() const {
  std::vector<std::vector<std::size_t>> in(nodes.size());
  for (std::size_t e = 0; e < edges.size(); ++e)
    if (edges[e].dst < nodes.size()) in[edges[e].dst].push_back(e);
  return in;
}

void canonicalize(HeteroGraph& g) {
  std::sort(g.edges.begin(), g.edges.end());
  g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
}

HeteroGraph build_graph(const WindowSample& sample, const FeatureBundle& bundle, const StrategySet& s,
                        const GraphOptions& opts) {
  validate_bundle(bundle, sample, bundle.context.size());
  const std::size_t n_hist = sample.history.size();
  HeteroGraph g;
  g.n_strategies = s.size();
  g.nodes.resize(n_hist + 1);
  const std::size_t dummy = n_hist;

  for (const auto& e : bundle.emotions) g.nodes[e.turn_index].payload = e.z;
  for (std::size_t i = 0; i < n_hist; ++i) {
    const Turn& t = sample.history[i];
    GraphNode& node = g.nodes[i];
    if (t.role == Role::user) {
      node.kind = NodeKind::emotion;
      g.edges.push_back({i, dummy, kInterReference});
    } else {
      node.kind = NodeKind::strategy;
      if (!t.strategy || *t.strategy >= s.size()) {
        throw ValidationError("sample " + key_of(sample).str() + ": agent turn " + std::to_string(i) +
                              " has no strategy resolvable in '" + s.name() + "'");
      }
      node.payload.assign(s.size(), 0.0);
      node.payload[*t.strategy] = 1.0;
      g.edges.push_back({i, dummy, kSelfReference});
    }
  }
  g.nodes[dummy].kind = NodeKind::dummy;

  const auto discourse = opts.sequential_discourse ? sequential_discourse(n_hist) : bundle.discourse;
  for (const auto& d : discourse) {
    if (d.src >= dummy || d.dst >= dummy) {
      throw ValidationError("discourse edge " + std::to_string(d.src) + "->" + std::to_string(d.dst) +
                            " touches the dummy node");
    }
    g.edges.push_back({d.src, d.dst, d.relation});
    if (opts.reverse_discourse) g.edges.push_back({d.dst, d.src, d.relation});
  }
  canonicalize(g);
  return g;
}

std::vector<std::string> validate_graph(const HeteroGraph& g) {
  std::vector<std::string> v;
  if (g.nodes.size() < 2) {
    v.push_back("graph has " + std::to_string(g.nodes.size()) + " nodes, need at least 2");
    return v;
  }
  const std::size_t dummy = g.dummy();
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    const GraphNode& n = g.nodes[i];
    const std::string at = "node " + std::to_string(i);
    if (i == dummy) {
      if (n.kind != NodeKind::dummy) v.push_back(at + ": last node must be the dummy node");
      continue;
    }
    switch (n.kind) {
      case NodeKind::dummy: v.push_back(at + ": dummy node before the last position"); break;
      case NodeKind::emotion:
        if (n.payload.size() != kNumEmotions) v.push_back(at + ": emotion payload has wrong size");
        if (!std::all_of(n.payload.begin(), n.payload.end(), [](double x) { return std::isfinite(x); }))
          v.push_back(at + ": emotion payload is not finite");
        break;
      case NodeKind::strategy: {
        const bool one_hot = n.payload.size() == g.n_strategies &&
                             std::count(n.payload.begin(), n.payload.end(), 1.0) == 1 &&
                             std::count(n.payload.begin(), n.payload.end(), 0.0) + 1 ==
                                 static_cast<std::ptrdiff_t>(n.payload.size());
        if (!one_hot) v.push_back(at + ": strategy payload is not a one-hot over " + std::to_string(g.n_strategies));
        break;
      }
    }
  }

  std::set<GraphEdge> seen;
  for (const auto& e : g.edges) {
    const std::string at = "edge (" + std::to_string(e.src) + "," + std::to_string(e.dst) + "," +
                           edge_kind_name(e.kind) + ")";
    if (e.src >= g.nodes.size() || e.dst >= g.nodes.size()) {
      v.push_back(at + ": endpoint out of range");
      continue;
    }
    if (e.kind >= kNumEdgeKinds) v.push_back(at + ": unknown edge kind");
    if (!seen.insert(e).second) v.push_back(at + ": duplicate edge");
    if (is_discourse_kind(e.kind)) {
      if (e.src == dummy || e.dst == dummy) v.push_back(at + ": discourse edge touches the dummy node");
      if (e.src == e.dst) v.push_back(at + ": discourse self-loop");
    } else if (e.kind < kNumEdgeKinds) {
      if (e.dst != dummy) v.push_back(at + ": aggregation edge not directed into the dummy node");
      const NodeKind want = e.kind == kSelfReference ? NodeKind::strategy : NodeKind::emotion;
      if (g.nodes[e.src].kind != want) {
        v.push_back(at + ": " + edge_kind_name(e.kind) + " edge from a " + node_kind_name(g.nodes[e.src].kind) +
                    " node");
      }
    }
  }
  for (std::size_t i = 0; i < dummy; ++i) {
    const NodeKind k = g.nodes[i].kind;
    if (k == NodeKind::strategy && !seen.count({i, dummy, kSelfReference})) {
      v.push_back("node " + std::to_string(i) + ": strategy node lacks its self_reference edge");
    }
    if (k == NodeKind::emotion && !seen.count({i, dummy, kInterReference})) {
      v.push_back("node " + std::to_string(i) + ": emotion node lacks its inter_reference edge");
    }
  }
  return v;
}

std::string dump_graph(const HeteroGraph& g, const StrategySet* s) {
  std::ostringstream os;
  os << "nodes " << g.nodes.size() << "\n";
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    const GraphNode& n = g.nodes[i];
    os << "  " << i << " " << node_kind_name(n.kind);
    if (n.kind == NodeKind::emotion && !n.payload.empty()) {
      const auto top = static_cast<std::size_t>(std::max_element(n.payload.begin(), n.payload.end()) - n.payload.begin());
      os << " argmax=" << emotion_labels()[top] << " z=[";
      for (std::size_t k = 0; k < n.payload.size(); ++k) os << (k ? "," : "") << n.payload[k];
      os << "]";
    } else if (n.kind == NodeKind::strategy) {
      const auto idx = static_cast<std::size_t>(std::find(n.payload.begin(), n.payload.end(), 1.0) - n.payload.begin());
      os << " strategy=" << (s && idx < s->size() ? s->label(idx) : std::to_string(idx));
    }
    os << "\n";
  }
  os << "edges " << g.edges.size() << "\n";
  for (const auto& e : g.edges) os << "  " << e.src << " -> " << e.dst << " " << edge_kind_name(e.kind) << "\n";
  return os.str();
}

}  // namespace emx
