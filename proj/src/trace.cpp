// Copyright 2026 The EmoDynamiX Authors
// SPDX-License-Identifier: Apache-2.0

#include "emodynamix/trace.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace emx {

template <typename T>
DecisionTrace trace_sample(Model<T>& model, const Example& example, bool checked) {
  Tape<T> tape(checked);
  ForwardOutput<T> f = model.forward(tape, example.graph, example.bundle.context);

  DecisionTrace out;
  out.key = key_of(example.sample);
  out.predicted = f.predicted();
  out.target = example.target;
  out.probabilities = f.probabilities;

  const std::size_t dummy = example.graph.dummy();
  for (const auto& layer : f.trace.layers) {
    auto& edges = out.layers.emplace_back();
    for (const auto& ea : layer) {
      if (ea.dst != dummy) continue;
      TraceEdge te{ea.src, ea.kind, 0.0, ea.alpha};
      for (double a : ea.alpha) te.alpha += a;
      te.alpha /= static_cast<double>(ea.alpha.size());
      edges.push_back(std::move(te));
    }
  }

  if (!out.layers.empty()) {
    const TraceEdge* best = nullptr;
    for (const auto& te : out.layers.back()) {
      if (te.kind == kInterReference && (!best || te.alpha > best->alpha)) best = &te;
    }
    if (best) {
      const auto& z = example.graph.nodes[best->src].payload;
      out.dominant_turn = best->src;
      out.dominant_emotion = static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin());
    }
  }
  return out;
}

template DecisionTrace trace_sample<float>(Model<float>&, const Example&, bool);
template DecisionTrace trace_sample<double>(Model<double>&, const Example&, bool);

std::vector<DisagreementPattern> disagreement_report(std::span<const DecisionTrace> traces, std::size_t top_n) {
  std::vector<DisagreementPattern> rows;
  for (const auto& t : traces) {
    if (t.correct()) continue;
    auto it = std::find_if(rows.begin(), rows.end(),
                           [&](const auto& r) { return r.target == t.target && r.predicted == t.predicted; });
    if (it == rows.end()) it = rows.insert(rows.end(), DisagreementPattern{t.target, t.predicted, 0, {}, 0});
    ++it->count;
    if (t.dominant_emotion && *t.dominant_emotion < kNumEmotions) {
      ++it->emotion_counts[*t.dominant_emotion];
    } else {
      ++it->no_emotion;
    }
  }
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    if (a.count != b.count) return a.count > b.count;
    return std::pair(a.target, a.predicted) < std::pair(b.target, b.predicted);
  });
  if (top_n && rows.size() > top_n) rows.resize(top_n);
  return rows;
}

double neutral_share(std::span<const DisagreementPattern> patterns) {
  std::size_t neutral = 0, with_emotion = 0;
  for (const auto& p : patterns) {
    neutral += p.emotion_counts[kNeutralEmotion];
    for (std::size_t c : p.emotion_counts) with_emotion += c;
  }
  return with_emotion ? static_cast<double>(neutral) / static_cast<double>(with_emotion) : 0.0;
}

namespace {

std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c == '\n' ? ' ' : c;
  }
  return out;
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", x);
  return buf;
}

}  // namespace

std::string trace_dot(const DecisionTrace& trace, const Example& example, const StrategySet& strategies) {
  const HeteroGraph& g = example.graph;
  std::ostringstream out;
  out << "digraph \"" << dot_escape(trace.key.str()) << "\" {\n  rankdir=LR;\n";
  for (std::size_t i = 0; i < g.size(); ++i) {
    const GraphNode& n = g.nodes[i];
    std::string label;
    std::string shape = "ellipse";
    if (n.kind == NodeKind::emotion) {
      const auto top = static_cast<std::size_t>(std::max_element(n.payload.begin(), n.payload.end()) -
                                                n.payload.begin());
      label = "u" + std::to_string(i) + ": " + emotion_labels()[top];
    } else if (n.kind == NodeKind::strategy) {
      const auto s = static_cast<std::size_t>(std::find(n.payload.begin(), n.payload.end(), 1.0) - n.payload.begin());
      label = "a" + std::to_string(i) + ": " + strategies.label(s);
      shape = "box";
    } else {
      label = "dummy: " + strategies.label(trace.predicted) + "?";
      shape = "doublecircle";
    }
    out << "  n" << i << " [label=\"" << dot_escape(label) << "\", shape=" << shape << "];\n";
  }
  for (const auto& e : g.edges) {
    out << "  n" << e.src << " -> n" << e.dst << " [label=\"" << dot_escape(edge_kind_name(e.kind));
    if (e.dst == g.dummy() && !trace.layers.empty()) {
      for (const auto& te : trace.layers.back()) {
        if (te.src == e.src && te.kind == e.kind) out << " " << fmt(te.alpha);
      }
    }
    out << "\"" << (is_discourse_kind(e.kind) ? "" : ", style=dashed") << "];\n";
  }
  out << "}\n";
  return out.str();
}

}  // namespace emx
