// Copyright 2026 The EmoDynamiX Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <random>

#include "emodynamix/serialize.hpp"
#include "emodynamix/trace.hpp"
#include "test_util.hpp"

using namespace emx;

namespace {

DecisionTrace fake(std::size_t target, std::size_t predicted, std::optional<std::size_t> emotion) {
  DecisionTrace t;
  t.target = target;
  t.predicted = predicted;
  t.dominant_emotion = emotion;
  return t;
}

}  // namespace

TEST_CASE("dummy attention sums to one per layer") {
  std::mt19937_64 rng(5);
  const auto s = testing::tiny_strategies(3);
  Model<double> m(testing::small_config(3, 4), 2);
  for (int trial = 0; trial < 50; ++trial) {
    const auto e = testing::random_example(rng, 1 + rng() % 6, s, 4);
    const auto t = trace_sample(m, e);
    REQUIRE(t.layers.size() == m.config().layers);
    for (const auto& layer : t.layers) {
      CHECK(layer.size() == e.graph.size() - 1);
      double total = 0;
      for (const auto& te : layer) {
        total += te.alpha;
        CHECK(te.head_alpha.size() == m.config().heads);
        CHECK_FALSE(is_discourse_kind(te.kind));
      }
      CHECK(std::abs(total - 1.0) <= 1e-9);
      if (layer.size() == 1) CHECK(layer[0].alpha == 1.0);
    }
    double p = 0;
    for (double x : t.probabilities) p += x;
    CHECK(std::abs(p - 1.0) <= 1e-12);
    CHECK(t.key == key_of(e.sample));
  }
}

TEST_CASE("dominant emotion follows the strongest inter_reference edge") {
  std::mt19937_64 rng(6);
  const auto s = testing::tiny_strategies(3);
  Model<double> m(testing::small_config(3, 4), 2);
  for (int trial = 0; trial < 30; ++trial) {
    const auto e = testing::random_example(rng, 1 + rng() % 6, s, 4);
    const auto t = trace_sample(m, e);
    const TraceEdge* best = nullptr;
    for (const auto& te : t.layers.back())
      if (te.kind == kInterReference && (!best || te.alpha > best->alpha)) best = &te;
    if (!best) {
      CHECK_FALSE(t.dominant_emotion);
      continue;
    }
    REQUIRE(t.dominant_turn);
    CHECK(*t.dominant_turn == best->src);
    const auto& z = e.graph.nodes[best->src].payload;
    CHECK(*t.dominant_emotion == static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin()));
  }
}

TEST_CASE("disagreement report on a hand-built fixture") {
  const std::size_t neutral = kNeutralEmotion;
  std::vector<DecisionTrace> traces = {
      fake(0, 0, 1),        fake(1, 1, neutral),  // correct, ignored
      fake(0, 2, neutral),  fake(0, 2, neutral), fake(0, 2, 3), fake(0, 2, std::nullopt),
      fake(1, 0, 4),        fake(1, 0, neutral),
      fake(2, 1, neutral),  fake(2, 1, 5),
      fake(3, 0, neutral),
  };
  const auto all = disagreement_report(traces, 0);
  REQUIRE(all.size() == 4);
  std::size_t mismatches = 0;
  for (const auto& t : traces) mismatches += !t.correct();
  std::size_t counted = 0;
  for (const auto& p : all) {
    counted += p.count;
    std::size_t by_emotion = p.no_emotion;
    for (auto c : p.emotion_counts) by_emotion += c;
    CHECK(by_emotion == p.count);
  }
  CHECK(counted == mismatches);

  CHECK(all[0].target == 0);
  CHECK(all[0].predicted == 2);
  CHECK(all[0].count == 4);
  CHECK(all[0].emotion_counts[neutral] == 2);
  CHECK(all[0].no_emotion == 1);
  // Ties at count 2 are ordered by (target, predicted).
  CHECK(all[1].target == 1);
  CHECK(all[1].predicted == 0);
  CHECK(all[2].target == 2);
  CHECK(all[3].count == 1);

  CHECK(disagreement_report(traces, 2).size() == 2);
  // 5 of the 8 mismatches with an emotion are Neutral.
  CHECK(neutral_share(all) == doctest::Approx(5.0 / 8.0));
  CHECK(neutral_share(std::vector<DisagreementPattern>{}) == 0.0);
}

TEST_CASE("dot output marks the aggregation edges") {
  WindowSample w;
  w.dialogue_id = "dot";
  w.target_position = 2;
  w.target_strategy = 0;
  w.history = {{Role::user, "sad", std::nullopt}, {Role::agent, "ok", 2u}};
  FeatureBundle b;
  b.key = key_of(w);
  b.emotions = {{0, {0, 0, 0, 0, 5, 0, 0}}};
  b.context = {1, 0, 0, 0};
  const auto s = testing::tiny_strategies(3);
  Example e{w, b, build_graph(w, b, s), 0};
  Model<double> m(testing::small_config(3, 4), 2);
  const auto t = trace_sample(m, e);
  const std::string dot = trace_dot(t, e, s);
  CHECK(dot.rfind("digraph", 0) == 0);
  CHECK(dot.find("u0: Sadness") != std::string::npos);
  CHECK(dot.find("a1: s2") != std::string::npos);
  CHECK(dot.find("n0 -> n2 [label=\"inter_reference 0.") != std::string::npos);
  CHECK(dot.find("n1 -> n2 [label=\"self_reference 0.") != std::string::npos);
  CHECK(dot.find("style=dashed") != std::string::npos);

  const json j = t;
  CHECK(j.at("layers").size() == m.config().layers);
  CHECK(j.at("dominant_emotion") == "Sadness");
}

TEST_CASE("trace leaves parameters untouched and works without a graph") {
  std::mt19937_64 rng(8);
  const auto s = testing::tiny_strategies(3);
  ModelConfig c = testing::small_config(3, 4);
  c.ablations.no_graph = true;
  Model<double> m(c, 2);
  const auto before = m.params()["head.out.weight"].value;
  const auto e = testing::random_example(rng, 3, s, 4);
  const auto t = trace_sample(m, e);
  CHECK(t.layers.empty());
  CHECK_FALSE(t.dominant_emotion);
  CHECK(m.params()["head.out.weight"].value == before);
  for (const auto& p : m.params())
    for (double g : p.grad.data()) CHECK(g == 0.0);
}
