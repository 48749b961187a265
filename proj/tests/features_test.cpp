// Copyright 2026 The EmoDynamiX Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "emodynamix/error.hpp"
#include "emodynamix/features.hpp"
#include "test_util.hpp"

using namespace emx;

namespace {

WindowSample two_turn_sample() {
  WindowSample w;
  w.dialogue_id = "d";
  w.target_position = 2;
  w.target_strategy = 1;
  w.history = {{Role::user, "I feel so sad and lonely", std::nullopt}, {Role::agent, "I hear you", 0u}};
  return w;
}

double norm(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("label registries") {
  CHECK(emotion_labels()[kNeutralEmotion] == "Neutral");
  CHECK(emotion_labels()[0] == "Anger");
  CHECK(discourse_relations().size() == 16);
  CHECK(find_relation("Question-Answer Pair") == 7u);
  CHECK_FALSE(find_relation("question-answer pair"));
  CHECK(discourse_relations()[continuation_relation()] == "Continuation");
}

TEST_CASE("fallback emotion votes") {
  auto z = fallback_emotion("I am so sad, sad and angry!");
  CHECK(z[4] == 2.0);  // Sadness
  CHECK(z[0] == 1.0);  // Anger
  CHECK(z[kNeutralEmotion] == 1.0);
  auto neutral = fallback_emotion("the weather is fine");
  CHECK(neutral[kNeutralEmotion] == 4.0);
  for (std::size_t e = 0; e + 1 < kNumEmotions; ++e) CHECK(neutral[e] == 0.0);
}

TEST_CASE("fallback context is deterministic and unit-norm") {
  auto w = two_turn_sample();
  auto a = fallback_context(w, 64);
  auto b = fallback_context(w, 64);
  CHECK(a == b);
  CHECK(norm(a) == doctest::Approx(1.0).epsilon(1e-12));
  auto w2 = w;
  w2.history[0].text = "something else entirely";
  CHECK(fallback_context(w2, 64) != a);
  auto empty = w;
  for (auto& t : empty.history) t.text = "  ";
  for (double x : fallback_context(empty, 16)) CHECK(x == 0.0);
  CHECK_THROWS_AS(fallback_context(w, 0), ValidationError);
}

TEST_CASE("fallback provider output validates") {
  FallbackFeatureProvider p(32);
  const auto w = two_turn_sample();
  const auto b = p.provide(w);
  CHECK_NOTHROW(validate_bundle(b, w, 32));
  CHECK(b.emotions.size() == 1);
  CHECK(b.discourse == sequential_discourse(2));
  CHECK(p.source() == FeatureSource::fallback);
}

TEST_CASE("bundle validation catches contract breaks") {
  const auto w = two_turn_sample();
  FallbackFeatureProvider p(8);
  const auto good = p.provide(w);

  auto wrong_key = good;
  wrong_key.key.target_position = 9;
  CHECK_THROWS_AS(validate_bundle(wrong_key, w, 8), LookupError);

  auto on_agent = good;
  on_agent.emotions.push_back({1, std::vector<double>(kNumEmotions, 0.0)});
  CHECK_THROWS_AS(validate_bundle(on_agent, w, 8), ValidationError);

  auto missing = good;
  missing.emotions.clear();
  CHECK_THROWS_AS(validate_bundle(missing, w, 8), ValidationError);

  auto short_z = good;
  short_z.emotions[0].z.pop_back();
  CHECK_THROWS_AS(validate_bundle(short_z, w, 8), ValidationError);

  auto nan_z = good;
  nan_z.emotions[0].z[0] = std::nan("");
  CHECK_THROWS_AS(validate_bundle(nan_z, w, 8), ValidationError);

  auto self_edge = good;
  self_edge.discourse.push_back({1, 1, 0});
  CHECK_THROWS_AS(validate_bundle(self_edge, w, 8), ValidationError);

  auto outside = good;
  outside.discourse.push_back({0, 2, 0});
  CHECK_THROWS_AS(validate_bundle(outside, w, 8), ValidationError);

  CHECK_THROWS_AS(validate_bundle(good, w, 9), ValidationError);
}

TEST_CASE("feature file round-trip") {
  std::mt19937_64 rng(5);
  const auto s = testing::tiny_strategies();
  std::stringstream buf;
  write_feature_header(buf, default_feature_header(4));
  std::vector<std::pair<WindowSample, FeatureBundle>> items;
  for (int i = 0; i < 10; ++i) {
    auto w = testing::random_sample(rng, 1 + i % 5, s, "d" + std::to_string(i));
    auto b = testing::random_bundle(rng, w, 4);
    write_feature_record(buf, b);
    items.emplace_back(w, b);
  }
  const auto fp = FileFeatureProvider::parse(buf);
  CHECK(fp.size() == 10);
  CHECK(fp.context_dim() == 4);
  for (const auto& [w, b] : items) CHECK(fp.provide(w) == b);

  auto unknown = testing::random_sample(rng, 2, s, "zzz");
  CHECK_THROWS_AS(fp.provide(unknown), LookupError);
}

TEST_CASE("feature file rejects bad headers and records") {
  auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return FileFeatureProvider::parse(in);
  };
  std::ostringstream hdr;
  write_feature_header(hdr, default_feature_header(2));
  const std::string header = hdr.str();

  CHECK_THROWS_AS(parse(""), ParseError);
  CHECK_THROWS_AS(parse(R"({"version":2,"d_ctx":2,"emotion_labels":[],"relation_labels":[]})"), ValidationError);
  CHECK_THROWS_AS(parse(R"({"version":1,"d_ctx":0,"emotion_labels":[],"relation_labels":[]})"), ValidationError);
  CHECK_THROWS_AS(parse(R"({"version":1,"d_ctx":2,"emotion_labels":["Joy"],"relation_labels":[]})"),
                  ValidationError);

  const std::string rec = R"({"dialogue_id":"d","target_position":1,"emotions":[{"turn_index":0,"z":[0,0,0,0,0,0,1]}],)";
  CHECK_NOTHROW(parse(header + rec + R"("discourse":[],"context":[1,2]})"));
  CHECK_THROWS_AS(parse(header + rec + R"("discourse":[],"context":[1]})"), ValidationError);
  CHECK_THROWS_AS(parse(header + rec + R"("discourse":[{"src":0,"dst":1,"relation":"Gossip"}],"context":[1,2]})"),
                  ValidationError);
  CHECK_THROWS_AS(parse(header + rec + R"("discourse":[],"context":[1,2]})" + "\n" + rec +
                        R"("discourse":[],"context":[1,2]})"),
                  ValidationError);
  try {
    parse(header + "{oops\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }

  // A relation that exists but is not declared in the header.
  FeatureFileHeader narrow = default_feature_header(2);
  narrow.relation_labels = {"Comment"};
  std::ostringstream nh;
  write_feature_header(nh, narrow);
  CHECK_THROWS_AS(parse(nh.str() + rec + R"("discourse":[{"src":0,"dst":1,"relation":"Elaboration"}],"context":[1,2]})"),
                  ValidationError);
}

TEST_CASE("make_provider") {
  auto fb = make_provider("fallback", 12);
  CHECK(fb->source() == FeatureSource::fallback);
  CHECK(fb->context_dim() == 12);
  CHECK_THROWS_AS(make_provider("/definitely/not/here.jsonl", 12), LookupError);
}
