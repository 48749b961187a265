// Copyright 2026 The EmoDynamiX Authors
// SPDX-License-Identifier: Apache-2.0

#include "emodynamix/synthetic.hpp"

#include <algorithm>
#include <random>
#include <string>

#include "emodynamix/error.hpp"

namespace emx {

namespace {

const std::vector<std::string>& filler_words() {
  static const std::vector<std::string> w = {
      "today", "work",  "weekend", "family", "friend", "school", "plan",  "call",   "week",    "morning",
      "job",   "house", "time",    "talk",   "idea",   "thing",  "place", "people", "evening", "office"};
  return w;
}

std::string filler(std::mt19937_64& rng, std::size_t turn) {
  std::uniform_int_distribution<std::size_t> pick(0, filler_words().size() - 1);
  std::uniform_int_distribution<std::size_t> len(3, 7);
  std::string text = "turn" + std::to_string(turn);
  for (std::size_t i = 0, n = len(rng); i < n; ++i) text += " " + filler_words()[pick(rng)];
  return text;
}

}  // namespace

SyntheticData make_synthetic(const SyntheticConfig& cfg) {
  if (cfg.n_strategies < 2 || cfg.n_strategies > kNumEmotions - 1) {
    throw ConfigError("synthetic: n_strategies must lie in [2, " + std::to_string(kNumEmotions - 1) + "]");
  }
  if (cfg.min_turns < 2 || cfg.max_turns < cfg.min_turns) throw ConfigError("synthetic: bad turn range");
  if (cfg.d_ctx == 0) throw ConfigError("synthetic: d_ctx must be >= 1");

  std::vector<std::string> labels;
  for (std::size_t s = 0; s < cfg.n_strategies; ++s) labels.push_back("Strategy " + std::string(1, char('A' + s)));
  SyntheticData out{StrategySet("synthetic", labels), {}, {}};

  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<std::size_t> turns(cfg.min_turns, cfg.max_turns);
  std::uniform_int_distribution<std::size_t> strategy(0, cfg.n_strategies - 1);
  std::uniform_int_distribution<std::size_t> relation(0, kNumDiscourseRelations - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, cfg.noise);

  for (std::size_t d = 0; d < cfg.dialogues; ++d) {
    Dialogue dlg;
    dlg.id = "synth-" + std::to_string(d);
    const std::size_t n = turns(rng);
    for (std::size_t t = 0; t < n; ++t) {
      Turn turn;
      turn.role = t % 2 == 0 ? Role::user : Role::agent;
      turn.text = filler(rng, t);
      if (turn.role == Role::agent) turn.strategy = strategy(rng);
      dlg.turns.push_back(std::move(turn));
    }

    for (const WindowSample& s : window_samples(dlg)) {
      FeatureBundle b;
      b.key = key_of(s);
      std::size_t last_user = s.history.size();
      for (std::size_t i = 0; i < s.history.size(); ++i)
        if (s.history[i].role == Role::user) last_user = i;
      // Emotions congruent with the target, e.g. {Anger, Joy} for 0 of 3.
      std::vector<std::size_t> congruent;
      for (std::size_t e = 0; e + 1 < kNumEmotions; ++e)
        if (e % cfg.n_strategies == s.target_strategy) congruent.push_back(e);
      for (std::size_t i = 0; i < s.history.size(); ++i) {
        if (s.history[i].role != Role::user) continue;
        std::vector<double> z(kNumEmotions);
        for (double& x : z) x = noise(rng);
        const std::size_t peak = i == last_user ? congruent[std::uniform_int_distribution<std::size_t>(
                                                      0, congruent.size() - 1)(rng)]
                                                : kNeutralEmotion;
        z[peak] += cfg.peak;
        b.emotions.push_back({i, std::move(z)});
      }
      for (std::size_t i = 1; i < s.history.size(); ++i) {
        const std::size_t parent = unit(rng) < 0.7 ? i - 1 : std::uniform_int_distribution<std::size_t>(0, i - 1)(rng);
        b.discourse.push_back({parent, i, relation(rng)});
      }
      b.context = fallback_context(s, cfg.d_ctx);
      out.features.emplace(b.key, std::move(b));
    }
    out.dialogues.push_back(std::move(dlg));
  }
  return out;
}

MemoryFeatureProvider::MemoryFeatureProvider(std::map<SampleKey, FeatureBundle> records, std::size_t d_ctx)
    : records_(std::move(records)), d_ctx_(d_ctx) {}

FeatureBundle MemoryFeatureProvider::provide(const WindowSample& sample) const {
  auto it = records_.find(key_of(sample));
  if (it == records_.end()) throw LookupError("no feature record for sample " + key_of(sample).str());
  validate_bundle(it->second, sample, d_ctx_);
  return it->second;
}

std::map<SampleKey, FeatureBundle> scramble_emotions(std::map<SampleKey, FeatureBundle> features,
                                                     std::uint64_t seed) {
  std::vector<std::vector<double>*> slots;
  for (auto& [key, b] : features)
    for (auto& e : b.emotions) slots.push_back(&e.z);
  std::vector<std::vector<double>> pool;
  pool.reserve(slots.size());
  for (auto* z : slots) pool.push_back(*z);
  std::mt19937_64 rng(seed);
  std::shuffle(pool.begin(), pool.end(), rng);
  for (std::size_t i = 0; i < slots.size(); ++i) *slots[i] = std::move(pool[i]);
  return features;
}

}  // namespace emx
