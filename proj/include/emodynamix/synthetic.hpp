// Copyright 2026 The EmoDynamiX Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "emodynamix/corpus.hpp"
#include "emodynamix/features.hpp"

namespace emx {

// Alternating user/agent dialogues with neutral filler text. For every window
// sample the feature bundle plants emotion logits: the last user turn of the
// history peaks at a non-neutral emotion e with e % n_strategies equal to the
// target strategy, every earlier user turn peaks at Neutral.
struct SyntheticConfig {
  std::size_t dialogues = 60;
  std::size_t min_turns = 4;
  std::size_t max_turns = 12;
  std::size_t n_strategies = 3;
  double peak = 4.0;   // logit margin of the planted emotion
  double noise = 1.0;  // std of the gaussian added to every logit
  std::size_t d_ctx = 32;
  std::uint64_t seed = 0;
};

struct SyntheticData {
  StrategySet strategies;
  std::vector<Dialogue> dialogues;
  std::map<SampleKey, FeatureBundle> features;
};

SyntheticData make_synthetic(const SyntheticConfig& cfg);

// Serves bundles from memory; validates each against its sample.
class MemoryFeatureProvider final : public FeatureProvider {
 public:
  MemoryFeatureProvider(std::map<SampleKey, FeatureBundle> records, std::size_t d_ctx);
  FeatureBundle provide(const WindowSample& sample) const override;
  std::size_t context_dim() const override { return d_ctx_; }
  FeatureSource source() const override { return FeatureSource::file; }

 private:
  std::map<SampleKey, FeatureBundle> records_;
  std::size_t d_ctx_;
};

// Seeded permutation of every emotion-logit vector across the whole set,
// keeping each bundle's turn indices.
std::map<SampleKey, FeatureBundle> scramble_emotions(std::map<SampleKey, FeatureBundle> features, std::uint64_t seed);

}  // namespace emx
