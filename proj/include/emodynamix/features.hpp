// Copyright 2026 The EmoDynamiX Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "emodynamix/corpus.hpp"

namespace emx {

inline constexpr std::size_t kNumEmotions = 7;
inline constexpr std::size_t kNumDiscourseRelations = 16;
inline constexpr std::size_t kNeutralEmotion = 6;
inline constexpr std::size_t kDefaultContextDim = 256;

// Anger, Disgust, Fear, Joy, Sadness, Surprise, Neutral.
const std::array<std::string, kNumEmotions>& emotion_labels();
// The STAC discourse dependency categories.
const std::array<std::string, kNumDiscourseRelations>& discourse_relations();
std::optional<std::size_t> find_relation(std::string_view name);
std::size_t continuation_relation();

struct SampleKey {
  std::string dialogue_id;
  std::size_t target_position = 0;

  auto operator<=>(const SampleKey&) const = default;
  std::string str() const { return dialogue_id + "@" + std::to_string(target_position); }
};

inline SampleKey key_of(const WindowSample& s) { return {s.dialogue_id, s.target_position}; }

struct EmotionLogits {
  std::size_t turn_index = 0;  // index into the window history
  std::vector<double> z;       // raw pre-softmax scores, one per emotion

  bool operator==(const EmotionLogits&) const = default;
};

struct DiscourseEdge {
  std::size_t src = 0;  // antecedent turn (history index)
  std::size_t dst = 0;  // subsequent turn
  std::size_t relation = 0;

  auto operator<=>(const DiscourseEdge&) const = default;
};

struct FeatureBundle {
  SampleKey key;
  std::vector<EmotionLogits> emotions;  // one per user turn of the history
  std::vector<DiscourseEdge> discourse;
  std::vector<double> context;

  bool operator==(const FeatureBundle&) const = default;
};

// Throws ValidationError (or LookupError for a key mismatch) unless the bundle
// satisfies its invariants with respect to `sample`.
void validate_bundle(const FeatureBundle& b, const WindowSample& sample, std::size_t d_ctx);

// Keyword-vote emotion scores; Neutral = 1 + max(0, 3 - total votes).
std::vector<double> fallback_emotion(std::string_view text);
// Signed hashed bag of 1-2-grams over the role-tagged flattened history,
// L2-normalised unless all zero.
std::vector<double> fallback_context(const WindowSample& sample, std::size_t d_ctx = kDefaultContextDim);
// Chain i -> i+1 labelled Continuation over a history of `n` turns.
std::vector<DiscourseEdge> sequential_discourse(std::size_t n);

enum class FeatureSource { file, fallback };

class FeatureProvider {
 public:
  virtual ~FeatureProvider() = default;
  virtual FeatureBundle provide(const WindowSample& sample) const = 0;
  virtual std::size_t context_dim() const = 0;
  virtual FeatureSource source() const = 0;
};

class FallbackFeatureProvider final : public FeatureProvider {
 public:
  explicit FallbackFeatureProvider(std::size_t d_ctx = kDefaultContextDim);
  FeatureBundle provide(const WindowSample& sample) const override;
  std::size_t context_dim() const override { return d_ctx_; }
  FeatureSource source() const override { return FeatureSource::fallback; }

 private:
  std::size_t d_ctx_;
};

struct FeatureFileHeader {
  int version = 1;
  std::size_t d_ctx = 0;
  std::vector<std::string> emotion_labels;
  std::vector<std::string> relation_labels;
};

FeatureFileHeader default_feature_header(std::size_t d_ctx);

// Line-delimited feature file: a header line followed by one record per
// window sample, keyed by (dialogue_id, target_position).
class FileFeatureProvider final : public FeatureProvider {
 public:
  static FileFeatureProvider load(const std::filesystem::path& path);
  static FileFeatureProvider parse(std::istream& in);

  FeatureBundle provide(const WindowSample& sample) const override;
  std::size_t context_dim() const override { return header_.d_ctx; }
  FeatureSource source() const override { return FeatureSource::file; }
  const FeatureFileHeader& header() const noexcept { return header_; }
  std::size_t size() const noexcept { return records_.size(); }

 private:
  FeatureFileHeader header_;
  std::map<SampleKey, FeatureBundle> records_;
};

void write_feature_header(std::ostream& out, const FeatureFileHeader& h);
void write_feature_record(std::ostream& out, const FeatureBundle& b);

// "fallback" or a feature file path.
std::unique_ptr<FeatureProvider> make_provider(const std::string& source, std::size_t fallback_d_ctx);

}  // namespace emx
