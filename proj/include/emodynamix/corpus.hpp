// Copyright 2026 The EmoDynamiX Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace emx {

enum class Role { user, agent };

std::string role_name(Role r);
// Accepts user/seeker/client and agent/supporter/system/therapist.
Role parse_role(const std::string& s);

// Ordered strategy registry; a label's index is its class id.
class StrategySet {
 public:
  StrategySet(std::string name, std::vector<std::string> labels);

  const std::string& name() const noexcept { return name_; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  std::size_t size() const noexcept { return labels_.size(); }
  const std::string& label(std::size_t i) const { return labels_.at(i); }

  // Exact match first, then ASCII case-insensitive.
  std::optional<std::size_t> find(const std::string& label) const;
  // Like find() but throws ValidationError naming the label.
  std::size_t resolve(const std::string& label) const;

  bool operator==(const StrategySet&) const = default;

 private:
  std::string name_;
  std::vector<std::string> labels_;
};

StrategySet esconv_strategies();
// Seven classes: the three suggestion-type behaviours are merged.
StrategySet annomi_strategies();
// "esconv" or "annomi".
StrategySet builtin_strategy_set(const std::string& name);

struct Turn {
  Role role = Role::user;
  std::string text;
  std::optional<std::size_t> strategy;  // present iff role == agent

  bool operator==(const Turn&) const = default;
};

struct Dialogue {
  std::string id;
  std::vector<Turn> turns;
};

enum class CorpusSchema { esconv, annomi, generic };

CorpusSchema parse_schema(const std::string& s);
std::string schema_name(CorpusSchema s);

// Strategy set implied by a schema; `generic` needs an explicit set.
StrategySet schema_strategies(CorpusSchema schema, const std::optional<StrategySet>& generic = std::nullopt);

struct LoadStats {
  std::size_t dialogues_read = 0;
  std::size_t dropped_low_quality = 0;
};

// Line-delimited JSON, one dialogue per line:
//   {"id": "...", "turns": [{"role": "user", "text": "..."},
//                           {"role": "agent", "text": "...", "strategy": "Question"}],
//    "quality": "high"}
// `quality` is optional; for the annomi schema, "low" dialogues are dropped and
// the fine-grained AnnoMI behaviour names are mapped onto the merged set.
// Counts are added to `stats`.
std::vector<Dialogue> parse_corpus(std::istream& in, CorpusSchema schema, const StrategySet& strategies,
                                   LoadStats* stats = nullptr);
std::vector<Dialogue> load_corpus(const std::filesystem::path& path, CorpusSchema schema,
                                  const StrategySet& strategies, LoadStats* stats = nullptr);
void write_corpus(std::ostream& out, std::span<const Dialogue> dialogues, const StrategySet& strategies);

// Throws ValidationError describing the first broken invariant.
void validate_dialogue(const Dialogue& d, const StrategySet& strategies);
bool is_valid_utf8(std::string_view s);

struct WindowSample {
  std::string dialogue_id;
  std::vector<Turn> history;  // contiguous turns immediately preceding the target
  std::size_t target_strategy = 0;
  std::size_t target_position = 0;

  bool operator==(const WindowSample&) const = default;
};

struct WindowStats {
  std::size_t skipped_no_history = 0;
};

inline constexpr std::size_t kDefaultWindow = 5;

// One sample per agent turn that has at least one preceding turn.
std::vector<WindowSample> window_samples(const Dialogue& d, std::size_t window = kDefaultWindow,
                                         WindowStats* stats = nullptr);
std::vector<WindowSample> window_samples(std::span<const Dialogue> ds, std::size_t window = kDefaultWindow,
                                         WindowStats* stats = nullptr);

std::vector<std::size_t> class_counts(std::span<const WindowSample> samples, std::size_t n_classes);

// weight_c = N_total / (|S| * N_c). Throws ValidationError listing the
// classes that never occur.
std::vector<double> class_weights(std::span<const WindowSample> samples, const StrategySet& s);

// {"dialogue_id", "target_position", "target_strategy": name,
//  "history": [{"role", "text", "strategy"?}]} per line.
void write_samples(std::ostream& out, std::span<const WindowSample> samples, const StrategySet& s);
std::vector<WindowSample> read_samples(std::istream& in, const StrategySet& s);
std::vector<WindowSample> read_samples(const std::filesystem::path& path, const StrategySet& s);

struct DialogueSplit {
  std::vector<Dialogue> train, dev, test;
};

// Seeded dialogue-level split; dev and test get floor(n*r/R) dialogues, the
// remainder goes to train.
DialogueSplit split_dialogues(std::vector<Dialogue> dialogues, std::array<unsigned, 3> ratio, std::uint64_t seed);

}  // namespace emx
