// Copyright 2026 The EmoDynamiX Authors
// SPDX-License-Identifier: Apache-2.0

#include "emodynamix/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include <json.hpp>

#include "emodynamix/error.hpp"

namespace emx {
namespace {

using nlohmann::json;

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

// Fine-grained AnnoMI therapist behaviours onto the merged seven-way set.
const std::map<std::string, std::string>& annomi_aliases() {
  static const std::map<std::string, std::string> m = {
      {"simple reflection", "Reflection simple"},
      {"complex reflection", "Reflection complex"},
      {"open question", "Question open"},
      {"closed question", "Question closed"},
      {"information", "Provide information"},
      {"advice", "Provide suggestion"},
      {"giving options", "Provide suggestion"},
      {"options", "Provide suggestion"},
      {"negotiation/goal-setting", "Provide suggestion"},
      {"negotiation", "Provide suggestion"},
      {"goal-setting", "Provide suggestion"},
      {"other", "Other"},
  };
  return m;
}

std::size_t resolve_strategy(const std::string& raw, CorpusSchema schema, const StrategySet& s) {
  if (auto idx = s.find(raw)) return *idx;
  if (schema == CorpusSchema::annomi) {
    const auto& aliases = annomi_aliases();
    if (auto it = aliases.find(lower(raw)); it != aliases.end()) return s.resolve(it->second);
  }
  return s.resolve(raw);
}

json turn_to_json(const Turn& t, const StrategySet& s) {
  json j = {{"role", role_name(t.role)}, {"text", t.text}};
  if (t.strategy) j["strategy"] = s.label(*t.strategy);
  return j;
}

Turn turn_from_json(const json& jt, CorpusSchema schema, const StrategySet& s) {
  Turn t;
  t.role = parse_role(jt.at("role").get<std::string>());
  t.text = jt.value("text", std::string{});
  if (auto it = jt.find("strategy"); it != jt.end() && !it->is_null()) {
    t.strategy = resolve_strategy(it->get<std::string>(), schema, s);
  }
  return t;
}

template <typename F>
void for_each_line(std::istream& in, F f) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(e.what(), lineno);
    }
    try {
      f(j, lineno);
    } catch (const json::exception& e) {
      throw ParseError(e.what(), lineno);
    } catch (const ValidationError& e) {
      throw ValidationError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
}

}  // namespace

std::string role_name(Role r) { return r == Role::user ? "user" : "agent"; }

Role parse_role(const std::string& s) {
  const std::string l = lower(s);
  if (l == "user" || l == "seeker" || l == "client" || l == "usr") return Role::user;
  if (l == "agent" || l == "supporter" || l == "system" || l == "therapist" || l == "sys") return Role::agent;
  throw ValidationError("unknown speaker role '" + s + "'");
}

StrategySet::StrategySet(std::string name, std::vector<std::string> labels)
    : name_(std::move(name)), labels_(std::move(labels)) {
  if (labels_.size() < 2) throw ValidationError("strategy set '" + name_ + "' needs at least 2 labels");
  std::set<std::string> seen;
  for (const auto& l : labels_) {
    if (l.empty()) throw ValidationError("strategy set '" + name_ + "' has an empty label");
    if (!seen.insert(l).second) throw ValidationError("strategy set '" + name_ + "' repeats label '" + l + "'");
  }
}

std::optional<std::size_t> StrategySet::find(const std::string& label) const {
  for (std::size_t i = 0; i < labels_.size(); ++i)
    if (labels_[i] == label) return i;
  const std::string l = lower(label);
  for (std::size_t i = 0; i < labels_.size(); ++i)
    if (lower(labels_[i]) == l) return i;
  return std::nullopt;
}

std::size_t StrategySet::resolve(const std::string& label) const {
  if (auto i = find(label)) return *i;
  throw ValidationError("unknown strategy label '" + label + "' for strategy set '" + name_ + "'");
}

StrategySet esconv_strategies() {
  return StrategySet("esconv", {"Question", "Restatement or Paraphrasing", "Reflection of Feelings", "Self-disclosure",
                                "Affirmation and Reassurance", "Providing Suggestions", "Information", "Others"});
}

StrategySet annomi_strategies() {
  return StrategySet("annomi", {"Question open", "Question closed", "Reflection simple", "Reflection complex",
                                "Provide suggestion", "Provide information", "Other"});
}

StrategySet builtin_strategy_set(const std::string& name) {
  const std::string l = lower(name);
  if (l == "esconv") return esconv_strategies();
  if (l == "annomi") return annomi_strategies();
  throw ConfigError("unknown built-in strategy set '" + name + "'");
}

CorpusSchema parse_schema(const std::string& s) {
  const std::string l = lower(s);
  if (l == "esconv") return CorpusSchema::esconv;
  if (l == "annomi") return CorpusSchema::annomi;
  if (l == "generic") return CorpusSchema::generic;
  throw ConfigError("unknown corpus schema '" + s + "' (expected esconv, annomi or generic)");
}

std::string schema_name(CorpusSchema s) {
  switch (s) {
    case CorpusSchema::esconv: return "esconv";
    case CorpusSchema::annomi: return "annomi";
    case CorpusSchema::generic: return "generic";
  }
  return "generic";
}

StrategySet schema_strategies(CorpusSchema schema, const std::optional<StrategySet>& generic) {
  switch (schema) {
    case CorpusSchema::esconv: return esconv_strategies();
    case CorpusSchema::annomi: return annomi_strategies();
    case CorpusSchema::generic:
      if (!generic) throw ConfigError("generic corpus schema requires an explicit strategy set");
      return *generic;
  }
  throw ConfigError("unreachable schema");
}

bool is_valid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t len;
    std::uint32_t cp;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      len = 2, cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3, cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4, cp = c & 0x07;
    } else {
      return false;
    }
    if (i + len > s.size()) return false;
    for (std::size_t k = 1; k < len; ++k) {
      const auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    // overlong, surrogate and out-of-range encodings
    if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000) || cp > 0x10FFFF ||
        (cp >= 0xD800 && cp <= 0xDFFF)) {
      return false;
    }
    i += len;
  }
  return true;
}

void validate_dialogue(const Dialogue& d, const StrategySet& strategies) {
  if (d.id.empty()) throw ValidationError("dialogue without id");
  if (d.turns.empty()) throw ValidationError("dialogue '" + d.id + "' has no turns");
  for (std::size_t i = 0; i < d.turns.size(); ++i) {
    const Turn& t = d.turns[i];
    const std::string where = "dialogue '" + d.id + "' turn " + std::to_string(i);
    if (!is_valid_utf8(t.text)) throw ValidationError(where + ": text is not valid UTF-8");
    if (t.role == Role::agent && !t.strategy) throw ValidationError(where + ": agent turn without strategy");
    if (t.role == Role::user && t.strategy) throw ValidationError(where + ": user turn carries a strategy");
    if (t.strategy && *t.strategy >= strategies.size()) throw ValidationError(where + ": strategy index out of range");
  }
}

std::vector<Dialogue> parse_corpus(std::istream& in, CorpusSchema schema, const StrategySet& strategies,
                                   LoadStats* stats) {
  std::vector<Dialogue> out;
  LoadStats local;
  for_each_line(in, [&](const json& j, std::size_t) {
    ++local.dialogues_read;
    if (schema == CorpusSchema::annomi && lower(j.value("quality", std::string{"high"})) == "low") {
      ++local.dropped_low_quality;
      return;
    }
    Dialogue d;
    const json& id = j.at("id");
    d.id = id.is_string() ? id.get<std::string>() : id.dump();
    for (const auto& jt : j.at("turns")) d.turns.push_back(turn_from_json(jt, schema, strategies));
    validate_dialogue(d, strategies);
    out.push_back(std::move(d));
  });
  if (stats) {
    stats->dialogues_read += local.dialogues_read;
    stats->dropped_low_quality += local.dropped_low_quality;
  }
  return out;
}

std::vector<Dialogue> load_corpus(const std::filesystem::path& path, CorpusSchema schema,
                                  const StrategySet& strategies, LoadStats* stats) {
  std::ifstream in(path);
  if (!in) throw LookupError("corpus file not found: " + path.string());
  return parse_corpus(in, schema, strategies, stats);
}

void write_corpus(std::ostream& out, std::span<const Dialogue> dialogues, const StrategySet& strategies) {
  for (const auto& d : dialogues) {
    json j = {{"id", d.id}, {"turns", json::array()}};
    for (const auto& t : d.turns) j["turns"].push_back(turn_to_json(t, strategies));
    out << j.dump() << '\n';
  }
}

std::vector<WindowSample> window_samples(const Dialogue& d, std::size_t window, WindowStats* stats) {
  if (window == 0) throw ValidationError("window size must be >= 1");
  std::vector<WindowSample> out;
  for (std::size_t p = 0; p < d.turns.size(); ++p) {
    const Turn& t = d.turns[p];
    if (t.role != Role::agent) continue;
    if (p == 0) {
      if (stats) ++stats->skipped_no_history;
      continue;
    }
    WindowSample s;
    s.dialogue_id = d.id;
    s.target_position = p;
    s.target_strategy = t.strategy.value();
    const std::size_t begin = p > window ? p - window : 0;
    s.history.assign(d.turns.begin() + static_cast<std::ptrdiff_t>(begin),
                     d.turns.begin() + static_cast<std::ptrdiff_t>(p));
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<WindowSample> window_samples(std::span<const Dialogue> ds, std::size_t window, WindowStats* stats) {
  std::vector<WindowSample> out;
  for (const auto& d : ds) {
    auto part = window_samples(d, window, stats);
    out.insert(out.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  return out;
}

std::vector<std::size_t> class_counts(std::span<const WindowSample> samples, std::size_t n_classes) {
  std::vector<std::size_t> counts(n_classes, 0);
  for (const auto& s : samples) {
    if (s.target_strategy >= n_classes) throw ValidationError("target strategy out of range");
    ++counts[s.target_strategy];
  }
  return counts;
}

std::vector<double> class_weights(std::span<const WindowSample> samples, const StrategySet& s) {
  const auto counts = class_counts(samples, s.size());
  std::string missing;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] == 0) missing += (missing.empty() ? "" : ", ") + s.label(c);
  }
  if (!missing.empty()) throw ValidationError("classes absent from training samples: " + missing);
  const double total = static_cast<double>(samples.size());
  std::vector<double> w(counts.size());
  for (std::size_t c = 0; c < counts.size(); ++c) {
    w[c] = total / (static_cast<double>(counts.size()) * static_cast<double>(counts[c]));
  }
  return w;
}

void write_samples(std::ostream& out, std::span<const WindowSample> samples, const StrategySet& s) {
  for (const auto& smp : samples) {
    json j = {{"dialogue_id", smp.dialogue_id},
              {"target_position", smp.target_position},
              {"target_strategy", s.label(smp.target_strategy)},
              {"history", json::array()}};
    for (const auto& t : smp.history) j["history"].push_back(turn_to_json(t, s));
    out << j.dump() << '\n';
  }
}

std::vector<WindowSample> read_samples(std::istream& in, const StrategySet& s) {
  std::vector<WindowSample> out;
  for_each_line(in, [&](const json& j, std::size_t) {
    WindowSample smp;
    smp.dialogue_id = j.at("dialogue_id").get<std::string>();
    smp.target_position = j.at("target_position").get<std::size_t>();
    smp.target_strategy = s.resolve(j.at("target_strategy").get<std::string>());
    for (const auto& jt : j.at("history")) smp.history.push_back(turn_from_json(jt, CorpusSchema::generic, s));
    if (smp.history.empty() || smp.history.size() > smp.target_position) {
      throw ValidationError("sample " + smp.dialogue_id + "@" + std::to_string(smp.target_position) +
                            " has inconsistent history length");
    }
    out.push_back(std::move(smp));
  });
  return out;
}

std::vector<WindowSample> read_samples(const std::filesystem::path& path, const StrategySet& s) {
  std::ifstream in(path);
  if (!in) throw LookupError("sample file not found: " + path.string());
  return read_samples(in, s);
}

DialogueSplit split_dialogues(std::vector<Dialogue> dialogues, std::array<unsigned, 3> ratio, std::uint64_t seed) {
  const unsigned total_ratio = ratio[0] + ratio[1] + ratio[2];
  if (total_ratio == 0) throw ConfigError("split ratio must not be all zero");
  std::vector<std::size_t> order(dialogues.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t n = dialogues.size();
  const std::size_t n_dev = n * ratio[1] / total_ratio;
  const std::size_t n_test = n * ratio[2] / total_ratio;
  const std::size_t n_train = n - n_dev - n_test;
  DialogueSplit split;
  for (std::size_t k = 0; k < n; ++k) {
    Dialogue& d = dialogues[order[k]];
    if (k < n_train) {
      split.train.push_back(std::move(d));
    } else if (k < n_train + n_dev) {
      split.dev.push_back(std::move(d));
    } else {
      split.test.push_back(std::move(d));
    }
  }
  return split;
}

}  // namespace emx
