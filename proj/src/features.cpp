// Copyright 2026 The EmoDynamiX Authors
// SPDX-License-Identifier: Apache-2.0

#include "emodynamix/features.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <set>
#include <unordered_map>

#include <json.hpp>

#include "emodynamix/error.hpp"

namespace emx {
namespace {

using nlohmann::json;

std::vector<std::string> words_of(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c) || c == '\'' || c >= 0x80) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

const std::unordered_map<std::string, std::size_t>& emotion_lexicon() {
  static const std::unordered_map<std::string, std::size_t> lex = [] {
    const std::array<std::vector<std::string>, 6> words = {{
        {"angry", "anger", "mad", "furious", "annoyed", "irritated", "hate", "rage", "frustrated", "frustrating",
         "frustration", "pissed", "resent", "outraged"},
        {"disgust", "disgusted", "disgusting", "gross", "nasty", "revolting", "repulsive", "yuck", "vile", "sickening"},
        {"afraid", "scared", "fear", "frightened", "terrified", "anxious", "anxiety", "worried", "worry", "nervous",
         "panic", "panicking", "scary"},
        {"happy", "glad", "joy", "great", "excited", "thankful", "thanks", "grateful", "love", "wonderful", "relieved",
         "pleased", "delighted", "better"},
        {"sad", "depressed", "depression", "unhappy", "lonely", "cry", "crying", "upset", "hopeless", "miserable",
         "hurt", "heartbroken", "grief", "lonesome"},
        {"surprised", "surprise", "shocked", "shocking", "unexpected", "wow", "amazed", "astonished", "suddenly",
         "unbelievable"},
    }};
    std::unordered_map<std::string, std::size_t> m;
    for (std::size_t e = 0; e < words.size(); ++e)
      for (const auto& w : words[e]) m.emplace(w, e);
    return m;
  }();
  return lex;
}

// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

FeatureBundle bundle_from_json(const json& j, const FeatureFileHeader& h) {
  FeatureBundle b;
  b.key.dialogue_id = j.at("dialogue_id").get<std::string>();
  b.key.target_position = j.at("target_position").get<std::size_t>();
  for (const auto& je : j.at("emotions")) {
    EmotionLogits e;
    e.turn_index = je.at("turn_index").get<std::size_t>();
    e.z = je.at("z").get<std::vector<double>>();
    if (e.z.size() != h.emotion_labels.size()) {
      throw ValidationError("record " + b.key.str() + ": emotion vector has " + std::to_string(e.z.size()) +
                            " entries, expected " + std::to_string(h.emotion_labels.size()));
    }
    b.emotions.push_back(std::move(e));
  }
  for (const auto& jd : j.at("discourse")) {
    const auto name = jd.at("relation").get<std::string>();
    const auto rel = find_relation(name);
    if (!rel) throw ValidationError("record " + b.key.str() + ": unknown discourse relation '" + name + "'");
    b.discourse.push_back({jd.at("src").get<std::size_t>(), jd.at("dst").get<std::size_t>(), *rel});
  }
  b.context = j.at("context").get<std::vector<double>>();
  if (b.context.size() != h.d_ctx) {
    throw ValidationError("record " + b.key.str() + ": context has " + std::to_string(b.context.size()) +
                          " entries, header declares d_ctx=" + std::to_string(h.d_ctx));
  }
  return b;
}

}  // namespace

const std::array<std::string, kNumEmotions>& emotion_labels() {
  static const std::array<std::string, kNumEmotions> labels = {"Anger", "Disgust", "Fear",   "Joy",
                                                               "Sadness", "Surprise", "Neutral"};
  return labels;
}

const std::array<std::string, kNumDiscourseRelations>& discourse_relations() {
  static const std::array<std::string, kNumDiscourseRelations> rels = {
      "Comment",     "Clarification Question", "Elaboration", "Acknowledgment", "Continuation", "Explanation",
      "Conditional", "Question-Answer Pair",   "Alternation", "Question-Elaboration", "Result", "Background",
      "Narration",   "Correction",             "Parallel",    "Contrast"};
  return rels;
}

std::optional<std::size_t> find_relation(std::string_view name) {
  const auto& rels = discourse_relations();
  for (std::size_t i = 0; i < rels.size(); ++i)
    if (rels[i] == name) return i;
  return std::nullopt;
}

std::size_t continuation_relation() {
  static const std::size_t idx = *find_relation("Continuation");
  return idx;
}

void validate_bundle(const FeatureBundle& b, const WindowSample& sample, std::size_t d_ctx) {
  if (b.key != key_of(sample)) {
    throw LookupError("feature bundle " + b.key.str() + " does not belong to sample " + key_of(sample).str());
  }
  const std::string where = "features for " + b.key.str();
  const std::size_t n = sample.history.size();
  std::vector<int> seen(n, 0);
  for (const auto& e : b.emotions) {
    if (e.turn_index >= n) throw ValidationError(where + ": emotion turn_index out of range");
    if (sample.history[e.turn_index].role != Role::user) {
      throw ValidationError(where + ": emotion logits attached to agent turn " + std::to_string(e.turn_index));
    }
    if (e.z.size() != kNumEmotions) {
      throw ValidationError(where + ": emotion vector has " + std::to_string(e.z.size()) + " entries, expected " +
                            std::to_string(kNumEmotions));
    }
    for (double v : e.z)
      if (!std::isfinite(v)) throw ValidationError(where + ": non-finite emotion logit");
    ++seen[e.turn_index];
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (sample.history[i].role == Role::user && seen[i] != 1) {
      throw ValidationError(where + ": user turn " + std::to_string(i) + " has " + std::to_string(seen[i]) +
                            " emotion records, expected 1");
    }
  }
  for (const auto& d : b.discourse) {
    if (d.src >= n || d.dst >= n) throw ValidationError(where + ": discourse edge outside history");
    if (d.src == d.dst) throw ValidationError(where + ": discourse self-edge on turn " + std::to_string(d.src));
    if (d.relation >= kNumDiscourseRelations) throw ValidationError(where + ": discourse relation out of range");
  }
  if (b.context.size() != d_ctx) {
    throw ValidationError(where + ": context dimension " + std::to_string(b.context.size()) + " != " +
                          std::to_string(d_ctx));
  }
  for (double v : b.context)
    if (!std::isfinite(v)) throw ValidationError(where + ": non-finite context value");
}

std::vector<double> fallback_emotion(std::string_view text) {
  std::vector<double> z(kNumEmotions, 0.0);
  const auto& lex = emotion_lexicon();
  std::size_t votes = 0;
  for (const auto& w : words_of(text)) {
    if (auto it = lex.find(w); it != lex.end()) {
      z[it->second] += 1.0;
      ++votes;
    }
  }
  z[kNeutralEmotion] = 1.0 + static_cast<double>(votes < 3 ? 3 - votes : 0);
  return z;
}

std::vector<double> fallback_context(const WindowSample& sample, std::size_t d_ctx) {
  if (d_ctx == 0) throw ValidationError("context dimension must be >= 1");
  std::vector<std::string> tokens;
  for (const auto& t : sample.history) {
    auto words = words_of(t.text);
    if (words.empty()) continue;
    tokens.push_back(t.role == Role::user ? "[user]" : "[agent]");
    tokens.insert(tokens.end(), words.begin(), words.end());
  }
  std::vector<double> v(d_ctx, 0.0);
  auto bump = [&](const std::string& feature) {
    const std::uint64_t h = fnv1a(feature);
    v[h % d_ctx] += (h >> 63) ? -1.0 : 1.0;
  };
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    bump("1:" + tokens[i]);
    if (i + 1 < tokens.size()) bump("2:" + tokens[i] + " " + tokens[i + 1]);
  }
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  if (norm > 0.0)
    for (double& x : v) x /= norm;
  return v;
}

std::vector<DiscourseEdge> sequential_discourse(std::size_t n) {
  std::vector<DiscourseEdge> out;
  for (std::size_t i = 0; i + 1 < n; ++i) out.push_back({i, i + 1, continuation_relation()});
  return out;
}

FallbackFeatureProvider::FallbackFeatureProvider(std::size_t d_ctx) : d_ctx_(d_ctx) {
  if (d_ctx == 0) throw ConfigError("context dimension must be >= 1");
}

FeatureBundle FallbackFeatureProvider::provide(const WindowSample& sample) const {
  FeatureBundle b;
  b.key = key_of(sample);
  for (std::size_t i = 0; i < sample.history.size(); ++i) {
    if (sample.history[i].role == Role::user) b.emotions.push_back({i, fallback_emotion(sample.history[i].text)});
  }
  b.discourse = sequential_discourse(sample.history.size());
  b.context = fallback_context(sample, d_ctx_);
  return b;
}

FeatureFileHeader default_feature_header(std::size_t d_ctx) {
  FeatureFileHeader h;
  h.d_ctx = d_ctx;
  h.emotion_labels.assign(emotion_labels().begin(), emotion_labels().end());
  h.relation_labels.assign(discourse_relations().begin(), discourse_relations().end());
  return h;
}

FileFeatureProvider FileFeatureProvider::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LookupError("feature file not found: " + path.string());
  return parse(in);
}

FileFeatureProvider FileFeatureProvider::parse(std::istream& in) {
  FileFeatureProvider p;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      if (!have_header) {
        p.header_.version = j.at("version").get<int>();
        if (p.header_.version != 1) {
          throw ValidationError("unsupported feature file version " + std::to_string(p.header_.version));
        }
        p.header_.d_ctx = j.at("d_ctx").get<std::size_t>();
        if (p.header_.d_ctx == 0) throw ValidationError("feature file declares d_ctx = 0");
        p.header_.emotion_labels = j.at("emotion_labels").get<std::vector<std::string>>();
        p.header_.relation_labels = j.at("relation_labels").get<std::vector<std::string>>();
        const auto& want = emotion_labels();
        if (!std::equal(p.header_.emotion_labels.begin(), p.header_.emotion_labels.end(), want.begin(), want.end())) {
          throw ValidationError("feature file emotion labels do not match Anger..Neutral registry");
        }
        for (const auto& r : p.header_.relation_labels) {
          if (!find_relation(r)) throw ValidationError("feature file declares unknown discourse relation '" + r + "'");
        }
        have_header = true;
        continue;
      }
      FeatureBundle b = bundle_from_json(j, p.header_);
      for (const auto& d : b.discourse) {
        const auto& name = discourse_relations()[d.relation];
        if (std::find(p.header_.relation_labels.begin(), p.header_.relation_labels.end(), name) ==
            p.header_.relation_labels.end()) {
          throw ValidationError("record " + b.key.str() + " uses relation '" + name + "' not declared in header");
        }
      }
      auto key = b.key;
      if (!p.records_.emplace(key, std::move(b)).second) {
        throw ValidationError("duplicate feature record " + key.str());
      }
    } catch (const json::exception& e) {
      throw ParseError(e.what(), lineno);
    } catch (const ValidationError& e) {
      throw ValidationError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!have_header) throw ParseError("feature file has no header line", 0);
  return p;
}

FeatureBundle FileFeatureProvider::provide(const WindowSample& sample) const {
  auto it = records_.find(key_of(sample));
  if (it == records_.end()) throw LookupError("no feature record for sample " + key_of(sample).str());
  validate_bundle(it->second, sample, header_.d_ctx);
  return it->second;
}

void write_feature_header(std::ostream& out, const FeatureFileHeader& h) {
  json j = {{"version", h.version},
            {"d_ctx", h.d_ctx},
            {"emotion_labels", h.emotion_labels},
            {"relation_labels", h.relation_labels}};
  out << j.dump() << '\n';
}

void write_feature_record(std::ostream& out, const FeatureBundle& b) {
  json j = {{"dialogue_id", b.key.dialogue_id},
            {"target_position", b.key.target_position},
            {"emotions", json::array()},
            {"discourse", json::array()},
            {"context", b.context}};
  for (const auto& e : b.emotions) j["emotions"].push_back({{"turn_index", e.turn_index}, {"z", e.z}});
  for (const auto& d : b.discourse) {
    j["discourse"].push_back({{"src", d.src}, {"dst", d.dst}, {"relation", discourse_relations()[d.relation]}});
  }
  out << j.dump() << '\n';
}

std::unique_ptr<FeatureProvider> make_provider(const std::string& source, std::size_t fallback_d_ctx) {
  if (source.empty() || source == "fallback") return std::make_unique<FallbackFeatureProvider>(fallback_d_ctx);
  return std::make_unique<FileFeatureProvider>(FileFeatureProvider::load(source));
}

}  // namespace emx
