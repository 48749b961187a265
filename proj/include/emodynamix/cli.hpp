// Copyright 2026 The EmoDynamiX Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "emodynamix/corpus.hpp"
#include "emodynamix/serialize.hpp"

namespace emx {

struct CorpusConfig {
  std::string schema = "esconv";
  std::string path;  // one file, split by `split_ratio`
  std::string train_path, dev_path, test_path;  // pre-split files; take precedence over `path`
  json strategies;   // null: schema default; string: built-in name; object: {name, labels}
  std::array<unsigned, 3> split_ratio{8, 1, 1};
  std::size_t window = kDefaultWindow;
};

struct RunConfig {
  CorpusConfig corpus;
  std::string features = "fallback";  // "fallback" or a feature file path
  std::size_t fallback_context_dim = kDefaultContextDim;
  ModelConfig model;
  TrainConfig train;
  std::string out = "emodynamix_run";
  std::uint64_t seed = 0;  // split shuffle, parameter init and batch order
  std::string dtype = "f32";
  std::string eval_split = "test";
  std::size_t top_n = 10;      // disagreement patterns kept by `trace`
  std::size_t dot_limit = 20;  // dot files written by `trace --dot`
};

void to_json(json& j, const CorpusConfig& c);
void from_json(const json& j, CorpusConfig& c);
void to_json(json& j, const RunConfig& c);
void from_json(const json& j, RunConfig& c);
RunConfig load_run_config(const std::filesystem::path& path);

StrategySet resolve_strategies(const CorpusConfig& c);

struct PreparedData {
  StrategySet strategies;
  std::vector<WindowSample> train, dev, test;
  json manifest;  // split sizes, class histograms, load statistics
};

// Loads, validates, splits and windows the corpus named by the config.
PreparedData prepare_data(const RunConfig& cfg);

// Exit codes: 0 success, 1 usage or config error, 2 data error, 3 numeric failure.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace emx
