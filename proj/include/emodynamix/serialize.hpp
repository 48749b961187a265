// Copyright 2026 The EmoDynamiX Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "emodynamix/checkpoint.hpp"
#include "emodynamix/corpus.hpp"
#include "emodynamix/metrics.hpp"
#include "emodynamix/model.hpp"
#include "emodynamix/trace.hpp"
#include "emodynamix/train.hpp"

namespace emx {

using json = nlohmann::json;

// Config readers accept partial objects (missing keys keep their defaults)
// and reject unknown keys with ConfigError.
void to_json(json& j, const Ablations& a);
void from_json(const json& j, Ablations& a);
void to_json(json& j, const ModelConfig& c);
void from_json(const json& j, ModelConfig& c);
void to_json(json& j, const TrainConfig& c);
void from_json(const json& j, TrainConfig& c);

void to_json(json& j, const ClassScore& s);
void to_json(json& j, const EvalReport& r);
void to_json(json& j, const LogRecord& r);
void to_json(json& j, const DecisionTrace& t);
json pattern_json(const DisagreementPattern& p, const StrategySet& s);

json strategy_set_json(const StrategySet& s);
StrategySet strategy_set_from_json(const json& j);

template <typename T>
struct LoadedModel {
  Model<T> model;
  StrategySet strategies;
  json metadata;
};

// Checkpoint metadata holds {"model", "strategies", "train"?, "extra"?}.
template <typename T>
void save_model(const std::filesystem::path& path, const Model<T>& model, const StrategySet& strategies,
                const std::optional<TrainConfig>& train = std::nullopt, const json& extra = json::object());
template <typename T>
LoadedModel<T> load_model(const std::filesystem::path& path);

}  // namespace emx
