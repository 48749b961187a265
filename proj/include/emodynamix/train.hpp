// Copyright 2026 The EmoDynamiX Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "emodynamix/corpus.hpp"
#include "emodynamix/features.hpp"
#include "emodynamix/graph.hpp"
#include "emodynamix/metrics.hpp"
#include "emodynamix/model.hpp"

namespace emx {

enum class SelectMetric { macro_f1, weighted_f1 };
SelectMetric parse_select_metric(const std::string& s);
std::string select_metric_name(SelectMetric m);

struct TrainConfig {
  double lr = 1e-3;
  std::size_t warmup_steps = 500;
  std::size_t total_steps = 3000;
  std::size_t batch_size = 16;
  double weight_decay = 1e-3;
  std::uint64_t seed = 0;
  SelectMetric select_metric = SelectMetric::macro_f1;
  std::size_t eval_every = 100;
  bool class_weighted = true;  // false: uniform loss weights
  bool checked = true;         // abort on non-finite values

  // Throws ConfigError.
  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

// Warmup then linear decay to zero; `step` counts from 1.
double lr_at(const TrainConfig& cfg, std::size_t step);

template <typename T>
struct AdamWState {
  std::vector<Tensor<T>> m;
  std::vector<Tensor<T>> v;
  std::size_t t = 0;
};

template <typename T>
class AdamW {
 public:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

  explicit AdamW(const ParameterSet<T>& params);

  // One update with learning rate `lr` (already scheduled). Decay is applied
  // to the parameter before the moment step. Throws NumericError naming the
  // parameter when a gradient is non-finite and `checked` is set.
  void step(ParameterSet<T>& params, double lr, double weight_decay, bool checked = true);

  const AdamWState<T>& state() const noexcept { return state_; }

 private:
  AdamWState<T> state_;
};

// A window sample with its graph and context, ready for the model.
struct Example {
  WindowSample sample;
  FeatureBundle bundle;
  HeteroGraph graph;
  std::size_t target = 0;
};

std::vector<Example> build_examples(std::span<const WindowSample> samples, const FeatureProvider& provider,
                                    const StrategySet& strategies, const GraphOptions& opts);

struct Prediction {
  std::size_t predicted = 0;
  std::size_t target = 0;
  std::vector<double> probabilities;
};

template <typename T>
std::vector<Prediction> predict(Model<T>& model, std::span<const Example> examples, bool checked = true);

template <typename T>
EvalReport evaluate(Model<T>& model, std::span<const Example> examples, const StrategySet& strategies,
                    bool checked = true);

// One line of the training log. Dev fields are set on evaluation steps only.
struct LogRecord {
  std::size_t step = 0;
  double loss = 0.0;
  double lr = 0.0;
  std::optional<double> dev_macro_f1;
  std::optional<double> dev_weighted_f1;
  std::optional<double> dev_bias;

  bool operator==(const LogRecord&) const = default;
};

template <typename T>
struct TrainResult {
  std::vector<LogRecord> log;
  ParameterSet<T> best_params;
  std::size_t best_step = 0;
  double best_metric = 0.0;
  EvalReport best_dev;
};

// Mean-reduced weighted cross-entropy over one batch; accumulates gradients
// into model.params() (scaled by 1/batch) and returns the batch loss.
template <typename T>
double batch_loss_and_grad(Model<T>& model, std::span<const Example* const> batch, std::span<const double> weights,
                           bool checked = true);

// Seeded mini-batch training with periodic dev evaluation. Returns the log and
// the parameters of the best evaluation; the model is left at the final step.
template <typename T>
TrainResult<T> train(Model<T>& model, std::span<const Example> train_set, std::span<const Example> dev_set,
                     std::span<const double> weights, const StrategySet& strategies, const TrainConfig& cfg,
                     const std::function<void(const LogRecord&)>& on_log = {});

extern template class AdamW<float>;
extern template class AdamW<double>;

}  // namespace emx
