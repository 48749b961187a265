// Copyright 2026 The EmoDynamiX Authors
// SPDX-License-Identifier: Apache-2.0

#include "emodynamix/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "emodynamix/error.hpp"

namespace emx {

SelectMetric parse_select_metric(const std::string& s) {
  if (s == "macro_f1") return SelectMetric::macro_f1;
  if (s == "weighted_f1") return SelectMetric::weighted_f1;
  throw ConfigError("unknown select_metric '" + s + "' (expected macro_f1 or weighted_f1)");
}

std::string select_metric_name(SelectMetric m) {
  return m == SelectMetric::macro_f1 ? "macro_f1" : "weighted_f1";
}

void TrainConfig::validate() const {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("lr must be > 0");
  if (total_steps == 0) throw ConfigError("total_steps must be >= 1");
  if (warmup_steps > total_steps) {
    throw ConfigError("warmup_steps (" + std::to_string(warmup_steps) + ") exceeds total_steps (" +
                      std::to_string(total_steps) + ")");
  }
  if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be >= 0");
  if (eval_every == 0) throw ConfigError("eval_every must be >= 1");
}

double lr_at(const TrainConfig& cfg, std::size_t step) {
  const double s = static_cast<double>(step);
  const double warm = cfg.warmup_steps ? s / static_cast<double>(cfg.warmup_steps)
                                       : std::numeric_limits<double>::infinity();
  double decay;
  if (cfg.total_steps > cfg.warmup_steps) {
    decay = std::max(0.0, static_cast<double>(cfg.total_steps) - s) /
            static_cast<double>(cfg.total_steps - cfg.warmup_steps);
  } else {
    decay = step <= cfg.total_steps ? 1.0 : 0.0;
  }
  return cfg.lr * std::min(warm, decay);
}

template <typename T>
AdamW<T>::AdamW(const ParameterSet<T>& params) {
  for (const auto& p : params) {
    state_.m.emplace_back(p.value.shape());
    state_.v.emplace_back(p.value.shape());
  }
}

template <typename T>
void AdamW<T>::step(ParameterSet<T>& params, double lr, double weight_decay, bool checked) {
  if (params.size() != state_.m.size()) throw ShapeError("AdamW: parameter set changed since construction");
  ++state_.t;
  const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(state_.t));
  const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(state_.t));
  std::size_t k = 0;
  for (auto& p : params) {
    auto w = p.value.data();
    auto g = p.grad.data();
    auto m = state_.m[k].data();
    auto v = state_.v[k].data();
    if (checked && !p.grad.all_finite()) throw NumericError("non-finite gradient in parameter '" + p.name + "'");
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = static_cast<double>(g[i]);
      double wi = static_cast<double>(w[i]);
      wi -= lr * weight_decay * wi;
      const double mi = kBeta1 * static_cast<double>(m[i]) + (1.0 - kBeta1) * gi;
      const double vi = kBeta2 * static_cast<double>(v[i]) + (1.0 - kBeta2) * gi * gi;
      m[i] = static_cast<T>(mi);
      v[i] = static_cast<T>(vi);
      wi -= lr * (mi / c1) / (std::sqrt(vi / c2) + kEps);
      w[i] = static_cast<T>(wi);
    }
    ++k;
  }
}

std::vector<Example> build_examples(std::span<const WindowSample> samples, const FeatureProvider& provider,
                                    const StrategySet& strategies, const GraphOptions& opts) {
  std::vector<Example> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    Example e;
    e.sample = s;
    e.bundle = provider.provide(s);
    e.graph = build_graph(s, e.bundle, strategies, opts);
    e.target = s.target_strategy;
    out.push_back(std::move(e));
  }
  return out;
}

template <typename T>
std::vector<Prediction> predict(Model<T>& model, std::span<const Example> examples, bool checked) {
  std::vector<Prediction> out;
  out.reserve(examples.size());
  for (const auto& e : examples) {
    Tape<T> tape(checked);
    ForwardOutput<T> f = model.forward(tape, e.graph, e.bundle.context);
    out.push_back({f.predicted(), e.target, std::move(f.probabilities)});
  }
  return out;
}

template <typename T>
EvalReport evaluate(Model<T>& model, std::span<const Example> examples, const StrategySet& strategies,
                    bool checked) {
  if (examples.empty()) throw ValidationError("evaluate: no samples");
  ConfusionMatrix cm(strategies.size());
  for (const auto& p : predict(model, examples, checked)) cm.add(p.predicted, p.target);
  return make_report(cm, strategies.labels());
}

template <typename T>
double batch_loss_and_grad(Model<T>& model, std::span<const Example* const> batch, std::span<const double> weights,
                           bool checked) {
  if (batch.empty()) throw ValidationError("empty batch");
  const T inv = static_cast<T>(1.0 / static_cast<double>(batch.size()));
  double total = 0.0;
  for (const Example* e : batch) {
    Tape<T> tape(checked);
    ForwardOutput<T> f = model.forward(tape, e->graph, e->bundle.context);
    Var<T> l = ops::scale(Model<T>::loss(f.logits, e->target, weights), inv);
    total += static_cast<double>(l.value()[0]);
    tape.backward(l);
  }
  return total;
}

template <typename T>
TrainResult<T> train(Model<T>& model, std::span<const Example> train_set, std::span<const Example> dev_set,
                     std::span<const double> weights, const StrategySet& strategies, const TrainConfig& cfg,
                     const std::function<void(const LogRecord&)>& on_log) {
  cfg.validate();
  if (train_set.empty()) throw ValidationError("train: empty training set");
  if (dev_set.empty()) throw ValidationError("train: empty dev set");
  if (weights.size() != strategies.size()) throw ShapeError("train: class weight count does not match strategies");

  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t cursor = 0;

  AdamW<T> opt(model.params());
  TrainResult<T> result{{}, model.params(), 0, -1.0, EvalReport{}};
  std::vector<const Example*> batch;
  for (std::size_t step = 1; step <= cfg.total_steps; ++step) {
    batch.clear();
    while (batch.size() < std::min(cfg.batch_size, train_set.size())) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      batch.push_back(&train_set[order[cursor++]]);
    }
    model.params().zero_grad();
    LogRecord rec;
    rec.step = step;
    rec.loss = batch_loss_and_grad(model, std::span<const Example* const>(batch), weights, cfg.checked);
    rec.lr = lr_at(cfg, step);
    opt.step(model.params(), rec.lr, cfg.weight_decay, cfg.checked);

    if (step % cfg.eval_every == 0 || step == cfg.total_steps) {
      EvalReport dev = evaluate(model, dev_set, strategies, cfg.checked);
      rec.dev_macro_f1 = dev.macro_f1;
      rec.dev_weighted_f1 = dev.weighted_f1;
      rec.dev_bias = dev.bias;
      const double metric = cfg.select_metric == SelectMetric::macro_f1 ? dev.macro_f1 : dev.weighted_f1;
      if (metric > result.best_metric) {
        result.best_metric = metric;
        result.best_step = step;
        result.best_params.assign_values(model.params());
        result.best_dev = std::move(dev);
      }
    }
    if (on_log) on_log(rec);
    result.log.push_back(std::move(rec));
  }
  return result;
}

#define EMX_INSTANTIATE_TRAIN(T)                                                                             \
  template class AdamW<T>;                                                                                   \
  template std::vector<Prediction> predict<T>(Model<T>&, std::span<const Example>, bool);                    \
  template EvalReport evaluate<T>(Model<T>&, std::span<const Example>, const StrategySet&, bool);            \
  template double batch_loss_and_grad<T>(Model<T>&, std::span<const Example* const>, std::span<const double>, \
                                         bool);                                                              \
  template TrainResult<T> train<T>(Model<T>&, std::span<const Example>, std::span<const Example>,            \
                                   std::span<const double>, const StrategySet&, const TrainConfig&,          \
                                   const std::function<void(const LogRecord&)>&);

EMX_INSTANTIATE_TRAIN(float)
EMX_INSTANTIATE_TRAIN(double)

}  // namespace emx
