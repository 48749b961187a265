// Copyright 2026 The EmoDynamiX Authors
// SPDX-License-Identifier: Apache-2.0

// Runs every acceptance criterion of the predictor and prints one PASS/FAIL
// line each. Exit status is the number of failures (capped at 1).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <random>
#include <sstream>
#include <string>

#include "emodynamix/checkpoint.hpp"
#include "emodynamix/grad_check.hpp"
#include "emodynamix/metrics.hpp"
#include "emodynamix/serialize.hpp"
#include "emodynamix/synthetic.hpp"
#include "emodynamix/trace.hpp"
#include "emodynamix/train.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace emx;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(const std::string& name, const std::function<Outcome()>& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = fn();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("%s  %-32s %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), secs);
  std::fflush(stdout);
  failures += !o.pass;
}

std::string sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

struct Splits {
  StrategySet strategies = testing::tiny_strategies(2);
  std::vector<Example> train, dev, test;
};

Splits synthetic_splits(const SyntheticConfig& sc, bool scrambled, const GraphOptions& opts) {
  SyntheticData data = make_synthetic(sc);
  auto features = scrambled ? scramble_emotions(data.features, sc.seed + 1) : data.features;
  const MemoryFeatureProvider provider(std::move(features), sc.d_ctx);
  const auto parts = split_dialogues(data.dialogues, {8, 1, 1}, sc.seed);
  Splits out{data.strategies, {}, {}, {}};
  out.train = build_examples(window_samples(parts.train), provider, data.strategies, opts);
  out.dev = build_examples(window_samples(parts.dev), provider, data.strategies, opts);
  out.test = build_examples(window_samples(parts.test), provider, data.strategies, opts);
  return out;
}

ModelConfig desk_config(std::size_t n_strategies, std::size_t d_ctx) {
  ModelConfig c;
  c.hidden = 32;
  c.heads = 4;
  c.layers = 2;
  c.mlp_hidden = 32;
  c.context_dim = d_ctx;
  c.n_strategies = n_strategies;
  return c;
}

TrainConfig desk_train(std::size_t steps, std::uint64_t seed) {
  TrainConfig t;
  t.lr = 3e-3;
  t.warmup_steps = 50;
  t.total_steps = steps;
  t.batch_size = 16;
  t.weight_decay = 0.0;
  t.eval_every = 100;
  t.seed = seed;
  return t;
}

SyntheticConfig separable_corpus() {
  SyntheticConfig sc;
  sc.dialogues = 160;
  sc.peak = 4.0;
  sc.noise = 0.5;  // keeps the planted emotion the argmax
  sc.d_ctx = 16;
  sc.seed = 2026;
  return sc;
}

double test_macro_f1(const Ablations& ablations, bool scrambled, std::size_t steps, Model<double>* keep = nullptr,
                     Splits* splits_out = nullptr) {
  const SyntheticConfig sc = separable_corpus();
  ModelConfig mc = desk_config(sc.n_strategies, sc.d_ctx);
  mc.ablations = ablations;
  Splits s = synthetic_splits(sc, scrambled, mc.graph_options());
  Model<double> model(mc, 7);
  const auto weights = class_weights([&] {
    std::vector<WindowSample> v;
    for (const auto& e : s.train) v.push_back(e.sample);
    return v;
  }(), s.strategies);
  const auto r = train(model, std::span<const Example>(s.train), std::span<const Example>(s.dev), weights, s.strategies,
                       desk_train(steps, 11));
  model.params().assign_values(r.best_params);
  const double f1 = evaluate(model, std::span<const Example>(s.test), s.strategies).macro_f1;
  if (keep) *keep = model;
  if (splits_out) *splits_out = std::move(s);
  return f1;
}

std::string file_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

int main() {
  std::cout << "acceptance criteria (f64, single-threaded)\n";

  report("gradient-correctness", [] {
    std::mt19937_64 rng(1);
    const auto s = testing::tiny_strategies(3);
    double worst = 0;
    std::string where;
    for (int trial = 0; trial < 20; ++trial) {
      ModelConfig c = testing::small_config(3, 4);
      Model<double> m(c, 100 + trial);
      m.params()["log_tau"].value[0] = std::log(0.5) + 0.3 * (trial % 5 - 2);
      // 2 to 4 turns plus the dummy node.
      const auto e = testing::random_example(rng, 2 + trial % 3, s, 4);
      const std::vector<double> w = {1.0, 0.8, 1.3};
      auto f = [&](Tape<double>& tape) {
        return Model<double>::loss(m.forward(tape, e.graph, e.bundle.context).logits, e.target, w);
      };
      const auto r = grad_check<double>(f, m.params(), 3e-3, 0, trial, Stencil::four_point);
      if (r.max_rel_error > worst) {
        worst = r.max_rel_error;
        where = r.worst_param;
      }
    }
    return Outcome{worst < 1e-4, "max rel error " + sci(worst) + " (" + where + ") < 1e-4"};
  });

  report("rgat-hand-oracle", [] {
    ModelConfig c = testing::small_config(2, 1);
    c.hidden = 2;
    c.heads = 1;
    c.layers = 1;
    Model<double> m(c, 0);
    const std::size_t qap = *find_relation("Question-Answer Pair");
    const std::vector<std::pair<std::string, std::vector<double>>> hand = {
        {Model<double>::rgat_name(0, qap, "query"), {0.7, -0.1}},
        {Model<double>::rgat_name(0, qap, "key"), {-0.3, 0.45}},
        {Model<double>::rgat_name(0, qap, "value"), {0.5, 1.5, -0.75, 0.2}},
        {Model<double>::rgat_name(0, kSelfReference, "query"), {0.25, 0.35}},
        {Model<double>::rgat_name(0, kSelfReference, "key"), {-0.8, 0.6}},
        {Model<double>::rgat_name(0, kSelfReference, "value"), {1.1, -0.4, 0.3, 0.9}},
        {Model<double>::rgat_name(0, kInterReference, "query"), {-0.5, 0.15}},
        {Model<double>::rgat_name(0, kInterReference, "key"), {0.4, -0.2}},
        {Model<double>::rgat_name(0, kInterReference, "value"), {-0.6, 0.8, 1.2, 0.05}},
    };
    for (const auto& [name, v] : hand) std::copy(v.begin(), v.end(), m.params()[name].value.data().begin());
    HeteroGraph g;
    g.n_strategies = 2;
    g.nodes = {{NodeKind::emotion, std::vector<double>(7, 0.0)}, {NodeKind::strategy, {0, 1}}, {NodeKind::dummy, {}}};
    g.edges = {{0, 1, qap}, {0, 2, kInterReference}, {1, 2, kSelfReference}};
    canonicalize(g);
    const oracle::Mat x = {{1.2, -0.7}, {0.3, 0.9}, {-0.5, 0.25}};
    Tape<double> tape;
    std::vector<Var<double>> in;
    for (const auto& row : x) in.push_back(tape.constant(Tensor<double>::vector(row)));
    const auto out = m.rgat_forward(tape, g, in, 0);
    const auto want = oracle::rgat_layer(m, g, x, 0);
    double err = 0;
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t c2 = 0; c2 < 2; ++c2) err = std::max(err, std::abs(out[i].value()[c2] - want[i][c2]));
    return Outcome{err <= 1e-12, "max abs diff " + sci(err) + " <= 1e-12"};
  });

  report("residual-identity", [] {
    std::mt19937_64 rng(2);
    const auto s = testing::tiny_strategies(4);
    Model<double> m(desk_config(4, 4), 3);
    for (auto& p : m.params())
      if (p.name.ends_with(".value")) p.value.fill(0.0);
    std::size_t mismatches = 0, layers = 0;
    for (int trial = 0; trial < 50; ++trial) {
      const auto e = testing::random_example(rng, 1 + rng() % 8, s, 4);
      Tape<double> tape;
      std::vector<Var<double>> nodes;
      for (const auto& n : e.graph.nodes) nodes.push_back(m.node_init(tape, n));
      for (std::size_t l = 0; l < m.config().layers; ++l, ++layers) {
        const auto next = m.rgat_forward(tape, e.graph, nodes, l);
        for (std::size_t i = 0; i < nodes.size(); ++i) mismatches += !(next[i].value() == nodes[i].value());
        nodes = next;
      }
    }
    return Outcome{mismatches == 0, std::to_string(layers) + " layers, " + std::to_string(mismatches) +
                                        " non-identical node outputs"};
  });

  report("attention-normalization", [] {
    std::mt19937_64 rng(3);
    const auto s = testing::tiny_strategies(3);
    Model<double> m(desk_config(3, 4), 4);
    double worst = 0;
    for (int trial = 0; trial < 1000; ++trial) {
      const auto e = testing::random_example(rng, 1 + rng() % 8, s, 4, {static_cast<bool>(rng() % 2), false});
      Tape<double> tape;
      const auto out = m.forward(tape, e.graph, e.bundle.context);
      for (const auto& layer : out.trace.layers) {
        std::vector<std::vector<double>> sums(e.graph.size(), std::vector<double>(m.config().heads, 0.0));
        std::vector<bool> has(e.graph.size(), false);
        for (const auto& ea : layer) {
          has[ea.dst] = true;
          for (std::size_t k = 0; k < ea.alpha.size(); ++k) sums[ea.dst][k] += ea.alpha[k];
        }
        for (std::size_t i = 0; i < sums.size(); ++i)
          if (has[i])
            for (double v : sums[i]) worst = std::max(worst, std::abs(v - 1.0));
      }
    }
    return Outcome{worst <= 1e-9, "1000 graphs, max |sum - 1| " + sci(worst) + " <= 1e-9"};
  });

  report("mixed-emotion-limits", [] {
    Model<double> m(desk_config(3, 4), 5);
    const auto E = oracle::to_mat(m.params()["emotion_codebook"].value);
    m.params()["log_tau"].value[0] = -6.0;
    double worst_rel = 0;
    for (std::size_t k = 0; k < kNumEmotions; ++k) {
      std::vector<double> z(kNumEmotions, 0.0);
      z[k] = 10.0;
      Tape<double> tape;
      const auto v = m.emotion_embed(tape, z).value();
      for (std::size_t c = 0; c < v.size(); ++c)
        worst_rel = std::max(worst_rel, std::abs(v[c] - E[k][c]) / std::abs(E[k][c]));
    }
    double worst_mean = 0;
    for (double lt : {-6.0, -1.0, 0.0, 1.5}) {
      m.params()["log_tau"].value[0] = lt;
      Tape<double> tape;
      const auto v = m.emotion_embed(tape, std::vector<double>(kNumEmotions, -2.5)).value();
      for (std::size_t c = 0; c < v.size(); ++c) {
        double mean = 0;
        for (std::size_t k = 0; k < kNumEmotions; ++k) mean += E[k][c];
        mean /= kNumEmotions;
        worst_mean = std::max(worst_mean, std::abs(v[c] - mean));
      }
    }
    // "Exact" for the uniform case is read as agreement to rounding.
    const bool ok = worst_rel <= 1e-3 && worst_mean <= 1e-15;
    return Outcome{ok, "argmax rel " + sci(worst_rel) + " <= 1e-3, column-mean abs " + sci(worst_mean)};
  });

  report("preference-bias-oracle", [] {
    std::mt19937_64 rng(6);
    double worst = 0;
    for (int trial = 0; trial < 10; ++trial) {
      const std::size_t n = 2 + rng() % 7;
      std::vector<std::vector<std::uint64_t>> w(n, std::vector<std::uint64_t>(n));
      std::vector<std::uint64_t> flat;
      for (auto& row : w)
        for (auto& x : row) x = rng() % 4 == 0 ? 0 : rng() % 40;
      for (std::size_t j = 0; j < n; ++j) w[j][j] += 1;
      for (const auto& row : w) flat.insert(flat.end(), row.begin(), row.end());
      const auto got = preference_bias(ConfusionMatrix(n, flat));
      const auto p = oracle::preference_iteration(w);
      for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(got.preferences[i] - p[i]) / std::max(1.0, p[i]));
      worst = std::max(worst, std::abs(got.bias - oracle::population_std(p)));

      std::vector<std::uint64_t> scaled = flat;
      for (auto& x : scaled) x *= 13;
      const auto sc = preference_bias(ConfusionMatrix(n, scaled));
      if (std::abs(sc.bias - got.bias) > 1e-12) return Outcome{false, "scaling changed B by " + sci(sc.bias - got.bias)};
    }
    double diag_b = 0;
    for (std::size_t n : {2, 5, 8}) {
      std::vector<std::uint64_t> d(n * n, 0);
      for (std::size_t i = 0; i < n; ++i) d[i * n + i] = 1 + 17 * i;
      diag_b = std::max(diag_b, preference_bias(ConfusionMatrix(n, d)).bias);
    }
    const bool ok = worst <= 1e-9 && diag_b <= 1e-12;
    return Outcome{ok, "oracle diff " + sci(worst) + " <= 1e-9, diagonal B " + sci(diag_b) + ", scaling ok"};
  });

  report("f1-oracle", [] {
    std::mt19937_64 rng(7);
    double worst = 0;
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t n = 20 + rng() % 300;
      std::vector<std::size_t> pred(n), truth(n);
      for (std::size_t i = 0; i < n; ++i) {
        truth[i] = rng() % 8;
        pred[i] = rng() % 2 ? truth[i] : rng() % 8;
      }
      const auto got = f1_scores(ConfusionMatrix::from_predictions(pred, truth, 8));
      const auto want = oracle::f1_from_labels(pred, truth, 8);
      worst = std::max({worst, std::abs(got.macro - want.macro), std::abs(got.weighted - want.weighted)});
    }
    return Outcome{worst <= 1e-9, "100 sets, max diff " + sci(worst) + " <= 1e-9"};
  });

  report("overfit-sanity", [] {
    SyntheticConfig sc;
    sc.dialogues = 10;
    sc.seed = 5;
    const auto data = make_synthetic(sc);
    const FallbackFeatureProvider provider(64);
    auto samples = window_samples(data.dialogues);
    if (samples.size() < 32) return Outcome{false, "corpus too small"};
    samples.resize(32);
    const auto ex = build_examples(samples, provider, data.strategies, {});
    Model<double> m(desk_config(data.strategies.size(), 64), 1);
    TrainConfig tc = desk_train(400, 3);
    tc.lr = 1e-2;
    tc.warmup_steps = 20;
    const std::vector<double> w(data.strategies.size(), 1.0);
    train(m, std::span<const Example>(ex), std::span<const Example>(ex), w, data.strategies, tc);
    const double acc = evaluate(m, std::span<const Example>(ex), data.strategies).accuracy;
    return Outcome{acc >= 0.99, "32 samples, 400 steps, train accuracy " + sci(acc) + " >= 0.99"};
  });

  Model<double> trained(desk_config(3, 16), 0);
  Splits trained_splits;
  report("synthetic-separability", [&] {
    const double full = test_macro_f1({}, false, 1000, &trained, &trained_splits);
    Ablations hard;
    hard.no_mixed_emotion = true;
    const double scrambled = test_macro_f1(hard, true, 1000);
    Ablations ng;
    ng.no_graph = true;
    const double no_graph = test_macro_f1(ng, false, 1000);
    const bool ok = full >= 0.95 && full - scrambled >= 0.15 && full - no_graph >= 0.15;
    return Outcome{ok, "full " + sci(full) + " >= 0.95; scrambled no_mixed_emotion " + sci(scrambled) +
                           ", no_graph " + sci(no_graph) + " (gap >= 0.15)"};
  });

  report("determinism", [] {
    const auto dir = testing::scratch_dir("acceptance_determinism");
    SyntheticConfig sc = separable_corpus();
    sc.dialogues = 30;
    const ModelConfig mc = desk_config(sc.n_strategies, sc.d_ctx);
    const Splits s = synthetic_splits(sc, false, mc.graph_options());
    std::vector<std::vector<LogRecord>> logs;
    for (int run = 0; run < 2; ++run) {
      Model<double> m(mc, 42);
      const std::vector<double> w(sc.n_strategies, 1.0);
      auto r = train(m, std::span<const Example>(s.train), std::span<const Example>(s.dev), w, s.strategies,
                     desk_train(150, 42));
      logs.push_back(r.log);
      save_model(dir / ("run" + std::to_string(run) + ".emx"), m, s.strategies);
    }
    const bool same_log = logs[0] == logs[1];
    const bool same_ckpt = file_bytes(dir / "run0.emx") == file_bytes(dir / "run1.emx");
    return Outcome{same_log && same_ckpt, std::string("logs ") + (same_log ? "identical" : "differ") +
                                              ", checkpoints " + (same_ckpt ? "bitwise identical" : "differ")};
  });

  report("trace-contract", [&] {
    if (trained_splits.test.empty()) return Outcome{false, "no trained model from the separability run"};
    double worst = 0;
    std::vector<DecisionTrace> traces;
    double inter = 0, self = 0;
    for (const auto& e : trained_splits.test) {
      traces.push_back(trace_sample(trained, e));
      for (const auto& layer : traces.back().layers) {
        double sum = 0;
        for (const auto& te : layer) sum += te.alpha;
        worst = std::max(worst, std::abs(sum - 1.0));
      }
      for (const auto& te : traces.back().layers.back()) (te.kind == kInterReference ? inter : self) += te.alpha;
    }
    std::size_t mismatches = 0, counted = 0;
    for (const auto& t : traces) mismatches += !t.correct();
    for (const auto& p : disagreement_report(traces, 0)) counted += p.count;

    // Hand-built fixture: 5 mismatches over 3 patterns.
    auto mk = [](std::size_t t, std::size_t p) {
      DecisionTrace d;
      d.target = t;
      d.predicted = p;
      d.dominant_emotion = kNeutralEmotion;
      return d;
    };
    const std::vector<DecisionTrace> fixture = {mk(0, 1), mk(0, 1), mk(1, 2), mk(2, 2), mk(2, 0), mk(0, 1), mk(1, 1)};
    std::size_t fixture_counted = 0;
    const auto pats = disagreement_report(fixture, 0);
    for (const auto& p : pats) fixture_counted += p.count;
    const bool ok = worst <= 1e-9 && counted == mismatches && fixture_counted == 5 && pats.size() == 3 &&
                    pats[0].count == 3;
    std::cout << "INFO  final-layer dummy attention mass on test: inter_reference " << sci(inter) << ", self_reference "
              << sci(self) << "\n";
    return Outcome{ok, "max |sum - 1| " + sci(worst) + "; report counts " + std::to_string(counted) + "/" +
                           std::to_string(mismatches) + " mismatches; fixture " + std::to_string(fixture_counted) +
                           "/5"};
  });

  std::cout << (failures ? std::to_string(failures) + " criteria failed\n" : "all criteria passed\n");
  return failures ? 1 : 0;
}
