// Copyright 2026 The EmoDynamiX Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <limits>
#include <random>

#include "emodynamix/error.hpp"
#include "emodynamix/serialize.hpp"
#include "emodynamix/synthetic.hpp"
#include "emodynamix/train.hpp"
#include "test_util.hpp"

using namespace emx;

namespace {

struct Fixture {
  StrategySet strategies = testing::tiny_strategies(3);
  std::vector<Example> train, dev;
};

Fixture random_fixture(std::size_t n_train, std::size_t n_dev, std::size_t d_ctx, std::uint64_t seed) {
  Fixture f;
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < n_train; ++i)
    f.train.push_back(testing::random_example(rng, 1 + rng() % 4, f.strategies, d_ctx, {}, "t" + std::to_string(i)));
  for (std::size_t i = 0; i < n_dev; ++i)
    f.dev.push_back(testing::random_example(rng, 1 + rng() % 4, f.strategies, d_ctx, {}, "v" + std::to_string(i)));
  return f;
}

bool bitwise_equal(const ParameterSet<double>& a, const ParameterSet<double>& b) {
  if (a.size() != b.size()) return false;
  auto ib = b.begin();
  for (const auto& p : a) {
    const auto& q = *ib++;
    if (p.name != q.name || p.value.size() != q.value.size()) return false;
    if (std::memcmp(p.value.data().data(), q.value.data().data(), p.value.size() * sizeof(double)) != 0) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("train config validation") {
  TrainConfig c;
  CHECK_NOTHROW(c.validate());
  c.warmup_steps = c.total_steps + 1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.lr = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.batch_size = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK(parse_select_metric("weighted_f1") == SelectMetric::weighted_f1);
  CHECK_THROWS_AS(parse_select_metric("accuracy"), ConfigError);
}

TEST_CASE("learning-rate schedule") {
  TrainConfig c;
  c.lr = 2.0;
  c.warmup_steps = 4;
  c.total_steps = 12;
  CHECK(lr_at(c, 1) == doctest::Approx(0.5));
  CHECK(lr_at(c, 4) == doctest::Approx(2.0));
  CHECK(lr_at(c, 8) == doctest::Approx(1.0));
  CHECK(lr_at(c, 12) == 0.0);
  CHECK(lr_at(c, 20) == 0.0);
  for (std::size_t s = 1; s < 4; ++s) CHECK(lr_at(c, s) < lr_at(c, s + 1));
  for (std::size_t s = 4; s < 12; ++s) CHECK(lr_at(c, s) > lr_at(c, s + 1));
  c.warmup_steps = 0;
  CHECK(lr_at(c, 1) == doctest::Approx(2.0 * 11 / 12));
}

TEST_CASE("adamw single step closed form") {
  ParameterSet<double> ps;
  ps.add("w", Tensor<double>::vector({1.0, -2.0, 0.5, 3.0}));
  ps["w"].grad = Tensor<double>::vector({0.4, -3.0, 0.0, 1e-3});
  AdamW<double> opt(ps);
  const double lr = 0.01, wd = 0.1;
  opt.step(ps, lr, wd);
  // After one step m_hat = g and v_hat = g^2.
  const std::vector<double> w0 = {1.0, -2.0, 0.5, 3.0}, g = {0.4, -3.0, 0.0, 1e-3};
  for (std::size_t i = 0; i < 4; ++i) {
    const double want = w0[i] * (1 - lr * wd) - lr * g[i] / (std::abs(g[i]) + 1e-8);
    CHECK(ps["w"].value[i] == doctest::Approx(want).epsilon(1e-14));
  }
  CHECK(opt.state().t == 1);
  CHECK(opt.state().m[0][1] == doctest::Approx(0.1 * -3.0));
  CHECK(opt.state().v[0][1] == doctest::Approx(0.001 * 9.0));
}

TEST_CASE("adamw rejects non-finite gradients") {
  ParameterSet<double> ps;
  ps.add("bad", Tensor<double>::vector({1.0}));
  ps["bad"].grad[0] = std::numeric_limits<double>::quiet_NaN();
  AdamW<double> opt(ps);
  try {
    opt.step(ps, 0.1, 0.0);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("bad") != std::string::npos);
  }
}

TEST_CASE("zero gradients only apply decay") {
  ParameterSet<double> ps;
  ps.add("w", Tensor<double>::vector({2.0, -4.0}));
  AdamW<double> opt(ps);
  opt.step(ps, 0.5, 0.1);
  CHECK(ps["w"].value[0] == doctest::Approx(2.0 * 0.95));
  CHECK(ps["w"].value[1] == doctest::Approx(-4.0 * 0.95));
  opt.step(ps, 0.5, 0.0);
  CHECK(ps["w"].value[0] == doctest::Approx(2.0 * 0.95));
}

TEST_CASE("batch gradient is the mean of per-sample gradients") {
  auto f = random_fixture(3, 1, 4, 7);
  Model<double> m(testing::small_config(3, 4), 3);
  const std::vector<double> w = {1.0, 1.0, 1.0};
  std::vector<const Example*> batch = {&f.train[0], &f.train[1], &f.train[2]};
  m.params().zero_grad();
  const double loss = batch_loss_and_grad(m, std::span<const Example* const>(batch), w);
  const auto g_batch = m.params()["head.out.weight"].grad;

  Tensor<double> g_sum(g_batch.shape());
  double loss_sum = 0;
  for (const Example* e : batch) {
    m.params().zero_grad();
    std::vector<const Example*> one = {e};
    loss_sum += batch_loss_and_grad(m, std::span<const Example* const>(one), w);
    const auto& g = m.params()["head.out.weight"].grad;
    for (std::size_t i = 0; i < g.size(); ++i) g_sum[i] += g[i];
  }
  CHECK(loss == doctest::Approx(loss_sum / 3).epsilon(1e-12));
  for (std::size_t i = 0; i < g_sum.size(); ++i) CHECK(g_batch[i] == doctest::Approx(g_sum[i] / 3).epsilon(1e-12));
}

TEST_CASE("training is deterministic for a seed") {
  auto f = random_fixture(20, 6, 4, 9);
  TrainConfig tc;
  tc.lr = 1e-2;
  tc.warmup_steps = 5;
  tc.total_steps = 40;
  tc.batch_size = 4;
  tc.eval_every = 10;
  tc.seed = 77;
  const std::vector<double> w = {1.0, 1.2, 0.8};
  Model<double> a(testing::small_config(3, 4), 5), b(testing::small_config(3, 4), 5);
  const auto ra = train(a, std::span<const Example>(f.train), std::span<const Example>(f.dev), w, f.strategies, tc);
  const auto rb = train(b, std::span<const Example>(f.train), std::span<const Example>(f.dev), w, f.strategies, tc);
  CHECK(ra.log == rb.log);
  CHECK(bitwise_equal(a.params(), b.params()));
  CHECK(bitwise_equal(ra.best_params, rb.best_params));
  CHECK(ra.log.size() == 40);
  std::size_t evals = 0;
  for (const auto& r : ra.log) evals += r.dev_macro_f1.has_value();
  CHECK(evals == 4);
  CHECK(ra.log.back().dev_macro_f1.has_value());

  tc.seed = 78;
  Model<double> c(testing::small_config(3, 4), 5);
  const auto rc = train(c, std::span<const Example>(f.train), std::span<const Example>(f.dev), w, f.strategies, tc);
  CHECK_FALSE(rc.log == ra.log);
}

TEST_CASE("training reduces loss and can memorise a small set") {
  SyntheticConfig sc;
  sc.dialogues = 8;
  sc.seed = 4;
  sc.d_ctx = 16;
  const auto data = make_synthetic(sc);
  const FallbackFeatureProvider provider(16);
  auto samples = window_samples(data.dialogues);
  samples.resize(std::min<std::size_t>(samples.size(), 24));
  const auto ex = build_examples(samples, provider, data.strategies, {});

  ModelConfig mc = testing::small_config(data.strategies.size(), 16);
  mc.hidden = 16;
  mc.mlp_hidden = 32;
  Model<double> m(mc, 1);
  TrainConfig tc;
  tc.lr = 1e-2;
  tc.warmup_steps = 10;
  tc.total_steps = 300;
  tc.batch_size = 8;
  tc.weight_decay = 0;
  tc.eval_every = 100;
  const std::vector<double> w(data.strategies.size(), 1.0);
  const auto r = train(m, std::span<const Example>(ex), std::span<const Example>(ex), w, data.strategies, tc);
  CHECK(r.log.back().loss < r.log.front().loss);
  m.params().assign_values(r.best_params);
  const auto report = evaluate(m, std::span<const Example>(ex), data.strategies);
  CHECK(report.accuracy >= 0.99);
}

TEST_CASE("saved checkpoints reproduce evaluation") {
  auto f = random_fixture(10, 10, 4, 12);
  Model<double> m(testing::small_config(3, 4), 21);
  const auto dir = testing::scratch_dir("train_ckpt");
  TrainConfig tc;
  tc.total_steps = 5;
  tc.warmup_steps = 1;
  save_model(dir / "m.emx", m, f.strategies, tc);
  const auto loaded = load_model<double>(dir / "m.emx");
  CHECK(loaded.model.config() == m.config());
  CHECK(loaded.strategies == f.strategies);
  CHECK(loaded.metadata.at("train").at("total_steps") == 5);
  auto copy = loaded.model;
  const auto a = evaluate(m, std::span<const Example>(f.dev), f.strategies);
  const auto b = evaluate(copy, std::span<const Example>(f.dev), f.strategies);
  CHECK(a.confusion == b.confusion);
  CHECK(a.macro_f1 == b.macro_f1);
  CHECK(a.bias == b.bias);

  const auto lf = load_model<float>(dir / "m.emx");
  CHECK(lf.model.params()["emotion_codebook"].value[0] ==
        static_cast<float>(m.params()["emotion_codebook"].value[0]));
}

TEST_CASE("train rejects empty splits") {
  auto f = random_fixture(2, 0, 4, 1);
  Model<double> m(testing::small_config(3, 4), 1);
  const std::vector<double> w(3, 1.0);
  CHECK_THROWS_AS(train(m, std::span<const Example>(f.train), std::span<const Example>(f.dev), w, f.strategies, {}),
                  ValidationError);
  CHECK_THROWS_AS(train(m, std::span<const Example>(f.dev), std::span<const Example>(f.train), w, f.strategies, {}),
                  ValidationError);
}
