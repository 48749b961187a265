// Copyright 2026 The EmoDynamiX Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cstring>
#include <fstream>
#include <limits>
#include <random>

#include "emodynamix/checkpoint.hpp"
#include "emodynamix/error.hpp"
#include "test_util.hpp"

using namespace emx;

namespace {

ParameterSet<double> sample_params() {
  ParameterSet<double> ps;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0, 1);
  Tensor<double> m(Shape{3, 4});
  for (double& x : m.data()) x = n(rng);
  ps.add("matrix", m);
  ps.add("vector", Tensor<double>::vector({-0.0, 1e-310, std::numeric_limits<double>::max(), 0.1}));
  ps.add("scalar", Tensor<double>::scalar(-2.5));
  return ps;
}

}  // namespace

TEST_CASE("checkpoint round-trip is bit-exact") {
  auto dir = testing::scratch_dir("ckpt");
  auto ps = sample_params();
  write_checkpoint(dir / "a.emx", to_checkpoint(ps, R"({"note":"x"})"));
  const CheckpointFile back = read_checkpoint(dir / "a.emx");
  CHECK(back.dtype == DType::f64);
  CHECK(back.metadata == R"({"note":"x"})");
  CHECK(back.manifest() == std::vector<std::string>{"matrix", "vector", "scalar"});

  ParameterSet<double> target = sample_params();
  for (auto& p : target) p.value.fill(7.0);
  load_into(back, target);
  for (const auto& p : ps) {
    const auto& q = target[p.name];
    REQUIRE(q.value.shape() == p.value.shape());
    CHECK(std::memcmp(q.value.data().data(), p.value.data().data(), p.value.size() * sizeof(double)) == 0);
  }
}

TEST_CASE("checkpoint bytes are little-endian with the documented header") {
  auto dir = testing::scratch_dir("ckpt_bytes");
  ParameterSet<float> ps;
  ps.add("w", Tensor<float>::vector({1.0f}));
  write_checkpoint(dir / "b.emx", to_checkpoint(ps, "{}"));
  std::ifstream in(dir / "b.emx", std::ios::binary);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  REQUIRE(bytes.size() > 12);
  CHECK(std::string(bytes.begin(), bytes.begin() + 8) == "EMXCKPT1");
  CHECK(bytes[8] == 1);  // f32
  CHECK(bytes[9] == 0);
  // 1.0f = 0x3F800000, stored last.
  const std::size_t n = bytes.size();
  CHECK(bytes[n - 4] == 0x00);
  CHECK(bytes[n - 3] == 0x00);
  CHECK(bytes[n - 2] == 0x80);
  CHECK(bytes[n - 1] == 0x3F);
}

TEST_CASE("loading converts between dtypes") {
  auto dir = testing::scratch_dir("ckpt_conv");
  ParameterSet<double> ps;
  ps.add("w", Tensor<double>::vector({0.5, -1.25}));
  write_checkpoint(dir / "c.emx", to_checkpoint(ps, "{}"));
  ParameterSet<float> pf;
  pf.add("w", Tensor<float>(Shape{2}));
  load_into(read_checkpoint(dir / "c.emx"), pf);
  CHECK(pf["w"].value[0] == 0.5f);
  CHECK(pf["w"].value[1] == -1.25f);
}

TEST_CASE("checkpoint errors") {
  auto dir = testing::scratch_dir("ckpt_err");
  CHECK_THROWS_AS(read_checkpoint(dir / "missing.emx"), LookupError);
  {
    std::ofstream(dir / "junk.emx") << "not a checkpoint";
  }
  CHECK_THROWS_AS(read_checkpoint(dir / "junk.emx"), ParseError);

  auto ps = sample_params();
  write_checkpoint(dir / "ok.emx", to_checkpoint(ps, "{}"));
  // Truncate.
  std::filesystem::resize_file(dir / "ok.emx", std::filesystem::file_size(dir / "ok.emx") - 3);
  CHECK_THROWS_AS(read_checkpoint(dir / "ok.emx"), ParseError);

  write_checkpoint(dir / "ok.emx", to_checkpoint(ps, "{}"));
  ParameterSet<double> wrong;
  wrong.add("matrix", Tensor<double>(Shape{4, 3}));
  CHECK_THROWS_AS(load_into(read_checkpoint(dir / "ok.emx"), wrong), ShapeError);
  ParameterSet<double> extra;
  extra.add("absent", Tensor<double>(Shape{1}));
  CHECK_THROWS_AS(load_into(read_checkpoint(dir / "ok.emx"), extra), LookupError);
  CHECK_THROWS_AS(parse_dtype("f16"), ConfigError);
  CHECK(parse_dtype("f32") == DType::f32);
}
