// Copyright 2026 The EmoDynamiX Authors
// SPDX-License-Identifier: Apache-2.0

#include "emodynamix/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

namespace emx {

namespace {
constexpr int kMaxStepTries = 6;
}  // namespace

template <typename T>
GradCheckResult grad_check(const std::function<Var<T>(Tape<T>&)>& f, ParameterSet<T>& params, T eps,
                           std::size_t coords_per_param, std::uint64_t seed, Stencil stencil) {
  struct Probe {
    double value;
    std::vector<std::size_t> branches;
  };
  auto evaluate = [&]() {
    Tape<T> tape;
    tape.record_branches(true);
    const double v = static_cast<double>(f(tape).value()[0]);
    return Probe{v, tape.branches()};
  };

  params.zero_grad();
  {
    Tape<T> tape;
    tape.backward(f(tape));
  }
  const std::vector<std::size_t> base = evaluate().branches;

  std::mt19937_64 rng(seed);
  GradCheckResult result;
  for (auto& p : params) {
    std::vector<std::size_t> coords(p.value.size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (coords_per_param && coords.size() > coords_per_param) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(coords_per_param);
    }
    for (std::size_t i : coords) {
      const T original = p.value[i];
      // A probe that crosses a kink measures a blend of two slopes; shrink
      // the step until both probes stay on the base point's smooth piece.
      T h = eps;
      double numeric = 0.0;
      for (int attempt = 0; attempt < kMaxStepTries; ++attempt, h /= T(4)) {
        auto at = [&](T offset) {
          p.value[i] = original + offset;
          Probe r = evaluate();
          p.value[i] = original;
          return r;
        };
        bool smooth = true;
        auto probe = [&](T offset) {
          Probe r = at(offset);
          smooth = smooth && r.branches == base;
          return r.value;
        };
        const double hd = static_cast<double>(h);
        if (stencil == Stencil::two_point) {
          numeric = (probe(h) - probe(-h)) / (2.0 * hd);
        } else {
          const double p1 = probe(h), m1 = probe(-h), p2 = probe(2 * h), m2 = probe(-2 * h);
          numeric = (8.0 * (p1 - m1) - (p2 - m2)) / (12.0 * hd);
        }
        if (smooth) break;
        if (attempt + 1 == kMaxStepTries) ++result.kinked;
        else ++result.shrunk;
      }

      const double analytic = static_cast<double>(p.grad[i]);
      const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
      const double rel = std::abs(analytic - numeric) / denom;
      ++result.coordinates;
      if (rel > result.max_rel_error || result.coordinates == 1) {
        result.max_rel_error = rel;
        result.worst_param = p.name;
        result.worst_index = i;
        result.worst_analytic = analytic;
        result.worst_numeric = numeric;
      }
    }
  }
  return result;
}

template GradCheckResult grad_check<double>(const std::function<Var<double>(Tape<double>&)>&, ParameterSet<double>&,
                                            double, std::size_t, std::uint64_t, Stencil);
template GradCheckResult grad_check<float>(const std::function<Var<float>(Tape<float>&)>&, ParameterSet<float>&,
                                           float, std::size_t, std::uint64_t, Stencil);

}  // namespace emx
