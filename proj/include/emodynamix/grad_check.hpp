// Copyright 2026 The EmoDynamiX Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>

#include "emodynamix/tape.hpp"

namespace emx {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t coordinates = 0;
  // Coordinate that produced max_rel_error.
  std::string worst_param;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  // Probes retried with a smaller step because they crossed a non-smooth
  // point, and coordinates where no tried step avoided one.
  std::size_t shrunk = 0;
  std::size_t kinked = 0;
};

// Compares tape gradients of the scalar built by `f` against central
// differences (f(x+eps) - f(x-eps)) / (2 eps). At most `coords_per_param`
// randomly chosen coordinates of each parameter are probed (0 = all).
// Relative error is |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
// When a probe lands on the other side of a LeakyReLU or max switch point
// than the unperturbed input, the step is divided by 4 and retried, up to
// 5 times.
//
// Stencil::four_point uses (-f(x+2e) + 8 f(x+e) - 8 f(x-e) + f(x-2e)) / (12 e),
// whose O(e^4) truncation allows a larger step and so less rounding noise.
enum class Stencil { two_point, four_point };

template <typename T>
GradCheckResult grad_check(const std::function<Var<T>(Tape<T>&)>& f, ParameterSet<T>& params,
                           T eps = T(1e-5), std::size_t coords_per_param = 0, std::uint64_t seed = 0,
                           Stencil stencil = Stencil::two_point);

extern template GradCheckResult grad_check<double>(const std::function<Var<double>(Tape<double>&)>&,
                                                   ParameterSet<double>&, double, std::size_t, std::uint64_t, Stencil);
extern template GradCheckResult grad_check<float>(const std::function<Var<float>(Tape<float>&)>&,
                                                  ParameterSet<float>&, float, std::size_t, std::uint64_t, Stencil);

}  // namespace emx
