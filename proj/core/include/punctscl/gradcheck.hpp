/*
 * Copyright 2026 The punctscl Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <functional>
#include <span>
#include <vector>

#include "punctscl/autograd.hpp"

namespace punctscl {

/// Scalar function of one or more tensors, expressed on a tape.
using TapeFunction = std::function<Var(Tape& tape, std::span<const Var> inputs)>;

struct GradientCheckResult {
  double max_relative_error = 0.0;
  double max_absolute_error = 0.0;
  /// Spacing of doubles at |f(x)| divided by 2 * step: the smallest nonzero
  /// difference quotient the central difference can resolve.
  double resolution = 0.0;
  std::size_t coordinates = 0;
};

/// Compares tape gradients against central differences with the given step.
/// Relative error per coordinate is |a - c| / max(1e-8, |a| + |c|).
/// Throws NumericError if f is not finite at the evaluation point.
GradientCheckResult gradient_check(const TapeFunction& f, std::span<const Tensor> inputs,
                                   double step = 1e-6);

/// Single-input convenience form returning the max relative error.
double gradient_check(const std::function<Var(Tape&, const Var&)>& f, const Tensor& x,
                      double step = 1e-6);

}  // namespace punctscl
