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

#include <span>

namespace punctscl {

/// Sum of `values` whose result does not depend on the order of the inputs.
///
/// Each term is mapped onto a common 128-bit fixed-point grid chosen from the
/// largest magnitude, summed exactly in integers, then rounded once. The grid
/// resolution is about 2^-100 relative to the largest term. Non-finite input
/// falls back to ordinary summation so NaN/Inf still propagate.
double order_invariant_sum(std::span<const double> values);

}  // namespace punctscl
