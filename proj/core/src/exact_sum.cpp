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

#include "punctscl/exact_sum.hpp"

#include <bit>
#include <cmath>

namespace punctscl {
namespace {
__extension__ typedef __int128 wide_int;
}  // namespace

double order_invariant_sum(std::span<const double> values) {
  double max_abs = 0.0;
  for (double v : values) {
    if (!std::isfinite(v)) {
      double s = 0.0;
      for (double w : values) s += w;
      return s;
    }
    max_abs = std::fmax(max_abs, std::fabs(v));
  }
  if (max_abs == 0.0) return 0.0;

  int exponent = 0;
  std::frexp(max_abs, &exponent);  // max_abs < 2^exponent
  const int headroom = static_cast<int>(std::bit_width(values.size()));
  // Every scaled term is below 2^(124 - headroom), so the sum stays below 2^124.
  const int shift = 124 - headroom - exponent;

  wide_int acc = 0;
  for (double v : values) acc += static_cast<wide_int>(std::ldexp(v, shift));
  return std::ldexp(static_cast<double>(acc), -shift);
}

}  // namespace punctscl
