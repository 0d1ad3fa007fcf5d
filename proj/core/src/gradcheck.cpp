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

#include "punctscl/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "punctscl/error.hpp"

namespace punctscl {

namespace {

double evaluate(const TapeFunction& f, const std::vector<Tensor>& inputs) {
  Tape tape(/*grad_enabled=*/false);
  std::vector<Var> vars;
  vars.reserve(inputs.size());
  for (const auto& t : inputs) vars.push_back(tape.constant(t));
  return f(tape, vars).value().item();
}

}  // namespace

GradientCheckResult gradient_check(const TapeFunction& f, std::span<const Tensor> inputs,
                                   double step) {
  if (!(step > 0.0)) throw ContractError("gradient_check: step must be positive");

  Tape tape;
  std::vector<Var> vars;
  vars.reserve(inputs.size());
  for (const auto& t : inputs) vars.push_back(tape.input(t));
  const Var out = f(tape, vars);
  const double f0 = out.value().item();
  if (!std::isfinite(f0)) throw NumericError("gradient_check: f(x) is not finite");
  tape.backward(out);

  std::vector<Tensor> probe(inputs.begin(), inputs.end());
  GradientCheckResult result;
  const double magnitude = std::fabs(f0);
  result.resolution = (std::nextafter(magnitude, HUGE_VAL) - magnitude) / (2.0 * step);
  for (std::size_t t = 0; t < probe.size(); ++t) {
    const auto analytic = tape.grad(vars[t]);
    auto values = probe[t].values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double original = values[i];
      values[i] = original + step;
      const double up = evaluate(f, probe);
      values[i] = original - step;
      const double down = evaluate(f, probe);
      values[i] = original;
      if (!std::isfinite(up) || !std::isfinite(down)) {
        throw NumericError("gradient_check: f is not finite near coordinate " + std::to_string(i));
      }
      const double central = (up - down) / (2.0 * step);
      const double a = analytic.empty() ? 0.0 : analytic[i];
      const double abs_err = std::fabs(a - central);
      const double rel_err = abs_err / std::max(1e-8, std::fabs(a) + std::fabs(central));
      result.max_absolute_error = std::max(result.max_absolute_error, abs_err);
      result.max_relative_error = std::max(result.max_relative_error, rel_err);
      ++result.coordinates;
    }
  }
  return result;
}

double gradient_check(const std::function<Var(Tape&, const Var&)>& f, const Tensor& x, double step) {
  TapeFunction wrapped = [&f](Tape& tape, std::span<const Var> in) { return f(tape, in[0]); };
  return gradient_check(wrapped, std::span<const Tensor>(&x, 1), step).max_relative_error;
}

}  // namespace punctscl
