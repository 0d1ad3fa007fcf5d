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

#include "punctscl/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "punctscl/error.hpp"
#include "punctscl/exact_sum.hpp"
#include "punctscl/random.hpp"

namespace punctscl::ops {

namespace {

void require_same_tape(const Var& a, const Var& b) {
  if (&a.tape() != &b.tape()) throw ContractError("operands live on different tapes");
}

void require_same_shape(const char* op, const Var& a, const Var& b) {
  require_same_tape(a, b);
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_to_string(a.shape()) +
                         " vs " + shape_to_string(b.shape()));
  }
}

void require_matrix(const char* op, const Var& a) {
  if (a.shape().size() != 2) {
    throw DimensionError(std::string(op) + ": expected a 2-D tensor, got " +
                         shape_to_string(a.shape()));
  }
}

void require_rows(const char* op, const Var& a) {
  if (a.shape().empty() || a.shape().back() == 0) {
    throw DimensionError(std::string(op) + ": empty last dimension in " +
                         shape_to_string(a.shape()));
  }
}

// c[m x n] = a[m x k] * b[k x n]. Each output entry accumulates over k in
// ascending order regardless of its position, so results do not depend on
// how rows or columns are arranged in the operands.
void gemm(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
          std::size_t n) {
  constexpr std::size_t kRowBlock = 4;
  constexpr std::size_t kColTile = 512;
  std::fill(c, c + m * n, 0.0);
  for (std::size_t j0 = 0; j0 < n; j0 += kColTile) {
    const std::size_t j1 = std::min(n, j0 + kColTile);
    std::size_t i = 0;
    for (; i + kRowBlock <= m; i += kRowBlock) {
      double* c0 = c + (i + 0) * n;
      double* c1 = c + (i + 1) * n;
      double* c2 = c + (i + 2) * n;
      double* c3 = c + (i + 3) * n;
      for (std::size_t p = 0; p < k; ++p) {
        const double a0 = a[(i + 0) * k + p];
        const double a1 = a[(i + 1) * k + p];
        const double a2 = a[(i + 2) * k + p];
        const double a3 = a[(i + 3) * k + p];
        const double* bp = b + p * n;
        for (std::size_t j = j0; j < j1; ++j) {
          const double bv = bp[j];
          c0[j] += a0 * bv;
          c1[j] += a1 * bv;
          c2[j] += a2 * bv;
          c3[j] += a3 * bv;
        }
      }
    }
    for (; i < m; ++i) {
      double* ci = c + i * n;
      for (std::size_t p = 0; p < k; ++p) {
        const double ai = a[i * k + p];
        const double* bp = b + p * n;
        for (std::size_t j = j0; j < j1; ++j) ci[j] += ai * bp[j];
      }
    }
  }
}

std::vector<double> transposed(std::span<const double> x, std::size_t rows, std::size_t cols) {
  std::vector<double> t(x.size());
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) t[j * rows + i] = x[i * cols + j];
  }
  return t;
}

void accumulate(std::span<double> dst, std::span<const double> src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

template <typename Fn>
Var unary(const Var& a, Fn&& forward, Tape::BackwardFn backward) {
  Tensor out(a.shape());
  auto x = a.value().values();
  auto y = out.values();
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = forward(x[i]);
  return a.tape().record(std::move(out), {a}, std::move(backward));
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
  require_same_tape(a, b);
  require_matrix("matmul", a);
  require_matrix("matmul", b);
  const std::size_t m = a.shape()[0];
  const std::size_t k = a.shape()[1];
  const std::size_t n = b.shape()[1];
  if (b.shape()[0] != k) {
    throw DimensionError("matmul: inner dimensions differ, " + shape_to_string(a.shape()) +
                         " x " + shape_to_string(b.shape()));
  }
  Tensor out({m, n});
  gemm(a.value().values().data(), b.value().values().data(), out.values().data(), m, k, n);
  return a.tape().record(std::move(out), {a, b}, [a, b, m, k, n](Tape& tape, std::span<const double> g) {
    if (tape.requires_grad(a)) {
      // dA = dC * B^T
      const auto bt = transposed(b.value().values(), k, n);
      std::vector<double> da(m * k);
      gemm(g.data(), bt.data(), da.data(), m, n, k);
      accumulate(tape.grad_buffer(a), da);
    }
    if (tape.requires_grad(b)) {
      // dB = A^T * dC
      const auto at = transposed(a.value().values(), m, k);
      std::vector<double> db(k * n);
      gemm(at.data(), g.data(), db.data(), k, m, n);
      accumulate(tape.grad_buffer(b), db);
    }
  });
}

Var transpose(const Var& a) {
  require_matrix("transpose", a);
  const std::size_t m = a.shape()[0];
  const std::size_t n = a.shape()[1];
  Tensor out({n, m}, transposed(a.value().values(), m, n));
  return a.tape().record(std::move(out), {a}, [a, m, n](Tape& tape, std::span<const double> g) {
    accumulate(tape.grad_buffer(a), transposed(g, n, m));
  });
}

Var reshape(const Var& a, Shape shape) {
  Tensor out = a.value().reshaped(std::move(shape));
  return a.tape().record(std::move(out), {a}, [a](Tape& tape, std::span<const double> g) {
    accumulate(tape.grad_buffer(a), g);
  });
}

Var add(const Var& a, const Var& b) {
  require_same_shape("add", a, b);
  Tensor out(a.shape());
  auto x = a.value().values();
  auto y = b.value().values();
  auto z = out.values();
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = x[i] + y[i];
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& tape, std::span<const double> g) {
    if (tape.requires_grad(a)) accumulate(tape.grad_buffer(a), g);
    if (tape.requires_grad(b)) accumulate(tape.grad_buffer(b), g);
  });
}

Var sub(const Var& a, const Var& b) {
  require_same_shape("sub", a, b);
  Tensor out(a.shape());
  auto x = a.value().values();
  auto y = b.value().values();
  auto z = out.values();
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = x[i] - y[i];
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& tape, std::span<const double> g) {
    if (tape.requires_grad(a)) accumulate(tape.grad_buffer(a), g);
    if (tape.requires_grad(b)) {
      auto db = tape.grad_buffer(b);
      for (std::size_t i = 0; i < db.size(); ++i) db[i] -= g[i];
    }
  });
}

Var mul(const Var& a, const Var& b) {
  require_same_shape("mul", a, b);
  Tensor out(a.shape());
  auto x = a.value().values();
  auto y = b.value().values();
  auto z = out.values();
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = x[i] * y[i];
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& tape, std::span<const double> g) {
    if (tape.requires_grad(a)) {
      auto da = tape.grad_buffer(a);
      auto y = b.value().values();
      for (std::size_t i = 0; i < da.size(); ++i) da[i] += g[i] * y[i];
    }
    if (tape.requires_grad(b)) {
      auto db = tape.grad_buffer(b);
      auto x = a.value().values();
      for (std::size_t i = 0; i < db.size(); ++i) db[i] += g[i] * x[i];
    }
  });
}

Var add_bias(const Var& x, const Var& bias) {
  require_same_tape(x, bias);
  require_rows("add_bias", x);
  const std::size_t cols = x.value().cols();
  const std::size_t rows = x.value().rows();
  if (bias.size() != cols) {
    throw DimensionError("add_bias: bias " + shape_to_string(bias.shape()) + " does not match " +
                         shape_to_string(x.shape()));
  }
  Tensor out(x.shape());
  auto in = x.value().values();
  auto b = bias.value().values();
  auto z = out.values();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) z[r * cols + c] = in[r * cols + c] + b[c];
  }
  return x.tape().record(std::move(out), {x, bias},
                         [x, bias, rows, cols](Tape& tape, std::span<const double> g) {
                           if (tape.requires_grad(x)) accumulate(tape.grad_buffer(x), g);
                           if (tape.requires_grad(bias)) {
                             auto db = tape.grad_buffer(bias);
                             for (std::size_t r = 0; r < rows; ++r) {
                               for (std::size_t c = 0; c < cols; ++c) db[c] += g[r * cols + c];
                             }
                           }
                         });
}

Var scale(const Var& a, double factor) {
  return unary(a, [factor](double v) { return v * factor; },
               [a, factor](Tape& tape, std::span<const double> g) {
                 auto da = tape.grad_buffer(a);
                 for (std::size_t i = 0; i < da.size(); ++i) da[i] += g[i] * factor;
               });
}

Var add_scalar(const Var& a, double offset) {
  return unary(a, [offset](double v) { return v + offset; },
               [a](Tape& tape, std::span<const double> g) { accumulate(tape.grad_buffer(a), g); });
}

Var exp(const Var& a) {
  return unary(a, [](double v) { return std::exp(v); },
               [a](Tape& tape, std::span<const double> g) {
                 auto da = tape.grad_buffer(a);
                 auto x = a.value().values();
                 for (std::size_t i = 0; i < da.size(); ++i) da[i] += g[i] * std::exp(x[i]);
               });
}

Var log(const Var& a) {
  return unary(a, [](double v) { return std::log(v); },
               [a](Tape& tape, std::span<const double> g) {
                 auto da = tape.grad_buffer(a);
                 auto x = a.value().values();
                 for (std::size_t i = 0; i < da.size(); ++i) da[i] += g[i] / x[i];
               });
}

Var pow_scalar(const Var& a, double exponent) {
  return unary(a, [exponent](double v) { return std::pow(v, exponent); },
               [a, exponent](Tape& tape, std::span<const double> g) {
                 auto da = tape.grad_buffer(a);
                 auto x = a.value().values();
                 for (std::size_t i = 0; i < da.size(); ++i) {
                   double d = 0.0;
                   if (x[i] != 0.0) {
                     d = exponent * std::pow(x[i], exponent - 1.0);
                   } else if (exponent == 1.0) {
                     d = 1.0;
                   }
                   da[i] += g[i] * d;
                 }
               });
}

Var gelu(const Var& a) {
  constexpr double kInvSqrt2 = 0.70710678118654752440;
  const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  return unary(
      a, [](double v) { return 0.5 * v * (1.0 + std::erf(v * kInvSqrt2)); },
      [a, inv_sqrt_2pi](Tape& tape, std::span<const double> g) {
        auto da = tape.grad_buffer(a);
        auto x = a.value().values();
        for (std::size_t i = 0; i < da.size(); ++i) {
          const double v = x[i];
          const double cdf = 0.5 * (1.0 + std::erf(v * kInvSqrt2));
          const double pdf = inv_sqrt_2pi * std::exp(-0.5 * v * v);
          da[i] += g[i] * (cdf + v * pdf);
        }
      });
}

Var sum(const Var& a) {
  Tensor out = Tensor::scalar(order_invariant_sum(a.value().values()));
  return a.tape().record(std::move(out), {a}, [a](Tape& tape, std::span<const double> g) {
    auto da = tape.grad_buffer(a);
    for (auto& d : da) d += g[0];
  });
}

Var mean(const Var& a) {
  const std::size_t n = a.size();
  if (n == 0) throw ContractError("mean of an empty tensor");
  Tensor out = Tensor::scalar(order_invariant_sum(a.value().values()) / static_cast<double>(n));
  return a.tape().record(std::move(out), {a}, [a, n](Tape& tape, std::span<const double> g) {
    const double share = g[0] / static_cast<double>(n);
    for (auto& d : tape.grad_buffer(a)) d += share;
  });
}

Var row_sum(const Var& a) {
  require_rows("row_sum", a);
  const std::size_t rows = a.value().rows();
  const std::size_t cols = a.value().cols();
  Tensor out({rows});
  auto x = a.value().values();
  for (std::size_t r = 0; r < rows; ++r) out[r] = order_invariant_sum(x.subspan(r * cols, cols));
  return a.tape().record(std::move(out), {a}, [a, rows, cols](Tape& tape, std::span<const double> g) {
    auto da = tape.grad_buffer(a);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) da[r * cols + c] += g[r];
    }
  });
}

Var row_softmax(const Var& x) {
  require_rows("row_softmax", x);
  const std::size_t rows = x.value().rows();
  const std::size_t cols = x.value().cols();
  Tensor out(x.shape());
  auto in = x.value().values();
  auto y = out.values();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = in.data() + r * cols;
    double* yr = y.data() + r * cols;
    const double m = *std::max_element(xr, xr + cols);
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      yr[c] = std::exp(xr[c] - m);
      s += yr[c];
    }
    for (std::size_t c = 0; c < cols; ++c) yr[c] /= s;
  }
  std::vector<double> probs(y.begin(), y.end());
  return x.tape().record(std::move(out), {x},
                         [x, rows, cols, probs = std::move(probs)](Tape& tape, std::span<const double> g) {
                           auto dx = tape.grad_buffer(x);
                           for (std::size_t r = 0; r < rows; ++r) {
                             const double* pr = probs.data() + r * cols;
                             const double* gr = g.data() + r * cols;
                             double dot = 0.0;
                             for (std::size_t c = 0; c < cols; ++c) dot += gr[c] * pr[c];
                             for (std::size_t c = 0; c < cols; ++c) dx[r * cols + c] += pr[c] * (gr[c] - dot);
                           }
                         });
}

Var row_log_softmax(const Var& x) {
  require_rows("row_log_softmax", x);
  const std::size_t rows = x.value().rows();
  const std::size_t cols = x.value().cols();
  Tensor out(x.shape());
  auto in = x.value().values();
  auto y = out.values();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = in.data() + r * cols;
    const double m = *std::max_element(xr, xr + cols);
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) s += std::exp(xr[c] - m);
    const double lse = m + std::log(s);
    for (std::size_t c = 0; c < cols; ++c) y[r * cols + c] = xr[c] - lse;
  }
  return x.tape().record(std::move(out), {x}, [x, rows, cols](Tape& tape, std::span<const double> g) {
    // The output is recomputed from the input; cheap for the narrow class rows.
    auto dx = tape.grad_buffer(x);
    auto in = x.value().values();
    for (std::size_t r = 0; r < rows; ++r) {
      const double* xr = in.data() + r * cols;
      const double* gr = g.data() + r * cols;
      const double m = *std::max_element(xr, xr + cols);
      double s = 0.0;
      for (std::size_t c = 0; c < cols; ++c) s += std::exp(xr[c] - m);
      double gsum = 0.0;
      for (std::size_t c = 0; c < cols; ++c) gsum += gr[c];
      for (std::size_t c = 0; c < cols; ++c) {
        dx[r * cols + c] += gr[c] - std::exp(xr[c] - m) / s * gsum;
      }
    }
  });
}

Var row_logsumexp(const Var& x, bool exclude_diagonal) {
  require_rows("row_logsumexp", x);
  const std::size_t rows = x.value().rows();
  const std::size_t cols = x.value().cols();
  if (exclude_diagonal && (x.shape().size() != 2 || rows != cols)) {
    throw DimensionError("row_logsumexp: diagonal exclusion needs a square matrix, got " +
                         shape_to_string(x.shape()));
  }
  Tensor out({rows});
  auto in = x.value().values();
  std::vector<double> terms(cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = in.data() + r * cols;
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < cols; ++c) {
      if (exclude_diagonal && c == r) continue;
      m = std::max(m, xr[c]);
    }
    if (m == -std::numeric_limits<double>::infinity()) {
      out[r] = m;
      continue;
    }
    for (std::size_t c = 0; c < cols; ++c) {
      terms[c] = (exclude_diagonal && c == r) ? 0.0 : std::exp(xr[c] - m);
    }
    out[r] = m + std::log(order_invariant_sum(terms));
  }
  std::vector<double> lse(out.values().begin(), out.values().end());
  return x.tape().record(
      std::move(out), {x},
      [x, rows, cols, exclude_diagonal, lse = std::move(lse)](Tape& tape, std::span<const double> g) {
        auto dx = tape.grad_buffer(x);
        auto in = x.value().values();
        for (std::size_t r = 0; r < rows; ++r) {
          if (g[r] == 0.0 || !std::isfinite(lse[r])) continue;
          for (std::size_t c = 0; c < cols; ++c) {
            if (exclude_diagonal && c == r) continue;
            dx[r * cols + c] += g[r] * std::exp(in[r * cols + c] - lse[r]);
          }
        }
      });
}

Var l2_normalize_rows(const Var& x, double epsilon) {
  require_rows("l2_normalize_rows", x);
  const std::size_t rows = x.value().rows();
  const std::size_t cols = x.value().cols();
  Tensor out(x.shape());
  std::vector<double> divisor(rows);
  std::vector<std::uint8_t> degenerate(rows, 0);
  auto in = x.value().values();
  auto y = out.values();
  for (std::size_t r = 0; r < rows; ++r) {
    double sq = 0.0;
    for (std::size_t c = 0; c < cols; ++c) sq += in[r * cols + c] * in[r * cols + c];
    const double norm = std::sqrt(sq);
    degenerate[r] = norm < epsilon ? 1 : 0;
    divisor[r] = degenerate[r] ? epsilon : norm;
    for (std::size_t c = 0; c < cols; ++c) y[r * cols + c] = in[r * cols + c] / divisor[r];
  }
  std::vector<double> normalized(y.begin(), y.end());
  return x.tape().record(
      std::move(out), {x},
      [x, rows, cols, divisor = std::move(divisor), degenerate = std::move(degenerate),
       normalized = std::move(normalized)](Tape& tape, std::span<const double> g) {
        auto dx = tape.grad_buffer(x);
        for (std::size_t r = 0; r < rows; ++r) {
          const double* yr = normalized.data() + r * cols;
          const double* gr = g.data() + r * cols;
          if (degenerate[r]) {
            for (std::size_t c = 0; c < cols; ++c) dx[r * cols + c] += gr[c] / divisor[r];
            continue;
          }
          double dot = 0.0;
          for (std::size_t c = 0; c < cols; ++c) dot += yr[c] * gr[c];
          for (std::size_t c = 0; c < cols; ++c) {
            dx[r * cols + c] += (gr[c] - yr[c] * dot) / divisor[r];
          }
        }
      });
}

Var layer_norm(const Var& x, const Var& gain, const Var& bias, double epsilon) {
  require_same_tape(x, gain);
  require_same_tape(x, bias);
  require_rows("layer_norm", x);
  const std::size_t rows = x.value().rows();
  const std::size_t cols = x.value().cols();
  if (gain.size() != cols || bias.size() != cols) {
    throw DimensionError("layer_norm: gain/bias must have " + std::to_string(cols) + " entries");
  }
  Tensor out(x.shape());
  std::vector<double> xhat(rows * cols);
  std::vector<double> rstd(rows);
  auto in = x.value().values();
  auto gv = gain.value().values();
  auto bv = bias.value().values();
  auto y = out.values();
  const double inv_n = 1.0 / static_cast<double>(cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = in.data() + r * cols;
    double mu = 0.0;
    for (std::size_t c = 0; c < cols; ++c) mu += xr[c];
    mu *= inv_n;
    double var = 0.0;
    for (std::size_t c = 0; c < cols; ++c) var += (xr[c] - mu) * (xr[c] - mu);
    var *= inv_n;
    rstd[r] = 1.0 / std::sqrt(var + epsilon);
    for (std::size_t c = 0; c < cols; ++c) {
      const double h = (xr[c] - mu) * rstd[r];
      xhat[r * cols + c] = h;
      y[r * cols + c] = h * gv[c] + bv[c];
    }
  }
  return x.tape().record(
      std::move(out), {x, gain, bias},
      [x, gain, bias, rows, cols, inv_n, xhat = std::move(xhat), rstd = std::move(rstd)](
          Tape& tape, std::span<const double> g) {
        if (tape.requires_grad(gain) || tape.requires_grad(bias)) {
          std::vector<double> dg(cols, 0.0);
          std::vector<double> db(cols, 0.0);
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < cols; ++c) {
              dg[c] += g[r * cols + c] * xhat[r * cols + c];
              db[c] += g[r * cols + c];
            }
          }
          if (tape.requires_grad(gain)) accumulate(tape.grad_buffer(gain), dg);
          if (tape.requires_grad(bias)) accumulate(tape.grad_buffer(bias), db);
        }
        if (tape.requires_grad(x)) {
          auto dx = tape.grad_buffer(x);
          auto gv = gain.value().values();
          std::vector<double> dh(cols);
          for (std::size_t r = 0; r < rows; ++r) {
            double mean_dh = 0.0;
            double mean_dh_h = 0.0;
            for (std::size_t c = 0; c < cols; ++c) {
              dh[c] = g[r * cols + c] * gv[c];
              mean_dh += dh[c];
              mean_dh_h += dh[c] * xhat[r * cols + c];
            }
            mean_dh *= inv_n;
            mean_dh_h *= inv_n;
            for (std::size_t c = 0; c < cols; ++c) {
              dx[r * cols + c] += rstd[r] * (dh[c] - mean_dh - xhat[r * cols + c] * mean_dh_h);
            }
          }
        }
      });
}

Var embedding(const Var& table, std::span<const int> ids) {
  require_matrix("embedding", table);
  const std::size_t vocab = table.shape()[0];
  const std::size_t dim = table.shape()[1];
  std::vector<int> idx(ids.begin(), ids.end());
  Tensor out({idx.size(), dim});
  auto t = table.value().values();
  auto y = out.values();
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0 || static_cast<std::size_t>(idx[i]) >= vocab) {
      throw ContractError("embedding: id " + std::to_string(idx[i]) + " outside table of " +
                          std::to_string(vocab) + " rows");
    }
    std::copy_n(t.begin() + static_cast<std::ptrdiff_t>(idx[i] * dim), dim,
                y.begin() + static_cast<std::ptrdiff_t>(i * dim));
  }
  return table.tape().record(std::move(out), {table},
                             [table, dim, idx = std::move(idx)](Tape& tape, std::span<const double> g) {
                               auto dt = tape.grad_buffer(table);
                               for (std::size_t i = 0; i < idx.size(); ++i) {
                                 double* row = dt.data() + static_cast<std::size_t>(idx[i]) * dim;
                                 for (std::size_t c = 0; c < dim; ++c) row[c] += g[i * dim + c];
                               }
                             });
}

Var gather_rows(const Var& x, std::span<const std::size_t> indices) {
  require_matrix("gather_rows", x);
  const std::size_t rows = x.shape()[0];
  const std::size_t cols = x.shape()[1];
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  Tensor out({idx.size(), cols});
  auto in = x.value().values();
  auto y = out.values();
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= rows) throw ContractError("gather_rows: row index out of range");
    std::copy_n(in.begin() + static_cast<std::ptrdiff_t>(idx[i] * cols), cols,
                y.begin() + static_cast<std::ptrdiff_t>(i * cols));
  }
  return x.tape().record(std::move(out), {x},
                         [x, cols, idx = std::move(idx)](Tape& tape, std::span<const double> g) {
                           auto dx = tape.grad_buffer(x);
                           for (std::size_t i = 0; i < idx.size(); ++i) {
                             for (std::size_t c = 0; c < cols; ++c) dx[idx[i] * cols + c] += g[i * cols + c];
                           }
                         });
}

Var pick(const Var& x, std::span<const int> columns) {
  require_matrix("pick", x);
  const std::size_t rows = x.shape()[0];
  const std::size_t cols = x.shape()[1];
  if (columns.size() != rows) throw DimensionError("pick: one column index per row required");
  std::vector<int> idx(columns.begin(), columns.end());
  Tensor out({rows});
  auto in = x.value().values();
  for (std::size_t r = 0; r < rows; ++r) {
    if (idx[r] < 0 || static_cast<std::size_t>(idx[r]) >= cols) {
      throw ContractError("pick: column index out of range");
    }
    out[r] = in[r * cols + static_cast<std::size_t>(idx[r])];
  }
  return x.tape().record(std::move(out), {x}, [x, cols, idx = std::move(idx)](Tape& tape, std::span<const double> g) {
    auto dx = tape.grad_buffer(x);
    for (std::size_t r = 0; r < idx.size(); ++r) dx[r * cols + static_cast<std::size_t>(idx[r])] += g[r];
  });
}

Var dropout(const Var& x, double p, std::mt19937_64& rng) {
  if (p < 0.0 || p >= 1.0) throw ContractError("dropout probability must lie in [0, 1)");
  if (p == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - p);
  std::vector<double> factor(x.size());
  for (auto& f : factor) f = uniform01(rng) < p ? 0.0 : keep_scale;
  Tensor out(x.shape());
  auto in = x.value().values();
  auto y = out.values();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = in[i] * factor[i];
  return x.tape().record(std::move(out), {x}, [x, factor = std::move(factor)](Tape& tape, std::span<const double> g) {
    auto dx = tape.grad_buffer(x);
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += g[i] * factor[i];
  });
}

Var attention(const Var& q, const Var& k, const Var& v, std::span<const std::uint8_t> key_valid,
              std::size_t batch, std::size_t seq, std::size_t heads) {
  require_same_shape("attention", q, k);
  require_same_shape("attention", q, v);
  require_matrix("attention", q);
  const std::size_t d = q.shape()[1];
  if (q.shape()[0] != batch * seq) throw DimensionError("attention: rows must equal batch*seq");
  if (key_valid.size() != batch * seq) throw DimensionError("attention: key mask size mismatch");
  if (heads == 0 || d % heads != 0) throw DimensionError("attention: model dim not divisible by heads");
  const std::size_t dh = d / heads;
  const double scale_factor = 1.0 / std::sqrt(static_cast<double>(dh));

  std::vector<std::uint8_t> valid(key_valid.begin(), key_valid.end());
  std::vector<double> probs(batch * heads * seq * seq, 0.0);
  Tensor out({batch * seq, d});
  auto qv = q.value().values();
  auto kv = k.value().values();
  auto vv = v.value().values();
  auto y = out.values();

  for (std::size_t b = 0; b < batch; ++b) {
    const std::uint8_t* vb = valid.data() + b * seq;
    for (std::size_t h = 0; h < heads; ++h) {
      for (std::size_t i = 0; i < seq; ++i) {
        double* p = probs.data() + ((b * heads + h) * seq + i) * seq;
        const double* qi = qv.data() + (b * seq + i) * d + h * dh;
        double m = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < seq; ++j) {
          if (!vb[j]) continue;
          const double* kj = kv.data() + (b * seq + j) * d + h * dh;
          double s = 0.0;
          for (std::size_t c = 0; c < dh; ++c) s += qi[c] * kj[c];
          p[j] = s * scale_factor;
          m = std::max(m, p[j]);
        }
        if (m == -std::numeric_limits<double>::infinity()) continue;  // no valid keys
        double z = 0.0;
        for (std::size_t j = 0; j < seq; ++j) {
          if (!vb[j]) continue;
          p[j] = std::exp(p[j] - m);
          z += p[j];
        }
        double* yi = y.data() + (b * seq + i) * d + h * dh;
        for (std::size_t j = 0; j < seq; ++j) {
          if (!vb[j]) continue;
          p[j] /= z;
          const double* vj = vv.data() + (b * seq + j) * d + h * dh;
          for (std::size_t c = 0; c < dh; ++c) yi[c] += p[j] * vj[c];
        }
      }
    }
  }

  return q.tape().record(
      std::move(out), {q, k, v},
      [q, k, v, batch, seq, heads, d, dh, scale_factor, valid = std::move(valid),
       probs = std::move(probs)](Tape& tape, std::span<const double> g) {
        auto qv = q.value().values();
        auto kv = k.value().values();
        auto vv = v.value().values();
        std::vector<double> dq(qv.size(), 0.0);
        std::vector<double> dk(kv.size(), 0.0);
        std::vector<double> dvv(vv.size(), 0.0);
        std::vector<double> dp(seq);
        for (std::size_t b = 0; b < batch; ++b) {
          const std::uint8_t* vb = valid.data() + b * seq;
          for (std::size_t h = 0; h < heads; ++h) {
            for (std::size_t i = 0; i < seq; ++i) {
              const double* p = probs.data() + ((b * heads + h) * seq + i) * seq;
              const double* gi = g.data() + (b * seq + i) * d + h * dh;
              double dot = 0.0;
              for (std::size_t j = 0; j < seq; ++j) {
                if (!vb[j]) continue;
                const double* vj = vv.data() + (b * seq + j) * d + h * dh;
                double* dvj = dvv.data() + (b * seq + j) * d + h * dh;
                double s = 0.0;
                for (std::size_t c = 0; c < dh; ++c) {
                  s += gi[c] * vj[c];
                  dvj[c] += p[j] * gi[c];
                }
                dp[j] = s;
                dot += s * p[j];
              }
              const double* qi = qv.data() + (b * seq + i) * d + h * dh;
              double* dqi = dq.data() + (b * seq + i) * d + h * dh;
              for (std::size_t j = 0; j < seq; ++j) {
                if (!vb[j]) continue;
                const double ds = p[j] * (dp[j] - dot) * scale_factor;
                if (ds == 0.0) continue;
                const double* kj = kv.data() + (b * seq + j) * d + h * dh;
                double* dkj = dk.data() + (b * seq + j) * d + h * dh;
                for (std::size_t c = 0; c < dh; ++c) {
                  dqi[c] += ds * kj[c];
                  dkj[c] += ds * qi[c];
                }
              }
            }
          }
        }
        if (tape.requires_grad(q)) accumulate(tape.grad_buffer(q), dq);
        if (tape.requires_grad(k)) accumulate(tape.grad_buffer(k), dk);
        if (tape.requires_grad(v)) accumulate(tape.grad_buffer(v), dvv);
      });
}

}  // namespace punctscl::ops
