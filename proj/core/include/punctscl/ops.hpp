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

#include <cstdint>
#include <random>
#include <span>

#include "punctscl/autograd.hpp"

/// Differentiable operations over Var. Row-wise ops treat the last dimension
/// as the row and flatten everything before it.
namespace punctscl::ops {

/// C = A·B for 2-D operands.
Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);
Var reshape(const Var& a, Shape shape);

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
/// x[..., j] + bias[j].
Var add_bias(const Var& x, const Var& bias);
Var scale(const Var& a, double factor);
Var add_scalar(const Var& a, double offset);

Var exp(const Var& a);
Var log(const Var& a);
/// x^exponent for x >= 0. At x == 0 the derivative is taken as 1 for
/// exponent == 1 and 0 otherwise.
Var pow_scalar(const Var& a, double exponent);
Var gelu(const Var& a);

/// Scalar sum, order-invariant.
Var sum(const Var& a);
/// Scalar mean, order-invariant.
Var mean(const Var& a);
/// Per-row sum -> shape [rows], order-invariant within each row.
Var row_sum(const Var& a);

Var row_softmax(const Var& x);
Var row_log_softmax(const Var& x);
/// log Σ_j exp(x_ij) per row -> [rows]. With `exclude_diagonal`, entry (i, i)
/// is left out of row i (requires a square matrix).
Var row_logsumexp(const Var& x, bool exclude_diagonal = false);

/// Rows scaled to unit Euclidean norm. Rows with norm < epsilon are scaled by
/// 1/epsilon instead.
Var l2_normalize_rows(const Var& x, double epsilon = 1e-12);

Var layer_norm(const Var& x, const Var& gain, const Var& bias, double epsilon = 1e-12);

/// Rows of `table` selected by `ids` -> [ids.size() x table.cols()].
Var embedding(const Var& table, std::span<const int> ids);
/// Rows of a 2-D `x` selected by `indices`.
Var gather_rows(const Var& x, std::span<const std::size_t> indices);
/// out[i] = x[i, columns[i]] for 2-D x.
Var pick(const Var& x, std::span<const int> columns);

/// Inverted dropout: keeps each element with probability 1 - p and scales by
/// 1 / (1 - p). Identity when p == 0.
Var dropout(const Var& x, double p, std::mt19937_64& rng);

/// Multi-head scaled dot-product attention over a padded batch.
/// q, k, v: [(batch*seq) x d]. key_valid[b*seq + j] == 0 removes key j from
/// every query in sequence b. Returns the per-head context concatenated back
/// to [(batch*seq) x d].
Var attention(const Var& q, const Var& k, const Var& v, std::span<const std::uint8_t> key_valid,
              std::size_t batch, std::size_t seq, std::size_t heads);

}  // namespace punctscl::ops
