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

#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <vector>

#include "punctscl/tensor.hpp"

namespace punctscl {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; only valid while the
/// owning tape is alive.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t size() const { return value().size(); }
  Tape& tape() const { return *tape_; }
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Reverse-mode tape. Nodes are appended in execution order, so every node's
/// operands precede it and a single reverse sweep is a valid topological walk.
///
/// A tape is single-threaded. Independent tapes can be used concurrently, even
/// when they read the same bound parameters, as long as no tape is running
/// backward into those parameters at the same time.
class Tape {
 public:
  /// Called during the reverse sweep with the node's output gradient.
  using BackwardFn = std::function<void(Tape& tape, std::span<const double> out_grad)>;

  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool grad_enabled() const noexcept { return grad_enabled_; }

  /// Leaf that never receives a gradient.
  Var constant(Tensor value);
  /// Leaf owned by the tape that receives a gradient (read it with grad()).
  Var input(Tensor value);
  /// Leaf that aliases an external tensor. When the tensor requires grad,
  /// backward() accumulates into its grad slot. The tensor must outlive the tape.
  Var parameter(Tensor& tensor);

  /// Appends an operation output. `backward` may be empty for ops with no
  /// differentiable parents; it is dropped when gradients are disabled.
  Var record(Tensor value, std::vector<Var> parents, BackwardFn backward);

  /// Whether `v` participates in gradient flow.
  bool requires_grad(const Var& v) const;
  /// Mutable gradient buffer for `v`, allocated as zeros on first use.
  std::span<double> grad_buffer(const Var& v);
  /// Gradient of the last backward() with respect to `v` (empty if none flowed).
  std::span<const double> grad(const Var& v) const;

  /// Seeds d(loss)/d(loss) = 1 and sweeps the tape in reverse. Tape-owned
  /// gradients are reset at the start of every call; bound parameters
  /// accumulate.
  void backward(const Var& loss);

  std::size_t node_count() const noexcept { return nodes_.size(); }

 private:
  friend class Var;

  struct Node {
    Tensor owned;
    Tensor* bound = nullptr;
    bool requires_grad = false;
    BackwardFn backward;
    std::vector<double> grad;

    const Tensor& value() const { return bound != nullptr ? *bound : owned; }
  };

  const Node& node(const Var& v) const;
  Node& node(const Var& v);

  bool grad_enabled_;
  std::deque<Node> nodes_;
};

}  // namespace punctscl
