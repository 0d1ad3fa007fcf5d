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

#include "punctscl/autograd.hpp"

#include <algorithm>

#include "punctscl/error.hpp"

namespace punctscl {

const Tensor& Var::value() const {
  if (tape_ == nullptr) throw ContractError("use of an unbound Var");
  return tape_->node(*this).value();
}

const Tape::Node& Tape::node(const Var& v) const {
  if (v.tape_ != this || v.id_ >= nodes_.size()) throw ContractError("Var does not belong to this tape");
  return nodes_[v.id_];
}

Tape::Node& Tape::node(const Var& v) {
  if (v.tape_ != this || v.id_ >= nodes_.size()) throw ContractError("Var does not belong to this tape");
  return nodes_[v.id_];
}

Var Tape::constant(Tensor value) {
  auto& n = nodes_.emplace_back();
  n.owned = std::move(value);
  return {this, nodes_.size() - 1};
}

Var Tape::input(Tensor value) {
  auto& n = nodes_.emplace_back();
  n.owned = std::move(value);
  n.requires_grad = grad_enabled_;
  return {this, nodes_.size() - 1};
}

Var Tape::parameter(Tensor& tensor) {
  auto& n = nodes_.emplace_back();
  n.bound = &tensor;
  n.requires_grad = grad_enabled_ && tensor.requires_grad();
  return {this, nodes_.size() - 1};
}

Var Tape::record(Tensor value, std::vector<Var> parents, BackwardFn backward) {
  bool needs_grad = false;
  if (grad_enabled_) {
    for (const auto& p : parents) needs_grad = needs_grad || node(p).requires_grad;
  }
  auto& n = nodes_.emplace_back();
  n.owned = std::move(value);
  n.requires_grad = needs_grad;
  if (needs_grad) n.backward = std::move(backward);
  return {this, nodes_.size() - 1};
}

bool Tape::requires_grad(const Var& v) const { return node(v).requires_grad; }

std::span<double> Tape::grad_buffer(const Var& v) {
  auto& n = node(v);
  if (n.grad.empty()) n.grad.assign(n.value().size(), 0.0);
  return n.grad;
}

std::span<const double> Tape::grad(const Var& v) const { return node(v).grad; }

void Tape::backward(const Var& loss) {
  auto& root = node(loss);
  if (root.value().size() != 1) {
    throw ContractError("backward() needs a scalar loss, got shape " +
                        shape_to_string(root.value().shape()));
  }
  for (auto& n : nodes_) n.grad.clear();
  if (!root.requires_grad) return;
  root.grad.assign(1, 1.0);

  for (std::size_t i = loss.id_ + 1; i-- > 0;) {
    auto& n = nodes_[i];
    if (!n.requires_grad || n.grad.empty()) continue;
    if (n.backward) n.backward(*this, n.grad);
    if (n.bound != nullptr) {
      auto g = n.bound->grad();
      for (std::size_t j = 0; j < g.size(); ++j) g[j] += n.grad[j];
    }
  }
}

}  // namespace punctscl
