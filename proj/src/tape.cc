/*
 * Copyright 2026 The RankLab Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "ranklab/tape.h"

#include <utility>

#include "ranklab/errors.h"

namespace ranklab::ad {

const Tensor& Var::value() const {
  if (tape_ == nullptr) throw ArgumentError("use of an unbound Var");
  return tape_->value(id_);
}

Tensor Gradients::of(const Var& leaf) const {
  auto it = grads_.find(leaf.id());
  if (it == grads_.end()) return Tensor(leaf.shape());
  return it->second;
}

Var Tape::Push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::Constant(Tensor value) {
  Node node;
  node.value = std::move(value);
  return Push(std::move(node));
}

Var Tape::Leaf(Tensor value) {
  Node node;
  node.value = std::move(value);
  node.is_leaf = true;
  node.requires_grad = true;
  return Push(std::move(node));
}

Var Tape::Bind(Parameter& param) {
  if (param.grad.shape() != param.value.shape()) {
    param.grad = Tensor(param.value.shape());
  }
  Node node;
  node.param = &param;
  node.requires_grad = true;
  return Push(std::move(node));
}

Var Tape::Record(Tensor value, const std::vector<Var>& inputs,
                 BackwardFn backward) {
  Node node;
  node.value = std::move(value);
  for (const Var& in : inputs) {
    if (in.tape() != this) {
      throw ArgumentError("operation mixes Vars from different tapes");
    }
    node.requires_grad = node.requires_grad || nodes_[in.id()].requires_grad;
  }
  if (node.requires_grad) node.backward = std::move(backward);
  return Push(std::move(node));
}

const Tensor& Tape::value(int id) const {
  const Node& node = nodes_[id];
  return node.param != nullptr ? node.param->value : node.value;
}

Tensor& Tape::GradBuffer(const Var& v) {
  Node& node = nodes_[v.id()];
  if (node.param != nullptr) return node.param->grad;
  if (!has_grad_[v.id()]) {
    grads_[v.id()] = Tensor(node.value.shape());
    has_grad_[v.id()] = true;
  }
  return grads_[v.id()];
}

Gradients Tape::Backward(const Var& root) {
  if (root.tape() != this) throw ArgumentError("root is not on this tape");
  if (root.value().size() != 1) {
    throw ArgumentError("backward root must be a scalar, got shape " +
                        ShapeToString(root.shape()));
  }
  grads_.assign(nodes_.size(), Tensor());
  has_grad_.assign(nodes_.size(), false);
  last_backward_order_.clear();

  Gradients result;
  const Node& root_node = nodes_[root.id()];
  if (!root_node.requires_grad) return result;

  if (root_node.param != nullptr) {
    root_node.param->grad[0] += 1.0;
    return result;
  }
  GradBuffer(root).Fill(1.0);

  for (int id = root.id(); id >= 0; --id) {
    Node& node = nodes_[id];
    if (!has_grad_[id] || !node.backward) continue;
    last_backward_order_.push_back(id);
    node.backward(*this, value(id), grads_[id]);
  }
  for (int id = 0; id <= root.id(); ++id) {
    if (nodes_[id].is_leaf && has_grad_[id]) {
      result.grads_.emplace(id, std::move(grads_[id]));
    }
  }
  grads_.clear();
  has_grad_.clear();
  return result;
}

}  // namespace ranklab::ad
