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

#ifndef RANKLAB_TAPE_H_
#define RANKLAB_TAPE_H_

#include <cstddef>
#include <deque>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "ranklab/tensor.h"

namespace ranklab::ad {

// A trainable tensor that lives outside any tape. Binding it to a tape lets
// operations read its value without copying; backward passes accumulate into
// `grad` until ZeroGrad() is called.
struct Parameter {
  Parameter() = default;
  Parameter(std::string name, Tensor init)
      : name(std::move(name)), value(std::move(init)), grad(value.shape()) {}

  void ZeroGrad() { grad.Fill(0.0); }

  std::string name;
  Tensor value;
  Tensor grad;
};

class Tape;

// Handle to a tensor recorded on a tape.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  Tape* tape() const { return tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  int id_ = -1;
};

// Leaf gradients produced by Tape::Backward.
class Gradients {
 public:
  // Gradient of the root with respect to `leaf`; zeros when unreached.
  Tensor of(const Var& leaf) const;
  bool contains(const Var& leaf) const { return grads_.count(leaf.id()) > 0; }
  std::size_t size() const { return grads_.size(); }

 private:
  friend class Tape;
  std::map<int, Tensor> grads_;
};

// Records executed operations so that gradients can be obtained by replaying
// them in reverse. One tape per thread; a tape is discarded after use.
class Tape {
 public:
  // Receives the op's output value and the gradient flowing into it, and
  // accumulates input gradients via GradBuffer.
  using BackwardFn = std::function<void(Tape& tape, const Tensor& out,
                                        const Tensor& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Non-differentiable input.
  Var Constant(Tensor value);
  // Differentiable input whose gradient is reported by Backward.
  Var Leaf(Tensor value);
  // Differentiable input backed by `param`; gradients accumulate into
  // param.grad. `param` must outlive the tape.
  Var Bind(Parameter& param);

  // Appends an operation result. `backward` may be empty for ops with no
  // differentiable inputs.
  Var Record(Tensor value, const std::vector<Var>& inputs, BackwardFn backward);

  bool RequiresGrad(const Var& v) const { return nodes_[v.id()].requires_grad; }
  // Accumulator for the gradient of `v`, zero-initialised on first access.
  Tensor& GradBuffer(const Var& v);

  // Reverse-mode sweep from a scalar root. Throws ArgumentError if `root` is
  // not a single-element tensor on this tape.
  Gradients Backward(const Var& root);

  const Tensor& value(int id) const;
  std::size_t size() const { return nodes_.size(); }
  // Node ids whose backward rules ran during the last Backward, in order.
  const std::vector<int>& last_backward_order() const {
    return last_backward_order_;
  }

 private:
  struct Node {
    Tensor value;
    Parameter* param = nullptr;
    bool is_leaf = false;
    bool requires_grad = false;
    BackwardFn backward;
  };

  Var Push(Node node);

  std::deque<Node> nodes_;
  std::vector<Tensor> grads_;
  std::vector<bool> has_grad_;
  std::vector<int> last_backward_order_;
};

}  // namespace ranklab::ad

#endif  // RANKLAB_TAPE_H_
