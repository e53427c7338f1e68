// Copyright 2026 The sweepret Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Reverse-mode differentiation over a fixed set of array operations.
//
// Operations execute eagerly and append a node to a Tape; Tape::backward walks
// the nodes in reverse creation order. Instantiated for float (training) and
// double (gradient checks).

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "sweepret/tensor.hpp"

namespace sweepret {

template <typename T>
class Tape;

template <typename T>
struct Var {
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

  Tape<T>* tape = nullptr;
  std::size_t id = kNone;

  bool valid() const { return tape != nullptr && id != kNone; }
  const Shape& shape() const { return tape->shape(id); }
  std::span<const T> value() const { return tape->value(id); }
  /// Value of a one-element node.
  T item() const { return tape->value(id)[0]; }
};

template <typename T>
class Tape {
 public:
  using Backward = std::function<void(Tape&, std::size_t self)>;

  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool grad_enabled() const { return grad_enabled_; }

  /// Copies `t` into the tape. requires_grad on `t` makes the node a
  /// differentiable leaf whose gradient is readable after backward().
  Var<T> constant(Tensor<T> t, std::string name = "const");
  /// Borrows the parameter value (must outlive the tape); backward()
  /// accumulates into `p.grad`.
  Var<T> parameter(Parameter<T>& p);

  /// Populates gradients of every differentiable node reachable from `loss`
  /// and accumulates them into the parameters bound with parameter().
  void backward(Var<T> loss);

  const Shape& shape(std::size_t id) const { return nodes_[id].shape; }
  std::span<const T> value(std::size_t id) const;
  /// Empty span if the node received no gradient.
  std::span<const T> grad(std::size_t id) const { return nodes_[id].grad; }
  Tensor<T> value_tensor(Var<T> v) const;
  Tensor<T> grad_tensor(Var<T> v) const;
  std::size_t size() const { return nodes_.size(); }
  const std::string& name(std::size_t id) const { return nodes_[id].name; }

  /// Prefix for node names created while the guard is alive.
  class Scope {
   public:
    Scope(Tape& tape, const std::string& name) : tape_(tape) { tape_.scopes_.push_back(name); }
    ~Scope() { tape_.scopes_.pop_back(); }
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;

   private:
    Tape& tape_;
  };

  // Op-implementation interface.
  std::string next_name(const std::string& op) const;
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  /// Zero-initialized on first access.
  std::vector<T>& grad_buffer(std::size_t id);
  Var<T> emit(const std::string& op, Shape shape, std::vector<T> value,
              std::initializer_list<Var<T>> parents, Backward backward);

 private:
  struct Node {
    std::string name;
    Shape shape;
    std::vector<T> owned;
    const T* borrowed = nullptr;
    std::vector<T> grad;
    Backward backward;
    Parameter<T>* sink = nullptr;
    bool requires_grad = false;
  };

  bool grad_enabled_;
  std::vector<Node> nodes_;
  std::vector<std::string> scopes_;
};

struct Conv2dOptions {
  std::size_t stride = 1;
  std::size_t padding = 0;
};

template <typename T>
struct BatchNormStats {
  std::vector<T>* running_mean = nullptr;
  std::vector<T>* running_var = nullptr;
};

struct BatchNormOptions {
  bool training = true;
  double eps = 1e-5;
  double momentum = 0.1;
};

// Elementwise.
template <typename T> Var<T> add(Var<T> a, Var<T> b);
template <typename T> Var<T> sub(Var<T> a, Var<T> b);
template <typename T> Var<T> mul(Var<T> a, Var<T> b);
template <typename T> Var<T> scale(Var<T> a, T factor);
/// Multiplies by a non-differentiable tensor of the same shape.
template <typename T> Var<T> mul_const(Var<T> a, const Tensor<T>& c);
template <typename T> Var<T> relu(Var<T> a);
/// Each row of a matrix divided by sqrt(|row|^2 + eps).
template <typename T> Var<T> normalize_rows(Var<T> a, T eps = T(1e-12));

// Reductions.
template <typename T> Var<T> sum(Var<T> a);
template <typename T> Var<T> dot(Var<T> a, Var<T> b);

// Shape.
template <typename T> Var<T> reshape(Var<T> a, Shape shape);
template <typename T> Var<T> transpose(Var<T> a);
/// Rows [begin, end) along the leading axis.
template <typename T> Var<T> slice_rows(Var<T> a, std::size_t begin, std::size_t end);
/// Sub-block [r0, r1) x [c0, c1) of a matrix.
template <typename T>
Var<T> block(Var<T> a, std::size_t r0, std::size_t r1, std::size_t c0, std::size_t c1);

// Linear algebra and layers.
/// [m,k] x [k,n].
template <typename T> Var<T> matmul(Var<T> a, Var<T> b);
/// [m,k] x [n,k]^T.
template <typename T> Var<T> matmul_nt(Var<T> a, Var<T> b);
/// x [N,in], weight [out,in], bias [out] -> [N,out].
template <typename T> Var<T> linear(Var<T> x, Var<T> weight, Var<T> bias);
/// x [N,C,H,W], weight [O,C,k,k], optional bias [O] -> [N,O,H',W'].
template <typename T>
Var<T> conv2d(Var<T> x, Var<T> weight, Var<T> bias, Conv2dOptions options);
/// Normalizes per channel (axis 1) over the batch and spatial axes of a
/// [N,C] or [N,C,H,W] input. Training mode uses batch statistics and updates
/// the running averages when `stats` is bound; inference uses the running
/// averages.
template <typename T>
Var<T> batch_norm(Var<T> x, Var<T> gamma, Var<T> beta, BatchNormStats<T> stats,
                  BatchNormOptions options);

// Losses.
/// [b1,b2] similarity block plus a scalar -> [b1+1,b2+1] with the scalar in
/// the last row and column.
template <typename T> Var<T> append_dustbin(Var<T> inner, Var<T> alpha);
/// sum_i weight_i * (logsumexp(row_i) - row_i[label_i]) over the first
/// labels.size() rows. Empty weights means all ones.
template <typename T>
Var<T> cross_entropy_rows(Var<T> logits, std::span<const int> labels, std::span<const T> weights);

}  // namespace sweepret
