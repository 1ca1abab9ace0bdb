// Copyright 2026 The HierTKG Authors.
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

// Minimal reverse-mode automatic differentiation over dense double matrices.
//
// A Tape records every operation applied to Vars. Leaves are either constants
// or Parameters; calling Tape::backward on a 1x1 Var accumulates gradients
// into the Parameter::grad of every parameter leaf that reached it. Nodes that
// do not depend on any parameter carry no backward closure, so constant
// sub-graphs (memory rows, adjacency) cost nothing on the way back.

#ifndef HIERTKG_AUTOGRAD_HPP_
#define HIERTKG_AUTOGRAD_HPP_

#include <Eigen/Dense>

#include <deque>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace hiertkg::ad {

using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

// A learnable tensor. `grad` is accumulated by Tape::backward and cleared by
// the optimizer.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter() = default;
  Parameter(std::string n, Matrix v)
      : name(std::move(n)), value(std::move(v)),
        grad(Matrix::Zero(value.rows(), value.cols())) {}

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

class Tape;

class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  // Scalar value of a 1x1 Var.
  double item() const;
  bool requires_grad() const;
  Tape* tape() const { return tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  Tape() = default;
  // A tape with gradients disabled records no closures and binds parameters
  // as constants; used for evaluation passes.
  explicit Tape(bool grad_enabled) : grad_enabled_(grad_enabled) {}
  bool grad_enabled() const { return grad_enabled_; }
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  Var param(Parameter& p);

  // Seeds d(loss)/d(loss) = 1 and propagates to every parameter leaf.
  void backward(Var loss);

  const Matrix& value(Var v) const { return nodes_[v.id_].value; }
  // Gradient buffer of a node after backward(); zero-sized if the node did
  // not require grad.
  const Matrix& grad(Var v) const { return nodes_[v.id_].grad; }
  bool requires_grad(Var v) const { return nodes_[v.id_].requires_grad; }
  size_t size() const { return nodes_.size(); }

  // Internal: used by the op implementations.
  using Backprop = std::function<void(Tape&, const Matrix& upstream)>;
  Var record(Matrix value, bool requires_grad, Backprop backprop);
  void accumulate(Var v, const Matrix& g);
  template <class Expr>
  void accumulate_expr(Var v, const Expr& g) {
    Node& n = nodes_[v.id_];
    if (!n.requires_grad) return;
    if (n.grad.size() == 0) {
      n.grad = g;
    } else {
      n.grad += g;
    }
  }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    Parameter* param = nullptr;
    Backprop backprop;
  };
  std::deque<Node> nodes_;
  bool grad_enabled_ = true;
};

// ---- Operations -----------------------------------------------------------
// Every op checks shapes and throws ShapeError naming both operands.

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);  // elementwise
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
Var one_minus(Var a);
// a [n x c] + row [1 x c] broadcast over rows.
Var add_row(Var a, Var row);
// a [n x c] scaled row-wise by col [n x 1].
Var mul_col(Var a, Var col);
Var transpose(Var a);

Var sigmoid(Var a);
Var tanh(Var a);
Var relu(Var a);
Var cos(Var a);
Var log(Var a);
// Values clamped to [lo, hi]; gradient passes only where lo < x < hi.
Var clamp(Var a, double lo, double hi);

Var concat_cols(std::span<const Var> parts);
Var concat_rows(std::span<const Var> parts);
Var slice_cols(Var a, Index start, Index count);
// out[i] = a[idx[i]]; indices may repeat.
Var gather_rows(Var a, std::span<const Index> idx);
// out has `rows` rows, zero except out[idx[i]] = a[i]; idx must be distinct.
Var scatter_rows(Var a, std::span<const Index> idx, Index rows);

Var softmax_rows(Var a);
// Rows of `a` are grouped into consecutive segments; segment s spans
// [offsets[s], offsets[s+1]). Softmax is taken per column within a segment.
Var segment_softmax(Var a, std::span<const Index> offsets);
// One output row per segment holding the column sums of its rows; empty
// segments produce zero rows.
Var segment_sum(Var a, std::span<const Index> offsets);

Var sum(Var a);   // 1x1
Var mean(Var a);  // 1x1

}  // namespace hiertkg::ad

#endif  // HIERTKG_AUTOGRAD_HPP_
