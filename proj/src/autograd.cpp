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

#include "hiertkg/autograd.hpp"

#include <cmath>
#include <sstream>

#include "hiertkg/errors.hpp"

namespace hiertkg::ad {
namespace {

std::string shape(const Matrix& m) {
  std::ostringstream os;
  os << "[" << m.rows() << " x " << m.cols() << "]";
  return os.str();
}

[[noreturn]] void shape_mismatch(const char* op, const Matrix& a,
                                 const Matrix& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + shape(a) +
                   " and " + shape(b));
}

Tape& tape_of(Var a) {
  if (!a.valid()) throw Error("autograd: use of an empty Var");
  return *a.tape();
}

Tape& tape_of(Var a, Var b) {
  Tape& t = tape_of(a);
  if (&tape_of(b) != &t) throw Error("autograd: Vars from different tapes");
  return t;
}

void check_same(const char* op, Var a, Var b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    shape_mismatch(op, a.value(), b.value());
  }
}

void check_offsets(const char* op, const Matrix& a,
                   std::span<const Index> offsets) {
  if (offsets.empty() || offsets.front() != 0 || offsets.back() != a.rows()) {
    throw ShapeError(std::string(op) + ": offsets must start at 0 and end at " +
                     std::to_string(a.rows()));
  }
  for (size_t i = 1; i < offsets.size(); ++i) {
    if (offsets[i] < offsets[i - 1]) {
      throw ShapeError(std::string(op) + ": offsets must be non-decreasing");
    }
  }
}

}  // namespace

const Matrix& Var::value() const { return tape_->value(*this); }

double Var::item() const {
  const Matrix& v = value();
  if (v.size() != 1) throw ShapeError("item() on non-scalar " + shape(v));
  return v(0, 0);
}

bool Var::requires_grad() const { return tape_->requires_grad(*this); }

Var Tape::constant(Matrix value) {
  return record(std::move(value), false, nullptr);
}

Var Tape::param(Parameter& p) {
  if (!grad_enabled_) return constant(p.value);
  nodes_.push_back(Node{p.value, Matrix(), true, &p, nullptr});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::record(Matrix value, bool requires_grad, Backprop backprop) {
  requires_grad = requires_grad && grad_enabled_;
  nodes_.push_back(Node{std::move(value), Matrix(), requires_grad, nullptr,
                        requires_grad ? std::move(backprop) : Backprop()});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

void Tape::accumulate(Var v, const Matrix& g) { accumulate_expr(v, g); }

void Tape::backward(Var loss) {
  if (loss.tape() != this) throw Error("backward: Var from another tape");
  Node& root = nodes_[loss.id_];
  if (root.value.size() != 1) {
    throw ShapeError("backward: loss must be 1x1, got " + shape(root.value));
  }
  if (!root.requires_grad) return;
  root.grad = Matrix::Ones(1, 1);
  for (int i = loss.id_; i >= 0; --i) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.size() == 0) continue;
    if (n.param != nullptr) {
      n.param->grad += n.grad;
    } else if (n.backprop) {
      n.backprop(*this, n.grad);
    }
  }
}

// ---- Linear algebra -------------------------------------------------------

Var matmul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  if (a.cols() != b.rows()) shape_mismatch("matmul", a.value(), b.value());
  Matrix out = a.value() * b.value();
  bool rg = a.requires_grad() || b.requires_grad();
  return t.record(std::move(out), rg, [a, b](Tape& t, const Matrix& g) {
    if (a.requires_grad()) t.accumulate(a, g * b.value().transpose());
    if (b.requires_grad()) t.accumulate(b, a.value().transpose() * g);
  });
}

Var add(Var a, Var b) {
  Tape& t = tape_of(a, b);
  check_same("add", a, b);
  bool rg = a.requires_grad() || b.requires_grad();
  return t.record(a.value() + b.value(), rg,
                  [a, b](Tape& t, const Matrix& g) {
                    t.accumulate(a, g);
                    t.accumulate(b, g);
                  });
}

Var sub(Var a, Var b) {
  Tape& t = tape_of(a, b);
  check_same("sub", a, b);
  bool rg = a.requires_grad() || b.requires_grad();
  return t.record(a.value() - b.value(), rg,
                  [a, b](Tape& t, const Matrix& g) {
                    t.accumulate(a, g);
                    t.accumulate_expr(b, -g);
                  });
}

Var mul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  check_same("mul", a, b);
  bool rg = a.requires_grad() || b.requires_grad();
  return t.record(a.value().cwiseProduct(b.value()), rg,
                  [a, b](Tape& t, const Matrix& g) {
                    if (a.requires_grad())
                      t.accumulate_expr(a, g.cwiseProduct(b.value()));
                    if (b.requires_grad())
                      t.accumulate_expr(b, g.cwiseProduct(a.value()));
                  });
}

Var scale(Var a, double s) {
  Tape& t = tape_of(a);
  return t.record(a.value() * s, a.requires_grad(),
                  [a, s](Tape& t, const Matrix& g) {
                    t.accumulate_expr(a, g * s);
                  });
}

Var add_scalar(Var a, double s) {
  Tape& t = tape_of(a);
  return t.record(a.value().array() + s, a.requires_grad(),
                  [a](Tape& t, const Matrix& g) { t.accumulate(a, g); });
}

Var one_minus(Var a) {
  Tape& t = tape_of(a);
  return t.record(1.0 - a.value().array(), a.requires_grad(),
                  [a](Tape& t, const Matrix& g) { t.accumulate_expr(a, -g); });
}

Var add_row(Var a, Var row) {
  Tape& t = tape_of(a, row);
  if (row.rows() != 1 || row.cols() != a.cols()) {
    shape_mismatch("add_row", a.value(), row.value());
  }
  Matrix out = a.value().rowwise() + row.value().row(0);
  bool rg = a.requires_grad() || row.requires_grad();
  return t.record(std::move(out), rg, [a, row](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    if (row.requires_grad()) t.accumulate_expr(row, g.colwise().sum());
  });
}

Var mul_col(Var a, Var col) {
  Tape& t = tape_of(a, col);
  if (col.cols() != 1 || col.rows() != a.rows()) {
    shape_mismatch("mul_col", a.value(), col.value());
  }
  Matrix out = a.value().array().colwise() * col.value().col(0).array();
  bool rg = a.requires_grad() || col.requires_grad();
  return t.record(std::move(out), rg, [a, col](Tape& t, const Matrix& g) {
    if (a.requires_grad()) {
      t.accumulate_expr(a, (g.array().colwise() * col.value().col(0).array())
                               .matrix());
    }
    if (col.requires_grad()) {
      t.accumulate_expr(col, g.cwiseProduct(a.value()).rowwise().sum());
    }
  });
}

Var transpose(Var a) {
  Tape& t = tape_of(a);
  return t.record(a.value().transpose(), a.requires_grad(),
                  [a](Tape& t, const Matrix& g) {
                    t.accumulate_expr(a, g.transpose());
                  });
}

// ---- Elementwise nonlinearities ------------------------------------------

Var sigmoid(Var a) {
  Tape& t = tape_of(a);
  Matrix out = a.value().unaryExpr([](double x) {
    // Split by sign so exp never overflows.
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
  });
  Matrix y = a.requires_grad() ? out : Matrix();
  return t.record(std::move(out), a.requires_grad(),
                  [a, y = std::move(y)](Tape& t, const Matrix& g) {
                    t.accumulate_expr(
                        a, (g.array() * y.array() * (1.0 - y.array()))
                               .matrix());
                  });
}

Var tanh(Var a) {
  Tape& t = tape_of(a);
  Matrix out = a.value().array().tanh().matrix();
  return t.record(std::move(out), a.requires_grad(),
                  [a](Tape& t, const Matrix& g) {
                    Matrix y = a.value().array().tanh().matrix();
                    t.accumulate_expr(
                        a, (g.array() * (1.0 - y.array().square())).matrix());
                  });
}

Var relu(Var a) {
  Tape& t = tape_of(a);
  Matrix out = a.value().cwiseMax(0.0);
  return t.record(std::move(out), a.requires_grad(),
                  [a](Tape& t, const Matrix& g) {
                    t.accumulate_expr(
                        a, (a.value().array() > 0.0)
                               .select(g.array(), 0.0)
                               .matrix());
                  });
}

Var cos(Var a) {
  Tape& t = tape_of(a);
  return t.record(a.value().array().cos().matrix(), a.requires_grad(),
                  [a](Tape& t, const Matrix& g) {
                    t.accumulate_expr(
                        a, (-g.array() * a.value().array().sin()).matrix());
                  });
}

Var log(Var a) {
  Tape& t = tape_of(a);
  return t.record(a.value().array().log().matrix(), a.requires_grad(),
                  [a](Tape& t, const Matrix& g) {
                    t.accumulate_expr(a,
                                      (g.array() / a.value().array()).matrix());
                  });
}

Var clamp(Var a, double lo, double hi) {
  Tape& t = tape_of(a);
  Matrix out = a.value().cwiseMax(lo).cwiseMin(hi);
  return t.record(std::move(out), a.requires_grad(),
                  [a, lo, hi](Tape& t, const Matrix& g) {
                    const auto x = a.value().array();
                    t.accumulate_expr(
                        a, ((x > lo) && (x < hi)).select(g.array(), 0.0)
                               .matrix());
                  });
}

// ---- Structural ops -------------------------------------------------------

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  Tape& t = tape_of(parts[0]);
  Index rows = parts[0].rows();
  Index cols = 0;
  bool rg = false;
  for (const Var& p : parts) {
    tape_of(parts[0], p);
    if (p.rows() != rows) {
      shape_mismatch("concat_cols", parts[0].value(), p.value());
    }
    cols += p.cols();
    rg = rg || p.requires_grad();
  }
  Matrix out(rows, cols);
  Index at = 0;
  for (const Var& p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    at += p.cols();
  }
  std::vector<Var> keep(parts.begin(), parts.end());
  return t.record(std::move(out), rg,
                  [keep = std::move(keep)](Tape& t, const Matrix& g) {
                    Index at = 0;
                    for (const Var& p : keep) {
                      if (p.requires_grad()) {
                        t.accumulate_expr(p, g.middleCols(at, p.cols()));
                      }
                      at += p.cols();
                    }
                  });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  Tape& t = tape_of(parts[0]);
  Index cols = parts[0].cols();
  Index rows = 0;
  bool rg = false;
  for (const Var& p : parts) {
    tape_of(parts[0], p);
    if (p.cols() != cols) {
      shape_mismatch("concat_rows", parts[0].value(), p.value());
    }
    rows += p.rows();
    rg = rg || p.requires_grad();
  }
  Matrix out(rows, cols);
  Index at = 0;
  for (const Var& p : parts) {
    out.middleRows(at, p.rows()) = p.value();
    at += p.rows();
  }
  std::vector<Var> keep(parts.begin(), parts.end());
  return t.record(std::move(out), rg,
                  [keep = std::move(keep)](Tape& t, const Matrix& g) {
                    Index at = 0;
                    for (const Var& p : keep) {
                      if (p.requires_grad()) {
                        t.accumulate_expr(p, g.middleRows(at, p.rows()));
                      }
                      at += p.rows();
                    }
                  });
}

Var slice_cols(Var a, Index start, Index count) {
  Tape& t = tape_of(a);
  if (start < 0 || count < 0 || start + count > a.cols()) {
    throw ShapeError("slice_cols: columns [" + std::to_string(start) + ", " +
                     std::to_string(start + count) + ") out of " +
                     shape(a.value()));
  }
  return t.record(a.value().middleCols(start, count), a.requires_grad(),
                  [a, start, count](Tape& t, const Matrix& g) {
                    Matrix full = Matrix::Zero(a.rows(), a.cols());
                    full.middleCols(start, count) = g;
                    t.accumulate(a, full);
                  });
}

Var gather_rows(Var a, std::span<const Index> idx) {
  Tape& t = tape_of(a);
  const Matrix& v = a.value();
  Matrix out(static_cast<Index>(idx.size()), v.cols());
  for (size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0 || idx[i] >= v.rows()) {
      throw IndexError("gather_rows: row " + std::to_string(idx[i]) +
                       " out of range for " + shape(v));
    }
    out.row(static_cast<Index>(i)) = v.row(idx[i]);
  }
  std::vector<Index> keep(idx.begin(), idx.end());
  return t.record(std::move(out), a.requires_grad(),
                  [a, keep = std::move(keep)](Tape& t, const Matrix& g) {
                    Matrix full = Matrix::Zero(a.rows(), a.cols());
                    for (size_t i = 0; i < keep.size(); ++i) {
                      full.row(keep[i]) += g.row(static_cast<Index>(i));
                    }
                    t.accumulate(a, full);
                  });
}

Var scatter_rows(Var a, std::span<const Index> idx, Index rows) {
  Tape& t = tape_of(a);
  if (static_cast<Index>(idx.size()) != a.rows()) {
    throw ShapeError("scatter_rows: " + std::to_string(idx.size()) +
                     " indices for " + shape(a.value()));
  }
  Matrix out = Matrix::Zero(rows, a.cols());
  std::vector<bool> seen(static_cast<size_t>(rows), false);
  for (size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0 || idx[i] >= rows) {
      throw IndexError("scatter_rows: row " + std::to_string(idx[i]) +
                       " out of range " + std::to_string(rows));
    }
    if (seen[idx[i]]) throw IndexError("scatter_rows: duplicate index");
    seen[idx[i]] = true;
    out.row(idx[i]) = a.value().row(static_cast<Index>(i));
  }
  std::vector<Index> keep(idx.begin(), idx.end());
  return t.record(std::move(out), a.requires_grad(),
                  [a, keep = std::move(keep)](Tape& t, const Matrix& g) {
                    Matrix part(static_cast<Index>(keep.size()), g.cols());
                    for (size_t i = 0; i < keep.size(); ++i) {
                      part.row(static_cast<Index>(i)) = g.row(keep[i]);
                    }
                    t.accumulate(a, part);
                  });
}

Var softmax_rows(Var a) {
  Tape& t = tape_of(a);
  const Matrix& x = a.value();
  Matrix y(x.rows(), x.cols());
  for (Index r = 0; r < x.rows(); ++r) {
    double m = x.row(r).maxCoeff();
    y.row(r) = (x.row(r).array() - m).exp().matrix();
    y.row(r) /= y.row(r).sum();
  }
  Matrix ycopy = y;
  return t.record(std::move(y), a.requires_grad(),
                  [a, y = std::move(ycopy)](Tape& t, const Matrix& g) {
                    // dx = y * (g - sum(g*y))
                    Eigen::VectorXd dot = g.cwiseProduct(y).rowwise().sum();
                    Matrix dx = y.array() *
                                (g.colwise() - dot).array();
                    t.accumulate(a, dx);
                  });
}

Var segment_softmax(Var a, std::span<const Index> offsets) {
  Tape& t = tape_of(a);
  const Matrix& x = a.value();
  check_offsets("segment_softmax", x, offsets);
  Matrix y(x.rows(), x.cols());
  for (size_t s = 0; s + 1 < offsets.size(); ++s) {
    Index lo = offsets[s], n = offsets[s + 1] - offsets[s];
    if (n == 0) continue;
    auto blk = x.middleRows(lo, n);
    Eigen::RowVectorXd m = blk.colwise().maxCoeff();
    Matrix e = (blk.rowwise() - m).array().exp().matrix();
    Eigen::RowVectorXd z = e.colwise().sum();
    y.middleRows(lo, n) = e.array().rowwise() / z.array();
  }
  std::vector<Index> segs(offsets.begin(), offsets.end());
  Matrix ycopy = y;
  return t.record(
      std::move(y), a.requires_grad(),
      [a, y = std::move(ycopy), segs = std::move(segs)](Tape& t,
                                                        const Matrix& g) {
        Matrix dx(y.rows(), y.cols());
        for (size_t s = 0; s + 1 < segs.size(); ++s) {
          Index lo = segs[s], n = segs[s + 1] - segs[s];
          if (n == 0) continue;
          auto ys = y.middleRows(lo, n);
          auto gs = g.middleRows(lo, n);
          Eigen::RowVectorXd dot = ys.cwiseProduct(gs).colwise().sum();
          dx.middleRows(lo, n) = ys.array() * (gs.rowwise() - dot).array();
        }
        t.accumulate(a, dx);
      });
}

Var segment_sum(Var a, std::span<const Index> offsets) {
  Tape& t = tape_of(a);
  const Matrix& x = a.value();
  check_offsets("segment_sum", x, offsets);
  Index nseg = static_cast<Index>(offsets.size()) - 1;
  Matrix out = Matrix::Zero(nseg, x.cols());
  for (Index s = 0; s < nseg; ++s) {
    Index lo = offsets[s], n = offsets[s + 1] - offsets[s];
    if (n > 0) out.row(s) = x.middleRows(lo, n).colwise().sum();
  }
  std::vector<Index> segs(offsets.begin(), offsets.end());
  return t.record(std::move(out), a.requires_grad(),
                  [a, segs = std::move(segs)](Tape& t, const Matrix& g) {
                    Matrix dx(a.rows(), a.cols());
                    for (size_t s = 0; s + 1 < segs.size(); ++s) {
                      for (Index r = segs[s]; r < segs[s + 1]; ++r) {
                        dx.row(r) = g.row(static_cast<Index>(s));
                      }
                    }
                    t.accumulate(a, dx);
                  });
}

Var sum(Var a) {
  Tape& t = tape_of(a);
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return t.record(std::move(out), a.requires_grad(),
                  [a](Tape& t, const Matrix& g) {
                    t.accumulate(a, Matrix::Constant(a.rows(), a.cols(),
                                                     g(0, 0)));
                  });
}

Var mean(Var a) {
  if (a.value().size() == 0) throw ShapeError("mean of empty matrix");
  return scale(sum(a), 1.0 / static_cast<double>(a.value().size()));
}

}  // namespace hiertkg::ad
