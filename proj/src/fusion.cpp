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


#include "hiertkg/fusion.hpp"

#include <cmath>
#include <string>

#include "hiertkg/errors.hpp"
#include "hiertkg/init.hpp"

namespace hiertkg::fusion {
namespace {

// [h*d_k x h] indicator summing each head's columns.
Matrix head_indicator(Index heads, Index head_dim) {
  Matrix m = Matrix::Zero(heads * head_dim, heads);
  for (Index c = 0; c < heads * head_dim; ++c) m(c, c / head_dim) = 1.0;
  return m;
}

FusionVars bind_values(ad::Tape& tape, const FusionParams& p) {
  FusionVars v;
  v.w_tgn = tape.constant(p.w_tgn.value);
  v.w_pool = tape.constant(p.w_pool.value);
  v.wq = tape.constant(p.wq.value);
  v.wk = tape.constant(p.wk.value);
  v.wv = tape.constant(p.wv.value);
  v.wout = tape.constant(p.wout.value);
  v.heads = p.dims.heads;
  return v;
}

Matrix as_row(const Vector& x) { return x.transpose(); }

}  // namespace

std::vector<ad::Parameter*> FusionParams::parameters() {
  return {&w_tgn, &w_pool, &wq, &wk, &wv, &wout};
}

FusionParams init_fusion(const FusionDims& d, std::mt19937_64& rng) {
  if (d.temporal_dim < 1 || d.structural_dim < 1 || d.fused_dim < 1 ||
      d.heads < 1) {
    throw ConfigError("fusion dimensions must all be >= 1");
  }
  if (d.fused_dim % d.heads != 0) {
    throw ConfigError("fusion heads (" + std::to_string(d.heads) +
                      ") must divide fused_dim (" +
                      std::to_string(d.fused_dim) + ")");
  }
  FusionParams p;
  p.dims = d;
  const Index f = d.fused_dim;
  p.w_tgn = ad::Parameter("fusion.w_tgn", init::fan_in(d.temporal_dim, f, rng));
  p.w_pool =
      ad::Parameter("fusion.w_pool", init::fan_in(d.structural_dim, f, rng));
  p.wq = ad::Parameter("fusion.wq", init::fan_in(f, f, rng));
  p.wk = ad::Parameter("fusion.wk", init::fan_in(f, f, rng));
  p.wv = ad::Parameter("fusion.wv", init::fan_in(f, f, rng));
  p.wout = ad::Parameter("fusion.wout", init::fan_in(f, f, rng));
  return p;
}

FusionVars bind(ad::Tape& tape, FusionParams& p) {
  FusionVars v;
  v.w_tgn = tape.param(p.w_tgn);
  v.w_pool = tape.param(p.w_pool);
  v.wq = tape.param(p.wq);
  v.wk = tape.param(p.wk);
  v.wv = tape.param(p.wv);
  v.wout = tape.param(p.wout);
  v.heads = p.dims.heads;
  return v;
}

std::pair<Vector, Vector> project(const Vector& z_tgn, const Vector& z_pool,
                                  const FusionParams& p) {
  ad::Tape tape(false);
  FusionVars v = bind_values(tape, p);
  Vector a = project_temporal(v, tape.constant(as_row(z_tgn))).value().row(0);
  Vector b =
      project_structural(v, tape.constant(as_row(z_pool))).value().row(0);
  return {a, b};
}

Vector fuse_slots(const Vector& query, const Matrix& slots,
                  const FusionParams& p, Matrix* alpha) {
  if (slots.rows() < 1) throw ShapeError("fusion needs >= 1 key/value slot");
  ad::Tape tape(false);
  FusionVars v = bind_values(tape, p);
  std::vector<ad::Var> slot_vars;
  for (Index j = 0; j < slots.rows(); ++j) {
    slot_vars.push_back(tape.constant(slots.row(j)));
  }
  Matrix a;
  Vector out =
      fuse_slots(v, tape.constant(as_row(query)), slot_vars, &a).value().row(0);
  if (alpha != nullptr) *alpha = a.transpose();
  return out;
}

Vector fuse(const Vector& z_tgn_proj, const Vector& z_pool_proj,
            const FusionParams& p, Matrix* alpha) {
  return fuse_slots(z_tgn_proj, as_row(z_pool_proj), p, alpha);
}

Vector no_attention_fuse(const Vector& z_tgn_proj, const Vector& z_pool_proj) {
  if (z_tgn_proj.size() != z_pool_proj.size()) {
    throw ShapeError("no_attention_fuse: sizes " +
                     std::to_string(z_tgn_proj.size()) + " and " +
                     std::to_string(z_pool_proj.size()) + " differ");
  }
  return z_tgn_proj + z_pool_proj;
}

ad::Var project_temporal(const FusionVars& v, ad::Var z_tgn) {
  return ad::matmul(z_tgn, v.w_tgn);
}

ad::Var project_structural(const FusionVars& v, ad::Var z_pool) {
  return ad::matmul(z_pool, v.w_pool);
}

ad::Var fuse_slots(const FusionVars& v, ad::Var query,
                   std::span<const ad::Var> slots, Matrix* alpha) {
  using namespace ad;
  if (slots.empty()) throw ShapeError("fusion needs >= 1 key/value slot");
  Tape& tape = *query.tape();
  const Index n = query.rows();
  const auto m = static_cast<Index>(slots.size());
  const Index hd = v.wq.cols();
  const Index heads = v.heads;
  const Index dk = hd / heads;
  for (const Var& s : slots) {
    if (s.rows() != n || s.cols() != query.cols()) {
      throw ShapeError("fusion slot [" + std::to_string(s.rows()) + " x " +
                       std::to_string(s.cols()) + "] does not match query [" +
                       std::to_string(n) + " x " +
                       std::to_string(query.cols()) + "]");
    }
  }

  if (m == 1) {
    // Softmax over a single slot is identically 1.
    if (alpha != nullptr) *alpha = Matrix::Ones(n, heads);
    return matmul(matmul(slots[0], v.wv), v.wout);
  }

  Var q = matmul(query, v.wq);
  Var ind = tape.constant(head_indicator(heads, dk));
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dk));
  std::vector<Var> scores, values;
  for (const Var& s : slots) {
    scores.push_back(scale(matmul(mul(q, matmul(s, v.wk)), ind), inv_sqrt));
    values.push_back(matmul(s, v.wv));
  }
  // Slot-major stacking -> node-major so each node's slots are contiguous.
  std::vector<Index> order(static_cast<size_t>(n * m));
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < m; ++j) order[static_cast<size_t>(i * m + j)] = j * n + i;
  }
  std::vector<Index> offsets(static_cast<size_t>(n + 1));
  for (Index i = 0; i <= n; ++i) offsets[static_cast<size_t>(i)] = i * m;

  Var a = segment_softmax(gather_rows(concat_rows(scores), order), offsets);
  if (alpha != nullptr) *alpha = a.value();
  Var weights = matmul(a, transpose(ind));
  Var vals = gather_rows(concat_rows(values), order);
  Var ctx = segment_sum(mul(weights, vals), offsets);
  return matmul(ctx, v.wout);
}

ad::Var no_attention_fuse(ad::Var z_tgn_proj, ad::Var z_pool_proj) {
  return ad::add(z_tgn_proj, z_pool_proj);
}

}  // namespace hiertkg::fusion
