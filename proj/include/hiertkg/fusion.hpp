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


// Fusion of temporal and structural node embeddings.
//
// Both inputs are first projected into a shared d_f space. The attention
// form then lets a query (the temporal projection) attend over one or more
// key/value slots per node with h scaled dot-product heads of width
// d_k = d_f / h; heads are concatenated and mapped back to d_f.

#ifndef HIERTKG_FUSION_HPP_
#define HIERTKG_FUSION_HPP_

#include <random>
#include <span>
#include <utility>
#include <vector>

#include "hiertkg/autograd.hpp"

namespace hiertkg::fusion {

using ad::Index;
using ad::Matrix;
using Vector = Eigen::VectorXd;

struct FusionDims {
  Index temporal_dim = 128;    // d_t
  Index structural_dim = 100;  // d_p
  Index fused_dim = 128;       // d_f
  Index heads = 2;             // h

  Index head_dim() const { return fused_dim / heads; }
};

// Per-head W^Q, W^K, W^V are stored side by side: columns
// [i*d_k, (i+1)*d_k) of wq/wk/wv belong to head i.
struct FusionParams {
  FusionDims dims;
  ad::Parameter w_tgn;   // [d_t x d_f]
  ad::Parameter w_pool;  // [d_p x d_f]
  ad::Parameter wq;      // [d_f x h*d_k]
  ad::Parameter wk;      // [d_f x h*d_k]
  ad::Parameter wv;      // [d_f x h*d_k]
  ad::Parameter wout;    // [h*d_k x d_f]

  std::vector<ad::Parameter*> parameters();
};

// Throws ConfigError unless heads divides fused_dim and all dims are >= 1.
FusionParams init_fusion(const FusionDims& dims, std::mt19937_64& rng);

struct FusionVars {
  ad::Var w_tgn, w_pool, wq, wk, wv, wout;
  Index heads = 1;
};
FusionVars bind(ad::Tape& tape, FusionParams& p);

// ---- Single-node forms -----------------------------------------------------

// (W_TGN^T z_tgn, W_Pool^T z_pool). Throws ShapeError on mismatch.
std::pair<Vector, Vector> project(const Vector& z_tgn, const Vector& z_pool,
                                  const FusionParams& p);

// Query from `query`, keys and values from the rows of `slots` [m x d_f].
// When `alpha` is given it receives the [h x m] attention weights.
Vector fuse_slots(const Vector& query, const Matrix& slots,
                  const FusionParams& p, Matrix* alpha = nullptr);

// The two-vector form: the temporal projection attends to the structural
// projection as its only slot, so every head weight is exactly 1.
Vector fuse(const Vector& z_tgn_proj, const Vector& z_pool_proj,
            const FusionParams& p, Matrix* alpha = nullptr);

Vector no_attention_fuse(const Vector& z_tgn_proj, const Vector& z_pool_proj);

// ---- Batched, differentiable forms ----------------------------------------

// Rows are nodes.
ad::Var project_temporal(const FusionVars& v, ad::Var z_tgn);
ad::Var project_structural(const FusionVars& v, ad::Var z_pool);

// `query` is [n x d_f]; each slot is [n x d_f]. Returns [n x d_f]; `alpha`
// (if given) receives [n*m x h] weights, node-major.
ad::Var fuse_slots(const FusionVars& v, ad::Var query,
                   std::span<const ad::Var> slots, Matrix* alpha = nullptr);

ad::Var no_attention_fuse(ad::Var z_tgn_proj, ad::Var z_pool_proj);

}  // namespace hiertkg::fusion

#endif  // HIERTKG_FUSION_HPP_
