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

// Hierarchical structural embeddings.
//
// DiffPool level:   S = softmax_rows(H W),  H' = S^T H,  A' = S^T A S.
// Read-out:         z_v = (S_1 S_2 ... S_L)[v, :] H_L.
// SAGPool level:    score = ((H + D^-1 A H) theta), keep the top
//                   ceil(ratio * n) nodes, gate them by tanh(score) and
//                   restrict A to the kept rows and columns.

#ifndef HIERTKG_POOLING_HPP_
#define HIERTKG_POOLING_HPP_

#include <random>
#include <span>
#include <vector>

#include "hiertkg/autograd.hpp"

namespace hiertkg::pooling {

using ad::Index;
using ad::Matrix;
using Vector = Eigen::VectorXd;

struct PoolingLevel {
  Matrix assignment;  // S [n_prev x n]
  Matrix features;    // H [n x d]
  Matrix adjacency;   // A [n x n]
};

struct HierarchyConfig {
  Index feature_dim = 0;
  std::vector<Index> cluster_counts;  // strictly decreasing, last >= 1

  Index levels() const { return static_cast<Index>(cluster_counts.size()); }
  // Throws ConfigError unless counts are strictly decreasing, >= 1 and the
  // first is <= num_nodes.
  void validate(Index num_nodes) const;
};

// Default hierarchy for an n-node graph: [ceil(n/4), ceil(n/16)] capped at
// `caps`, with levels that would not shrink dropped.
HierarchyConfig default_hierarchy(Index num_nodes, Index feature_dim,
                                  std::span<const Index> divisors,
                                  std::span<const Index> caps);

// Throws ShapeError naming both shapes on mismatch.
PoolingLevel diffpool_level(const Matrix& h_prev, const Matrix& a_prev,
                            const Matrix& w_s);

std::vector<PoolingLevel> run_hierarchy(const HierarchyConfig& cfg,
                                        const Matrix& h0, const Matrix& a0,
                                        std::span<const Matrix> weights);

// Row v of the chained assignment applied to the top-level features.
Vector node_structural_embedding(std::span<const PoolingLevel> levels,
                                 Index v);

// ---- Differentiable forms --------------------------------------------------

struct LevelVars {
  ad::Var assignment;
  ad::Var features;
  ad::Var adjacency;
};

LevelVars diffpool_level(ad::Var h_prev, ad::Var a_prev, ad::Var w_s);

// Uses the first cluster_counts[l] columns of weights[l]. The pooled
// adjacency is only materialised when `with_adjacency` is set, since the
// read-out does not depend on it.
std::vector<LevelVars> run_hierarchy(const HierarchyConfig& cfg, ad::Var h0,
                                     ad::Var a0,
                                     std::span<const ad::Var> weights,
                                     bool with_adjacency = true);

// All node read-outs at once: [n x d].
ad::Var structural_readout(std::span<const LevelVars> levels);

// DiffPool auxiliary regularisers: mean squared link-reconstruction error
// ||1[A>0] - S S^T||^2 / n^2 plus mean row entropy of S, summed over levels.
ad::Var diffpool_aux_loss(std::span<const LevelVars> levels, ad::Var a0);

// ---- SAGPool ---------------------------------------------------------------

// Indices of the top ceil(keep_ratio * n) scores, ties to the lower index,
// returned in ascending index order. Throws ConfigError unless
// 0 < keep_ratio <= 1.
std::vector<Index> select_top(const Vector& scores, double keep_ratio);

struct SagLevel {
  Matrix features;   // [k x d] gated by tanh(score)
  Matrix adjacency;  // [k x k]
  std::vector<Index> kept;  // indices into the level's input nodes
  Vector scores;     // [n]
};

// `score_weights` is [d x 1].
SagLevel sagpool_level(const Matrix& h, const Matrix& a, double keep_ratio,
                       const Matrix& score_weights);
// Same, with the scores supplied directly.
SagLevel sagpool_with_scores(const Matrix& h, const Matrix& a,
                             double keep_ratio, const Vector& scores);

struct SagLevelVars {
  ad::Var features;
  ad::Var adjacency;
  std::vector<Index> kept;
};

SagLevelVars sagpool_level(ad::Var h, ad::Var a, double keep_ratio,
                           ad::Var score_weights);

// One or two stacked SAGPool layers followed by the per-node read-out: kept
// nodes receive their gated features, dropped nodes the zero vector.
ad::Var sagpool_readout(ad::Var h, ad::Var a, double keep_ratio,
                        std::span<const ad::Var> score_weights);

// Plain-value read-out for the stacked form, [n x d].
Matrix double_sagpool(const Matrix& h, const Matrix& a, double keep_ratio,
                      const Matrix& w1, const Matrix& w2);

}  // namespace hiertkg::pooling

#endif  // HIERTKG_POOLING_HPP_
