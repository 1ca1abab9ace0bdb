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

#include "hiertkg/pooling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "hiertkg/errors.hpp"

namespace hiertkg::pooling {
namespace {

std::string shape(const Matrix& m) {
  return "[" + std::to_string(m.rows()) + " x " + std::to_string(m.cols()) +
         "]";
}

void check_diffpool_shapes(const Matrix& h, const Matrix& a,
                           const Matrix& w) {
  if (a.rows() != h.rows() || a.cols() != h.rows()) {
    throw ShapeError("diffpool: adjacency " + shape(a) +
                     " does not match features " + shape(h));
  }
  if (w.rows() != h.cols()) {
    throw ShapeError("diffpool: assignment weights " + shape(w) +
                     " do not match features " + shape(h));
  }
}

}  // namespace

void HierarchyConfig::validate(Index num_nodes) const {
  if (cluster_counts.empty()) throw ConfigError("hierarchy needs >= 1 level");
  if (cluster_counts.front() > num_nodes) {
    throw ConfigError("first level has " +
                      std::to_string(cluster_counts.front()) +
                      " clusters but the graph has only " +
                      std::to_string(num_nodes) + " nodes");
  }
  for (size_t l = 0; l < cluster_counts.size(); ++l) {
    if (cluster_counts[l] < 1) throw ConfigError("cluster counts must be >= 1");
    if (l > 0 && cluster_counts[l] >= cluster_counts[l - 1]) {
      throw ConfigError("cluster counts must be strictly decreasing");
    }
  }
}

HierarchyConfig default_hierarchy(Index num_nodes, Index feature_dim,
                                  std::span<const Index> divisors,
                                  std::span<const Index> caps) {
  if (divisors.size() != caps.size() || divisors.empty()) {
    throw ConfigError("hierarchy divisors and caps must be non-empty and "
                      "of equal length");
  }
  HierarchyConfig cfg;
  cfg.feature_dim = feature_dim;
  for (size_t l = 0; l < divisors.size(); ++l) {
    Index c = (num_nodes + divisors[l] - 1) / divisors[l];
    c = std::max<Index>(1, std::min(c, caps[l]));
    if (!cfg.cluster_counts.empty() && c >= cfg.cluster_counts.back()) break;
    cfg.cluster_counts.push_back(c);
  }
  return cfg;
}

PoolingLevel diffpool_level(const Matrix& h_prev, const Matrix& a_prev,
                            const Matrix& w_s) {
  check_diffpool_shapes(h_prev, a_prev, w_s);
  ad::Tape tape(false);
  LevelVars v = diffpool_level(tape.constant(h_prev), tape.constant(a_prev),
                               tape.constant(w_s));
  return {v.assignment.value(), v.features.value(), v.adjacency.value()};
}

std::vector<PoolingLevel> run_hierarchy(const HierarchyConfig& cfg,
                                        const Matrix& h0, const Matrix& a0,
                                        std::span<const Matrix> weights) {
  cfg.validate(h0.rows());
  if (weights.size() != cfg.cluster_counts.size()) {
    throw ConfigError("one assignment weight matrix per level required");
  }
  std::vector<PoolingLevel> out;
  Matrix h = h0, a = a0;
  for (size_t l = 0; l < weights.size(); ++l) {
    if (weights[l].cols() < cfg.cluster_counts[l]) {
      throw ShapeError("level " + std::to_string(l) + " weights " +
                       shape(weights[l]) + " have fewer than " +
                       std::to_string(cfg.cluster_counts[l]) + " columns");
    }
    out.push_back(diffpool_level(h, a,
                                 weights[l].leftCols(cfg.cluster_counts[l])));
    h = out.back().features;
    a = out.back().adjacency;
  }
  return out;
}

Vector node_structural_embedding(std::span<const PoolingLevel> levels,
                                 Index v) {
  if (levels.empty()) throw ConfigError("read-out needs >= 1 level");
  const Index n = levels.front().assignment.rows();
  if (v < 0 || v >= n) {
    throw IndexError("node " + std::to_string(v) + " outside " +
                     std::to_string(n) + "-node graph");
  }
  Eigen::RowVectorXd chain = levels.front().assignment.row(v);
  for (size_t l = 1; l < levels.size(); ++l) {
    chain = chain * levels[l].assignment;
  }
  return (chain * levels.back().features).transpose();
}

LevelVars diffpool_level(ad::Var h_prev, ad::Var a_prev, ad::Var w_s) {
  check_diffpool_shapes(h_prev.value(), a_prev.value(), w_s.value());
  ad::Var s = ad::softmax_rows(ad::matmul(h_prev, w_s));
  ad::Var st = ad::transpose(s);
  ad::Var h = ad::matmul(st, h_prev);
  ad::Var a = ad::matmul(ad::matmul(st, a_prev), s);
  return {s, h, a};
}

std::vector<LevelVars> run_hierarchy(const HierarchyConfig& cfg, ad::Var h0,
                                     ad::Var a0,
                                     std::span<const ad::Var> weights,
                                     bool with_adjacency) {
  cfg.validate(h0.rows());
  if (weights.size() != cfg.cluster_counts.size()) {
    throw ConfigError("one assignment weight matrix per level required");
  }
  std::vector<LevelVars> out;
  ad::Var h = h0, a = a0;
  for (size_t l = 0; l < weights.size(); ++l) {
    const Index c = cfg.cluster_counts[l];
    if (weights[l].cols() < c) {
      throw ShapeError("level " + std::to_string(l) + " weights " +
                       shape(weights[l].value()) + " have fewer than " +
                       std::to_string(c) + " columns");
    }
    ad::Var w = weights[l].cols() == c ? weights[l]
                                       : ad::slice_cols(weights[l], 0, c);
    if (with_adjacency) {
      out.push_back(diffpool_level(h, a, w));
      a = out.back().adjacency;
    } else {
      if (w.rows() != h.cols()) {
        throw ShapeError("diffpool: assignment weights " + shape(w.value()) +
                         " do not match features " + shape(h.value()));
      }
      ad::Var s = ad::softmax_rows(ad::matmul(h, w));
      out.push_back({s, ad::matmul(ad::transpose(s), h), ad::Var()});
    }
    h = out.back().features;
  }
  return out;
}

ad::Var structural_readout(std::span<const LevelVars> levels) {
  if (levels.empty()) throw ConfigError("read-out needs >= 1 level");
  // Multiply from the top down so every product stays [n_l x d].
  ad::Var acc = levels.back().features;
  for (size_t l = levels.size(); l-- > 0;) {
    acc = ad::matmul(levels[l].assignment, acc);
  }
  return acc;
}

ad::Var diffpool_aux_loss(std::span<const LevelVars> levels, ad::Var a0) {
  using namespace ad;
  Tape& tape = *a0.tape();
  Var total = tape.constant(Matrix::Zero(1, 1));
  Matrix a = a0.value();
  for (const LevelVars& lv : levels) {
    const Index n = lv.assignment.rows();
    Matrix link = (a.array() > 0.0).cast<double>().matrix();
    Var recon = sub(tape.constant(link),
                    matmul(lv.assignment, transpose(lv.assignment)));
    Var link_loss = scale(sum(mul(recon, recon)),
                          1.0 / static_cast<double>(n * n));
    Var s_safe = clamp(lv.assignment, 1e-12, 1.0);
    Var entropy = scale(sum(mul(lv.assignment, log(s_safe))),
                        -1.0 / static_cast<double>(n));
    total = add(total, add(link_loss, entropy));
    if (lv.adjacency.valid()) a = lv.adjacency.value();
    else break;
  }
  return total;
}

// ---- SAGPool ---------------------------------------------------------------

std::vector<Index> select_top(const Vector& scores, double keep_ratio) {
  if (!(keep_ratio > 0.0) || keep_ratio > 1.0) {
    throw ConfigError("keep_ratio must lie in (0, 1]");
  }
  const Index n = scores.size();
  const auto k = static_cast<Index>(
      std::ceil(keep_ratio * static_cast<double>(n) - 1e-12));
  std::vector<Index> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return scores(a) > scores(b);
  });
  order.resize(static_cast<size_t>(std::max<Index>(std::min(k, n), n > 0)));
  std::sort(order.begin(), order.end());
  return order;
}

namespace {

Matrix row_normalized(const Matrix& a) {
  Matrix p = a;
  for (Index i = 0; i < a.rows(); ++i) {
    double deg = a.row(i).sum();
    if (deg != 0.0) p.row(i) /= deg;
  }
  return p;
}

Matrix submatrix(const Matrix& a, const std::vector<Index>& kept) {
  const auto k = static_cast<Index>(kept.size());
  Matrix out(k, k);
  for (Index i = 0; i < k; ++i) {
    for (Index j = 0; j < k; ++j) out(i, j) = a(kept[i], kept[j]);
  }
  return out;
}

}  // namespace

SagLevelVars sagpool_level(ad::Var h, ad::Var a, double keep_ratio,
                           ad::Var score_weights) {
  using namespace ad;
  Tape& tape = *h.tape();
  if (a.rows() != h.rows() || a.cols() != h.rows()) {
    throw ShapeError("sagpool: adjacency " + shape(a.value()) +
                     " does not match features " + shape(h.value()));
  }
  if (score_weights.rows() != h.cols() || score_weights.cols() != 1) {
    throw ShapeError("sagpool: score weights " + shape(score_weights.value()) +
                     " do not match features " + shape(h.value()));
  }
  Var smoothed = add(h, matmul(tape.constant(row_normalized(a.value())), h));
  Var scores = matmul(smoothed, score_weights);
  std::vector<Index> kept = select_top(scores.value().col(0), keep_ratio);
  Var gated = mul_col(gather_rows(h, kept), tanh(gather_rows(scores, kept)));
  return {gated, tape.constant(submatrix(a.value(), kept)), std::move(kept)};
}

SagLevel sagpool_with_scores(const Matrix& h, const Matrix& a,
                             double keep_ratio, const Vector& scores) {
  if (a.rows() != h.rows() || a.cols() != h.rows() ||
      scores.size() != h.rows()) {
    throw ShapeError("sagpool: features " + shape(h) + ", adjacency " +
                     shape(a) + " and " + std::to_string(scores.size()) +
                     " scores disagree");
  }
  SagLevel out;
  out.kept = select_top(scores, keep_ratio);
  out.scores = scores;
  out.features.resize(static_cast<Index>(out.kept.size()), h.cols());
  for (size_t i = 0; i < out.kept.size(); ++i) {
    out.features.row(static_cast<Index>(i)) =
        h.row(out.kept[i]) * std::tanh(scores(out.kept[i]));
  }
  out.adjacency = submatrix(a, out.kept);
  return out;
}

SagLevel sagpool_level(const Matrix& h, const Matrix& a, double keep_ratio,
                       const Matrix& score_weights) {
  ad::Tape tape(false);
  SagLevelVars v = sagpool_level(tape.constant(h), tape.constant(a),
                                 keep_ratio, tape.constant(score_weights));
  SagLevel out;
  out.features = v.features.value();
  out.adjacency = v.adjacency.value();
  out.kept = std::move(v.kept);
  out.scores = ((h + row_normalized(a) * h) * score_weights).col(0);
  return out;
}

ad::Var sagpool_readout(ad::Var h, ad::Var a, double keep_ratio,
                        std::span<const ad::Var> score_weights) {
  if (score_weights.empty()) throw ConfigError("sagpool needs >= 1 layer");
  const Index n = h.rows();
  std::vector<Index> original(static_cast<size_t>(n));
  std::iota(original.begin(), original.end(), Index{0});
  ad::Var feats = h, adj = a;
  for (const ad::Var& w : score_weights) {
    SagLevelVars lv = sagpool_level(feats, adj, keep_ratio, w);
    std::vector<Index> mapped;
    mapped.reserve(lv.kept.size());
    for (Index k : lv.kept) mapped.push_back(original[static_cast<size_t>(k)]);
    original = std::move(mapped);
    feats = lv.features;
    adj = lv.adjacency;
  }
  return ad::scatter_rows(feats, original, n);
}

Matrix double_sagpool(const Matrix& h, const Matrix& a, double keep_ratio,
                      const Matrix& w1, const Matrix& w2) {
  ad::Tape tape(false);
  std::vector<ad::Var> ws = {tape.constant(w1), tape.constant(w2)};
  return sagpool_readout(tape.constant(h), tape.constant(a), keep_ratio, ws)
      .value();
}

}  // namespace hiertkg::pooling
