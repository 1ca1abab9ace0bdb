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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "hiertkg/errors.hpp"
#include "test_util.hpp"

namespace hiertkg::pooling {
namespace {

using testing::random_matrix;

Matrix symmetric_adjacency(Index n, std::mt19937_64& rng) {
  std::bernoulli_distribution edge(0.4);
  std::uniform_int_distribution<int> w(1, 3);
  Matrix a = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i; j < n; ++j) {
      if (edge(rng)) a(i, j) = a(j, i) = w(rng);
    }
  }
  return a;
}

// Naive dense product.
Matrix naive(const Matrix& x, const Matrix& y) {
  Matrix out = Matrix::Zero(x.rows(), y.cols());
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index j = 0; j < y.cols(); ++j) {
      for (Index k = 0; k < x.cols(); ++k) out(i, j) += x(i, k) * y(k, j);
    }
  }
  return out;
}

Matrix naive_softmax_rows(const Matrix& x) {
  Matrix out(x.rows(), x.cols());
  for (Index i = 0; i < x.rows(); ++i) {
    double mx = x(i, 0);
    for (Index j = 1; j < x.cols(); ++j) mx = std::max(mx, x(i, j));
    double z = 0.0;
    for (Index j = 0; j < x.cols(); ++j) z += std::exp(x(i, j) - mx);
    for (Index j = 0; j < x.cols(); ++j) out(i, j) = std::exp(x(i, j) - mx) / z;
  }
  return out;
}

void expect_simplex_rows(const Matrix& s) {
  for (Index i = 0; i < s.rows(); ++i) {
    EXPECT_NEAR(s.row(i).sum(), 1.0, 1e-6);
    EXPECT_GE(s.row(i).minCoeff(), 0.0);
    EXPECT_LE(s.row(i).maxCoeff(), 1.0);
  }
}

// ---- DiffPool level ----------------------------------------------------------

TEST(DiffpoolLevelTest, ZeroWeightsGiveUniformAssignment) {
  std::mt19937_64 rng(1);
  const Index n = 5, d = 3, c = 2;
  Matrix h = random_matrix(n, d, rng);
  Matrix a = symmetric_adjacency(n, rng);
  PoolingLevel lv = diffpool_level(h, a, Matrix::Zero(d, c));
  EXPECT_TRUE(lv.assignment.isApprox(Matrix::Constant(n, c, 0.5)));
  const Vector col_sum = h.colwise().sum().transpose();
  for (Index k = 0; k < c; ++k) {
    EXPECT_LT((lv.features.row(k).transpose() - col_sum / c).norm(), 1e-12);
  }
  EXPECT_TRUE(
      lv.adjacency.isApprox(Matrix::Constant(c, c, a.sum() / (c * c)), 1e-12));
}

TEST(DiffpoolLevelTest, IdentityAssignment) {
  const Index n = 4;
  Matrix h = Matrix::Identity(n, n);
  Matrix a(n, n);
  a << 0, 1, 0, 2, 1, 0, 3, 0, 0, 3, 0, 1, 2, 0, 1, 0;
  PoolingLevel lv = diffpool_level(h, a, 1e3 * Matrix::Identity(n, n));
  EXPECT_LT((lv.assignment - Matrix::Identity(n, n)).norm(), 1e-12);
  EXPECT_LT((lv.features - h).norm(), 1e-12);
  EXPECT_LT((lv.adjacency - a).norm(), 1e-12);
}

TEST(DiffpoolLevelTest, MatchesNaiveProducts) {
  std::mt19937_64 rng(2);
  Matrix h = random_matrix(6, 4, rng);
  Matrix a = random_matrix(6, 6, rng, 0.0, 2.0);
  Matrix w = random_matrix(4, 2, rng);
  PoolingLevel lv = diffpool_level(h, a, w);
  Matrix s = naive_softmax_rows(naive(h, w));
  Matrix st = s.transpose();
  EXPECT_LT((lv.assignment - s).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((lv.features - naive(st, h)).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((lv.adjacency - naive(naive(st, a), s)).cwiseAbs().maxCoeff(),
            1e-10);
}

TEST(DiffpoolLevelTest, ShapeErrorNamesBothShapes) {
  Matrix h = Matrix::Zero(3, 2);
  try {
    diffpool_level(h, Matrix::Zero(3, 3), Matrix::Zero(5, 2));
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("5 x 2"), std::string::npos) << msg;
    EXPECT_NE(msg.find("3 x 2"), std::string::npos) << msg;
  }
  EXPECT_THROW(diffpool_level(h, Matrix::Zero(2, 2), Matrix::Zero(2, 1)),
               ShapeError);
}

TEST(DiffpoolLevelTest, VarFormAgreesWithValueForm) {
  std::mt19937_64 rng(3);
  Matrix h = random_matrix(7, 3, rng), a = symmetric_adjacency(7, rng);
  Matrix w = random_matrix(3, 3, rng);
  PoolingLevel lv = diffpool_level(h, a, w);
  ad::Tape t;
  LevelVars v = diffpool_level(t.constant(h), t.constant(a), t.constant(w));
  EXPECT_EQ(lv.assignment, v.assignment.value());
  EXPECT_EQ(lv.features, v.features.value());
  EXPECT_EQ(lv.adjacency, v.adjacency.value());
}

// ---- Hierarchy ----------------------------------------------------------------

TEST(HierarchyConfigTest, Validation) {
  HierarchyConfig ok{3, {4, 2}};
  EXPECT_NO_THROW(ok.validate(8));
  EXPECT_THROW((HierarchyConfig{3, {4, 4}}).validate(8), ConfigError);
  EXPECT_THROW((HierarchyConfig{3, {9, 2}}).validate(8), ConfigError);
  EXPECT_THROW((HierarchyConfig{3, {2, 0}}).validate(8), ConfigError);
  EXPECT_THROW((HierarchyConfig{3, {}}).validate(8), ConfigError);
}

TEST(HierarchyConfigTest, DefaultHierarchy) {
  const std::vector<Index> div = {4, 16}, caps = {128, 32};
  EXPECT_EQ(default_hierarchy(100, 8, div, caps).cluster_counts,
            (std::vector<Index>{25, 7}));
  EXPECT_EQ(default_hierarchy(10000, 8, div, caps).cluster_counts,
            (std::vector<Index>{128, 32}));
  // ceil(3/4) = ceil(3/16) = 1: the second level would not shrink.
  EXPECT_EQ(default_hierarchy(3, 8, div, caps).cluster_counts,
            (std::vector<Index>{1}));
  for (Index n = 1; n < 300; n += 7) {
    HierarchyConfig cfg = default_hierarchy(n, 8, div, caps);
    EXPECT_NO_THROW(cfg.validate(n)) << n;
  }
}

TEST(RunHierarchyTest, SingleLevelIsDiffpoolLevel) {
  std::mt19937_64 rng(4);
  Matrix h = random_matrix(6, 3, rng), a = symmetric_adjacency(6, rng);
  std::vector<Matrix> w = {random_matrix(3, 2, rng)};
  auto levels = run_hierarchy(HierarchyConfig{3, {2}}, h, a, w);
  ASSERT_EQ(levels.size(), 1u);
  PoolingLevel one = diffpool_level(h, a, w[0]);
  EXPECT_EQ(levels[0].features, one.features);
  EXPECT_EQ(levels[0].adjacency, one.adjacency);
}

TEST(RunHierarchyTest, RejectsGrowingLevels) {
  Matrix h = Matrix::Zero(4, 2), a = Matrix::Zero(4, 4);
  std::vector<Matrix> w = {Matrix::Zero(2, 2), Matrix::Zero(2, 3)};
  EXPECT_THROW(run_hierarchy(HierarchyConfig{2, {2, 3}}, h, a, w),
               ConfigError);
}

TEST(RunHierarchyTest, EdgeMassAndSymmetryPreserved) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = 8 + trial;
    Matrix h = random_matrix(n, 4, rng);
    Matrix a = symmetric_adjacency(n, rng);
    HierarchyConfig cfg{4, {4, 2}};
    std::vector<Matrix> w = {random_matrix(4, 4, rng, -3, 3),
                             random_matrix(4, 2, rng, -3, 3)};
    auto levels = run_hierarchy(cfg, h, a, w);
    ASSERT_EQ(levels.size(), 2u);
    EXPECT_EQ(levels[1].adjacency.rows(), 2);
    EXPECT_EQ(levels[1].adjacency.cols(), 2);
    for (const PoolingLevel& lv : levels) {
      expect_simplex_rows(lv.assignment);
      EXPECT_NEAR(lv.adjacency.sum(), a.sum(), 1e-6);
      EXPECT_LT((lv.adjacency - lv.adjacency.transpose()).cwiseAbs().maxCoeff(),
                1e-12);
    }
  }
}

TEST(RunHierarchyTest, VarFormUsesLeadingColumns) {
  std::mt19937_64 rng(6);
  Matrix h = random_matrix(9, 3, rng), a = symmetric_adjacency(9, rng);
  Matrix w0 = random_matrix(3, 6, rng), w1 = random_matrix(3, 4, rng);
  HierarchyConfig cfg{3, {3, 2}};
  ad::Tape t;
  std::vector<ad::Var> wv = {t.constant(w0), t.constant(w1)};
  auto vars = run_hierarchy(cfg, t.constant(h), t.constant(a), wv);
  std::vector<Matrix> sliced = {w0.leftCols(3), w1.leftCols(2)};
  auto vals = run_hierarchy(cfg, h, a, sliced);
  for (size_t l = 0; l < 2; ++l) {
    EXPECT_LT((vars[l].features.value() - vals[l].features).norm(), 1e-12);
    EXPECT_LT((vars[l].adjacency.value() - vals[l].adjacency).norm(), 1e-12);
  }
}

// ---- Read-out -----------------------------------------------------------------

TEST(ReadoutTest, IdentityChain) {
  std::mt19937_64 rng(7);
  PoolingLevel lv{Matrix::Identity(4, 4), random_matrix(4, 3, rng),
                  Matrix::Zero(4, 4)};
  std::vector<PoolingLevel> levels = {lv};
  for (Index v = 0; v < 4; ++v) {
    EXPECT_EQ(node_structural_embedding(levels, v),
              lv.features.row(v).transpose());
  }
  EXPECT_THROW(node_structural_embedding(levels, 4), IndexError);
  EXPECT_THROW(node_structural_embedding(levels, -1), IndexError);
}

TEST(ReadoutTest, UniformAssignmentsGiveSameVector) {
  std::mt19937_64 rng(8);
  Matrix h = random_matrix(8, 3, rng), a = symmetric_adjacency(8, rng);
  std::vector<Matrix> w = {Matrix::Zero(3, 4), Matrix::Zero(3, 2)};
  auto levels = run_hierarchy(HierarchyConfig{3, {4, 2}}, h, a, w);
  const Vector first = node_structural_embedding(levels, 0);
  const Vector mean = h.colwise().mean().transpose();
  for (Index v = 0; v < 8; ++v) {
    EXPECT_LT((node_structural_embedding(levels, v) - first).norm(), 1e-12);
  }
  // Uniform pooling sums n/c2 copies of the mean into each top cluster.
  EXPECT_LT((first - mean * 8.0 / 2.0).norm(), 1e-12);
}

TEST(ReadoutTest, MatchesChainedProducts) {
  std::mt19937_64 rng(9);
  Matrix h = random_matrix(6, 3, rng), a = symmetric_adjacency(6, rng);
  std::vector<Matrix> w = {random_matrix(3, 3, rng), random_matrix(3, 2, rng)};
  auto levels = run_hierarchy(HierarchyConfig{3, {3, 2}}, h, a, w);
  Matrix chain = naive(naive(levels[0].assignment, levels[1].assignment),
                       levels[1].features);
  ad::Tape t;
  std::vector<ad::Var> wv = {t.constant(w[0]), t.constant(w[1])};
  auto vars = run_hierarchy(HierarchyConfig{3, {3, 2}}, t.constant(h),
                            t.constant(a), wv, false);
  Matrix all = structural_readout(vars).value();
  for (Index v = 0; v < 6; ++v) {
    EXPECT_LT((node_structural_embedding(levels, v) -
               chain.row(v).transpose()).cwiseAbs().maxCoeff(),
              1e-10);
    EXPECT_LT((all.row(v) - chain.row(v)).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(ReadoutTest, PermutationConsistent) {
  std::mt19937_64 rng(10);
  const Index n = 10;
  Matrix h = random_matrix(n, 4, rng), a = symmetric_adjacency(n, rng);
  std::vector<Matrix> w = {random_matrix(4, 3, rng), random_matrix(4, 2, rng)};
  HierarchyConfig cfg{4, {3, 2}};
  auto base = run_hierarchy(cfg, h, a, w);

  std::vector<Index> perm(n);
  std::iota(perm.begin(), perm.end(), Index{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  Matrix hp(n, 4), ap(n, n);
  for (Index i = 0; i < n; ++i) {
    hp.row(i) = h.row(perm[i]);
    for (Index j = 0; j < n; ++j) ap(i, j) = a(perm[i], perm[j]);
  }
  auto permuted = run_hierarchy(cfg, hp, ap, w);
  for (Index i = 0; i < n; ++i) {
    EXPECT_LT((node_structural_embedding(permuted, i) -
               node_structural_embedding(base, perm[i])).norm(),
              1e-12);
  }
}

TEST(ReadoutTest, GradientThroughHierarchy) {
  std::mt19937_64 rng(11);
  Matrix h = random_matrix(6, 3, rng), a = symmetric_adjacency(6, rng);
  ad::Parameter w0("w0", random_matrix(3, 3, rng));
  ad::Parameter w1("w1", random_matrix(3, 2, rng));
  HierarchyConfig cfg{3, {3, 2}};
  auto loss = [&](ad::Tape& t) {
    std::vector<ad::Var> wv = {t.param(w0), t.param(w1)};
    auto levels = run_hierarchy(cfg, t.constant(h), t.constant(a), wv);
    ad::Var z = structural_readout(levels);
    ad::Var aux = diffpool_aux_loss(levels, t.constant(a));
    return ad::add(ad::sum(ad::mul(z, z)), aux);
  };
  testing::GradCheck g = testing::check_gradients({&w0, &w1}, loss);
  EXPECT_LT(g.max_rel_error, 1e-4) << g.worst;
}

TEST(AuxLossTest, MatchesDirectFormula) {
  std::mt19937_64 rng(12);
  Matrix h = random_matrix(5, 2, rng), a = symmetric_adjacency(5, rng);
  Matrix w = random_matrix(2, 2, rng);
  ad::Tape t;
  std::vector<ad::Var> wv = {t.constant(w)};
  auto levels = run_hierarchy(HierarchyConfig{2, {2}}, t.constant(h),
                              t.constant(a), wv);
  const Matrix s = levels[0].assignment.value();
  Matrix target = (a.array() > 0.0).cast<double>();
  const double link = (target - s * s.transpose()).squaredNorm() / 25.0;
  double ent = 0.0;
  for (Index i = 0; i < 5; ++i) {
    for (Index j = 0; j < 2; ++j) ent -= s(i, j) * std::log(s(i, j));
  }
  EXPECT_NEAR(diffpool_aux_loss(levels, t.constant(a)).item(),
              link + ent / 5.0, 1e-9);
}

// ---- SAGPool ------------------------------------------------------------------

TEST(SelectTopTest, HandSetScores) {
  Vector s(4);
  s << 3, 1, 2, 0;
  EXPECT_EQ(select_top(s, 0.5), (std::vector<Index>{0, 2}));
  EXPECT_EQ(select_top(s, 1.0), (std::vector<Index>{0, 1, 2, 3}));
  EXPECT_EQ(select_top(s, 0.01), (std::vector<Index>{0}));
  EXPECT_THROW(select_top(s, 0.0), ConfigError);
  EXPECT_THROW(select_top(s, 1.5), ConfigError);
}

TEST(SelectTopTest, TiesGoToLowerIndex) {
  Vector s = Vector::Constant(5, 1.0);
  EXPECT_EQ(select_top(s, 0.4), (std::vector<Index>{0, 1}));
}

TEST(SelectTopTest, MatchesSortOracle) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> ratio(0.05, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const Index n = 1 + trial;
    Vector s = random_matrix(n, 1, rng).col(0);
    const double r = ratio(rng);
    const auto k = static_cast<Index>(std::ceil(r * static_cast<double>(n) - 1e-12));
    std::vector<std::pair<double, Index>> order;
    for (Index i = 0; i < n; ++i) order.push_back({-s(i), i});
    std::sort(order.begin(), order.end());
    std::vector<Index> want;
    for (Index i = 0; i < k; ++i) want.push_back(order[static_cast<size_t>(i)].second);
    std::sort(want.begin(), want.end());
    EXPECT_EQ(select_top(s, r), want);
  }
}

TEST(SagpoolTest, KeepAllOnlyGates) {
  std::mt19937_64 rng(14);
  Matrix h = random_matrix(5, 3, rng), a = symmetric_adjacency(5, rng);
  Vector scores = random_matrix(5, 1, rng).col(0);
  SagLevel lv = sagpool_with_scores(h, a, 1.0, scores);
  ASSERT_EQ(lv.kept.size(), 5u);
  EXPECT_EQ(lv.adjacency, a);
  for (Index i = 0; i < 5; ++i) {
    EXPECT_LT((lv.features.row(i) - h.row(i) * std::tanh(scores(i))).norm(),
              1e-15);
  }
}

TEST(SagpoolTest, ScoresAndSubmatrix) {
  std::mt19937_64 rng(15);
  const Index n = 9;
  Matrix h = random_matrix(n, 3, rng), a = symmetric_adjacency(n, rng);
  Matrix theta = random_matrix(3, 1, rng);
  SagLevel lv = sagpool_level(h, a, 0.5, theta);
  for (Index i = 0; i < n; ++i) {
    const double deg = a.row(i).sum();
    Vector smooth = h.row(i).transpose();
    if (deg != 0.0) {
      for (Index j = 0; j < n; ++j) smooth += a(i, j) / deg * h.row(j).transpose();
    }
    EXPECT_NEAR(lv.scores(i), smooth.dot(theta.col(0)), 1e-12);
  }
  EXPECT_EQ(lv.kept, select_top(lv.scores, 0.5));
  const auto k = static_cast<Index>(lv.kept.size());
  EXPECT_EQ(k, 5);
  for (Index i = 0; i < k; ++i) {
    for (Index j = 0; j < k; ++j) {
      EXPECT_EQ(lv.adjacency(i, j), a(lv.kept[i], lv.kept[j]));
    }
  }
}

TEST(SagpoolTest, DoubleReadoutZeroesDropped) {
  std::mt19937_64 rng(16);
  const Index n = 8;
  Matrix h = random_matrix(n, 3, rng), a = symmetric_adjacency(n, rng);
  Matrix w1 = random_matrix(3, 1, rng), w2 = random_matrix(3, 1, rng);
  Matrix out = double_sagpool(h, a, 0.5, w1, w2);
  SagLevel l1 = sagpool_level(h, a, 0.5, w1);
  SagLevel l2 = sagpool_level(l1.features, l1.adjacency, 0.5, w2);
  Matrix want = Matrix::Zero(n, 3);
  for (size_t i = 0; i < l2.kept.size(); ++i) {
    want.row(l1.kept[l2.kept[i]]) = l2.features.row(static_cast<Index>(i));
  }
  EXPECT_LT((out - want).norm(), 1e-14);
  Index nonzero = 0;
  for (Index i = 0; i < n; ++i) nonzero += out.row(i).norm() > 0.0;
  EXPECT_LE(nonzero, 2);
}

TEST(SagpoolTest, GradientThroughReadout) {
  std::mt19937_64 rng(17);
  Matrix a = symmetric_adjacency(7, rng);
  ad::Parameter h("h", random_matrix(7, 3, rng));
  ad::Parameter w1("w1", random_matrix(3, 1, rng));
  ad::Parameter w2("w2", random_matrix(3, 1, rng));
  auto loss = [&](ad::Tape& t) {
    std::vector<ad::Var> ws = {t.param(w1), t.param(w2)};
    ad::Var z = sagpool_readout(t.param(h), t.constant(a), 0.6, ws);
    return ad::sum(ad::mul(z, z));
  };
  testing::GradCheck g = testing::check_gradients({&h, &w1, &w2}, loss);
  EXPECT_LT(g.max_rel_error, 1e-4) << g.worst;
}

}  // namespace
}  // namespace hiertkg::pooling
