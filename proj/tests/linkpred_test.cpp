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


#include "hiertkg/linkpred.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "hiertkg/errors.hpp"
#include "test_util.hpp"

namespace hiertkg::linkpred {
namespace {

using testing::random_matrix;

ScoringParams random_scorer(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ScoringParams p = init_scoring(ScoringDims{3, 2, 4, 5}, rng);
  for (ad::Parameter* q : p.parameters()) {
    q->value = random_matrix(q->value.rows(), q->value.cols(), rng);
  }
  return p;
}

TEST(ScoreTest, ZeroFinalLayerGivesHalf) {
  ScoringParams p = random_scorer(1);
  p.w2.value.setZero();
  p.b2.value.setZero();
  std::mt19937_64 rng(2);
  for (int i = 0; i < 5; ++i) {
    EXPECT_EQ(score(random_matrix(4, 1, rng, -9, 9).col(0),
                    random_matrix(4, 1, rng, -9, 9).col(0), i % 3, p),
              0.5);
  }
}

TEST(ScoreTest, LargeLogitSaturates) {
  ScoringParams p = random_scorer(3);
  p.w2.value.setZero();
  p.b2.value(0, 0) = 50.0;
  const double s = score(Vector::Zero(4), Vector::Zero(4), 0, p);
  EXPECT_LT(1.0 - s, 1e-20);
}

TEST(ScoreTest, MatchesScalarForwardPass) {
  ScoringParams p = random_scorer(4);
  std::mt19937_64 rng(5);
  for (RelationId r = 0; r < 3; ++r) {
    Vector zs = random_matrix(4, 1, rng).col(0);
    Vector zo = random_matrix(4, 1, rng).col(0);
    Vector x(10);
    x << zs, zo, p.relation_emb.value.row(r).transpose();
    double out = p.b2.value(0, 0);
    for (Index j = 0; j < 5; ++j) {
      double hj = p.b1.value(0, j);
      for (Index i = 0; i < 10; ++i) hj += x(i) * p.w1.value(i, j);
      out += std::max(hj, 0.0) * p.w2.value(j, 0);
    }
    EXPECT_NEAR(logit(zs, zo, r, p), out, 1e-10);
    EXPECT_NEAR(score(zs, zo, r, p), 1.0 / (1.0 + std::exp(-out)), 1e-10);
  }
  EXPECT_THROW(score(Vector::Zero(4), Vector::Zero(4), 3, p), IndexError);
  EXPECT_THROW(score(Vector::Zero(4), Vector::Zero(4), -1, p), IndexError);
}

TEST(ScoreTest, BatchedLogitsMatchSingle) {
  ScoringParams p = random_scorer(6);
  std::mt19937_64 rng(7);
  Matrix zs = random_matrix(4, 4, rng), zo = random_matrix(4, 4, rng);
  std::vector<RelationId> rel = {0, 2, 1, 2};
  ad::Tape t(false);
  ScoringVars v = bind(t, p);
  Matrix out = logits(v, t.constant(zs), t.constant(zo), rel).value();
  for (Index i = 0; i < 4; ++i) {
    EXPECT_NEAR(out(i, 0),
                logit(zs.row(i).transpose(), zo.row(i).transpose(),
                      rel[static_cast<size_t>(i)], p),
                1e-12);
  }
}

// ---- Negatives ----------------------------------------------------------------

TEST(NegativeSamplingTest, TwoEntitiesForced) {
  std::vector<TemporalEvent> pos = {{0, 4, 1, 9.0}};
  auto neg = sample_negatives(pos, 2, 1, std::uint64_t{123});
  ASSERT_EQ(neg.size(), 1u);
  EXPECT_EQ(neg[0], (TemporalEvent{0, 4, 0, 9.0}));
}

TEST(NegativeSamplingTest, KPerPositiveExcludingObject) {
  std::vector<TemporalEvent> pos = {{0, 0, 3, 1.0}, {2, 1, 5, 2.0},
                                    {4, 0, 0, 3.0}};
  auto neg = sample_negatives(pos, 6, 3, std::uint64_t{7});
  ASSERT_EQ(neg.size(), 9u);
  for (size_t i = 0; i < neg.size(); ++i) {
    const TemporalEvent& p = pos[i / 3];
    EXPECT_EQ(neg[i].source, p.source);
    EXPECT_EQ(neg[i].relation, p.relation);
    EXPECT_EQ(neg[i].timestamp, p.timestamp);
    EXPECT_NE(neg[i].destination, p.destination);
    EXPECT_GE(neg[i].destination, 0);
    EXPECT_LT(neg[i].destination, 6);
  }
}

TEST(NegativeSamplingTest, SeedDeterminism) {
  std::vector<TemporalEvent> pos(50, TemporalEvent{1, 0, 2, 0.0});
  EXPECT_EQ(sample_negatives(pos, 30, 2, std::uint64_t{99}),
            sample_negatives(pos, 30, 2, std::uint64_t{99}));
  EXPECT_NE(sample_negatives(pos, 30, 2, std::uint64_t{99}),
            sample_negatives(pos, 30, 2, std::uint64_t{100}));
}

TEST(NegativeSamplingTest, UniformChiSquare) {
  const Index n = 100;
  std::vector<TemporalEvent> pos(10000, TemporalEvent{5, 0, 0, 0.0});
  auto neg = sample_negatives(pos, n, 1, std::uint64_t{2026});
  std::vector<double> counts(static_cast<size_t>(n), 0.0);
  for (const auto& e : neg) counts[static_cast<size_t>(e.destination)] += 1.0;
  EXPECT_EQ(counts[0], 0.0);
  const double expected = 10000.0 / (n - 1);
  double chi2 = 0.0;
  for (Index i = 1; i < n; ++i) {
    const double d = counts[static_cast<size_t>(i)] - expected;
    chi2 += d * d / expected;
  }
  // Chi-square with 98 degrees of freedom: mean 98, sd 14.
  const double df = static_cast<double>(n - 2);
  EXPECT_LT(std::abs(chi2 - df), 3.0 * std::sqrt(2.0 * df)) << chi2;
}

TEST(NegativeSamplingTest, FilterAvoidsFacts) {
  std::vector<TemporalEvent> pos = {{0, 0, 1, 5.0}};
  FactSet facts = {{0, 0, 1, 5.0}, {0, 0, 2, 5.0}, {0, 0, 3, 5.0}};
  auto neg = sample_negatives(pos, 5, 200, std::uint64_t{1}, &facts);
  for (const auto& e : neg) {
    EXPECT_TRUE(e.destination == 0 || e.destination == 4) << e.destination;
  }
}

TEST(NegativeSamplingTest, Errors) {
  std::vector<TemporalEvent> pos = {{0, 0, 0, 0.0}};
  EXPECT_THROW(sample_negatives(pos, 1, 1, std::uint64_t{0}), ConfigError);
  EXPECT_THROW(sample_negatives(pos, 5, 0, std::uint64_t{0}), ConfigError);
}

// ---- Loss ---------------------------------------------------------------------

double reference_bce(const std::vector<double>& pos,
                     const std::vector<double>& neg, bool sum) {
  auto clampp = [](double p) {
    return std::min(std::max(p, kProbEpsilon), 1.0 - kProbEpsilon);
  };
  double a = 0.0, b = 0.0;
  for (double p : pos) a -= std::log(clampp(p));
  for (double p : neg) b -= std::log(1.0 - clampp(p));
  if (!sum) {
    a /= static_cast<double>(pos.size());
    if (!neg.empty()) b /= static_cast<double>(neg.size());
  }
  return a + b;
}

TEST(BceLossTest, Examples) {
  std::vector<double> half = {0.5};
  EXPECT_NEAR(bce_loss(half, half), 2.0 * std::log(2.0), 1e-15);
  std::vector<double> hi = {1.0 - kProbEpsilon}, lo = {kProbEpsilon};
  EXPECT_NEAR(bce_loss(hi, lo), 2.0 * kProbEpsilon, 1e-12);
  std::vector<double> none;
  EXPECT_THROW(bce_loss(none, half), ConfigError);
  EXPECT_NEAR(bce_loss(half, none), std::log(2.0), 1e-15);
  std::vector<double> zero = {0.0}, one = {1.0};
  EXPECT_TRUE(std::isfinite(bce_loss(zero, one)));
}

TEST(BceLossTest, MatchesScalarReference) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> pos(1 + trial % 7), neg(trial % 5);
    for (double& p : pos) p = u(rng);
    for (double& p : neg) p = u(rng);
    EXPECT_NEAR(bce_loss(pos, neg), reference_bce(pos, neg, false), 1e-12);
    EXPECT_NEAR(bce_loss(pos, neg, Reduction::kSum),
                reference_bce(pos, neg, true), 1e-12);
    if (neg.empty()) continue;
    ad::Tape t(false);
    Matrix pp = Eigen::Map<Matrix>(pos.data(), static_cast<Index>(pos.size()), 1);
    Matrix nn = Eigen::Map<Matrix>(neg.data(), static_cast<Index>(neg.size()), 1);
    EXPECT_NEAR(bce_loss(t.constant(pp), t.constant(nn)).item(),
                bce_loss(pos, neg), 1e-12);
  }
}

TEST(BceLossTest, Monotone) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> pos = {u(rng), u(rng), u(rng)};
    std::vector<double> neg = {u(rng), u(rng)};
    const double base = bce_loss(pos, neg);
    std::vector<double> pos_up = pos, neg_up = neg;
    pos_up[trial % 3] = std::min(1.0, pos_up[trial % 3] + u(rng) * 0.5);
    neg_up[trial % 2] = std::min(1.0, neg_up[trial % 2] + u(rng) * 0.5);
    EXPECT_LE(bce_loss(pos_up, neg), base);
    EXPECT_GE(bce_loss(pos, neg_up), base);
  }
}

TEST(BceLossTest, GradientWithRespectToLogits) {
  std::mt19937_64 rng(10);
  ad::Parameter lp("pos_logits", random_matrix(4, 1, rng, -3, 3));
  ad::Parameter ln("neg_logits", random_matrix(6, 1, rng, -3, 3));
  for (Reduction red : {Reduction::kMean, Reduction::kSum}) {
    auto loss = [&](ad::Tape& t) {
      return bce_loss(ad::sigmoid(t.param(lp)), ad::sigmoid(t.param(ln)), red);
    };
    testing::GradCheck g = testing::check_gradients({&lp, &ln}, loss);
    EXPECT_LT(g.max_rel_error, 1e-4) << g.worst;
  }
}

TEST(ScorerGradientTest, MatchesFiniteDifferences) {
  ScoringParams p = random_scorer(11);
  std::mt19937_64 rng(12);
  Matrix zs = random_matrix(5, 4, rng), zo = random_matrix(5, 4, rng);
  Matrix zn = random_matrix(5, 4, rng);
  std::vector<RelationId> rel = {0, 1, 2, 1, 0};
  auto loss = [&](ad::Tape& t) {
    ScoringVars v = bind(t, p);
    ad::Var pos = ad::sigmoid(logits(v, t.constant(zs), t.constant(zo), rel));
    ad::Var neg = ad::sigmoid(logits(v, t.constant(zs), t.constant(zn), rel));
    return bce_loss(pos, neg);
  };
  testing::GradCheck g = testing::check_gradients(p.parameters(), loss);
  EXPECT_LT(g.max_rel_error, 1e-4) << g.worst;
}

}  // namespace
}  // namespace hiertkg::linkpred
