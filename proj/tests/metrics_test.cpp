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


#include "hiertkg/metrics.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "hiertkg/errors.hpp"

namespace hiertkg::metrics {
namespace {

// Sort-based rank: position of the positive among all candidates sorted in
// descending order, averaged over its tie block.
double sort_rank(const ScoredQuery& q) {
  std::vector<double> all = q.negatives;
  all.push_back(q.positive);
  std::sort(all.begin(), all.end(), std::greater<>());
  double first = 0.0, last = 0.0;
  bool seen = false;
  for (size_t i = 0; i < all.size(); ++i) {
    if (all[i] == q.positive) {
      if (!seen) first = static_cast<double>(i + 1);
      last = static_cast<double>(i + 1);
      seen = true;
    }
  }
  return (first + last) / 2.0;
}

// O(n^2) definition with stable tie order.
double definitional_ap(const std::vector<int>& labels,
                       const std::vector<double>& scores) {
  const size_t n = labels.size();
  double total = 0.0;
  int positives = 0;
  for (size_t i = 0; i < n; ++i) {
    if (!labels[i]) continue;
    ++positives;
    int ahead = 0, ahead_pos = 0;
    for (size_t j = 0; j < n; ++j) {
      const bool before =
          scores[j] > scores[i] || (scores[j] == scores[i] && j < i);
      if (before) {
        ++ahead;
        ahead_pos += labels[j];
      }
    }
    total += static_cast<double>(ahead_pos + 1) / (ahead + 1);
  }
  return total / positives;
}

double pairwise_auc(const std::vector<int>& labels,
                    const std::vector<double>& scores) {
  double wins = 0.0, pairs = 0.0;
  for (size_t i = 0; i < labels.size(); ++i) {
    for (size_t j = 0; j < labels.size(); ++j) {
      if (labels[i] != 1 || labels[j] != 0) continue;
      pairs += 1.0;
      if (scores[i] > scores[j]) wins += 1.0;
      if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  return wins / pairs;
}

std::vector<ScoredQuery> random_queries(std::mt19937_64& rng, int n, int k,
                                        int levels) {
  std::uniform_int_distribution<int> lvl(0, levels);
  std::vector<ScoredQuery> qs(static_cast<size_t>(n));
  for (auto& q : qs) {
    q.positive = lvl(rng) / static_cast<double>(levels);
    for (int j = 0; j < k; ++j) q.negatives.push_back(lvl(rng) / static_cast<double>(levels));
  }
  return qs;
}

TEST(RankTest, Examples) {
  EXPECT_EQ(rank_of_positive({0.9, {0.1, 0.2}}), 1.0);
  EXPECT_EQ(rank_of_positive({0.5, {0.5}}), 1.5);
  EXPECT_EQ(rank_of_positive({0.1, {0.5, 0.1, 0.3}}), 3.5);
}

TEST(RankTest, MatchesSortOracle) {
  std::mt19937_64 rng(1);
  for (const ScoredQuery& q : random_queries(rng, 500, 7, 5)) {
    EXPECT_EQ(rank_of_positive(q), sort_rank(q));
  }
}

TEST(MrrTest, Examples) {
  std::vector<ScoredQuery> perfect = {{1.0, {0.0}}, {0.7, {0.1, 0.2}}};
  EXPECT_EQ(mrr(perfect), 1.0);
  std::vector<ScoredQuery> ranks = {
      {0.9, {0.1}}, {0.5, {0.6}}, {0.1, {0.2, 0.3, 0.4}}};
  EXPECT_NEAR(mrr(ranks), 7.0 / 12.0, 1e-15);
  EXPECT_THROW(mrr(std::vector<ScoredQuery>{}), ConfigError);
}

TEST(MrrTest, OneNegativeEnumeration) {
  std::mt19937_64 rng(2);
  auto qs = random_queries(rng, 400, 1, 4);
  double wins = 0.0, ties = 0.0;
  for (const auto& q : qs) {
    if (q.positive > q.negatives[0]) wins += 1.0;
    if (q.positive == q.negatives[0]) ties += 1.0;
  }
  const double n = static_cast<double>(qs.size());
  const double losses = n - wins - ties;
  EXPECT_NEAR(mrr(qs), (wins + ties / 1.5 + losses / 2.0) / n, 1e-12);
  EXPECT_NEAR(mrr(qs), 0.5 + 0.5 * (wins + ties / 1.5 * 2.0 - ties) / n,
              1e-12);
}

TEST(MrrTest, OneNegativeIdentityWithoutTies) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<ScoredQuery> qs(300);
  double wins = 0.0;
  for (auto& q : qs) {
    q.positive = u(rng);
    q.negatives = {u(rng)};
    wins += q.positive > q.negatives[0];
  }
  EXPECT_NEAR(mrr(qs), (1.0 + wins / 300.0) / 2.0, 1e-12);
}

TEST(AveragePrecisionTest, Examples) {
  std::vector<int> l = {1, 0};
  std::vector<double> s = {0.1, 0.9};
  EXPECT_EQ(average_precision(l, s), 0.5);
  std::vector<int> l2 = {1, 1, 0, 0};
  std::vector<double> s2 = {0.9, 0.8, 0.2, 0.1};
  EXPECT_EQ(average_precision(l2, s2), 1.0);
  std::vector<int> neg_only = {0, 0};
  EXPECT_THROW(average_precision(neg_only, s), ConfigError);
  std::vector<double> short_scores = {0.1};
  EXPECT_THROW(average_precision(l, short_scores), ConfigError);
}

TEST(AveragePrecisionTest, MatchesDefinition) {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> lvl(0, 6);
  std::bernoulli_distribution lab(0.4);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<int> labels(static_cast<size_t>(5 + trial));
    std::vector<double> scores(labels.size());
    for (size_t i = 0; i < labels.size(); ++i) {
      labels[i] = lab(rng);
      scores[i] = lvl(rng) / 6.0;
    }
    labels[0] = 1;
    EXPECT_NEAR(average_precision(labels, scores),
                definitional_ap(labels, scores), 1e-12);
  }
}

TEST(AucTest, Examples) {
  std::vector<int> l = {1, 0, 1, 0};
  std::vector<double> sep = {0.9, 0.1, 0.8, 0.2};
  EXPECT_EQ(auc(l, sep), 1.0);
  std::vector<double> flat = {0.3, 0.3, 0.3, 0.3};
  EXPECT_EQ(auc(l, flat), 0.5);
  std::vector<int> one_class = {1, 1};
  std::vector<double> s = {0.1, 0.2};
  EXPECT_THROW(auc(one_class, s), ConfigError);
}

TEST(AucTest, MatchesPairwiseCount) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> lvl(0, 9);
  std::bernoulli_distribution lab(0.5);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<int> labels(static_cast<size_t>(4 + trial));
    std::vector<double> scores(labels.size());
    for (size_t i = 0; i < labels.size(); ++i) {
      labels[i] = lab(rng);
      scores[i] = lvl(rng) / 9.0;
    }
    labels[0] = 1;
    labels[1] = 0;
    EXPECT_EQ(auc(labels, scores), pairwise_auc(labels, scores));
  }
}

TEST(MetricPropertyTest, StrictlyIncreasingTransformInvariant) {
  std::mt19937_64 rng(6);
  auto qs = random_queries(rng, 200, 3, 8);
  auto f = [](double x) { return std::exp(3.0 * x) - 7.0; };
  std::vector<ScoredQuery> tq = qs;
  for (auto& q : tq) {
    q.positive = f(q.positive);
    for (double& x : q.negatives) x = f(x);
  }
  for (size_t i = 0; i < qs.size(); ++i) {
    EXPECT_EQ(rank_of_positive(qs[i]), rank_of_positive(tq[i]));
  }
  MetricReport a = summarize(qs, "val", 1), b = summarize(tq, "val", 1);
  EXPECT_EQ(a.mrr, b.mrr);
  EXPECT_EQ(a.ap, b.ap);
  EXPECT_EQ(a.auc, b.auc);
}

TEST(MetricPropertyTest, Bounds) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    auto qs = random_queries(rng, 20, 1 + trial % 4, 3);
    MetricReport r = summarize(qs, "test", 0);
    EXPECT_GT(r.mrr, 0.0);
    EXPECT_LE(r.mrr, 1.0);
    EXPECT_GE(r.ap, 0.0);
    EXPECT_LE(r.ap, 1.0);
    EXPECT_GE(r.auc, 0.0);
    EXPECT_LE(r.auc, 1.0);
  }
}

TEST(SummarizeTest, PoolsNegativesBeforePositive) {
  std::vector<ScoredQuery> qs = {{0.7, {0.2}}, {0.4, {0.4, 0.9}}};
  MetricReport r = summarize(qs, "train", 3, 0.25);
  std::vector<int> labels = {0, 1, 0, 0, 1};
  std::vector<double> scores = {0.2, 0.7, 0.4, 0.9, 0.4};
  EXPECT_EQ(r.ap, average_precision(labels, scores));
  EXPECT_EQ(r.auc, auc(labels, scores));
  EXPECT_NEAR(r.mrr, (1.0 + 1.0 / 2.5) / 2.0, 1e-15);
  EXPECT_EQ(r.split, "train");
  EXPECT_EQ(r.epoch, 3);
  EXPECT_EQ(r.loss, 0.25);
  EXPECT_EQ(r.n_queries, 2);
}

}  // namespace
}  // namespace hiertkg::metrics
