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

#include <algorithm>
#include <numeric>

#include "hiertkg/errors.hpp"

namespace hiertkg::metrics {

double rank_of_positive(const ScoredQuery& q) {
  double greater = 0.0, equal = 0.0;
  for (double s : q.negatives) {
    if (s > q.positive) {
      greater += 1.0;
    } else if (s == q.positive) {
      equal += 1.0;
    }
  }
  return 1.0 + greater + equal / 2.0;
}

double mrr(std::span<const ScoredQuery> queries) {
  if (queries.empty()) throw ConfigError("mrr of an empty query list");
  double total = 0.0;
  for (const ScoredQuery& q : queries) total += 1.0 / rank_of_positive(q);
  return total / static_cast<double>(queries.size());
}

namespace {

void check_sizes(std::span<const int> labels, std::span<const double> scores) {
  if (labels.size() != scores.size()) {
    throw ConfigError(std::to_string(labels.size()) + " labels but " +
                      std::to_string(scores.size()) + " scores");
  }
}

}  // namespace

double average_precision(std::span<const int> labels,
                         std::span<const double> scores) {
  check_sizes(labels, scores);
  std::vector<size_t> order(labels.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return scores[a] > scores[b]; });
  double hits = 0.0, total = 0.0;
  for (size_t k = 0; k < order.size(); ++k) {
    if (labels[order[k]] != 0) {
      hits += 1.0;
      total += hits / static_cast<double>(k + 1);
    }
  }
  if (hits == 0.0) throw ConfigError("average precision needs a positive");
  return total / hits;
}

double auc(std::span<const int> labels, std::span<const double> scores) {
  check_sizes(labels, scores);
  // Rank-sum form: sort once, assign mid-ranks to tied groups.
  const size_t n = labels.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return scores[a] < scores[b]; });
  double pos = 0.0, rank_sum = 0.0;
  for (size_t i = 0; i < n;) {
    size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double mid = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (size_t k = i; k < j; ++k) {
      if (labels[order[k]] != 0) {
        pos += 1.0;
        rank_sum += mid;
      }
    }
    i = j;
  }
  const double neg = static_cast<double>(n) - pos;
  if (pos == 0.0 || neg == 0.0) {
    throw ConfigError("AUC needs both positive and negative labels");
  }
  return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

MetricReport summarize(std::span<const ScoredQuery> queries, std::string split,
                       int epoch, double loss) {
  std::vector<int> labels;
  std::vector<double> scores;
  for (const ScoredQuery& q : queries) {
    for (double s : q.negatives) {
      labels.push_back(0);
      scores.push_back(s);
    }
    labels.push_back(1);
    scores.push_back(q.positive);
  }
  MetricReport r;
  r.split = std::move(split);
  r.epoch = epoch;
  r.loss = loss;
  r.mrr = mrr(queries);
  r.ap = average_precision(labels, scores);
  r.auc = auc(labels, scores);
  r.n_queries = static_cast<std::int64_t>(queries.size());
  return r;
}

}  // namespace hiertkg::metrics
