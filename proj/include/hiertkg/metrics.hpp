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


// Ranking and classification metrics. Ties use the mid-rank convention.

#ifndef HIERTKG_METRICS_HPP_
#define HIERTKG_METRICS_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace hiertkg::metrics {

struct ScoredQuery {
  double positive = 0.0;
  std::vector<double> negatives;
};

// 1 + #(negatives > positive) + #(negatives == positive) / 2.
double rank_of_positive(const ScoredQuery& q);

// Mean reciprocal rank. Throws ConfigError when empty.
double mrr(std::span<const ScoredQuery> queries);

// Positives are visited in descending score order, ties in input order.
// Throws ConfigError without a positive label or on a size mismatch.
double average_precision(std::span<const int> labels,
                         std::span<const double> scores);

// Mann-Whitney AUC, ties counted 1/2. Throws ConfigError unless both
// classes are present.
double auc(std::span<const int> labels, std::span<const double> scores);

struct MetricReport {
  std::string split;
  int epoch = 0;
  double loss = 0.0;
  double ap = 0.0;
  double auc = 0.0;
  double mrr = 0.0;
  std::int64_t n_queries = 0;

  friend bool operator==(const MetricReport&, const MetricReport&) = default;
};

// AP and AUC over the pooled candidates (each query contributes its
// negatives, then its positive) and MRR over the queries.
MetricReport summarize(std::span<const ScoredQuery> queries,
                       std::string split, int epoch, double loss = 0.0);

}  // namespace hiertkg::metrics

#endif  // HIERTKG_METRICS_HPP_
