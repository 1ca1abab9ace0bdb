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


// Link scoring, negative sampling and the binary cross-entropy objective.

#ifndef HIERTKG_LINKPRED_HPP_
#define HIERTKG_LINKPRED_HPP_

#include <cstdint>
#include <random>
#include <set>
#include <span>
#include <tuple>
#include <vector>

#include "hiertkg/autograd.hpp"
#include "hiertkg/tkg_data.hpp"

namespace hiertkg::linkpred {

using ad::Index;
using ad::Matrix;
using Vector = Eigen::VectorXd;

struct ScoringDims {
  Index num_relations = 1;
  Index relation_dim = 32;
  Index embed_dim = 128;   // width of z_s and z_o
  Index hidden_dim = 128;  // d_f
};

// logit = relu([z_s || z_o || rel] W1 + b1) W2 + b2.
struct ScoringParams {
  ScoringDims dims;
  ad::Parameter relation_emb;  // [num_relations x relation_dim]
  ad::Parameter w1;            // [2*embed_dim + relation_dim x hidden_dim]
  ad::Parameter b1;            // [1 x hidden_dim]
  ad::Parameter w2;            // [hidden_dim x 1]
  ad::Parameter b2;            // [1 x 1]

  std::vector<ad::Parameter*> parameters();
};

ScoringParams init_scoring(const ScoringDims& dims, std::mt19937_64& rng);

struct ScoringVars {
  ad::Var relation_emb, w1, b1, w2, b2;
};
ScoringVars bind(ad::Tape& tape, ScoringParams& p);

// Sigmoid of the logit. Throws IndexError for an unknown relation.
double score(const Vector& z_s, const Vector& z_o, RelationId relation,
             const ScoringParams& p);
double logit(const Vector& z_s, const Vector& z_o, RelationId relation,
             const ScoringParams& p);

// Row i scores (z_s[i], z_o[i], relations[i]); returns [n x 1] logits.
ad::Var logits(const ScoringVars& v, ad::Var z_s, ad::Var z_o,
               std::span<const RelationId> relations);

// ---- Negatives -------------------------------------------------------------

// True (s, r, o, t) quadruples; used to skip corruptions that are real facts.
using FactSet = std::set<std::tuple<EntityId, RelationId, EntityId, double>>;

// k corruptions (s, r, o', t) per positive, o' uniform over all entities
// except o, emitted positive by positive. When `filter` is set, o' also
// avoids destinations that form a fact in it; if that leaves no candidate
// the unfiltered draw is kept. Throws ConfigError if num_entities < 2 or
// k < 1.
std::vector<TemporalEvent> sample_negatives(std::span<const TemporalEvent> batch,
                                            Index num_entities, Index k,
                                            std::mt19937_64& rng,
                                            const FactSet* filter = nullptr);
std::vector<TemporalEvent> sample_negatives(std::span<const TemporalEvent> batch,
                                            Index num_entities, Index k,
                                            std::uint64_t seed,
                                            const FactSet* filter = nullptr);

// ---- Loss ------------------------------------------------------------------

inline constexpr double kProbEpsilon = 1e-7;

enum class Reduction { kMean, kSum };

// -reduce(log p_pos) - reduce(log(1 - p_neg)) with probabilities clamped to
// [eps, 1 - eps]. An empty negative list contributes 0. Throws ConfigError
// when there are no positives.
double bce_loss(std::span<const double> pos_probs,
                std::span<const double> neg_probs,
                Reduction reduction = Reduction::kMean);
// Column vectors of probabilities.
ad::Var bce_loss(ad::Var pos_probs, ad::Var neg_probs,
                 Reduction reduction = Reduction::kMean);

}  // namespace hiertkg::linkpred

#endif  // HIERTKG_LINKPRED_HPP_
