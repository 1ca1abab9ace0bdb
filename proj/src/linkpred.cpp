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

#include <cmath>
#include <string>

#include "hiertkg/errors.hpp"
#include "hiertkg/init.hpp"

namespace hiertkg::linkpred {
namespace {

constexpr int kFilterAttempts = 64;

void check_relation(RelationId r, Index num_relations) {
  if (r < 0 || r >= num_relations) {
    throw IndexError("relation " + std::to_string(r) + " outside 0.." +
                     std::to_string(num_relations - 1));
  }
}

ScoringVars bind_values(ad::Tape& tape, const ScoringParams& p) {
  return {tape.constant(p.relation_emb.value), tape.constant(p.w1.value),
          tape.constant(p.b1.value), tape.constant(p.w2.value),
          tape.constant(p.b2.value)};
}

double clamp_prob(double p) {
  return std::min(std::max(p, kProbEpsilon), 1.0 - kProbEpsilon);
}

}  // namespace

std::vector<ad::Parameter*> ScoringParams::parameters() {
  return {&relation_emb, &w1, &b1, &w2, &b2};
}

ScoringParams init_scoring(const ScoringDims& d, std::mt19937_64& rng) {
  if (d.num_relations < 1 || d.relation_dim < 1 || d.embed_dim < 1 ||
      d.hidden_dim < 1) {
    throw ConfigError("scorer dimensions must all be >= 1");
  }
  ScoringParams p;
  p.dims = d;
  p.relation_emb = ad::Parameter(
      "scorer.relation_emb",
      init::uniform(d.num_relations, d.relation_dim,
                    1.0 / std::sqrt(static_cast<double>(d.relation_dim)),
                    rng));
  p.w1 = ad::Parameter("scorer.w1",
                       init::fan_in(2 * d.embed_dim + d.relation_dim,
                                    d.hidden_dim, rng));
  p.b1 = ad::Parameter("scorer.b1", Matrix::Zero(1, d.hidden_dim));
  p.w2 = ad::Parameter("scorer.w2", init::fan_in(d.hidden_dim, 1, rng));
  p.b2 = ad::Parameter("scorer.b2", Matrix::Zero(1, 1));
  return p;
}

ScoringVars bind(ad::Tape& tape, ScoringParams& p) {
  return {tape.param(p.relation_emb), tape.param(p.w1), tape.param(p.b1),
          tape.param(p.w2), tape.param(p.b2)};
}

ad::Var logits(const ScoringVars& v, ad::Var z_s, ad::Var z_o,
               std::span<const RelationId> relations) {
  using namespace ad;
  if (static_cast<Index>(relations.size()) != z_s.rows()) {
    throw ShapeError("scorer: " + std::to_string(relations.size()) +
                     " relations for " + std::to_string(z_s.rows()) +
                     " rows");
  }
  std::vector<Index> idx;
  idx.reserve(relations.size());
  for (RelationId r : relations) {
    check_relation(r, v.relation_emb.rows());
    idx.push_back(r);
  }
  std::vector<Var> parts = {z_s, z_o, gather_rows(v.relation_emb, idx)};
  Var h = relu(add_row(matmul(concat_cols(parts), v.w1), v.b1));
  return add_row(matmul(h, v.w2), v.b2);
}

double logit(const Vector& z_s, const Vector& z_o, RelationId relation,
             const ScoringParams& p) {
  check_relation(relation, p.relation_emb.value.rows());
  ad::Tape tape(false);
  ScoringVars v = bind_values(tape, p);
  RelationId rel[] = {relation};
  return logits(v, tape.constant(z_s.transpose()),
                tape.constant(z_o.transpose()), rel)
      .item();
}

double score(const Vector& z_s, const Vector& z_o, RelationId relation,
             const ScoringParams& p) {
  ad::Tape tape(false);
  Matrix x(1, 1);
  x(0, 0) = logit(z_s, z_o, relation, p);
  return ad::sigmoid(tape.constant(x)).item();
}

std::vector<TemporalEvent> sample_negatives(std::span<const TemporalEvent> batch,
                                            Index num_entities, Index k,
                                            std::mt19937_64& rng,
                                            const FactSet* filter) {
  if (num_entities < 2) {
    throw ConfigError("negative sampling needs >= 2 entities, got " +
                      std::to_string(num_entities));
  }
  if (k < 1) throw ConfigError("negatives per positive must be >= 1");
  std::uniform_int_distribution<EntityId> dist(0, num_entities - 2);
  auto draw = [&](EntityId o) {
    EntityId c = dist(rng);
    return c >= o ? c + 1 : c;
  };
  std::vector<TemporalEvent> out;
  out.reserve(batch.size() * static_cast<size_t>(k));
  for (const TemporalEvent& e : batch) {
    for (Index i = 0; i < k; ++i) {
      EntityId c = draw(e.destination);
      if (filter != nullptr) {
        for (int a = 0; a < kFilterAttempts &&
                        filter->contains({e.source, e.relation, c, e.timestamp});
             ++a) {
          c = draw(e.destination);
        }
      }
      out.push_back({e.source, e.relation, c, e.timestamp});
    }
  }
  return out;
}

std::vector<TemporalEvent> sample_negatives(std::span<const TemporalEvent> batch,
                                            Index num_entities, Index k,
                                            std::uint64_t seed,
                                            const FactSet* filter) {
  std::mt19937_64 rng(seed);
  return sample_negatives(batch, num_entities, k, rng, filter);
}

double bce_loss(std::span<const double> pos_probs,
                std::span<const double> neg_probs, Reduction reduction) {
  if (pos_probs.empty()) throw ConfigError("bce_loss needs >= 1 positive");
  auto reduce = [&](double total, size_t n) {
    return reduction == Reduction::kMean ? total / static_cast<double>(n)
                                         : total;
  };
  double pos = 0.0;
  for (double p : pos_probs) pos -= std::log(clamp_prob(p));
  double loss = reduce(pos, pos_probs.size());
  if (!neg_probs.empty()) {
    double neg = 0.0;
    for (double p : neg_probs) neg -= std::log(1.0 - clamp_prob(p));
    loss += reduce(neg, neg_probs.size());
  }
  return loss;
}

ad::Var bce_loss(ad::Var pos_probs, ad::Var neg_probs, Reduction reduction) {
  using namespace ad;
  if (!pos_probs.valid() || pos_probs.rows() == 0) {
    throw ConfigError("bce_loss needs >= 1 positive");
  }
  auto reduce = [&](Var x) {
    return reduction == Reduction::kMean ? mean(x) : sum(x);
  };
  const double lo = kProbEpsilon, hi = 1.0 - kProbEpsilon;
  Var loss = scale(reduce(log(clamp(pos_probs, lo, hi))), -1.0);
  if (neg_probs.valid() && neg_probs.rows() > 0) {
    Var neg = scale(reduce(log(one_minus(clamp(neg_probs, lo, hi)))), -1.0);
    loss = add(loss, neg);
  }
  return loss;
}

}  // namespace hiertkg::linkpred
