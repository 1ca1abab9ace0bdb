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

// Temporal Graph Network core: per-node memory, cosine time encoding,
// identity messages, last-message aggregation, gated memory update and
// multi-head attention over recent temporal neighbours.
//
// Matrices are row-major in the batch dimension: a batch of n vectors is an
// [n x dim] matrix and weights are [in x out].

#ifndef HIERTKG_TGN_HPP_
#define HIERTKG_TGN_HPP_

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "hiertkg/autograd.hpp"
#include "hiertkg/tkg_data.hpp"

namespace hiertkg::tgn {

using ad::Index;
using ad::Matrix;
using Vector = Eigen::VectorXd;

struct TgnDims {
  Index num_entities = 0;
  Index num_relations = 0;
  Index memory_dim = 100;
  Index time_dim = 100;
  Index relation_dim = 32;
  Index embed_dim = 128;
  Index heads = 2;

  Index message_dim() const {
    return 2 * memory_dim + relation_dim + time_dim;
  }
  Index key_dim() const { return memory_dim + relation_dim + time_dim; }
  Index query_dim() const { return memory_dim + time_dim; }
};

// Learnable parameters of the temporal module.
struct TgnParams {
  TgnDims dims;
  ad::Parameter time_w;        // [1 x time_dim] frequencies
  ad::Parameter time_b;        // [1 x time_dim] phases
  ad::Parameter relation_emb;  // [num_relations x relation_dim]
  // Gated memory cell over x = [message || memory].
  ad::Parameter gate_wz, gate_bz;
  ad::Parameter gate_wr, gate_br;
  ad::Parameter gate_wh, gate_bh;
  // Attention embedding.
  ad::Parameter att_wq;     // [query_dim x embed_dim]
  ad::Parameter att_wk;     // [key_dim x embed_dim]
  ad::Parameter att_wv;     // [key_dim x embed_dim]
  ad::Parameter att_wout;   // [embed_dim x embed_dim]
  ad::Parameter att_wroot;  // [query_dim x embed_dim]

  std::vector<ad::Parameter*> parameters();
};

// Throws ConfigError if heads does not divide embed_dim or a dim is < 1.
TgnParams init_tgn(const TgnDims& dims, std::mt19937_64& rng);

// Parameters bound to a tape once per forward pass.
struct TgnVars {
  ad::Var time_w, time_b, relation_emb;
  ad::Var gate_wz, gate_bz, gate_wr, gate_br, gate_wh, gate_bh;
  ad::Var att_wq, att_wk, att_wv, att_wout, att_wroot;
  Index heads = 1;
};
TgnVars bind(ad::Tape& tape, TgnParams& p);

// ---- Time encoding ---------------------------------------------------------

// cos(w * dt + b). Negative dt is clamped to 0.
Vector encode_time(const TgnParams& p, double delta_t);
// One row per delta: [deltas.size() x time_dim].
ad::Var encode_time(ad::Tape& tape, const TgnVars& v,
                    std::span<const double> deltas);

// ---- Memory ----------------------------------------------------------------

// Identity message: payload = [own memory || counterpart memory ||
// relation embedding || TE(delta_t)]. The memory rows are snapshots taken
// when the message was created; relation embedding and time encoding are
// evaluated with the current parameters so they stay differentiable.
struct Message {
  EntityId target = 0;
  EntityId counterpart = 0;
  RelationId relation = 0;
  double timestamp = 0.0;
  double delta_t = 0.0;
  Vector own_memory;
  Vector counterpart_memory;
};

Vector message_payload(const TgnParams& p, const Message& m);

class NodeMemory {
 public:
  NodeMemory() = default;
  NodeMemory(Index num_entities, Index memory_dim);

  Index num_entities() const { return state_.rows(); }
  Index dim() const { return state_.cols(); }
  const Matrix& state() const { return state_; }
  const Vector& last_update() const { return last_update_; }
  double last_update(EntityId v) const;
  Vector row(EntityId v) const;

  // Sets a node's state and timestamp. Throws IndexError for bad ids and
  // Error if the timestamp would move backwards.
  void set(EntityId v, const Vector& state, double timestamp);

  // Raw message store: the most recent not-yet-applied message per node.
  const std::map<EntityId, Message>& pending() const { return pending_; }
  void store_pending(std::map<EntityId, Message> msgs);
  std::map<EntityId, Message> take_pending();

  void reset();
  std::int64_t negative_delta_count() const { return negative_deltas_; }
  void count_negative_delta() { ++negative_deltas_; }

  friend bool operator==(const NodeMemory& a, const NodeMemory& b) {
    return a.state_ == b.state_ && a.last_update_ == b.last_update_;
  }

 private:
  void check(EntityId v) const;
  Matrix state_;
  Vector last_update_;
  std::map<EntityId, Message> pending_;
  std::int64_t negative_deltas_ = 0;
};

// Two messages per event, source-directed first. Delta is the event time
// minus the recipient's last update. Throws IndexError on unknown ids.
std::vector<Message> compute_messages(std::span<const TemporalEvent> batch,
                                      NodeMemory& mem);

// Most recent message per node; ties go to the later message in the list.
std::map<EntityId, Message> aggregate_last(std::span<const Message> messages);

// Gated recurrent update of the aggregated nodes. Untouched nodes keep their
// state; an empty map is the identity.
NodeMemory update_memory(const NodeMemory& mem,
                         const std::map<EntityId, Message>& aggregated,
                         TgnParams& p);

// Differentiable gated cell: rows of `message` [n x message_dim] and
// `memory` [n x memory_dim] produce the new memory rows.
ad::Var gated_update(const TgnVars& v, ad::Var message, ad::Var memory);

// Payload rows for a list of messages, differentiable in the relation table
// and time encoder.
ad::Var message_payloads(ad::Tape& tape, const TgnVars& v,
                         std::span<const Message> messages);

// ---- Temporal neighbourhood ------------------------------------------------

struct NeighborEntry {
  EntityId neighbor = 0;
  RelationId relation = 0;
  double timestamp = 0.0;
};

// The K most recent interactions per node, in arrival order.
class TemporalNeighbors {
 public:
  TemporalNeighbors() = default;
  TemporalNeighbors(Index num_entities, size_t window);

  void insert(const TemporalEvent& e);
  void insert(std::span<const TemporalEvent> events);
  const std::deque<NeighborEntry>& of(EntityId v) const;
  size_t window() const { return window_; }
  void reset();

 private:
  size_t window_ = 10;
  std::vector<std::deque<NeighborEntry>> lists_;
};

struct EmbedQuery {
  EntityId node = 0;
  double time = 0.0;
};

// Output of the attention embedding for a list of queries.
struct TemporalEmbedding {
  ad::Var embeddings;              // [queries x embed_dim]
  ad::Var attention;               // [neighbour rows x heads]
  std::vector<Index> offsets;      // neighbour rows per query
};

// Multi-head attention over each query node's recent neighbours. The query
// is [memory || TE(0)]; keys and values come from
// [neighbour memory || relation embedding || TE(t - t_event)]. The output is
// Wout * concat(heads) + Wroot * query; a node with no neighbours gets the
// root term alone.
//
// `memory` holds one row per local node: the memory of node v is row
// local_index.at(v). Every query node and neighbour must be present (else
// IndexError). Neighbour entries later than the query time are ignored.
TemporalEmbedding temporal_embed(ad::Tape& tape, const TgnVars& v,
                                 std::span<const EmbedQuery> queries,
                                 ad::Var memory,
                                 const std::map<EntityId, Index>& local_index,
                                 const TemporalNeighbors& neighbors);

// Convenience for callers holding a plain NodeMemory: returns the
// [queries x embed_dim] matrix.
Matrix temporal_embed(TgnParams& p, std::span<const EmbedQuery> queries,
                      const NodeMemory& mem,
                      const TemporalNeighbors& neighbors,
                      Matrix* attention = nullptr);

}  // namespace hiertkg::tgn

#endif  // HIERTKG_TGN_HPP_
