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

#include "hiertkg/tgn.hpp"

#include <cmath>

#include "hiertkg/errors.hpp"
#include "hiertkg/init.hpp"

namespace hiertkg::tgn {

std::vector<ad::Parameter*> TgnParams::parameters() {
  return {&time_w,  &time_b,  &relation_emb, &gate_wz, &gate_bz,
          &gate_wr, &gate_br, &gate_wh,      &gate_bh, &att_wq,
          &att_wk,  &att_wv,  &att_wout,     &att_wroot};
}

TgnParams init_tgn(const TgnDims& d, std::mt19937_64& rng) {
  if (d.num_entities < 1 || d.num_relations < 1 || d.memory_dim < 1 ||
      d.time_dim < 1 || d.relation_dim < 1 || d.embed_dim < 1 ||
      d.heads < 1) {
    throw ConfigError("TGN dimensions must all be >= 1");
  }
  if (d.embed_dim % d.heads != 0) {
    throw ConfigError("attention heads (" + std::to_string(d.heads) +
                      ") must divide embed_dim (" +
                      std::to_string(d.embed_dim) + ")");
  }
  TgnParams p;
  p.dims = d;
  // Frequencies spread over nine decades so both seconds-scale and
  // day-scale gaps are resolved.
  Matrix w(1, d.time_dim);
  for (Index i = 0; i < d.time_dim; ++i) {
    double frac = d.time_dim == 1 ? 0.0
                                  : static_cast<double>(i) / (d.time_dim - 1);
    w(0, i) = std::pow(10.0, -9.0 * frac);
  }
  p.time_w = ad::Parameter("tgn.time_w", w);
  p.time_b = ad::Parameter("tgn.time_b", Matrix::Zero(1, d.time_dim));
  p.relation_emb = ad::Parameter(
      "tgn.relation_emb",
      init::uniform(d.num_relations, d.relation_dim,
                    1.0 / std::sqrt(static_cast<double>(d.relation_dim)),
                    rng));
  const Index x_dim = d.message_dim() + d.memory_dim;
  p.gate_wz = ad::Parameter("tgn.gate_wz", init::fan_in(x_dim, d.memory_dim, rng));
  p.gate_bz = ad::Parameter("tgn.gate_bz", Matrix::Zero(1, d.memory_dim));
  p.gate_wr = ad::Parameter("tgn.gate_wr", init::fan_in(x_dim, d.memory_dim, rng));
  p.gate_br = ad::Parameter("tgn.gate_br", Matrix::Zero(1, d.memory_dim));
  p.gate_wh = ad::Parameter("tgn.gate_wh", init::fan_in(x_dim, d.memory_dim, rng));
  p.gate_bh = ad::Parameter("tgn.gate_bh", Matrix::Zero(1, d.memory_dim));
  p.att_wq = ad::Parameter("tgn.att_wq", init::fan_in(d.query_dim(), d.embed_dim, rng));
  p.att_wk = ad::Parameter("tgn.att_wk", init::fan_in(d.key_dim(), d.embed_dim, rng));
  p.att_wv = ad::Parameter("tgn.att_wv", init::fan_in(d.key_dim(), d.embed_dim, rng));
  p.att_wout = ad::Parameter("tgn.att_wout", init::fan_in(d.embed_dim, d.embed_dim, rng));
  p.att_wroot = ad::Parameter("tgn.att_wroot", init::fan_in(d.query_dim(), d.embed_dim, rng));
  return p;
}

TgnVars bind(ad::Tape& t, TgnParams& p) {
  return TgnVars{t.param(p.time_w),   t.param(p.time_b),
                 t.param(p.relation_emb), t.param(p.gate_wz),
                 t.param(p.gate_bz),  t.param(p.gate_wr),
                 t.param(p.gate_br),  t.param(p.gate_wh),
                 t.param(p.gate_bh),  t.param(p.att_wq),
                 t.param(p.att_wk),   t.param(p.att_wv),
                 t.param(p.att_wout), t.param(p.att_wroot),
                 p.dims.heads};
}

// ---- Time encoding ---------------------------------------------------------

Vector encode_time(const TgnParams& p, double delta_t) {
  const double dt = std::max(delta_t, 0.0);
  const Index n = p.dims.time_dim;
  Vector out(n);
  for (Index i = 0; i < n; ++i) {
    out(i) = std::cos(p.time_w.value(0, i) * dt + p.time_b.value(0, i));
  }
  return out;
}

ad::Var encode_time(ad::Tape& tape, const TgnVars& v,
                    std::span<const double> deltas) {
  Matrix dt(static_cast<Index>(deltas.size()), 1);
  for (size_t i = 0; i < deltas.size(); ++i) {
    dt(static_cast<Index>(i), 0) = std::max(deltas[i], 0.0);
  }
  ad::Var phase = ad::matmul(tape.constant(std::move(dt)), v.time_w);
  return ad::cos(ad::add_row(phase, v.time_b));
}

// ---- Memory ----------------------------------------------------------------

NodeMemory::NodeMemory(Index num_entities, Index memory_dim)
    : state_(Matrix::Zero(num_entities, memory_dim)),
      last_update_(Vector::Zero(num_entities)) {}

void NodeMemory::check(EntityId v) const {
  if (v < 0 || v >= num_entities()) {
    throw IndexError("entity " + std::to_string(v) + " outside memory of " +
                     std::to_string(num_entities()) + " nodes");
  }
}

double NodeMemory::last_update(EntityId v) const {
  check(v);
  return last_update_(v);
}

Vector NodeMemory::row(EntityId v) const {
  check(v);
  return state_.row(v).transpose();
}

void NodeMemory::set(EntityId v, const Vector& state, double timestamp) {
  check(v);
  if (timestamp < last_update_(v)) {
    throw Error("memory timestamp of node " + std::to_string(v) +
                " would move backwards");
  }
  state_.row(v) = state.transpose();
  last_update_(v) = timestamp;
}

void NodeMemory::store_pending(std::map<EntityId, Message> msgs) {
  for (auto& [node, m] : msgs) {
    check(node);
    pending_[node] = std::move(m);
  }
}

std::map<EntityId, Message> NodeMemory::take_pending() {
  std::map<EntityId, Message> out;
  out.swap(pending_);
  return out;
}

void NodeMemory::reset() {
  state_.setZero();
  last_update_.setZero();
  pending_.clear();
  negative_deltas_ = 0;
}

Vector message_payload(const TgnParams& p, const Message& m) {
  const TgnDims& d = p.dims;
  if (m.relation < 0 || m.relation >= d.num_relations) {
    throw IndexError("relation " + std::to_string(m.relation) +
                     " out of range");
  }
  Vector out(d.message_dim());
  out << m.own_memory, m.counterpart_memory,
      p.relation_emb.value.row(m.relation).transpose(),
      encode_time(p, m.delta_t);
  return out;
}

std::vector<Message> compute_messages(std::span<const TemporalEvent> batch,
                                      NodeMemory& mem) {
  std::vector<Message> out;
  out.reserve(batch.size() * 2);
  auto make = [&](EntityId target, EntityId other, const TemporalEvent& e) {
    Message m;
    m.target = target;
    m.counterpart = other;
    m.relation = e.relation;
    m.timestamp = e.timestamp;
    m.delta_t = e.timestamp - mem.last_update(target);
    if (m.delta_t < 0.0) {
      mem.count_negative_delta();
      m.delta_t = 0.0;
    }
    m.own_memory = mem.row(target);
    m.counterpart_memory = mem.row(other);
    return m;
  };
  for (const TemporalEvent& e : batch) {
    out.push_back(make(e.source, e.destination, e));
    out.push_back(make(e.destination, e.source, e));
  }
  return out;
}

std::map<EntityId, Message> aggregate_last(std::span<const Message> messages) {
  std::map<EntityId, Message> out;
  for (const Message& m : messages) {
    auto it = out.find(m.target);
    if (it == out.end()) {
      out.emplace(m.target, m);
    } else if (m.timestamp >= it->second.timestamp) {
      it->second = m;
    }
  }
  return out;
}

ad::Var gated_update(const TgnVars& v, ad::Var message, ad::Var memory) {
  using namespace ad;
  std::vector<Var> xm = {message, memory};
  Var x = concat_cols(xm);
  Var z = sigmoid(add_row(matmul(x, v.gate_wz), v.gate_bz));
  Var r = sigmoid(add_row(matmul(x, v.gate_wr), v.gate_br));
  std::vector<Var> xr = {message, mul(r, memory)};
  Var cand = tanh(add_row(matmul(concat_cols(xr), v.gate_wh), v.gate_bh));
  return add(mul(one_minus(z), memory), mul(z, cand));
}

ad::Var message_payloads(ad::Tape& tape, const TgnVars& v,
                         std::span<const Message> messages) {
  const Index n = static_cast<Index>(messages.size());
  const Index mem_dim = n > 0 ? messages[0].own_memory.size() : 0;
  Matrix own(n, mem_dim), other(n, mem_dim);
  std::vector<Index> rel(messages.size());
  std::vector<double> dt(messages.size());
  const Index num_rel = v.relation_emb.rows();
  for (Index i = 0; i < n; ++i) {
    const Message& m = messages[static_cast<size_t>(i)];
    own.row(i) = m.own_memory.transpose();
    other.row(i) = m.counterpart_memory.transpose();
    if (m.relation < 0 || m.relation >= num_rel) {
      throw IndexError("relation " + std::to_string(m.relation) +
                       " out of range");
    }
    rel[static_cast<size_t>(i)] = m.relation;
    dt[static_cast<size_t>(i)] = m.delta_t;
  }
  std::vector<ad::Var> parts = {tape.constant(std::move(own)),
                                tape.constant(std::move(other)),
                                ad::gather_rows(v.relation_emb, rel),
                                encode_time(tape, v, dt)};
  return ad::concat_cols(parts);
}

NodeMemory update_memory(const NodeMemory& mem,
                         const std::map<EntityId, Message>& aggregated,
                         TgnParams& p) {
  NodeMemory out = mem;
  if (aggregated.empty()) return out;
  ad::Tape tape(false);
  TgnVars v = bind(tape, p);
  std::vector<Message> msgs;
  Matrix prev(static_cast<Index>(aggregated.size()), mem.dim());
  Index i = 0;
  for (const auto& [node, m] : aggregated) {
    prev.row(i++) = mem.row(node).transpose();
    msgs.push_back(m);
  }
  ad::Var payload = message_payloads(tape, v, msgs);
  ad::Var next = gated_update(v, payload, tape.constant(std::move(prev)));
  i = 0;
  for (const auto& [node, m] : aggregated) {
    out.set(node, next.value().row(i++).transpose(), m.timestamp);
  }
  return out;
}

// ---- Temporal neighbourhood ------------------------------------------------

TemporalNeighbors::TemporalNeighbors(Index num_entities, size_t window)
    : window_(window), lists_(static_cast<size_t>(num_entities)) {
  if (window == 0) throw ConfigError("neighbour window must be >= 1");
}

void TemporalNeighbors::insert(const TemporalEvent& e) {
  auto push = [&](EntityId v, EntityId u) {
    if (v < 0 || v >= static_cast<EntityId>(lists_.size())) {
      throw IndexError("entity " + std::to_string(v) + " out of range");
    }
    auto& l = lists_[static_cast<size_t>(v)];
    l.push_back({u, e.relation, e.timestamp});
    if (l.size() > window_) l.pop_front();
  };
  push(e.source, e.destination);
  if (e.destination != e.source) push(e.destination, e.source);
}

void TemporalNeighbors::insert(std::span<const TemporalEvent> events) {
  for (const auto& e : events) insert(e);
}

const std::deque<NeighborEntry>& TemporalNeighbors::of(EntityId v) const {
  if (v < 0 || v >= static_cast<EntityId>(lists_.size())) {
    throw IndexError("entity " + std::to_string(v) + " out of range");
  }
  return lists_[static_cast<size_t>(v)];
}

void TemporalNeighbors::reset() {
  for (auto& l : lists_) l.clear();
}

namespace {

Index local_row(const std::map<EntityId, Index>& local, EntityId v) {
  auto it = local.find(v);
  if (it == local.end()) {
    throw IndexError("node " + std::to_string(v) +
                     " missing from the local memory block");
  }
  return it->second;
}

}  // namespace

TemporalEmbedding temporal_embed(ad::Tape& tape, const TgnVars& v,
                                 std::span<const EmbedQuery> queries,
                                 ad::Var memory,
                                 const std::map<EntityId, Index>& local_index,
                                 const TemporalNeighbors& neighbors) {
  using namespace ad;
  const Index embed_dim = v.att_wq.cols();
  const Index heads = v.heads;
  const Index head_dim = embed_dim / heads;
  std::vector<Index> q_rows;
  std::vector<Index> owner, n_rows, n_rel;
  std::vector<double> n_dt;
  std::vector<Index> offsets = {0};
  for (size_t qi = 0; qi < queries.size(); ++qi) {
    const EmbedQuery& q = queries[qi];
    q_rows.push_back(local_row(local_index, q.node));
    for (const NeighborEntry& e : neighbors.of(q.node)) {
      if (e.timestamp > q.time) continue;
      owner.push_back(static_cast<Index>(qi));
      n_rows.push_back(local_row(local_index, e.neighbor));
      n_rel.push_back(e.relation);
      n_dt.push_back(q.time - e.timestamp);
    }
    offsets.push_back(static_cast<Index>(owner.size()));
  }

  std::vector<double> zeros(queries.size(), 0.0);
  std::vector<Var> qparts = {gather_rows(memory, q_rows),
                             encode_time(tape, v, zeros)};
  Var q_in = concat_cols(qparts);
  std::vector<Var> kparts = {gather_rows(memory, n_rows),
                             gather_rows(v.relation_emb, n_rel),
                             encode_time(tape, v, n_dt)};
  Var k_in = concat_cols(kparts);

  Var q = matmul(q_in, v.att_wq);
  Var k = matmul(k_in, v.att_wk);
  Var val = matmul(k_in, v.att_wv);

  // head_sum[c, h] = 1 when column c belongs to head h.
  Matrix head_sum = Matrix::Zero(embed_dim, heads);
  for (Index h = 0; h < heads; ++h) {
    head_sum.block(h * head_dim, h, head_dim, 1).setOnes();
  }
  Var hs = tape.constant(head_sum);
  Var hs_t = tape.constant(head_sum.transpose());

  Var scores = scale(matmul(mul(gather_rows(q, owner), k), hs),
                     1.0 / std::sqrt(static_cast<double>(head_dim)));
  Var alpha = segment_softmax(scores, offsets);
  Var context = segment_sum(mul(matmul(alpha, hs_t), val), offsets);
  Var out = add(matmul(context, v.att_wout), matmul(q_in, v.att_wroot));
  return TemporalEmbedding{out, alpha, std::move(offsets)};
}

Matrix temporal_embed(TgnParams& p, std::span<const EmbedQuery> queries,
                      const NodeMemory& mem,
                      const TemporalNeighbors& neighbors, Matrix* attention) {
  ad::Tape tape(false);
  TgnVars v = bind(tape, p);
  std::map<EntityId, Index> local;
  for (EntityId i = 0; i < mem.num_entities(); ++i) local[i] = i;
  TemporalEmbedding e = temporal_embed(tape, v, queries,
                                       tape.constant(mem.state()), local,
                                       neighbors);
  if (attention != nullptr) *attention = e.attention.value();
  return e.embeddings.value();
}

}  // namespace hiertkg::tgn
