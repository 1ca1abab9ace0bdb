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


#include "hiertkg/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string_view>
#include <unordered_map>

#include "hiertkg/errors.hpp"
#include "hiertkg/init.hpp"
#include "hiertkg/pooling.hpp"

namespace hiertkg {

// ---- Enums -----------------------------------------------------------------

std::string to_string(PoolingVariant v) {
  switch (v) {
    case PoolingVariant::kDiffPool: return "diffpool";
    case PoolingVariant::kSagPool: return "sagpool";
    case PoolingVariant::kDoubleSagPool: return "double_sagpool";
  }
  return "?";
}

std::string to_string(FusionVariant v) {
  return v == FusionVariant::kAttention ? "attention" : "no_attention";
}

std::string to_string(FusionSlots v) {
  return v == FusionSlots::kTemporalAndStructural ? "temporal_structural"
                                                  : "structural";
}

std::string to_string(OptimizerKind v) {
  return v == OptimizerKind::kAdam ? "adam" : "sgd";
}

// ---- Config ----------------------------------------------------------------

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string fmt_double(double x) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, r.ptr);
}

std::string join(const std::vector<int>& xs) {
  std::string out;
  for (size_t i = 0; i < xs.size(); ++i) {
    if (i > 0) out += ",";
    out += std::to_string(xs[i]);
  }
  return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  auto r = std::from_chars(value.data(), value.data() + value.size(), out);
  if (r.ec != std::errc() || r.ptr != value.data() + value.size()) {
    throw ConfigError("bad value '" + value + "' for " + key);
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("bad boolean '" + value + "' for " + key);
}

std::vector<int> parse_list(const std::string& key, const std::string& value) {
  std::vector<int> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    out.push_back(parse_number<int>(key, trim(item)));
  }
  return out;
}

using Setter = std::function<void(TrainConfig&, const std::string&,
                                  const std::string&)>;

const std::unordered_map<std::string, Setter>& setters() {
  static const auto* table = new std::unordered_map<std::string, Setter>{
      {"epochs", [](TrainConfig& c, auto& k, auto& v) { c.epochs = parse_number<int>(k, v); }},
      {"learning_rate", [](TrainConfig& c, auto& k, auto& v) { c.learning_rate = parse_number<double>(k, v); }},
      {"batch_size", [](TrainConfig& c, auto& k, auto& v) { c.batch_size = parse_number<int>(k, v); }},
      {"memory_dim", [](TrainConfig& c, auto& k, auto& v) { c.memory_dim = parse_number<int>(k, v); }},
      {"time_dim", [](TrainConfig& c, auto& k, auto& v) { c.time_dim = parse_number<int>(k, v); }},
      {"relation_dim", [](TrainConfig& c, auto& k, auto& v) { c.relation_dim = parse_number<int>(k, v); }},
      {"embed_dim", [](TrainConfig& c, auto& k, auto& v) { c.embed_dim = parse_number<int>(k, v); }},
      {"fused_dim", [](TrainConfig& c, auto& k, auto& v) { c.fused_dim = parse_number<int>(k, v); }},
      {"attention_heads", [](TrainConfig& c, auto& k, auto& v) { c.attention_heads = parse_number<int>(k, v); }},
      {"fusion_heads", [](TrainConfig& c, auto& k, auto& v) { c.fusion_heads = parse_number<int>(k, v); }},
      {"neighbors", [](TrainConfig& c, auto& k, auto& v) { c.neighbors = parse_number<int>(k, v); }},
      {"pooling", [](TrainConfig& c, auto& k, auto& v) {
         if (v == "diffpool") c.pooling = PoolingVariant::kDiffPool;
         else if (v == "sagpool") c.pooling = PoolingVariant::kSagPool;
         else if (v == "double_sagpool") c.pooling = PoolingVariant::kDoubleSagPool;
         else throw ConfigError("bad value '" + v + "' for " + k);
       }},
      {"fusion", [](TrainConfig& c, auto& k, auto& v) {
         if (v == "attention") c.fusion = FusionVariant::kAttention;
         else if (v == "no_attention") c.fusion = FusionVariant::kNoAttention;
         else throw ConfigError("bad value '" + v + "' for " + k);
       }},
      {"fusion_slots", [](TrainConfig& c, auto& k, auto& v) {
         if (v == "temporal_structural") c.fusion_slots = FusionSlots::kTemporalAndStructural;
         else if (v == "structural") c.fusion_slots = FusionSlots::kStructural;
         else throw ConfigError("bad value '" + v + "' for " + k);
       }},
      {"optimizer", [](TrainConfig& c, auto& k, auto& v) {
         if (v == "adam") c.optimizer = OptimizerKind::kAdam;
         else if (v == "sgd") c.optimizer = OptimizerKind::kSgd;
         else throw ConfigError("bad value '" + v + "' for " + k);
       }},
      {"negatives", [](TrainConfig& c, auto& k, auto& v) { c.negatives = parse_number<int>(k, v); }},
      {"filter_negatives", [](TrainConfig& c, auto& k, auto& v) { c.filter_negatives = parse_bool(k, v); }},
      {"seed", [](TrainConfig& c, auto& k, auto& v) { c.seed = parse_number<std::uint64_t>(k, v); }},
      {"train_fraction", [](TrainConfig& c, auto& k, auto& v) { c.train_fraction = parse_number<double>(k, v); }},
      {"val_fraction", [](TrainConfig& c, auto& k, auto& v) { c.val_fraction = parse_number<double>(k, v); }},
      {"patience", [](TrainConfig& c, auto& k, auto& v) { c.patience = parse_number<int>(k, v); }},
      {"keep_ratio", [](TrainConfig& c, auto& k, auto& v) { c.keep_ratio = parse_number<double>(k, v); }},
      {"max_pool_nodes", [](TrainConfig& c, auto& k, auto& v) { c.max_pool_nodes = parse_number<int>(k, v); }},
      {"cluster_divisors", [](TrainConfig& c, auto& k, auto& v) { c.cluster_divisors = parse_list(k, v); }},
      {"cluster_caps", [](TrainConfig& c, auto& k, auto& v) { c.cluster_caps = parse_list(k, v); }},
      {"diffpool_aux_loss", [](TrainConfig& c, auto& k, auto& v) { c.diffpool_aux_loss = parse_bool(k, v); }},
      {"loss_reduction", [](TrainConfig& c, auto& k, auto& v) {
         if (v == "mean") c.sum_loss = false;
         else if (v == "sum") c.sum_loss = true;
         else throw ConfigError("bad value '" + v + "' for " + k);
       }},
      {"dataset", [](TrainConfig& c, auto&, auto& v) { c.dataset = v; }},
      {"dataset_format", [](TrainConfig& c, auto& k, auto& v) {
         if (v != "canonical" && v != "icews" && v != "wikidata") {
           throw ConfigError("bad value '" + v + "' for " + k);
         }
         c.dataset_format = v;
       }},
      {"plot", [](TrainConfig& c, auto& k, auto& v) { c.plot = parse_bool(k, v); }},
  };
  return *table;
}

}  // namespace

void TrainConfig::validate() const {
  auto positive = [](const char* key, double v) {
    if (!(v > 0)) throw ConfigError(std::string(key) + " must be positive");
  };
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  positive("learning_rate", learning_rate);
  positive("batch_size", batch_size);
  positive("memory_dim", memory_dim);
  positive("time_dim", time_dim);
  positive("relation_dim", relation_dim);
  positive("embed_dim", embed_dim);
  positive("fused_dim", fused_dim);
  positive("attention_heads", attention_heads);
  positive("fusion_heads", fusion_heads);
  positive("neighbors", neighbors);
  positive("negatives", negatives);
  positive("patience", patience);
  positive("max_pool_nodes", max_pool_nodes);
  if (embed_dim % attention_heads != 0) {
    throw ConfigError("attention_heads must divide embed_dim");
  }
  if (fused_dim % fusion_heads != 0) {
    throw ConfigError("fusion_heads must divide fused_dim");
  }
  if (!(keep_ratio > 0.0) || keep_ratio > 1.0) {
    throw ConfigError("keep_ratio must lie in (0, 1]");
  }
  if (!(train_fraction > 0.0) || !(val_fraction > 0.0) ||
      train_fraction + val_fraction >= 1.0) {
    throw ConfigError("train_fraction and val_fraction must leave a test split");
  }
  if (cluster_divisors.empty() ||
      cluster_divisors.size() != cluster_caps.size()) {
    throw ConfigError("cluster_divisors and cluster_caps must be non-empty "
                      "and of equal length");
  }
  for (size_t i = 0; i < cluster_divisors.size(); ++i) {
    positive("cluster_divisors", cluster_divisors[i]);
    positive("cluster_caps", cluster_caps[i]);
  }
}

std::string TrainConfig::to_text() const {
  std::ostringstream o;
  o << "epochs = " << epochs << "\n"
    << "learning_rate = " << fmt_double(learning_rate) << "\n"
    << "batch_size = " << batch_size << "\n"
    << "memory_dim = " << memory_dim << "\n"
    << "time_dim = " << time_dim << "\n"
    << "relation_dim = " << relation_dim << "\n"
    << "embed_dim = " << embed_dim << "\n"
    << "fused_dim = " << fused_dim << "\n"
    << "attention_heads = " << attention_heads << "\n"
    << "fusion_heads = " << fusion_heads << "\n"
    << "neighbors = " << neighbors << "\n"
    << "pooling = " << to_string(pooling) << "\n"
    << "fusion = " << to_string(fusion) << "\n"
    << "fusion_slots = " << to_string(fusion_slots) << "\n"
    << "optimizer = " << to_string(optimizer) << "\n"
    << "negatives = " << negatives << "\n"
    << "filter_negatives = " << (filter_negatives ? "true" : "false") << "\n"
    << "seed = " << seed << "\n"
    << "train_fraction = " << fmt_double(train_fraction) << "\n"
    << "val_fraction = " << fmt_double(val_fraction) << "\n"
    << "patience = " << patience << "\n"
    << "keep_ratio = " << fmt_double(keep_ratio) << "\n"
    << "max_pool_nodes = " << max_pool_nodes << "\n"
    << "cluster_divisors = " << join(cluster_divisors) << "\n"
    << "cluster_caps = " << join(cluster_caps) << "\n"
    << "diffpool_aux_loss = " << (diffpool_aux_loss ? "true" : "false") << "\n"
    << "loss_reduction = " << (sum_loss ? "sum" : "mean") << "\n"
    << "dataset = " << dataset << "\n"
    << "dataset_format = " << dataset_format << "\n"
    << "plot = " << (plot ? "true" : "false") << "\n";
  return o.str();
}

TrainConfig parse_config(const std::string& text) {
  TrainConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) {
      line.resize(hash);
    }
    std::string body = trim(line);
    if (body.empty()) continue;
    auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) +
                        ": expected key = value");
    }
    std::string key = trim(std::string_view(body).substr(0, eq));
    std::string value = trim(std::string_view(body).substr(eq + 1));
    auto it = setters().find(key);
    if (it == setters().end()) {
      throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" +
                        key + "'");
    }
    try {
      it->second(cfg, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

TrainConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void apply_env_overrides(TrainConfig& cfg) {
  if (const char* s = std::getenv("HIERTKG_SEED"); s != nullptr && *s) {
    cfg.seed = parse_number<std::uint64_t>("HIERTKG_SEED", s);
  }
}

// ---- Parameters ------------------------------------------------------------

std::vector<ad::Parameter*> ModelParams::parameters() {
  std::vector<ad::Parameter*> out = tgn.parameters();
  for (ad::Parameter& p : pool) out.push_back(&p);
  for (ad::Parameter* p : fusion.parameters()) out.push_back(p);
  for (ad::Parameter* p : scorer.parameters()) out.push_back(p);
  return out;
}

ModelParams init_model(const TrainConfig& cfg, std::int64_t num_entities,
                       std::int64_t num_relations) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  ModelParams m;
  tgn::TgnDims td;
  td.num_entities = num_entities;
  td.num_relations = num_relations;
  td.memory_dim = cfg.memory_dim;
  td.time_dim = cfg.time_dim;
  td.relation_dim = cfg.relation_dim;
  td.embed_dim = cfg.embed_dim;
  td.heads = cfg.attention_heads;
  m.tgn = tgn::init_tgn(td, rng);

  switch (cfg.pooling) {
    case PoolingVariant::kDiffPool:
      for (size_t l = 0; l < cfg.cluster_caps.size(); ++l) {
        m.pool.emplace_back("pool.w_s" + std::to_string(l),
                            init::fan_in(cfg.memory_dim, cfg.cluster_caps[l], rng));
      }
      break;
    case PoolingVariant::kDoubleSagPool:
    case PoolingVariant::kSagPool: {
      const int layers = cfg.pooling == PoolingVariant::kSagPool ? 1 : 2;
      for (int l = 0; l < layers; ++l) {
        m.pool.emplace_back("pool.theta" + std::to_string(l),
                            init::fan_in(cfg.memory_dim, 1, rng));
      }
      break;
    }
  }

  fusion::FusionDims fd;
  fd.temporal_dim = cfg.embed_dim;
  fd.structural_dim = cfg.memory_dim;
  fd.fused_dim = cfg.fused_dim;
  fd.heads = cfg.fusion_heads;
  m.fusion = fusion::init_fusion(fd, rng);

  linkpred::ScoringDims sd;
  sd.num_relations = num_relations;
  sd.relation_dim = cfg.relation_dim;
  sd.embed_dim = cfg.fused_dim;
  sd.hidden_dim = cfg.fused_dim;
  m.scorer = linkpred::init_scoring(sd, rng);
  return m;
}

// ---- Streaming state -------------------------------------------------------

void EventGraph::insert(std::span<const TemporalEvent> events) {
  for (const TemporalEvent& e : events) {
    adj_[static_cast<size_t>(e.source)][e.destination] += 1.0;
    if (e.source != e.destination) {
      adj_[static_cast<size_t>(e.destination)][e.source] += 1.0;
    }
  }
}

double EventGraph::weight(EntityId u, EntityId v) const {
  const auto& row = adj_[static_cast<size_t>(u)];
  auto it = row.find(v);
  return it == row.end() ? 0.0 : it->second;
}

void EventGraph::reset() {
  for (auto& row : adj_) row.clear();
}

StreamState::StreamState(const TrainConfig& cfg, std::int64_t num_entities)
    : memory(num_entities, cfg.memory_dim),
      neighbors(num_entities, static_cast<size_t>(cfg.neighbors)),
      graph(num_entities) {}

void StreamState::reset() {
  memory.reset();
  neighbors.reset();
  graph.reset();
}

std::vector<EntityId> pooled_node_set(std::span<const EntityId> query_nodes,
                                      const EventGraph& graph,
                                      size_t max_nodes) {
  std::set<EntityId> chosen(query_nodes.begin(), query_nodes.end());
  std::map<EntityId, double> weight;
  for (EntityId q : chosen) {
    for (const auto& [n, w] : graph.neighbors(q)) {
      if (!chosen.contains(n)) weight[n] += w;
    }
  }
  std::vector<std::pair<EntityId, double>> cand(weight.begin(), weight.end());
  std::stable_sort(cand.begin(), cand.end(), [](const auto& a, const auto& b) {
    return a.second > b.second;
  });
  for (const auto& [n, w] : cand) {
    if (chosen.size() >= max_nodes) break;
    chosen.insert(n);
  }
  return {chosen.begin(), chosen.end()};
}

namespace {

void absorb(StreamState& state, std::span<const TemporalEvent> batch) {
  std::vector<tgn::Message> msgs = tgn::compute_messages(batch, state.memory);
  state.memory.store_pending(tgn::aggregate_last(msgs));
  state.neighbors.insert(batch);
  state.graph.insert(batch);
}

}  // namespace

void advance(ModelParams& params, StreamState& state,
             std::span<const TemporalEvent> batch) {
  std::map<EntityId, tgn::Message> pending = state.memory.take_pending();
  state.memory = tgn::update_memory(state.memory, pending, params.tgn);
  absorb(state, batch);
}

BatchResult process_batch(ModelParams& params, StreamState& state,
                          const TrainConfig& cfg,
                          std::span<const TemporalEvent> batch,
                          std::span<const TemporalEvent> negatives,
                          optim::Optimizer* opt) {
  using namespace ad;
  using ad::Index;
  if (batch.empty()) throw ConfigError("empty batch");
  if (negatives.size() % batch.size() != 0) {
    throw ConfigError("negatives must be a whole multiple of the batch");
  }
  const size_t b = batch.size();
  const size_t k = negatives.size() / b;

  Tape tape(opt != nullptr);
  tgn::TgnVars tv = tgn::bind(tape, params.tgn);
  fusion::FusionVars fv = fusion::bind(tape, params.fusion);
  linkpred::ScoringVars sv = linkpred::bind(tape, params.scorer);
  std::vector<Var> pool_vars;
  for (Parameter& p : params.pool) pool_vars.push_back(tape.param(p));

  // Queries: sources, destinations, then negative destinations.
  std::vector<tgn::EmbedQuery> queries;
  queries.reserve(2 * b + negatives.size());
  for (const TemporalEvent& e : batch) queries.push_back({e.source, e.timestamp});
  for (const TemporalEvent& e : batch) {
    queries.push_back({e.destination, e.timestamp});
  }
  for (const TemporalEvent& e : negatives) {
    queries.push_back({e.destination, e.timestamp});
  }
  std::vector<EntityId> query_nodes;
  for (const auto& q : queries) query_nodes.push_back(q.node);
  std::sort(query_nodes.begin(), query_nodes.end());
  query_nodes.erase(std::unique(query_nodes.begin(), query_nodes.end()),
                    query_nodes.end());

  std::vector<EntityId> pooled = pooled_node_set(
      query_nodes, state.graph, static_cast<size_t>(cfg.max_pool_nodes));

  std::set<EntityId> local_set(pooled.begin(), pooled.end());
  for (EntityId q : query_nodes) {
    for (const tgn::NeighborEntry& n : state.neighbors.of(q)) {
      local_set.insert(n.neighbor);
    }
  }
  std::map<EntityId, Index> local;
  std::vector<EntityId> local_nodes(local_set.begin(), local_set.end());
  for (size_t i = 0; i < local_nodes.size(); ++i) {
    local[local_nodes[i]] = static_cast<Index>(i);
  }
  const auto n_local = static_cast<Index>(local_nodes.size());

  // Apply the messages stored by the previous batch.
  std::map<EntityId, tgn::Message> pending = state.memory.take_pending();
  Matrix base(n_local, state.memory.dim());
  for (Index i = 0; i < n_local; ++i) {
    base.row(i) = state.memory.row(local_nodes[static_cast<size_t>(i)]);
  }
  Var updated;
  std::vector<EntityId> pending_nodes;
  Var memory_block;
  if (!pending.empty()) {
    std::vector<tgn::Message> msgs;
    Matrix prev(static_cast<Index>(pending.size()), state.memory.dim());
    std::vector<Index> from, to;
    for (const auto& [node, m] : pending) {
      const auto row = static_cast<Index>(pending_nodes.size());
      prev.row(row) = state.memory.row(node).transpose();
      msgs.push_back(m);
      pending_nodes.push_back(node);
      if (auto it = local.find(node); it != local.end()) {
        from.push_back(row);
        to.push_back(it->second);
        base.row(it->second).setZero();
      }
    }
    updated = tgn::gated_update(tv, tgn::message_payloads(tape, tv, msgs),
                                tape.constant(std::move(prev)));
    memory_block = tape.constant(std::move(base));
    if (!from.empty()) {
      memory_block = add(memory_block,
                         scatter_rows(gather_rows(updated, from), to, n_local));
    }
  } else {
    memory_block = tape.constant(std::move(base));
  }

  tgn::TemporalEmbedding te = tgn::temporal_embed(
      tape, tv, queries, memory_block, local, state.neighbors);

  // Structural embeddings of the pooled subgraph.
  const auto n_pool = static_cast<Index>(pooled.size());
  std::vector<Index> pool_rows;
  std::map<EntityId, Index> pool_pos;
  for (Index i = 0; i < n_pool; ++i) {
    pool_rows.push_back(local.at(pooled[static_cast<size_t>(i)]));
    pool_pos[pooled[static_cast<size_t>(i)]] = i;
  }
  Matrix adj(n_pool, n_pool);
  for (Index i = 0; i < n_pool; ++i) {
    for (Index j = 0; j < n_pool; ++j) {
      adj(i, j) = state.graph.weight(pooled[static_cast<size_t>(i)],
                                     pooled[static_cast<size_t>(j)]);
    }
  }
  Var h0 = gather_rows(memory_block, pool_rows);
  Var a0 = tape.constant(std::move(adj));
  Var readout;
  Var aux;
  if (cfg.pooling == PoolingVariant::kDiffPool) {
    std::vector<Index> divisors(cfg.cluster_divisors.begin(),
                                cfg.cluster_divisors.end());
    std::vector<Index> caps(cfg.cluster_caps.begin(), cfg.cluster_caps.end());
    pooling::HierarchyConfig hier =
        pooling::default_hierarchy(n_pool, cfg.memory_dim, divisors, caps);
    std::span<const Var> ws(pool_vars.data(), hier.cluster_counts.size());
    std::vector<pooling::LevelVars> levels =
        pooling::run_hierarchy(hier, h0, a0, ws, cfg.diffpool_aux_loss);
    readout = pooling::structural_readout(levels);
    if (cfg.diffpool_aux_loss) aux = pooling::diffpool_aux_loss(levels, a0);
  } else {
    readout = pooling::sagpool_readout(h0, a0, cfg.keep_ratio, pool_vars);
  }
  std::vector<Index> query_pool_rows;
  for (const auto& q : queries) query_pool_rows.push_back(pool_pos.at(q.node));
  Var z_pool = gather_rows(readout, query_pool_rows);

  // Fusion.
  Var zt = fusion::project_temporal(fv, te.embeddings);
  Var zp = fusion::project_structural(fv, z_pool);
  Var fused;
  if (cfg.fusion == FusionVariant::kAttention) {
    std::vector<Var> slots;
    if (cfg.fusion_slots == FusionSlots::kTemporalAndStructural) {
      slots.push_back(zt);
    }
    slots.push_back(zp);
    fused = fusion::fuse_slots(fv, zt, slots);
  } else {
    fused = fusion::no_attention_fuse(zt, zp);
  }

  // Scores and loss.
  std::vector<Index> src_rows, dst_rows, neg_src_rows, neg_rows;
  std::vector<RelationId> rels, neg_rels;
  for (size_t i = 0; i < b; ++i) {
    src_rows.push_back(static_cast<Index>(i));
    dst_rows.push_back(static_cast<Index>(b + i));
    rels.push_back(batch[i].relation);
  }
  for (size_t j = 0; j < negatives.size(); ++j) {
    neg_src_rows.push_back(static_cast<Index>(j / k));
    neg_rows.push_back(static_cast<Index>(2 * b + j));
    neg_rels.push_back(negatives[j].relation);
  }
  Var pos_p = sigmoid(linkpred::logits(sv, gather_rows(fused, src_rows),
                                       gather_rows(fused, dst_rows), rels));
  Var neg_p;
  if (!negatives.empty()) {
    neg_p = sigmoid(linkpred::logits(sv, gather_rows(fused, neg_src_rows),
                                     gather_rows(fused, neg_rows), neg_rels));
  }
  Var loss = linkpred::bce_loss(pos_p, neg_p,
                                cfg.sum_loss ? linkpred::Reduction::kSum
                                             : linkpred::Reduction::kMean);
  if (aux.valid()) loss = add(loss, aux);

  BatchResult out;
  out.loss = loss.item();
  if (!std::isfinite(out.loss)) {
    throw DiagnosticsError("non-finite loss", -1, -1, 0.0);
  }
  out.pos_probs.assign(pos_p.value().data(),
                       pos_p.value().data() + pos_p.rows());
  if (neg_p.valid()) {
    out.neg_probs.assign(neg_p.value().data(),
                         neg_p.value().data() + neg_p.rows());
  }
  out.fused = fused.value();
  out.temporal = te.embeddings.value();

  if (opt != nullptr) {
    opt->zero_grad();
    tape.backward(loss);
    opt->step();
  }

  for (size_t i = 0; i < pending_nodes.size(); ++i) {
    state.memory.set(pending_nodes[i],
                     updated.value().row(static_cast<Index>(i)).transpose(),
                     pending.at(pending_nodes[i]).timestamp);
  }
  absorb(state, batch);
  return out;
}

}  // namespace hiertkg
