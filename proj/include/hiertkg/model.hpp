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


// The full link-prediction model: temporal module, structural pooling,
// fusion and scorer, together with the streaming state they share.

#ifndef HIERTKG_MODEL_HPP_
#define HIERTKG_MODEL_HPP_

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "hiertkg/autograd.hpp"
#include "hiertkg/fusion.hpp"
#include "hiertkg/linkpred.hpp"
#include "hiertkg/optim.hpp"
#include "hiertkg/tgn.hpp"
#include "hiertkg/tkg_data.hpp"

namespace hiertkg {

enum class PoolingVariant { kDiffPool, kSagPool, kDoubleSagPool };
enum class FusionVariant { kAttention, kNoAttention };
// Key/value slots offered to the fusion attention.
enum class FusionSlots { kTemporalAndStructural, kStructural };
enum class OptimizerKind { kAdam, kSgd };

std::string to_string(PoolingVariant v);
std::string to_string(FusionVariant v);
std::string to_string(FusionSlots v);
std::string to_string(OptimizerKind v);

struct TrainConfig {
  int epochs = 50;
  double learning_rate = 1e-3;
  int batch_size = 200;
  int memory_dim = 100;
  int time_dim = 100;
  int relation_dim = 32;
  int embed_dim = 128;
  int fused_dim = 128;
  int attention_heads = 2;
  int fusion_heads = 2;
  int neighbors = 10;
  PoolingVariant pooling = PoolingVariant::kDiffPool;
  FusionVariant fusion = FusionVariant::kAttention;
  FusionSlots fusion_slots = FusionSlots::kTemporalAndStructural;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  int negatives = 1;
  bool filter_negatives = false;
  std::uint64_t seed = 0;
  double train_fraction = 0.70;
  double val_fraction = 0.15;
  int patience = 5;
  double keep_ratio = 0.5;
  int max_pool_nodes = 512;
  std::vector<int> cluster_divisors = {4, 16};
  std::vector<int> cluster_caps = {128, 32};
  bool diffpool_aux_loss = false;
  bool sum_loss = false;
  std::string dataset;
  std::string dataset_format = "canonical";  // canonical | icews | wikidata
  bool plot = true;

  // Throws ConfigError naming the offending key.
  void validate() const;
  // Every key in a fixed order, one "key = value" per line.
  std::string to_text() const;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

// Flat "key = value" text; '#' starts a comment. Unknown keys and bad
// values raise ConfigError with the line number.
TrainConfig parse_config(const std::string& text);
TrainConfig load_config(const std::string& path);
// Applies HIERTKG_SEED when set.
void apply_env_overrides(TrainConfig& cfg);

// ---- Parameters ------------------------------------------------------------

struct ModelParams {
  tgn::TgnParams tgn;
  std::vector<ad::Parameter> pool;  // DiffPool W_s per level, or SAG theta
  fusion::FusionParams fusion;
  linkpred::ScoringParams scorer;

  std::vector<ad::Parameter*> parameters();
};

ModelParams init_model(const TrainConfig& cfg, std::int64_t num_entities,
                       std::int64_t num_relations);

// ---- Streaming state -------------------------------------------------------

// Undirected weighted adjacency of the events seen so far.
class EventGraph {
 public:
  EventGraph() = default;
  explicit EventGraph(std::int64_t num_entities)
      : adj_(static_cast<size_t>(num_entities)) {}
  void insert(std::span<const TemporalEvent> events);
  const std::map<EntityId, double>& neighbors(EntityId v) const {
    return adj_[static_cast<size_t>(v)];
  }
  double weight(EntityId u, EntityId v) const;
  void reset();

 private:
  std::vector<std::map<EntityId, double>> adj_;
};

struct StreamState {
  tgn::NodeMemory memory;
  tgn::TemporalNeighbors neighbors;
  EventGraph graph;

  StreamState() = default;
  StreamState(const TrainConfig& cfg, std::int64_t num_entities);
  void reset();
};

// Per-batch outputs. Rows of `fused` follow the query order: sources,
// destinations, then negative destinations.
struct BatchResult {
  double loss = 0.0;
  std::vector<double> pos_probs;
  std::vector<double> neg_probs;  // k per positive, positive by positive
  ad::Matrix fused;
  ad::Matrix temporal;
};

// Nodes whose structural embedding is computed for a batch: the query
// nodes plus their strongest one-hop neighbours in `graph`, capped at
// max_nodes (query nodes are never dropped). Sorted by id.
std::vector<EntityId> pooled_node_set(std::span<const EntityId> query_nodes,
                                      const EventGraph& graph,
                                      size_t max_nodes);

// One forward pass over a batch followed, when `opt` is set, by a gradient
// step. Memory, neighbours and graph then absorb the batch. `negatives`
// holds k corruptions per positive.
BatchResult process_batch(ModelParams& params, StreamState& state,
                          const TrainConfig& cfg,
                          std::span<const TemporalEvent> batch,
                          std::span<const TemporalEvent> negatives,
                          optim::Optimizer* opt);

// Memory, neighbour and graph updates only; same state effect as
// process_batch without the scoring.
void advance(ModelParams& params, StreamState& state,
             std::span<const TemporalEvent> batch);

}  // namespace hiertkg

#endif  // HIERTKG_MODEL_HPP_
