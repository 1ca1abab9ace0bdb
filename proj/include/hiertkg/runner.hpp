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


// Training, evaluation and ablation over an event stream.

#ifndef HIERTKG_RUNNER_HPP_
#define HIERTKG_RUNNER_HPP_

#include <cstdint>
#include <filesystem>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "hiertkg/metrics.hpp"
#include "hiertkg/model.hpp"
#include "hiertkg/tkg_data.hpp"

namespace hiertkg {

struct Checkpoint {
  TrainConfig config;
  std::int64_t num_entities = 0;
  std::int64_t num_relations = 0;
  int best_epoch = 0;
  ModelParams params;
  // Memory after the best epoch's training and validation passes.
  tgn::NodeMemory memory;
};

// FNV-1a over the config text.
std::uint64_t config_hash(const TrainConfig& cfg);

// Binary layout: magic, version, config hash and text, vocabulary sizes,
// best epoch, every parameter by name, then the memory state and last-update
// vector. Matrices are stored as raw native-endian doubles.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

enum class Protocol { kSampled, kAllEntities };

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<metrics::MetricReport> history;  // train and val per epoch
};

// Splits by cfg.train_fraction / cfg.val_fraction, then trains.
TrainResult train(const TrainConfig& cfg, const EventDataset& ds,
                  std::ostream* log = nullptr);
TrainResult train(const TrainConfig& cfg, const DatasetSplits& splits,
                  std::ostream* log = nullptr);

// Optional per-batch outputs of an evaluation pass.
struct EvalTrace {
  std::vector<ad::Matrix> fused;
  std::vector<metrics::ScoredQuery> queries;
};

// Replays the streams preceding `split` ("val" or "test") without
// gradients, then scores each event of the split with timestamp <= horizon
// against its candidates. Throws ConfigError on a vocabulary mismatch or an
// unknown split name.
metrics::MetricReport evaluate(
    const Checkpoint& ckpt, const DatasetSplits& splits,
    const std::string& split, Protocol protocol = Protocol::kSampled,
    double horizon = std::numeric_limits<double>::infinity(),
    EvalTrace* trace = nullptr);

// ---- Ablation --------------------------------------------------------------

struct AblationScenario {
  std::string name;
  PoolingVariant pooling;
  FusionVariant fusion;
};

// HierTKG, First, Second, Third.
const std::vector<AblationScenario>& ablation_scenarios();
// Case-insensitive lookup; throws ConfigError for unknown names.
AblationScenario ablation_scenario(const std::string& name);

struct AblationRow {
  std::string scenario;
  double val_ap = 0.0, test_ap = 0.0;
  double val_auc = 0.0, test_auc = 0.0;
  double val_mrr = 0.0, test_mrr = 0.0;
};

AblationRow run_ablation(const TrainConfig& cfg, const DatasetSplits& splits,
                         const AblationScenario& scenario,
                         std::ostream* log = nullptr);

// ---- Datasets --------------------------------------------------------------

// Loads cfg.dataset according to cfg.dataset_format.
EventDataset load_dataset(const TrainConfig& cfg);

// Events (e_i, r_{i mod relations}, e_{(i+1) mod nodes}) for i in each
// cycle, one time unit apart.
EventDataset make_cyclic_tkg(int nodes, int cycles, int relations = 1);

// Random events between distinct entities with non-decreasing integer
// timestamps; every entity and relation is registered in the vocabularies.
EventDataset make_random_tkg(int entities, int relations, int events,
                             std::uint64_t seed);

}  // namespace hiertkg

#endif  // HIERTKG_RUNNER_HPP_
