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


#include "hiertkg/runner.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <memory>
#include <random>

#include "hiertkg/errors.hpp"
#include "hiertkg/ingest.hpp"
#include "hiertkg/linkpred.hpp"
#include "hiertkg/optim.hpp"

namespace hiertkg {
namespace {

constexpr std::uint64_t kTrainNegativeStream = 0x6e65675f74726e31ULL;
constexpr std::uint64_t kValNegativeStream = 0x6e65675f76616c31ULL;
constexpr std::uint64_t kTestNegativeStream = 0x6e65675f74737431ULL;

struct ScoredStream {
  std::vector<metrics::ScoredQuery> queries;
  double loss = 0.0;
};

linkpred::FactSet fact_set(const DatasetSplits& s) {
  linkpred::FactSet facts;
  for (const EventDataset* d : {&s.train, &s.val, &s.test}) {
    for (const TemporalEvent& e : d->events) {
      facts.insert({e.source, e.relation, e.destination, e.timestamp});
    }
  }
  return facts;
}

std::vector<TemporalEvent> all_entity_candidates(
    std::span<const TemporalEvent> batch, std::int64_t num_entities) {
  std::vector<TemporalEvent> out;
  for (const TemporalEvent& e : batch) {
    for (EntityId c = 0; c < num_entities; ++c) {
      if (c != e.destination) out.push_back({e.source, e.relation, c, e.timestamp});
    }
  }
  return out;
}

// Scores `events` batch by batch without gradients, advancing `state`.
ScoredStream score_stream(ModelParams& params, StreamState& state,
                          const TrainConfig& cfg,
                          std::span<const TemporalEvent> events,
                          std::int64_t num_entities, std::mt19937_64& rng,
                          Protocol protocol,
                          const linkpred::FactSet* filter,
                          EvalTrace* trace) {
  ScoredStream out;
  double loss_total = 0.0;
  for (const EventBatch& batch :
       batch_stream(events, static_cast<size_t>(cfg.batch_size))) {
    std::vector<TemporalEvent> negs =
        protocol == Protocol::kSampled
            ? linkpred::sample_negatives(batch.events, num_entities,
                                         cfg.negatives, rng, filter)
            : all_entity_candidates(batch.events, num_entities);
    BatchResult r =
        process_batch(params, state, cfg, batch.events, negs, nullptr);
    const size_t k = negs.size() / batch.events.size();
    for (size_t i = 0; i < batch.events.size(); ++i) {
      metrics::ScoredQuery q;
      q.positive = r.pos_probs[i];
      for (size_t j = i * k; j < (i + 1) * k; ++j) {
        const TemporalEvent& n = negs[j];
        if (protocol == Protocol::kAllEntities && filter != nullptr &&
            filter->contains({n.source, n.relation, n.destination, n.timestamp})) {
          continue;
        }
        q.negatives.push_back(r.neg_probs[j]);
      }
      out.queries.push_back(std::move(q));
    }
    loss_total += r.loss * static_cast<double>(batch.events.size());
    if (trace != nullptr) trace->fused.push_back(std::move(r.fused));
  }
  if (!events.empty()) loss_total /= static_cast<double>(events.size());
  out.loss = loss_total;
  if (trace != nullptr) {
    trace->queries.insert(trace->queries.end(), out.queries.begin(),
                          out.queries.end());
  }
  return out;
}

std::unique_ptr<optim::Optimizer> make_optimizer(const TrainConfig& cfg,
                                                 ModelParams& params) {
  if (cfg.optimizer == OptimizerKind::kSgd) {
    return std::make_unique<optim::Sgd>(params.parameters(), cfg.learning_rate);
  }
  return std::make_unique<optim::Adam>(params.parameters(), cfg.learning_rate);
}

void check_vocab(const Checkpoint& ckpt, const DatasetSplits& s) {
  if (s.train.num_entities() != ckpt.num_entities ||
      s.train.num_relations() != ckpt.num_relations) {
    throw ConfigError(
        "checkpoint expects " + std::to_string(ckpt.num_entities) +
        " entities / " + std::to_string(ckpt.num_relations) +
        " relations but the dataset has " +
        std::to_string(s.train.num_entities()) + " / " +
        std::to_string(s.train.num_relations()));
  }
}

// ---- Checkpoint IO ---------------------------------------------------------

constexpr char kMagic[8] = {'H', 'T', 'K', 'G', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ostream& o, const T& x) {
  o.write(reinterpret_cast<const char*>(&x), sizeof(T));
}

template <class T>
T get(std::istream& in, const std::string& path) {
  T x{};
  if (!in.read(reinterpret_cast<char*>(&x), sizeof(T))) {
    throw IoError(path + ": truncated checkpoint");
  }
  return x;
}

void put_string(std::ostream& o, const std::string& s) {
  put<std::uint64_t>(o, s.size());
  o.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in, const std::string& path) {
  const auto n = get<std::uint64_t>(in, path);
  if (n > (std::uint64_t{1} << 32)) throw IoError(path + ": corrupt string");
  std::string s(n, '\0');
  if (!in.read(s.data(), static_cast<std::streamsize>(n))) {
    throw IoError(path + ": truncated checkpoint");
  }
  return s;
}

void put_matrix(std::ostream& o, const ad::Matrix& m) {
  put<std::int64_t>(o, m.rows());
  put<std::int64_t>(o, m.cols());
  o.write(reinterpret_cast<const char*>(m.data()),
          static_cast<std::streamsize>(m.size() * sizeof(double)));
}

ad::Matrix get_matrix(std::istream& in, const std::string& path) {
  const auto rows = get<std::int64_t>(in, path);
  const auto cols = get<std::int64_t>(in, path);
  if (rows < 0 || cols < 0 || rows * cols > (std::int64_t{1} << 34)) {
    throw IoError(path + ": corrupt matrix header");
  }
  ad::Matrix m(rows, cols);
  if (!in.read(reinterpret_cast<char*>(m.data()),
               static_cast<std::streamsize>(m.size() * sizeof(double)))) {
    throw IoError(path + ": truncated checkpoint");
  }
  return m;
}

}  // namespace

namespace {

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::uint64_t config_hash(const TrainConfig& cfg) {
  return fnv1a(cfg.to_text());
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream o(path, std::ios::binary);
  if (!o) throw IoError("cannot write checkpoint " + path.string());
  o.write(kMagic, sizeof(kMagic));
  put(o, kVersion);
  put<std::uint64_t>(o, config_hash(ckpt.config));
  put_string(o, ckpt.config.to_text());
  put<std::int64_t>(o, ckpt.num_entities);
  put<std::int64_t>(o, ckpt.num_relations);
  put<std::int32_t>(o, ckpt.best_epoch);
  auto params = const_cast<ModelParams&>(ckpt.params).parameters();
  put<std::uint32_t>(o, static_cast<std::uint32_t>(params.size()));
  for (const ad::Parameter* p : params) {
    put_string(o, p->name);
    put_matrix(o, p->value);
  }
  put_matrix(o, ckpt.memory.state());
  put_matrix(o, ckpt.memory.last_update());
  if (!o) throw IoError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const std::string where = path.string();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint " + where);
  char magic[sizeof(kMagic)];
  if (!in.read(magic, sizeof(magic)) ||
      std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw IoError(where + ": not a checkpoint");
  }
  if (get<std::uint32_t>(in, where) != kVersion) {
    throw IoError(where + ": unsupported checkpoint version");
  }
  Checkpoint ckpt;
  const auto hash = get<std::uint64_t>(in, where);
  const std::string text = get_string(in, where);
  if (fnv1a(text) != hash) throw IoError(where + ": config hash mismatch");
  try {
    ckpt.config = parse_config(text);
  } catch (const ConfigError& e) {
    throw IoError(where + ": bad stored config: " + e.what());
  }
  ckpt.num_entities = get<std::int64_t>(in, where);
  ckpt.num_relations = get<std::int64_t>(in, where);
  ckpt.best_epoch = get<std::int32_t>(in, where);
  ckpt.params = init_model(ckpt.config, ckpt.num_entities, ckpt.num_relations);
  auto params = ckpt.params.parameters();
  if (get<std::uint32_t>(in, where) != params.size()) {
    throw IoError(where + ": parameter count mismatch");
  }
  for (ad::Parameter* p : params) {
    std::string name = get_string(in, where);
    ad::Matrix value = get_matrix(in, where);
    if (name != p->name || value.rows() != p->value.rows() ||
        value.cols() != p->value.cols()) {
      throw IoError(where + ": unexpected parameter " + name);
    }
    p->value = std::move(value);
    p->zero_grad();
  }
  ad::Matrix state = get_matrix(in, where);
  ad::Matrix last = get_matrix(in, where);
  if (state.rows() != last.rows() || last.cols() != 1) {
    throw IoError(where + ": inconsistent memory block");
  }
  ckpt.memory = tgn::NodeMemory(state.rows(), state.cols());
  for (Eigen::Index v = 0; v < state.rows(); ++v) {
    ckpt.memory.set(v, state.row(v).transpose(), last(v, 0));
  }
  return ckpt;
}

TrainResult train(const TrainConfig& cfg, const EventDataset& ds,
                  std::ostream* log) {
  return train(cfg, chronological_split(ds, cfg.train_fraction,
                                        cfg.val_fraction),
               log);
}

TrainResult train(const TrainConfig& cfg, const DatasetSplits& splits,
                  std::ostream* log) {
  cfg.validate();
  if (splits.train.empty()) throw EmptyDatasetError("empty training split");
  const std::int64_t n_ent = splits.train.num_entities();
  const std::int64_t n_rel = splits.train.num_relations();

  TrainResult result;
  result.checkpoint.config = cfg;
  result.checkpoint.num_entities = n_ent;
  result.checkpoint.num_relations = n_rel;
  result.checkpoint.params = init_model(cfg, n_ent, n_rel);
  result.checkpoint.memory = tgn::NodeMemory(n_ent, cfg.memory_dim);
  if (cfg.epochs == 0) return result;

  ModelParams params = result.checkpoint.params;
  std::unique_ptr<optim::Optimizer> opt = make_optimizer(cfg, params);
  StreamState state(cfg, n_ent);
  std::mt19937_64 rng(cfg.seed ^ kTrainNegativeStream);
  linkpred::FactSet facts;
  if (cfg.filter_negatives) facts = fact_set(splits);
  const linkpred::FactSet* filter = cfg.filter_negatives ? &facts : nullptr;

  double best = -1.0;
  int stale = 0;
  double last_finite = 0.0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    state.reset();
    std::vector<metrics::ScoredQuery> queries;
    double loss_total = 0.0;
    int batch_index = 0;
    for (const EventBatch& batch :
         batch_stream(splits.train, static_cast<size_t>(cfg.batch_size))) {
      std::vector<TemporalEvent> negs = linkpred::sample_negatives(
          batch.events, n_ent, cfg.negatives, rng, filter);
      BatchResult r;
      try {
        r = process_batch(params, state, cfg, batch.events, negs, opt.get());
      } catch (const DiagnosticsError&) {
        throw DiagnosticsError(
            "non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                std::to_string(batch_index),
            epoch, batch_index, last_finite);
      }
      last_finite = r.loss;
      loss_total += r.loss * static_cast<double>(batch.events.size());
      const auto k = static_cast<size_t>(cfg.negatives);
      for (size_t i = 0; i < batch.events.size(); ++i) {
        metrics::ScoredQuery q;
        q.positive = r.pos_probs[i];
        q.negatives.assign(r.neg_probs.begin() + static_cast<std::ptrdiff_t>(i * k),
                           r.neg_probs.begin() + static_cast<std::ptrdiff_t>((i + 1) * k));
        queries.push_back(std::move(q));
      }
      ++batch_index;
    }
    metrics::MetricReport tr = metrics::summarize(
        queries, "train", epoch,
        loss_total / static_cast<double>(splits.train.size()));
    result.history.push_back(tr);
    double selection = tr.ap;
    if (!splits.val.empty()) {
      std::mt19937_64 val_rng(cfg.seed ^ kValNegativeStream);
      ScoredStream v = score_stream(params, state, cfg, splits.val.events,
                                    n_ent, val_rng, Protocol::kSampled,
                                    filter, nullptr);
      metrics::MetricReport vr =
          metrics::summarize(v.queries, "val", epoch, v.loss);
      result.history.push_back(vr);
      selection = vr.ap;
    }
    if (log != nullptr) {
      *log << "epoch " << epoch << " train loss " << tr.loss << " ap " << tr.ap
           << " mrr " << tr.mrr;
      if (!splits.val.empty()) {
        const auto& vr = result.history.back();
        *log << " | val loss " << vr.loss << " ap " << vr.ap << " mrr "
             << vr.mrr;
      }
      *log << "\n";
    }
    if (selection > best) {
      best = selection;
      stale = 0;
      result.checkpoint.params = params;
      result.checkpoint.memory = state.memory;
      result.checkpoint.best_epoch = epoch;
    } else if (++stale >= cfg.patience) {
      break;
    }
  }
  for (ad::Parameter* p : result.checkpoint.params.parameters()) p->zero_grad();
  return result;
}

metrics::MetricReport evaluate(const Checkpoint& ckpt,
                               const DatasetSplits& splits,
                               const std::string& split, Protocol protocol,
                               double horizon, EvalTrace* trace) {
  if (split != "val" && split != "test") {
    throw ConfigError("unknown split '" + split + "' (expected val or test)");
  }
  check_vocab(ckpt, splits);
  const TrainConfig& cfg = ckpt.config;
  ModelParams params = ckpt.params;
  StreamState state(cfg, ckpt.num_entities);
  const auto bs = static_cast<size_t>(cfg.batch_size);
  for (const EventBatch& b : batch_stream(splits.train, bs)) {
    advance(params, state, b.events);
  }
  const EventDataset* target = &splits.val;
  if (split == "test") {
    for (const EventBatch& b : batch_stream(splits.val, bs)) {
      advance(params, state, b.events);
    }
    target = &splits.test;
  }
  std::span<const TemporalEvent> events(target->events);
  auto end = std::upper_bound(
      events.begin(), events.end(), horizon,
      [](double t, const TemporalEvent& e) { return t < e.timestamp; });
  events = events.first(static_cast<size_t>(end - events.begin()));
  if (events.empty()) throw EmptyDatasetError("no " + split + " events to score");

  linkpred::FactSet facts;
  if (cfg.filter_negatives) facts = fact_set(splits);
  const linkpred::FactSet* filter = cfg.filter_negatives ? &facts : nullptr;
  std::mt19937_64 rng(cfg.seed ^ (split == "val" ? kValNegativeStream
                                                 : kTestNegativeStream));
  ScoredStream s = score_stream(params, state, cfg, events, ckpt.num_entities,
                                rng, protocol, filter, trace);
  return metrics::summarize(s.queries, split, ckpt.best_epoch, s.loss);
}

const std::vector<AblationScenario>& ablation_scenarios() {
  static const std::vector<AblationScenario> kScenarios = {
      {"HierTKG", PoolingVariant::kDiffPool, FusionVariant::kAttention},
      {"First", PoolingVariant::kDoubleSagPool, FusionVariant::kAttention},
      {"Second", PoolingVariant::kDoubleSagPool, FusionVariant::kNoAttention},
      {"Third", PoolingVariant::kSagPool, FusionVariant::kAttention},
  };
  return kScenarios;
}

AblationScenario ablation_scenario(const std::string& name) {
  auto lower = [](std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return s;
  };
  for (const AblationScenario& s : ablation_scenarios()) {
    if (lower(s.name) == lower(name)) return s;
  }
  throw ConfigError("unknown ablation scenario '" + name + "'");
}

AblationRow run_ablation(const TrainConfig& cfg, const DatasetSplits& splits,
                         const AblationScenario& scenario, std::ostream* log) {
  TrainConfig c = cfg;
  c.pooling = scenario.pooling;
  c.fusion = scenario.fusion;
  TrainResult r = train(c, splits, log);
  AblationRow row;
  row.scenario = scenario.name;
  if (!splits.val.empty()) {
    metrics::MetricReport v = evaluate(r.checkpoint, splits, "val");
    row.val_ap = v.ap;
    row.val_auc = v.auc;
    row.val_mrr = v.mrr;
  }
  metrics::MetricReport t = evaluate(r.checkpoint, splits, "test");
  row.test_ap = t.ap;
  row.test_auc = t.auc;
  row.test_mrr = t.mrr;
  return row;
}

EventDataset load_dataset(const TrainConfig& cfg) {
  if (cfg.dataset.empty()) throw ConfigError("no dataset configured");
  if (cfg.dataset_format == "icews") return load_icews(cfg.dataset);
  if (cfg.dataset_format == "wikidata") return load_wikidata(cfg.dataset);
  return read_canonical(cfg.dataset);
}

EventDataset make_cyclic_tkg(int nodes, int cycles, int relations) {
  if (nodes < 2 || cycles < 1 || relations < 1) {
    throw ConfigError("cyclic dataset needs >= 2 nodes, >= 1 cycle and "
                      ">= 1 relation");
  }
  std::vector<RawEvent> raw;
  for (int c = 0; c < cycles; ++c) {
    for (int i = 0; i < nodes; ++i) {
      raw.push_back({"e" + std::to_string(i),
                     "r" + std::to_string(i % relations),
                     "e" + std::to_string((i + 1) % nodes),
                     std::to_string(c * nodes + i)});
    }
  }
  return build_vocabs(raw, "cyclic");
}

EventDataset make_random_tkg(int entities, int relations, int events,
                             std::uint64_t seed) {
  if (entities < 2 || relations < 1 || events < 1) {
    throw ConfigError("random dataset needs >= 2 entities, >= 1 relation "
                      "and >= 1 event");
  }
  EventDataset ds;
  ds.name = "random";
  for (int i = 0; i < entities; ++i) ds.entity_vocab.add("e" + std::to_string(i));
  for (int r = 0; r < relations; ++r) {
    ds.relation_vocab.add("r" + std::to_string(r));
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<EntityId> ent(0, entities - 1);
  std::uniform_int_distribution<RelationId> rel(0, relations - 1);
  std::bernoulli_distribution tick(0.7);
  double t = 0.0;
  for (int i = 0; i < events; ++i) {
    EntityId s = ent(rng), o = ent(rng);
    while (o == s) o = ent(rng);
    ds.events.push_back({s, rel(rng), o, t});
    if (tick(rng)) t += 1.0;
  }
  return ds;
}

}  // namespace hiertkg
