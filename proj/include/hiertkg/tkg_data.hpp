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

// Core data model for temporal knowledge graphs: timestamped quadruples,
// label vocabularies, chronological splits, batches and prefix snapshots.

#ifndef HIERTKG_TKG_DATA_HPP_
#define HIERTKG_TKG_DATA_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace hiertkg {

using EntityId = std::int64_t;
using RelationId = std::int64_t;

struct TemporalEvent {
  EntityId source = 0;
  RelationId relation = 0;
  EntityId destination = 0;
  double timestamp = 0.0;

  friend bool operator==(const TemporalEvent&, const TemporalEvent&) = default;
};

// Bijection between string labels and contiguous ids 0..size-1.
class Vocab {
 public:
  // Returns the id of `label`, registering it if unseen.
  std::int64_t add(std::string_view label);
  // Throws IndexError for unknown labels.
  std::int64_t id(std::string_view label) const;
  bool contains(std::string_view label) const;
  // Throws IndexError for ids outside 0..size-1.
  const std::string& label(std::int64_t id) const;
  std::int64_t size() const { return static_cast<std::int64_t>(labels_.size()); }
  const std::vector<std::string>& labels() const { return labels_; }

  friend bool operator==(const Vocab& a, const Vocab& b) {
    return a.labels_ == b.labels_;
  }

 private:
  std::unordered_map<std::string, std::int64_t> forward_;
  std::vector<std::string> labels_;
};

struct EventDataset {
  std::string name;
  std::vector<TemporalEvent> events;  // sorted by timestamp, stable
  Vocab entity_vocab;
  Vocab relation_vocab;

  std::int64_t num_entities() const { return entity_vocab.size(); }
  std::int64_t num_relations() const { return relation_vocab.size(); }
  size_t size() const { return events.size(); }
  bool empty() const { return events.empty(); }
  // Copy sharing the vocabularies with a different event list.
  EventDataset with_events(std::vector<TemporalEvent> evs) const;
};

struct EventBatch {
  std::span<const TemporalEvent> events;
  size_t index = 0;
};

// One raw record before id assignment. `timestamp` is kept as text so that
// unparseable values surface as ParseError with the record index.
struct RawEvent {
  std::string source;
  std::string relation;
  std::string destination;
  std::string timestamp;
};

// Assigns ids in first-appearance order and sorts events stably by time.
// Throws EmptyDatasetError on empty input and ParseError (location = record
// index) when a timestamp is not a finite non-negative number.
EventDataset build_vocabs(std::span<const RawEvent> raw,
                          std::string name = "dataset");

// Parses a timestamp string as a finite non-negative real. Returns false on
// failure.
bool parse_timestamp(std::string_view text, double* out);

struct DatasetSplits {
  EventDataset train;
  EventDataset val;
  EventDataset test;
};

// train = first floor(train_frac*n) events, val = next floor(val_frac*n),
// test = remainder.
DatasetSplits chronological_split(const EventDataset& ds, double train_frac,
                                  double val_frac);

std::vector<EventBatch> batch_stream(std::span<const TemporalEvent> events,
                                     size_t batch_size);
inline std::vector<EventBatch> batch_stream(const EventDataset& ds,
                                            size_t batch_size) {
  return batch_stream(std::span<const TemporalEvent>(ds.events), batch_size);
}

// Undirected weighted adjacency keyed by (min id, max id); the weight is the
// number of events between the pair. Self-loops are keyed (v, v).
struct Snapshot {
  std::map<std::pair<EntityId, EntityId>, double> edges;
  std::set<EntityId> nodes;
};

// Prefix view of all events with timestamp <= t.
Snapshot snapshot_at(const EventDataset& ds, double t);

// ---- Canonical on-disk format -------------------------------------------
// DIR/events.tsv       source<TAB>relation<TAB>destination<TAB>timestamp
// DIR/entities.json    {"label": id, ...}
// DIR/relations.json   {"label": id, ...}

std::string format_timestamp(double t);
void write_canonical(const EventDataset& ds, const std::filesystem::path& dir);
EventDataset read_canonical(const std::filesystem::path& dir);

// Serialized form of the event list alone (labels, tab separated), as written
// to events.tsv.
std::string events_to_tsv(const EventDataset& ds);

}  // namespace hiertkg

#endif  // HIERTKG_TKG_DATA_HPP_
