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

#include "hiertkg/tkg_data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "hiertkg/errors.hpp"
#include "json.hpp"

namespace hiertkg {

std::int64_t Vocab::add(std::string_view label) {
  auto it = forward_.find(std::string(label));
  if (it != forward_.end()) return it->second;
  std::int64_t id = size();
  forward_.emplace(std::string(label), id);
  labels_.emplace_back(label);
  return id;
}

std::int64_t Vocab::id(std::string_view label) const {
  auto it = forward_.find(std::string(label));
  if (it == forward_.end()) {
    throw IndexError("unknown label '" + std::string(label) + "'");
  }
  return it->second;
}

bool Vocab::contains(std::string_view label) const {
  return forward_.count(std::string(label)) > 0;
}

const std::string& Vocab::label(std::int64_t id) const {
  if (id < 0 || id >= size()) {
    throw IndexError("vocab id " + std::to_string(id) + " out of range " +
                     std::to_string(size()));
  }
  return labels_[static_cast<size_t>(id)];
}

EventDataset EventDataset::with_events(std::vector<TemporalEvent> evs) const {
  EventDataset out;
  out.name = name;
  out.events = std::move(evs);
  out.entity_vocab = entity_vocab;
  out.relation_vocab = relation_vocab;
  return out;
}

bool parse_timestamp(std::string_view text, double* out) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) {
    text.remove_prefix(1);
  }
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' ||
                           text.back() == '\r')) {
    text.remove_suffix(1);
  }
  if (text.empty()) return false;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) return false;
  if (!std::isfinite(v) || v < 0.0) return false;
  *out = v;
  return true;
}

EventDataset build_vocabs(std::span<const RawEvent> raw, std::string name) {
  if (raw.empty()) throw EmptyDatasetError("no events in '" + name + "'");
  EventDataset ds;
  ds.name = std::move(name);
  ds.events.reserve(raw.size());
  for (size_t i = 0; i < raw.size(); ++i) {
    const RawEvent& r = raw[i];
    double t = 0.0;
    if (!parse_timestamp(r.timestamp, &t)) {
      throw ParseError("record " + std::to_string(i),
                       "unparseable timestamp '" + r.timestamp + "'");
    }
    TemporalEvent e;
    e.source = ds.entity_vocab.add(r.source);
    e.relation = ds.relation_vocab.add(r.relation);
    e.destination = ds.entity_vocab.add(r.destination);
    e.timestamp = t;
    ds.events.push_back(e);
  }
  std::stable_sort(ds.events.begin(), ds.events.end(),
                   [](const TemporalEvent& a, const TemporalEvent& b) {
                     return a.timestamp < b.timestamp;
                   });
  return ds;
}

DatasetSplits chronological_split(const EventDataset& ds, double train_frac,
                                  double val_frac) {
  if (!(train_frac > 0.0) || !(val_frac > 0.0) ||
      !(train_frac + val_frac < 1.0)) {
    throw ConfigError("split fractions must satisfy 0 < train, 0 < val, "
                      "train + val < 1");
  }
  const size_t n = ds.events.size();
  const auto n_train = static_cast<size_t>(std::floor(train_frac * n));
  const auto n_val = static_cast<size_t>(std::floor(val_frac * n));
  auto b = ds.events.begin();
  DatasetSplits out;
  out.train = ds.with_events({b, b + n_train});
  out.val = ds.with_events({b + n_train, b + n_train + n_val});
  out.test = ds.with_events({b + n_train + n_val, ds.events.end()});
  out.train.name = ds.name + "/train";
  out.val.name = ds.name + "/val";
  out.test.name = ds.name + "/test";
  return out;
}

std::vector<EventBatch> batch_stream(std::span<const TemporalEvent> events,
                                     size_t batch_size) {
  if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
  std::vector<EventBatch> out;
  for (size_t lo = 0, k = 0; lo < events.size(); lo += batch_size, ++k) {
    size_t n = std::min(batch_size, events.size() - lo);
    out.push_back(EventBatch{events.subspan(lo, n), k});
  }
  return out;
}

Snapshot snapshot_at(const EventDataset& ds, double t) {
  Snapshot snap;
  for (const TemporalEvent& e : ds.events) {
    // Events are sorted, so the prefix ends at the first later timestamp.
    if (e.timestamp > t) break;
    auto key = std::minmax(e.source, e.destination);
    snap.edges[{key.first, key.second}] += 1.0;
    snap.nodes.insert(e.source);
    snap.nodes.insert(e.destination);
  }
  return snap;
}

std::string format_timestamp(double t) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), t);
  return std::string(buf, ptr);
}

std::string events_to_tsv(const EventDataset& ds) {
  std::string out;
  for (const TemporalEvent& e : ds.events) {
    out += ds.entity_vocab.label(e.source);
    out += '\t';
    out += ds.relation_vocab.label(e.relation);
    out += '\t';
    out += ds.entity_vocab.label(e.destination);
    out += '\t';
    out += format_timestamp(e.timestamp);
    out += '\n';
  }
  return out;
}

namespace {

nlohmann::ordered_json vocab_json(const Vocab& v) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (std::int64_t i = 0; i < v.size(); ++i) j[v.label(i)] = i;
  return j;
}

Vocab vocab_from_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string(), e.what());
  }
  std::vector<std::string> labels(j.size());
  std::vector<bool> seen(j.size(), false);
  for (auto it = j.begin(); it != j.end(); ++it) {
    auto id = it.value().get<std::int64_t>();
    if (id < 0 || id >= static_cast<std::int64_t>(labels.size()) ||
        seen[id]) {
      throw ParseError(path.string(), "ids are not contiguous 0..size-1");
    }
    seen[id] = true;
    labels[id] = it.key();
  }
  Vocab v;
  for (const auto& l : labels) v.add(l);
  return v;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> cols;
  std::string cur;
  std::istringstream is(line);
  while (std::getline(is, cur, '\t')) cols.push_back(cur);
  if (!line.empty() && line.back() == '\t') cols.emplace_back();
  return cols;
}

}  // namespace

void write_canonical(const EventDataset& ds, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  auto write = [&](const std::filesystem::path& p, const std::string& body) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw IoError("cannot write " + p.string());
    out << body;
    if (!out) throw IoError("write failed for " + p.string());
  };
  write(dir / "events.tsv", events_to_tsv(ds));
  write(dir / "entities.json", vocab_json(ds.entity_vocab).dump(1) + "\n");
  write(dir / "relations.json", vocab_json(ds.relation_vocab).dump(1) + "\n");
}

EventDataset read_canonical(const std::filesystem::path& dir) {
  const auto events_path = dir / "events.tsv";
  std::ifstream in(events_path);
  if (!in) throw IoError("cannot open " + events_path.string());
  std::vector<RawEvent> raw;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cols = split_tabs(line);
    if (cols.size() != 4) {
      throw ParseError(events_path.string() + ":" + std::to_string(lineno),
                       "expected 4 tab-separated columns");
    }
    raw.push_back({cols[0], cols[1], cols[2], cols[3]});
  }
  const bool have_vocab = std::filesystem::exists(dir / "entities.json") &&
                          std::filesystem::exists(dir / "relations.json");
  if (!have_vocab) return build_vocabs(raw, dir.filename().string());

  if (raw.empty()) throw EmptyDatasetError("no events in " + dir.string());
  EventDataset ds;
  ds.name = dir.filename().string();
  ds.entity_vocab = vocab_from_json(dir / "entities.json");
  ds.relation_vocab = vocab_from_json(dir / "relations.json");
  for (size_t i = 0; i < raw.size(); ++i) {
    double t = 0.0;
    if (!parse_timestamp(raw[i].timestamp, &t)) {
      throw ParseError("record " + std::to_string(i),
                       "unparseable timestamp '" + raw[i].timestamp + "'");
    }
    ds.events.push_back({ds.entity_vocab.id(raw[i].source),
                         ds.relation_vocab.id(raw[i].relation),
                         ds.entity_vocab.id(raw[i].destination), t});
  }
  std::stable_sort(ds.events.begin(), ds.events.end(),
                   [](const TemporalEvent& a, const TemporalEvent& b) {
                     return a.timestamp < b.timestamp;
                   });
  return ds;
}

}  // namespace hiertkg
