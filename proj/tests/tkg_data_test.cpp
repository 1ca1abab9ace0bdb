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

#include <gtest/gtest.h>

#include <filesystem>
#include <map>
#include <random>
#include <set>

#include "hiertkg/errors.hpp"

namespace hiertkg {
namespace {

std::vector<RawEvent> random_raw(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> ent(0, 40), rel(0, 6), t(0, 100);
  std::vector<RawEvent> raw;
  for (int i = 0; i < n; ++i) {
    raw.push_back({"s" + std::to_string(ent(rng)), "r" + std::to_string(rel(rng)),
                   "s" + std::to_string(ent(rng)), std::to_string(t(rng))});
  }
  return raw;
}

TEST(BuildVocabsTest, SortsByTimestamp) {
  std::vector<RawEvent> raw = {{"a", "r1", "b", "5"}, {"a", "r1", "c", "2"}};
  EventDataset ds = build_vocabs(raw);
  EXPECT_EQ(ds.entity_vocab.size(), 3);
  EXPECT_EQ(ds.relation_vocab.size(), 1);
  ASSERT_EQ(ds.size(), 2u);
  EXPECT_EQ(ds.entity_vocab.label(ds.events[0].destination), "c");
  EXPECT_EQ(ds.events[0].timestamp, 2.0);
  EXPECT_EQ(ds.entity_vocab.label(ds.events[1].destination), "b");
  EXPECT_EQ(ds.events[1].timestamp, 5.0);
}

TEST(BuildVocabsTest, SingleSelfLoop) {
  std::vector<RawEvent> raw = {{"x", "r", "x", "0"}};
  EventDataset ds = build_vocabs(raw);
  EXPECT_EQ(ds.size(), 1u);
  EXPECT_EQ(ds.entity_vocab.size(), 1);
  EXPECT_EQ(ds.events[0].source, ds.events[0].destination);
}

TEST(BuildVocabsTest, VocabSizesMatchDistinctLabelCount) {
  auto raw = random_raw(1000, 3);
  std::set<std::string> ents, rels;
  for (const auto& r : raw) {
    ents.insert(r.source);
    ents.insert(r.destination);
    rels.insert(r.relation);
  }
  EventDataset ds = build_vocabs(raw);
  EXPECT_EQ(ds.entity_vocab.size(), static_cast<std::int64_t>(ents.size()));
  EXPECT_EQ(ds.relation_vocab.size(), static_cast<std::int64_t>(rels.size()));
}

TEST(BuildVocabsTest, TiesKeepIngestionOrder) {
  std::vector<RawEvent> raw = {
      {"a", "r", "b", "3"}, {"c", "r", "d", "1"}, {"e", "r", "f", "3"},
      {"g", "r", "h", "1"}};
  EventDataset ds = build_vocabs(raw);
  std::vector<std::string> order;
  for (const auto& e : ds.events) order.push_back(ds.entity_vocab.label(e.source));
  EXPECT_EQ(order, (std::vector<std::string>{"c", "g", "a", "e"}));
}

TEST(BuildVocabsTest, Errors) {
  EXPECT_THROW(build_vocabs({}), EmptyDatasetError);
  std::vector<RawEvent> raw = {{"a", "r", "b", "1"}, {"a", "r", "b", "oops"}};
  try {
    build_vocabs(raw);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(e.location().find('1'), std::string::npos) << e.what();
  }
  std::vector<RawEvent> neg = {{"a", "r", "b", "-1"}};
  EXPECT_THROW(build_vocabs(neg), ParseError);
}

TEST(VocabTest, RoundTrip) {
  Vocab v;
  for (const char* s : {"x", "y", "z", "x"}) v.add(s);
  EXPECT_EQ(v.size(), 3);
  for (std::int64_t i = 0; i < v.size(); ++i) EXPECT_EQ(v.id(v.label(i)), i);
  EXPECT_THROW(v.id("missing"), IndexError);
  EXPECT_THROW(v.label(3), IndexError);
}

TEST(SplitTest, FloorArithmetic) {
  EventDataset ds = build_vocabs(random_raw(10, 1));
  DatasetSplits s = chronological_split(ds, 0.7, 0.15);
  EXPECT_EQ(s.train.size(), 7u);
  EXPECT_EQ(s.val.size(), 1u);
  EXPECT_EQ(s.test.size(), 2u);

  EventDataset one = build_vocabs(random_raw(1, 2));
  DatasetSplits t = chronological_split(one, 0.7, 0.15);
  EXPECT_EQ(t.train.size(), 0u);
  EXPECT_EQ(t.val.size(), 0u);
  EXPECT_EQ(t.test.size(), 1u);
}

TEST(SplitTest, ConcatenationReproducesStream) {
  EventDataset ds = build_vocabs(random_raw(100, 5));
  DatasetSplits s = chronological_split(ds, 0.6, 0.25);
  std::vector<TemporalEvent> joined = s.train.events;
  joined.insert(joined.end(), s.val.events.begin(), s.val.events.end());
  joined.insert(joined.end(), s.test.events.begin(), s.test.events.end());
  EXPECT_EQ(joined, ds.events);
  EXPECT_EQ(s.test.entity_vocab, ds.entity_vocab);
}

TEST(SplitTest, RejectsBadFractions) {
  EventDataset ds = build_vocabs(random_raw(10, 1));
  EXPECT_THROW(chronological_split(ds, 0.0, 0.1), ConfigError);
  EXPECT_THROW(chronological_split(ds, 0.5, 0.0), ConfigError);
  EXPECT_THROW(chronological_split(ds, 0.9, 0.1), ConfigError);
}

TEST(BatchStreamTest, Partition) {
  EventDataset ds = build_vocabs(random_raw(10, 9));
  auto b = batch_stream(ds, 4);
  ASSERT_EQ(b.size(), 3u);
  EXPECT_EQ(b[0].events.size(), 4u);
  EXPECT_EQ(b[1].events.size(), 4u);
  EXPECT_EQ(b[2].events.size(), 2u);
  EXPECT_EQ(b[2].index, 2u);

  EventDataset small = build_vocabs(random_raw(3, 9));
  EXPECT_EQ(batch_stream(small, 10).size(), 1u);
  EXPECT_THROW(batch_stream(small, 0), ConfigError);
}

TEST(BatchStreamTest, FlatteningRoundTripsAndIsChronological) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    EventDataset ds = build_vocabs(random_raw(97, seed));
    std::vector<TemporalEvent> flat;
    double prev_max = -1.0;
    for (const EventBatch& b : batch_stream(ds, 7)) {
      double lo = b.events.front().timestamp, hi = lo;
      for (const auto& e : b.events) {
        lo = std::min(lo, e.timestamp);
        hi = std::max(hi, e.timestamp);
        flat.push_back(e);
      }
      EXPECT_LE(prev_max, lo);
      prev_max = hi;
    }
    EXPECT_EQ(flat, ds.events);
  }
}

TEST(SnapshotTest, VacuousAndFullPrefix) {
  EventDataset ds = build_vocabs(random_raw(50, 4));
  Snapshot empty = snapshot_at(ds, -1.0);
  EXPECT_TRUE(empty.edges.empty());
  EXPECT_TRUE(empty.nodes.empty());
  Snapshot full = snapshot_at(ds, 1e9);
  std::set<EntityId> seen;
  for (const auto& e : ds.events) {
    seen.insert(e.source);
    seen.insert(e.destination);
  }
  EXPECT_EQ(full.nodes, seen);
}

TEST(SnapshotTest, WeightsMatchLinearScanAndArePrefixMonotone) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    EventDataset ds = build_vocabs(random_raw(200, rng()));
    std::uniform_real_distribution<double> td(0, 100);
    double t1 = td(rng), t2 = td(rng);
    if (t1 > t2) std::swap(t1, t2);
    std::map<std::pair<EntityId, EntityId>, double> oracle;
    for (const auto& e : ds.events) {
      if (e.timestamp > t2) continue;
      oracle[{std::min(e.source, e.destination),
              std::max(e.source, e.destination)}] += 1.0;
    }
    Snapshot s2 = snapshot_at(ds, t2);
    EXPECT_EQ(s2.edges, oracle);
    Snapshot s1 = snapshot_at(ds, t1);
    for (const auto& [k, w] : s1.edges) EXPECT_LE(w, s2.edges.at(k));
  }
}

TEST(CanonicalFormatTest, RoundTrip) {
  EventDataset ds = build_vocabs(random_raw(60, 8), "rt");
  auto dir = std::filesystem::temp_directory_path() / "hiertkg_canonical_rt";
  std::filesystem::remove_all(dir);
  write_canonical(ds, dir);
  EventDataset back = read_canonical(dir);
  EXPECT_EQ(back.events, ds.events);
  EXPECT_EQ(back.entity_vocab, ds.entity_vocab);
  EXPECT_EQ(back.relation_vocab, ds.relation_vocab);
  EXPECT_EQ(events_to_tsv(back), events_to_tsv(ds));
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace hiertkg
