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

// Loaders for the three dataset families: ICEWS quadruple files, JODIE-style
// Wikipedia interaction logs, and PHEME rumour-thread directories.

#ifndef HIERTKG_INGEST_HPP_
#define HIERTKG_INGEST_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hiertkg/tkg_data.hpp"

namespace hiertkg {

// ICEWS TSV: subject, relation, object, time [, ignored]. Times may be
// numeric or YYYY-MM-DD; dates become day ordinals from the earliest date.
EventDataset load_icews(const std::filesystem::path& path);

// CSV with a header containing user_id, item_id and timestamp. Users and
// items share one entity vocabulary under `user:` / `item:` prefixes; every
// row becomes (user, interacts, item, timestamp).
EventDataset load_wikidata(const std::filesystem::path& path);

// Days since 1970-01-01 for a proleptic Gregorian YYYY-MM-DD string.
std::optional<std::int64_t> parse_iso_date(std::string_view text);

enum class RumorLabel { kRumor, kNonRumor, kUnknown };

struct PhemeTweetRecord {
  std::string tweet_id;
  std::string user_id;
  std::string text;
  double created_at = 0.0;  // seconds since the Unix epoch
  std::optional<std::string> in_reply_to;
  std::vector<std::string> mentioned_user_ids;
  std::string event_name;
  RumorLabel rumor_label = RumorLabel::kUnknown;
};

enum class EntityKind { kEvent, kTweet, kUser };

// Namespaced labels: "event:<name>", "tweet:<id>", "user:<id>".
std::string entity_label(EntityKind kind, const std::string& raw_id);
// Kind encoded in a namespaced label; nullopt for labels without a known
// prefix.
std::optional<EntityKind> entity_kind(const std::string& label);

namespace pheme_relations {
inline constexpr const char* kRelatedTo = "related_to";
inline constexpr const char* kMentions = "mentions";
inline constexpr const char* kRepliedTo = "replied_to";
inline constexpr const char* kWrote = "wrote";
}  // namespace pheme_relations

// Parses Twitter's created_at format ("Wed Jan 07 11:06:08 +0000 2015").
std::optional<double> parse_twitter_time(std::string_view text);

// Reads one tweet JSON document. Throws ParseError naming `path`.
PhemeTweetRecord parse_tweet_json(const std::filesystem::path& path);

struct PhemeEventCounts {
  std::int64_t threads = 0;
  std::int64_t tweets = 0;
  std::int64_t rumours = 0;
  std::int64_t non_rumours = 0;
};

// Side information gathered while walking the PHEME tree.
struct PhemeIngestReport {
  std::map<std::string, PhemeEventCounts> per_event;
  std::int64_t dropped_replies = 0;  // reply-to ids with no tweet in corpus
  std::int64_t reply_time_violations = 0;  // reply earlier than original
  std::vector<std::string> warnings;
};

struct PhemeKg {
  EventDataset dataset;
  PhemeIngestReport report;
  std::vector<PhemeTweetRecord> tweets;  // ingestion order
};

// Builds the Event/Tweet/User knowledge graph. A thread is any directory with
// a `source-tweet` subdirectory; the event is the top-level folder under
// `root` containing it, and a `rumours`/`non-rumours` ancestor sets the label.
PhemeKg build_pheme_kg(const std::filesystem::path& root);

struct IngestSummary {
  std::map<std::string, std::int64_t> entities_by_kind;  // Event/Tweet/User
  std::map<std::string, std::int64_t> events_by_relation;
  std::int64_t threads = 0;
  std::int64_t tweets = 0;
  // Tweets per event folder (from related_to edges) and threads per event
  // folder (from the ingest report, when given).
  std::map<std::string, std::int64_t> tweets_by_event;
  std::map<std::string, std::int64_t> threads_by_event;
};

IngestSummary ingest_summary(const EventDataset& ds,
                             const PhemeIngestReport* report = nullptr);

}  // namespace hiertkg

#endif  // HIERTKG_INGEST_HPP_
