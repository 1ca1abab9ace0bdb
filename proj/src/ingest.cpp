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

#include "hiertkg/ingest.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "hiertkg/errors.hpp"
#include "json.hpp"

namespace hiertkg {
namespace fs = std::filesystem;

namespace {

// Howard Hinnant's days_from_civil.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const auto yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

bool is_leap(std::int64_t y) {
  return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
}

unsigned days_in_month(std::int64_t y, unsigned m) {
  static constexpr std::array<unsigned, 12> kDays = {31, 28, 31, 30, 31, 30,
                                                     31, 31, 30, 31, 30, 31};
  return m == 2 && is_leap(y) ? 29 : kDays[m - 1];
}

template <class T>
bool parse_int(std::string_view s, T* out) {
  if (s.empty()) return false;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), *out);
  return ec == std::errc() && p == s.data() + s.size();
}

std::string trim(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == '\n' ||
                        s.back() == ' ')) {
    s.pop_back();
  }
  size_t i = 0;
  while (i < s.size() && s[i] == ' ') ++i;
  return s.substr(i);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> cols;
  size_t start = 0;
  while (true) {
    size_t pos = line.find(sep, start);
    if (pos == std::string::npos) {
      cols.push_back(line.substr(start));
      break;
    }
    cols.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return cols;
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

}  // namespace

std::optional<std::int64_t> parse_iso_date(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
    return std::nullopt;
  }
  std::int64_t y = 0;
  unsigned m = 0, d = 0;
  if (!parse_int(text.substr(0, 4), &y) || !parse_int(text.substr(5, 2), &m) ||
      !parse_int(text.substr(8, 2), &d)) {
    return std::nullopt;
  }
  if (m < 1 || m > 12 || d < 1 || d > days_in_month(y, m)) {
    return std::nullopt;
  }
  return days_from_civil(y, m, d);
}

EventDataset load_icews(const fs::path& path) {
  const auto lines = read_lines(path);
  struct Row {
    std::string s, r, o, t;
    size_t lineno;
  };
  std::vector<Row> rows;
  for (size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto cols = split(lines[i], '\t');
    if (cols.size() != 4 && cols.size() != 5) {
      throw ParseError(path.string() + ":" + std::to_string(i + 1),
                       "expected 4 or 5 tab-separated columns, got " +
                           std::to_string(cols.size()));
    }
    rows.push_back({cols[0], cols[1], cols[2], trim(cols[3]), i + 1});
  }
  if (rows.empty()) throw EmptyDatasetError("no events in " + path.string());

  // Date-formatted files are converted to day ordinals; the format is decided
  // by the first row and must hold for every row.
  const bool dates = parse_iso_date(rows.front().t).has_value();
  std::vector<RawEvent> raw;
  raw.reserve(rows.size());
  if (dates) {
    std::vector<std::int64_t> days(rows.size());
    for (size_t i = 0; i < rows.size(); ++i) {
      auto d = parse_iso_date(rows[i].t);
      if (!d) {
        throw ParseError(path.string() + ":" + std::to_string(rows[i].lineno),
                         "expected YYYY-MM-DD date, got '" + rows[i].t + "'");
      }
      days[i] = *d;
    }
    const std::int64_t min_day = *std::min_element(days.begin(), days.end());
    for (size_t i = 0; i < rows.size(); ++i) {
      raw.push_back({rows[i].s, rows[i].r, rows[i].o,
                     std::to_string(days[i] - min_day)});
    }
  } else {
    for (const Row& r : rows) {
      double t = 0.0;
      if (!parse_timestamp(r.t, &t)) {
        throw ParseError(path.string() + ":" + std::to_string(r.lineno),
                         "unparseable timestamp '" + r.t + "'");
      }
      raw.push_back({r.s, r.r, r.o, r.t});
    }
  }
  return build_vocabs(raw, path.stem().string());
}

EventDataset load_wikidata(const fs::path& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw EmptyDatasetError("no header in " + path.string());
  auto header = split(lines.front(), ',');
  auto column = [&](const std::string& name) -> size_t {
    for (size_t i = 0; i < header.size(); ++i) {
      if (trim(header[i]) == name) return i;
    }
    throw SchemaError(name, "missing required column in " + path.string());
  };
  const size_t cu = column("user_id");
  const size_t ci = column("item_id");
  const size_t ct = column("timestamp");
  const size_t need = std::max({cu, ci, ct}) + 1;

  std::vector<RawEvent> raw;
  for (size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto cols = split(lines[i], ',');
    if (cols.size() < need) {
      throw ParseError(path.string() + ":" + std::to_string(i + 1),
                       "too few columns");
    }
    raw.push_back({"user:" + trim(cols[cu]), "interacts",
                   "item:" + trim(cols[ci]), trim(cols[ct])});
  }
  if (raw.empty()) throw EmptyDatasetError("no events in " + path.string());
  try {
    return build_vocabs(raw, path.stem().string());
  } catch (const ParseError& e) {
    throw ParseError(path.string(), e.what());
  }
}

// ---- PHEME ----------------------------------------------------------------

std::string entity_label(EntityKind kind, const std::string& raw_id) {
  switch (kind) {
    case EntityKind::kEvent:
      return "event:" + raw_id;
    case EntityKind::kTweet:
      return "tweet:" + raw_id;
    case EntityKind::kUser:
      return "user:" + raw_id;
  }
  return raw_id;
}

std::optional<EntityKind> entity_kind(const std::string& label) {
  if (label.rfind("event:", 0) == 0) return EntityKind::kEvent;
  if (label.rfind("tweet:", 0) == 0) return EntityKind::kTweet;
  if (label.rfind("user:", 0) == 0) return EntityKind::kUser;
  return std::nullopt;
}

std::optional<double> parse_twitter_time(std::string_view text) {
  // "Wed Jan 07 11:06:08 +0000 2015"
  static constexpr std::array<std::string_view, 12> kMonths = {
      "Jan", "Feb", "Mar", "Apr", "May", "Jun",
      "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};
  std::istringstream is{std::string(text)};
  std::string dow, mon, day, hms, zone, year;
  if (!(is >> dow >> mon >> day >> hms >> zone >> year)) return std::nullopt;
  unsigned m = 0;
  for (unsigned i = 0; i < kMonths.size(); ++i) {
    if (kMonths[i] == mon) m = i + 1;
  }
  std::int64_t y = 0;
  unsigned d = 0;
  int hh = 0, mm = 0, ss = 0;
  if (m == 0 || !parse_int(std::string_view(year), &y) ||
      !parse_int(std::string_view(day), &d) || hms.size() != 8 ||
      !parse_int(std::string_view(hms).substr(0, 2), &hh) ||
      !parse_int(std::string_view(hms).substr(3, 2), &mm) ||
      !parse_int(std::string_view(hms).substr(6, 2), &ss)) {
    return std::nullopt;
  }
  if (d < 1 || d > days_in_month(y, m) || hh > 23 || mm > 59 || ss > 60) {
    return std::nullopt;
  }
  int offset_min = 0;
  if (zone.size() == 5 && (zone[0] == '+' || zone[0] == '-')) {
    int oh = 0, om = 0;
    if (!parse_int(std::string_view(zone).substr(1, 2), &oh) ||
        !parse_int(std::string_view(zone).substr(3, 2), &om)) {
      return std::nullopt;
    }
    offset_min = (zone[0] == '-' ? -1 : 1) * (oh * 60 + om);
  } else {
    return std::nullopt;
  }
  double secs = static_cast<double>(days_from_civil(y, m, d)) * 86400.0 +
                hh * 3600.0 + mm * 60.0 + ss - offset_min * 60.0;
  if (secs < 0.0) return std::nullopt;
  return secs;
}

PhemeTweetRecord parse_tweet_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string(), "cannot open tweet file");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string(), e.what());
  }
  auto id_string = [](const nlohmann::json& obj, const char* str_key,
                      const char* num_key) -> std::optional<std::string> {
    if (!obj.is_object()) return std::nullopt;
    auto it = obj.find(str_key);
    if (it != obj.end() && it->is_string()) return it->get<std::string>();
    it = obj.find(num_key);
    if (it != obj.end() && it->is_number_integer()) {
      return std::to_string(it->get<std::int64_t>());
    }
    return std::nullopt;
  };
  PhemeTweetRecord rec;
  try {
    auto id = id_string(j, "id_str", "id");
    if (!id || id->empty()) throw ParseError(path.string(), "missing tweet id");
    rec.tweet_id = *id;
    auto user = j.find("user");
    auto uid = user == j.end() ? std::nullopt
                               : id_string(*user, "id_str", "id");
    if (!uid) throw ParseError(path.string(), "missing user id");
    rec.user_id = *uid;
    if (auto t = j.find("text"); t != j.end() && t->is_string()) {
      rec.text = t->get<std::string>();
    }
    auto created = j.find("created_at");
    if (created == j.end() || !created->is_string()) {
      throw ParseError(path.string(), "missing created_at");
    }
    auto ts = parse_twitter_time(created->get<std::string>());
    if (!ts) {
      throw ParseError(path.string(), "unparseable created_at '" +
                                          created->get<std::string>() + "'");
    }
    rec.created_at = *ts;
    rec.in_reply_to = id_string(j, "in_reply_to_status_id_str",
                                "in_reply_to_status_id");
    if (auto ent = j.find("entities"); ent != j.end() && ent->is_object()) {
      if (auto men = ent->find("user_mentions");
          men != ent->end() && men->is_array()) {
        for (const auto& m : *men) {
          auto mid = id_string(m, "id_str", "id");
          if (mid && std::find(rec.mentioned_user_ids.begin(),
                               rec.mentioned_user_ids.end(),
                               *mid) == rec.mentioned_user_ids.end()) {
            rec.mentioned_user_ids.push_back(*mid);
          }
        }
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string(), e.what());
  }
  return rec;
}

namespace {

std::vector<fs::path> sorted_entries(const fs::path& dir, bool dirs) {
  std::vector<fs::path> out;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) return out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (dirs ? e.is_directory() : e.is_regular_file()) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct ThreadDir {
  fs::path path;
  std::string event;
  RumorLabel label;
};

void find_threads(const fs::path& dir, const std::string& event,
                  RumorLabel label, std::vector<ThreadDir>* out) {
  if (fs::is_directory(dir / "source-tweet")) {
    out->push_back({dir, event, label});
    return;
  }
  for (const auto& sub : sorted_entries(dir, true)) {
    const std::string name = sub.filename().string();
    RumorLabel l = label;
    if (name == "rumours" || name == "rumors") l = RumorLabel::kRumor;
    if (name == "non-rumours" || name == "non-rumors") {
      l = RumorLabel::kNonRumor;
    }
    find_threads(sub, event, l, out);
  }
}

std::vector<fs::path> json_files(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& p : sorted_entries(dir, false)) {
    if (p.extension() == ".json") out.push_back(p);
  }
  return out;
}

}  // namespace

PhemeKg build_pheme_kg(const fs::path& root) {
  if (!fs::is_directory(root)) {
    throw IoError("PHEME root is not a directory: " + root.string());
  }
  PhemeKg kg;
  std::vector<ThreadDir> threads;
  for (const auto& event_dir : sorted_entries(root, true)) {
    find_threads(event_dir, event_dir.filename().string(),
                 RumorLabel::kUnknown, &threads);
  }

  std::unordered_set<std::string> seen;
  for (const ThreadDir& th : threads) {
    PhemeEventCounts& counts = kg.report.per_event[th.event];
    ++counts.threads;
    if (th.label == RumorLabel::kRumor) ++counts.rumours;
    if (th.label == RumorLabel::kNonRumor) ++counts.non_rumours;
    std::vector<fs::path> files = json_files(th.path / "source-tweet");
    for (auto& p : json_files(th.path / "reactions")) files.push_back(p);
    for (const fs::path& f : files) {
      PhemeTweetRecord rec = parse_tweet_json(f);
      rec.event_name = th.event;
      rec.rumor_label = th.label;
      if (!seen.insert(rec.tweet_id).second) {
        kg.report.warnings.push_back("duplicate tweet " + rec.tweet_id +
                                     " in " + f.string() + " skipped");
        continue;
      }
      ++counts.tweets;
      kg.tweets.push_back(std::move(rec));
    }
  }
  if (kg.tweets.empty()) {
    throw EmptyDatasetError("no tweets under " + root.string());
  }

  std::unordered_map<std::string, double> tweet_time;
  for (const auto& t : kg.tweets) tweet_time[t.tweet_id] = t.created_at;

  using namespace pheme_relations;
  std::vector<RawEvent> raw;
  for (const auto& t : kg.tweets) {
    const std::string tweet = entity_label(EntityKind::kTweet, t.tweet_id);
    const std::string when = format_timestamp(t.created_at);
    raw.push_back({tweet, kRelatedTo,
                   entity_label(EntityKind::kEvent, t.event_name), when});
    raw.push_back({entity_label(EntityKind::kUser, t.user_id), kWrote, tweet,
                   when});
    if (t.in_reply_to && !t.in_reply_to->empty()) {
      auto parent = tweet_time.find(*t.in_reply_to);
      if (parent == tweet_time.end()) {
        ++kg.report.dropped_replies;
      } else {
        if (t.created_at < parent->second) {
          ++kg.report.reply_time_violations;
          kg.report.warnings.push_back("tweet " + t.tweet_id +
                                       " precedes the tweet it replies to");
        }
        raw.push_back({tweet, kRepliedTo,
                       entity_label(EntityKind::kTweet, *t.in_reply_to),
                       when});
      }
    }
    for (const auto& m : t.mentioned_user_ids) {
      raw.push_back({tweet, kMentions, entity_label(EntityKind::kUser, m),
                     when});
    }
  }
  kg.dataset = build_vocabs(raw, root.filename().string());
  return kg;
}

IngestSummary ingest_summary(const EventDataset& ds,
                             const PhemeIngestReport* report) {
  IngestSummary s;
  s.entities_by_kind = {{"Event", 0}, {"Tweet", 0}, {"User", 0}};
  for (const auto& label : ds.entity_vocab.labels()) {
    auto kind = entity_kind(label);
    if (!kind) continue;
    switch (*kind) {
      case EntityKind::kEvent:
        ++s.entities_by_kind["Event"];
        break;
      case EntityKind::kTweet:
        ++s.entities_by_kind["Tweet"];
        break;
      case EntityKind::kUser:
        ++s.entities_by_kind["User"];
        break;
    }
  }
  for (const auto& rel : ds.relation_vocab.labels()) s.events_by_relation[rel];
  const std::int64_t related =
      ds.relation_vocab.contains(pheme_relations::kRelatedTo)
          ? ds.relation_vocab.id(pheme_relations::kRelatedTo)
          : -1;
  for (const TemporalEvent& e : ds.events) {
    ++s.events_by_relation[ds.relation_vocab.label(e.relation)];
    if (e.relation == related) {
      std::string ev = ds.entity_vocab.label(e.destination).substr(6);
      ++s.tweets_by_event[ev];
    }
  }
  s.tweets = s.entities_by_kind["Tweet"];
  if (report != nullptr) {
    for (const auto& [ev, c] : report->per_event) {
      s.threads_by_event[ev] = c.threads;
      s.threads += c.threads;
    }
  }
  return s;
}

}  // namespace hiertkg
