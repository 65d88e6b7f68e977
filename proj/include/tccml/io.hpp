/*
 * Copyright 2026 The tccml Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cctype>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "tccml/data.hpp"
#include "tccml/error.hpp"

namespace tccml {

namespace fs = std::filesystem;

namespace detail {

inline std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IngestError("cannot write '" + path.string() + "'");
  return out;
}

inline std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError("cannot open '" + path.string() + "'");
  return in;
}

// Iterates data lines of a headed CSV, calling fn(fields, line_no).
template <typename Fn>
void for_each_csv_row(const fs::path& path, std::string_view expected_header, Fn&& fn) {
  auto in = open_in(path);
  std::string line;
  std::size_t line_no = 0;
  bool header = true;
  while (std::getline(in, line)) {
    ++line_no;
    const auto view = trim(line);
    if (view.empty()) continue;
    if (header) {
      header = false;
      if (view != expected_header) {
        throw IngestError(path.string() + ":" + std::to_string(line_no) +
                          ": expected header '" + std::string(expected_header) + "'");
      }
      continue;
    }
    fn(split(view, ","), line_no);
  }
  if (header) throw IngestError(path.string() + ": empty file");
}

[[noreturn]] inline void bad_row(const fs::path& path, std::size_t line_no) {
  throw IngestError(path.string() + ":" + std::to_string(line_no) + ": malformed row");
}

}  // namespace detail

inline constexpr std::string_view kSplitHeader = "user_id,item_id,class";
inline constexpr std::string_view kIdMapHeader = "dense_id,original_id";
inline constexpr std::string_view kItemTagHeader = "item_id,tag_id";
inline constexpr std::string_view kTagNameHeader = "tag_id,tag";
inline constexpr std::string_view kTagRecordHeader = "user_id,item_id,tag";

/// Split files use dense ids; class is 1 (Positive) or -1 (Negative).
inline void write_split_csv(const fs::path& path, const InteractionTable& table) {
  auto out = detail::open_out(path);
  out << kSplitHeader << '\n';
  for (const auto& x : table.interactions()) {
    out << x.user << ',' << x.item << ',' << int(x.polarity) << '\n';
  }
}

inline InteractionTable read_split_csv(const fs::path& path, std::size_t n_users,
                                       std::size_t n_items) {
  std::vector<SignedInteraction> rows;
  detail::for_each_csv_row(path, kSplitHeader, [&](const auto& f, std::size_t line_no) {
    UserId u;
    ItemId i;
    int c;
    if (f.size() != 3 || !detail::parse_int(f[0], u) || !detail::parse_int(f[1], i) ||
        !detail::parse_int(f[2], c) || (c != 1 && c != -1) || u >= n_users || i >= n_items) {
      detail::bad_row(path, line_no);
    }
    rows.push_back({u, i, Polarity(c)});
  });
  return InteractionTable(n_users, n_items, std::move(rows));
}

inline void write_id_map(const fs::path& path, const std::vector<std::string>& ids) {
  auto out = detail::open_out(path);
  out << kIdMapHeader << '\n';
  for (std::size_t i = 0; i < ids.size(); ++i) out << i << ',' << ids[i] << '\n';
}

inline std::vector<std::string> read_id_map(const fs::path& path) {
  std::vector<std::string> ids;
  detail::for_each_csv_row(path, kIdMapHeader, [&](const auto& f, std::size_t line_no) {
    std::size_t dense;
    if (f.size() != 2 || !detail::parse_int(f[0], dense) || dense != ids.size()) {
      detail::bad_row(path, line_no);
    }
    ids.emplace_back(f[1]);
  });
  return ids;
}

/// Tag records as `user_id,item_id,tag` with the rating file's original ids.
/// Records for items absent from the ratings are dropped; `dropped` counts them.
inline std::vector<TagRecord> read_tag_records(const fs::path& path, const RatingTable& ratings,
                                               std::size_t* dropped = nullptr) {
  std::vector<TagRecord> records;
  std::size_t skipped = 0;
  detail::for_each_csv_row(path, kTagRecordHeader, [&](const auto& f, std::size_t line_no) {
    if (f.size() < 3 || f[0].empty() || f[2].empty()) detail::bad_row(path, line_no);
    auto it = ratings.item_index.find(std::string(f[1]));
    if (it == ratings.item_index.end()) {
      ++skipped;
      return;
    }
    // tag text may itself contain commas
    std::string tag(f[2]);
    for (std::size_t k = 3; k < f.size(); ++k) tag.append(",").append(f[k]);
    for (auto& ch : tag) ch = char(std::tolower(static_cast<unsigned char>(ch)));
    records.push_back({std::string(f[0]), it->second, std::move(tag)});
  });
  if (dropped) *dropped = skipped;
  return records;
}

inline void write_tag_table(const fs::path& item_tags_path, const fs::path& names_path,
                            const TagTable& tags) {
  auto out = detail::open_out(item_tags_path);
  out << kItemTagHeader << '\n';
  for (std::size_t i = 0; i < tags.item_tags.size(); ++i) {
    for (auto t : tags.item_tags[i]) out << i << ',' << t << '\n';
  }
  auto names = detail::open_out(names_path);
  names << kTagNameHeader << '\n';
  for (std::size_t t = 0; t < tags.names.size(); ++t) names << t << ',' << tags.names[t] << '\n';
}

inline TagTable read_tag_table(const fs::path& item_tags_path, const fs::path& names_path,
                               std::size_t n_items) {
  TagTable tags;
  tags.item_tags.resize(n_items);
  detail::for_each_csv_row(names_path, kTagNameHeader, [&](const auto& f, std::size_t line_no) {
    std::size_t t;
    if (f.size() < 2 || !detail::parse_int(f[0], t) || t != tags.names.size()) {
      detail::bad_row(names_path, line_no);
    }
    std::string name(f[1]);
    for (std::size_t k = 2; k < f.size(); ++k) name.append(",").append(f[k]);
    tags.names.push_back(std::move(name));
  });
  detail::for_each_csv_row(item_tags_path, kItemTagHeader, [&](const auto& f, std::size_t line_no) {
    std::size_t i;
    std::uint32_t t;
    if (f.size() != 2 || !detail::parse_int(f[0], i) || !detail::parse_int(f[1], t) ||
        i >= n_items || t >= tags.names.size()) {
      detail::bad_row(item_tags_path, line_no);
    }
    tags.item_tags[i].push_back(t);
  });
  for (auto& v : tags.item_tags) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
  return tags;
}

/// Dataset statistics in the usual users/items/ratings/density/mean layout.
struct DatasetSummary {
  std::size_t n_users = 0;
  std::size_t n_items = 0;
  std::size_t n_ratings = 0;
  double density = 0.0;
  double mean_rating = 0.0;
  std::size_t n_positive = 0;
  std::size_t n_negative = 0;
  std::size_t n_tags = 0;
};

inline void write_summary(const fs::path& path, const DatasetSummary& s) {
  auto out = detail::open_out(path);
  out << "n_users,n_items,n_ratings,density,mean_rating,n_positive,n_negative,n_tags\n"
      << fmt::format("{},{},{},{:.6f},{:.6f},{},{},{}\n", s.n_users, s.n_items, s.n_ratings,
                     s.density, s.mean_rating, s.n_positive, s.n_negative, s.n_tags);
}

/// A directory written by `tccml prepare` or `tccml synth`.
struct PreparedData {
  SplitAssignment splits;
  std::vector<std::string> user_ids;
  std::vector<std::string> item_ids;
  std::optional<TagTable> tags;

  std::size_t n_users() const { return user_ids.size(); }
  std::size_t n_items() const { return item_ids.size(); }
};

inline void write_prepared(const fs::path& dir, const PreparedData& data) {
  fs::create_directories(dir);
  write_split_csv(dir / "train.csv", data.splits.train);
  write_split_csv(dir / "validation.csv", data.splits.validation);
  write_split_csv(dir / "test.csv", data.splits.test);
  write_id_map(dir / "users.csv", data.user_ids);
  write_id_map(dir / "items.csv", data.item_ids);
  if (data.tags) write_tag_table(dir / "item_tags.csv", dir / "tags.csv", *data.tags);
}

inline PreparedData load_prepared(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IngestError("data directory '" + dir.string() + "' not found");
  PreparedData data;
  data.user_ids = read_id_map(dir / "users.csv");
  data.item_ids = read_id_map(dir / "items.csv");
  const auto nu = data.user_ids.size(), ni = data.item_ids.size();
  data.splits.train = read_split_csv(dir / "train.csv", nu, ni);
  data.splits.validation = read_split_csv(dir / "validation.csv", nu, ni);
  data.splits.test = read_split_csv(dir / "test.csv", nu, ni);
  if (fs::exists(dir / "item_tags.csv") && fs::exists(dir / "tags.csv")) {
    data.tags = read_tag_table(dir / "item_tags.csv", dir / "tags.csv", ni);
  }
  return data;
}

}  // namespace tccml
