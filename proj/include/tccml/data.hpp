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

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tccml/error.hpp"
#include "tccml/rng.hpp"

namespace tccml {

using UserId = std::uint32_t;
using ItemId = std::uint32_t;

/// Two-class label of an observed interaction. Values match the split-file
/// encoding (1 / -1).
enum class Polarity : std::int8_t { Negative = -1, Positive = 1 };

struct Rating {
  UserId user;
  ItemId item;
  double value;
};

/// Raw ratings with dense ids assigned by order of first appearance.
struct RatingTable {
  std::vector<Rating> ratings;
  std::size_t n_users = 0;
  std::size_t n_items = 0;
  std::vector<std::string> user_ids;  // dense -> original
  std::vector<std::string> item_ids;
  std::unordered_map<std::string, UserId> user_index;  // original -> dense
  std::unordered_map<std::string, ItemId> item_index;

  double mean_rating() const {
    double sum = 0.0;
    for (const auto& r : ratings) sum += r.value;
    return ratings.empty() ? 0.0 : sum / double(ratings.size());
  }

  double density() const {
    const double cells = double(n_users) * double(n_items);
    return cells > 0 ? double(ratings.size()) / cells : 0.0;
  }
};

struct SignedInteraction {
  UserId user;
  ItemId item;
  Polarity polarity;

  bool operator==(const SignedInteraction&) const = default;
};

/// Signed interactions plus per-user lookup structures. Item lists are kept
/// sorted so membership tests are binary searches.
class InteractionTable {
 public:
  InteractionTable() = default;

  InteractionTable(std::size_t n_users, std::size_t n_items,
                   std::vector<SignedInteraction> interactions)
    : n_users_(n_users),
      n_items_(n_items),
      interactions_(std::move(interactions)),
      positives_(n_users),
      negatives_(n_users),
      items_(n_users) {
    for (const auto& x : interactions_) {
      if (x.user >= n_users_ || x.item >= n_items_) {
        throw InvalidArgument("interaction (" + std::to_string(x.user) + ", " +
                              std::to_string(x.item) + ") out of range");
      }
      (x.polarity == Polarity::Positive ? positives_ : negatives_)[x.user]
        .push_back(x.item);
      items_[x.user].push_back(x.item);
    }
    for (std::size_t u = 0; u < n_users_; ++u) {
      std::sort(positives_[u].begin(), positives_[u].end());
      std::sort(negatives_[u].begin(), negatives_[u].end());
      std::sort(items_[u].begin(), items_[u].end());
    }
  }

  std::size_t n_users() const { return n_users_; }
  std::size_t n_items() const { return n_items_; }
  std::size_t size() const { return interactions_.size(); }
  bool empty() const { return interactions_.empty(); }

  std::span<const SignedInteraction> interactions() const { return interactions_; }
  std::span<const ItemId> positives(UserId u) const { return positives_[u]; }
  std::span<const ItemId> negatives(UserId u) const { return negatives_[u]; }
  /// All items the user interacted with, either class.
  std::span<const ItemId> items(UserId u) const { return items_[u]; }

  bool contains(UserId u, ItemId i) const {
    return std::binary_search(items_[u].begin(), items_[u].end(), i);
  }

  std::size_t count(Polarity p) const {
    return std::size_t(std::count_if(
      interactions_.begin(), interactions_.end(),
      [p](const SignedInteraction& x) { return x.polarity == p; }));
  }

 private:
  std::size_t n_users_ = 0;
  std::size_t n_items_ = 0;
  std::vector<SignedInteraction> interactions_;
  std::vector<std::vector<ItemId>> positives_;
  std::vector<std::vector<ItemId>> negatives_;
  std::vector<std::vector<ItemId>> items_;
};

enum class RatingFormat {
  DoubleColonDelimited,  // userId::itemId::rating[::timestamp]
  Csv,                   // header, then user,item,rating[,...]
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view line, std::string_view sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t next = line.find(sep, pos);
    if (next == std::string_view::npos) {
      out.push_back(trim(line.substr(pos)));
      return out;
    }
    out.push_back(trim(line.substr(pos, next - pos)));
    pos = next + sep.size();
  }
}

inline bool parse_double(std::string_view s, double& out) {
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

template <typename Int>
bool parse_int(std::string_view s, Int& out) {
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

}  // namespace detail

/// Parses a ratings stream. `source` only labels error messages.
inline RatingTable parse_ratings(std::istream& in, RatingFormat format,
                                 const std::string& source = "<stream>") {
  RatingTable table;
  // (user, item) -> index into table.ratings, for last-occurrence-wins
  std::unordered_map<std::uint64_t, std::size_t> seen;
  const std::string_view sep = format == RatingFormat::Csv ? "," : "::";
  std::string line;
  std::size_t line_no = 0;
  bool any_line = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = detail::trim(line);
    if (view.empty()) continue;
    const bool first = !any_line;
    any_line = true;
    const auto fields = detail::split(view, sep);
    if (format == RatingFormat::Csv && first) {
      double probe;
      if (fields.size() < 3 || !detail::parse_double(fields[2], probe)) continue;
    }
    if (fields.size() < 3 || fields[0].empty() || fields[1].empty()) {
      throw IngestError(source + ":" + std::to_string(line_no) +
                        ": malformed record '" + std::string(view) + "'");
    }
    double value;
    if (!detail::parse_double(fields[2], value)) {
      throw IngestError(source + ":" + std::to_string(line_no) +
                        ": rating is not a number '" + std::string(fields[2]) + "'");
    }
    if (!(value >= 1.0 && value <= 5.0)) {
      throw IngestError(source + ":" + std::to_string(line_no) + ": rating " +
                        std::string(fields[2]) + " outside [1, 5]");
    }
    auto intern = [](auto& index, auto& ids, std::string_view key) {
      auto [it, inserted] = index.try_emplace(std::string(key), std::uint32_t(ids.size()));
      if (inserted) ids.emplace_back(key);
      return it->second;
    };
    const UserId u = intern(table.user_index, table.user_ids, fields[0]);
    const ItemId i = intern(table.item_index, table.item_ids, fields[1]);
    const std::uint64_t key = (std::uint64_t(u) << 32) | i;
    if (auto it = seen.find(key); it != seen.end()) {
      table.ratings[it->second].value = value;
    } else {
      seen.emplace(key, table.ratings.size());
      table.ratings.push_back({u, i, value});
    }
  }
  if (table.ratings.empty()) throw IngestError(source + ": no ratings found");
  table.n_users = table.user_ids.size();
  table.n_items = table.item_ids.size();
  return table;
}

inline RatingTable parse_ratings(const std::string& path, RatingFormat format) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open ratings file '" + path + "'");
  return parse_ratings(in, format, path);
}

/// Labels each rating Negative iff it is strictly below the user's mean.
/// Output order follows table.ratings.
inline std::vector<SignedInteraction> binarize_by_user_mean(const RatingTable& table) {
  std::vector<double> sum(table.n_users, 0.0);
  std::vector<std::size_t> count(table.n_users, 0);
  for (const auto& r : table.ratings) {
    sum[r.user] += r.value;
    ++count[r.user];
  }
  std::vector<SignedInteraction> out;
  out.reserve(table.ratings.size());
  for (const auto& r : table.ratings) {
    const double mean = sum[r.user] / double(count[r.user]);
    out.push_back({r.user, r.item, r.value < mean ? Polarity::Negative : Polarity::Positive});
  }
  return out;
}

struct TagRecord {
  std::string user;
  ItemId item;
  std::string tag;
};

/// Per-item tag sets after filtering; tag ids index `names`.
struct TagTable {
  std::vector<std::vector<std::uint32_t>> item_tags;
  std::vector<std::string> names;

  std::size_t n_tags() const { return names.size(); }
  std::size_t n_items() const { return item_tags.size(); }
};

inline constexpr std::size_t kMinTagUsers = 5;
inline constexpr std::size_t kMinTagItems = 2;

/// Keeps tags given by at least 5 distinct users and attached to at least 2
/// distinct items. Thresholds are counted over the raw records. Surviving
/// tag ids follow lexicographic order of the tag string.
inline TagTable filter_tags(std::span<const TagRecord> records, std::size_t n_items) {
  std::map<std::string, std::pair<std::set<std::string>, std::set<ItemId>>> usage;
  for (const auto& r : records) {
    if (r.item >= n_items) {
      throw InvalidArgument("tag record references item " + std::to_string(r.item) +
                            " outside catalog of " + std::to_string(n_items));
    }
    auto& [users, items] = usage[r.tag];
    users.insert(r.user);
    items.insert(r.item);
  }
  TagTable table;
  table.item_tags.resize(n_items);
  std::unordered_map<std::string, std::uint32_t> kept;
  for (const auto& [tag, use] : usage) {
    if (use.first.size() >= kMinTagUsers && use.second.size() >= kMinTagItems) {
      kept.emplace(tag, std::uint32_t(table.names.size()));
      table.names.push_back(tag);
    }
  }
  for (const auto& r : records) {
    if (auto it = kept.find(r.tag); it != kept.end()) table.item_tags[r.item].push_back(it->second);
  }
  for (auto& tags : table.item_tags) {
    std::sort(tags.begin(), tags.end());
    tags.erase(std::unique(tags.begin(), tags.end()), tags.end());
  }
  return table;
}

struct SplitAssignment {
  InteractionTable train;
  InteractionTable validation;
  InteractionTable test;
  std::uint64_t seed = 0;
};

/// Uniformly random partition into three parts whose sizes differ by at
/// most one; the first n % 3 parts (train first) get the extra element.
inline SplitAssignment split_three_way(std::span<const SignedInteraction> interactions,
                                       std::size_t n_users, std::size_t n_items,
                                       std::uint64_t seed) {
  if (interactions.size() < 3) {
    throw InvalidArgument("need at least 3 interactions to split, got " +
                          std::to_string(interactions.size()));
  }
  std::vector<std::size_t> order(interactions.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);

  const std::size_t n = order.size();
  std::size_t sizes[3] = {n / 3, n / 3, n / 3};
  for (std::size_t r = 0; r < n % 3; ++r) ++sizes[r];

  std::vector<SignedInteraction> parts[3];
  std::size_t pos = 0;
  for (int p = 0; p < 3; ++p) {
    parts[p].reserve(sizes[p]);
    for (std::size_t k = 0; k < sizes[p]; ++k) parts[p].push_back(interactions[order[pos++]]);
  }
  return {InteractionTable(n_users, n_items, std::move(parts[0])),
          InteractionTable(n_users, n_items, std::move(parts[1])),
          InteractionTable(n_users, n_items, std::move(parts[2])), seed};
}

/// Same interactions with every class set to Positive: the one-class view
/// in which all observed feedback counts as a preference.
inline InteractionTable as_one_class(const InteractionTable& t) {
  std::vector<SignedInteraction> xs(t.interactions().begin(), t.interactions().end());
  for (auto& x : xs) x.polarity = Polarity::Positive;
  return InteractionTable(t.n_users(), t.n_items(), std::move(xs));
}

inline constexpr std::size_t kMinEvalPositives = 3;

/// Users with at least three Positive interactions in `test`, ascending.
inline std::vector<UserId> eligible_eval_users(const InteractionTable& test) {
  std::vector<UserId> users;
  for (UserId u = 0; u < test.n_users(); ++u) {
    if (test.positives(u).size() >= kMinEvalPositives) users.push_back(u);
  }
  return users;
}

}  // namespace tccml
