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
#include <array>
#include <filesystem>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "tccml/data.hpp"
#include "tccml/error.hpp"
#include "tccml/io.hpp"
#include "tccml/model.hpp"
#include "tccml/parallel.hpp"

namespace tccml {

inline constexpr std::array<std::size_t, 2> kCutoffs = {10, 50};

struct RankedList {
  UserId user;
  std::vector<ItemId> items;      // ascending distance, ties by item id
  std::vector<double> distances;  // parallel to items
};

namespace detail {

inline bool sorted_contains(std::span<const ItemId> sorted, ItemId i) {
  return std::binary_search(sorted.begin(), sorted.end(), i);
}

inline RankedList rank_impl(const EmbeddingModel& model, UserId user,
                            std::span<const ItemId> excluded, std::size_t limit) {
  const auto u = model.users.row(user);
  std::vector<std::pair<double, ItemId>> scored;
  scored.reserve(model.n_items());
  for (ItemId i = 0; i < model.n_items(); ++i) {
    if (!sorted_contains(excluded, i)) scored.emplace_back(distance(u, model.items.row(i)), i);
  }
  const std::size_t keep = std::min(limit, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + std::ptrdiff_t(keep), scored.end());
  RankedList list{user, {}, {}};
  list.items.reserve(keep);
  list.distances.reserve(keep);
  for (std::size_t k = 0; k < keep; ++k) {
    list.distances.push_back(scored[k].first);
    list.items.push_back(scored[k].second);
  }
  return list;
}

}  // namespace detail

/// Every catalog item except `excluded` (sorted ascending), nearest first.
inline RankedList rank_items(const EmbeddingModel& model, UserId user,
                             std::span<const ItemId> excluded) {
  return detail::rank_impl(model, user, excluded, model.n_items());
}

/// The first k entries of rank_items().
inline RankedList top_k_items(const EmbeddingModel& model, UserId user,
                              std::span<const ItemId> excluded, std::size_t k) {
  return detail::rank_impl(model, user, excluded, k);
}

namespace detail {

inline std::size_t hits_at_k(const RankedList& list, std::span<const ItemId> sorted, std::size_t k) {
  std::size_t hits = 0;
  const std::size_t n = std::min(k, list.items.size());
  for (std::size_t r = 0; r < n; ++r) hits += sorted_contains(sorted, list.items[r]);
  return hits;
}

inline void check_k(std::size_t k) {
  if (k == 0) throw InvalidArgument("cutoff k must be >= 1");
}

}  // namespace detail

struct PrecisionRecall {
  double precision;
  double recall;
};

/// P = hits / k, R = hits / |positives| over the top k. `test_positives`
/// must be sorted and non-empty.
inline PrecisionRecall precision_recall_at_k(const RankedList& list,
                                             std::span<const ItemId> test_positives,
                                             std::size_t k) {
  detail::check_k(k);
  if (test_positives.empty()) throw InvalidArgument("precision_recall_at_k: no test positives");
  const double hits = double(detail::hits_at_k(list, test_positives, k));
  return {hits / double(k), hits / double(test_positives.size())};
}

/// Fraction of the top k that the user rated negatively.
inline double ni_at_k(const RankedList& list, std::span<const ItemId> test_negatives,
                      std::size_t k) {
  detail::check_k(k);
  return double(detail::hits_at_k(list, test_negatives, k)) / double(k);
}

struct Metrics {
  double recall = 0.0;
  double precision = 0.0;
  double ni = 0.0;

  bool operator==(const Metrics&) const = default;
};

struct UserEval {
  UserId user;
  std::size_t n_positives;
  std::size_t n_negatives;
  std::array<std::size_t, kCutoffs.size()> hits{};           // test positives in top k
  std::array<std::size_t, kCutoffs.size()> negative_hits{};  // test negatives in top k
  std::array<Metrics, kCutoffs.size()> at{};

  bool operator==(const UserEval&) const = default;
};

/// Macro-averaged metrics over eligible users; index i of `mean` is kCutoffs[i].
struct EvalReport {
  std::array<Metrics, kCutoffs.size()> mean{};
  std::size_t n_eligible = 0;
  std::vector<UserEval> users;

  const Metrics& at(std::size_t k) const {
    for (std::size_t c = 0; c < kCutoffs.size(); ++c) {
      if (kCutoffs[c] == k) return mean[c];
    }
    throw InvalidArgument("no metrics recorded at k = " + std::to_string(k));
  }

  bool operator==(const EvalReport&) const = default;
};

/// Sorted union of each user's items over several tables.
inline std::vector<std::vector<ItemId>> merged_items(
  std::size_t n_users, std::span<const InteractionTable* const> tables) {
  std::vector<std::vector<ItemId>> out(n_users);
  for (UserId u = 0; u < n_users; ++u) {
    for (const auto* t : tables) {
      const auto items = t->items(u);
      out[u].insert(out[u].end(), items.begin(), items.end());
    }
    std::sort(out[u].begin(), out[u].end());
    out[u].erase(std::unique(out[u].begin(), out[u].end()), out[u].end());
  }
  return out;
}

/// Scores `target` interactions for its eligible users, excluding every item
/// the user has in any of `exclude` from the ranking.
inline EvalReport evaluate(const EmbeddingModel& model, const InteractionTable& target,
                           std::span<const InteractionTable* const> exclude,
                           std::size_t workers = worker_count()) {
  const auto eligible = eligible_eval_users(target);
  if (eligible.empty()) throw InvalidArgument("evaluate: no user has >= 3 positive targets");
  const std::size_t max_k = *std::max_element(kCutoffs.begin(), kCutoffs.end());

  EvalReport report;
  report.n_eligible = eligible.size();
  report.users.resize(eligible.size());
  parallel_for(eligible.size(), workers, [&](std::size_t idx) {
    const UserId u = eligible[idx];
    std::vector<ItemId> excluded;
    for (const auto* t : exclude) {
      const auto items = t->items(u);
      excluded.insert(excluded.end(), items.begin(), items.end());
    }
    std::sort(excluded.begin(), excluded.end());
    const auto list = top_k_items(model, u, excluded, max_k);
    const auto pos = target.positives(u);
    const auto neg = target.negatives(u);
    UserEval ue{u, pos.size(), neg.size()};
    for (std::size_t c = 0; c < kCutoffs.size(); ++c) {
      const std::size_t k = kCutoffs[c];
      ue.hits[c] = detail::hits_at_k(list, pos, k);
      ue.negative_hits[c] = detail::hits_at_k(list, neg, k);
      const auto pr = precision_recall_at_k(list, pos, k);
      ue.at[c] = {pr.recall, pr.precision, ni_at_k(list, neg, k)};
    }
    report.users[idx] = ue;
  });
  for (const auto& ue : report.users) {
    for (std::size_t c = 0; c < kCutoffs.size(); ++c) {
      report.mean[c].recall += ue.at[c].recall;
      report.mean[c].precision += ue.at[c].precision;
      report.mean[c].ni += ue.at[c].ni;
    }
  }
  for (auto& m : report.mean) {
    m.recall /= double(eligible.size());
    m.precision /= double(eligible.size());
    m.ni /= double(eligible.size());
  }
  return report;
}

/// Test-split report; train and validation items are excluded from ranking.
inline EvalReport evaluate(const EmbeddingModel& model, const SplitAssignment& splits,
                           std::size_t workers = worker_count()) {
  const InteractionTable* exclude[] = {&splits.train, &splits.validation};
  return evaluate(model, splits.test, exclude, workers);
}

inline constexpr std::string_view kMetricHeader = "R@10,R@50,P@10,P@50,NI@10,NI@50";

/// Row in R@10,R@50,P@10,P@50,NI@10,NI@50 order.
inline std::string metric_row(const std::array<Metrics, kCutoffs.size()>& m) {
  return fmt::format("{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f}", m[0].recall, m[1].recall,
                     m[0].precision, m[1].precision, m[0].ni, m[1].ni);
}

/// Summary row followed by one row per eligible user. `user_ids` maps dense
/// ids to original ids; when empty, dense ids are written.
inline void write_report_csv(const std::filesystem::path& path, const EvalReport& report,
                             const std::vector<std::string>& user_ids = {}) {
  auto out = detail::open_out(path);
  out << "row,user_id,n_positives,n_negatives," << kMetricHeader << '\n';
  out << "mean,," << report.n_eligible << ",," << metric_row(report.mean) << '\n';
  for (const auto& ue : report.users) {
    const std::string id = user_ids.empty() ? std::to_string(ue.user) : user_ids[ue.user];
    out << "user," << id << ',' << ue.n_positives << ',' << ue.n_negatives << ','
        << metric_row(ue.at) << '\n';
  }
}

inline void print_report(std::ostream& os, const EvalReport& report,
                         std::string_view label = "") {
  os << fmt::format("{:<10} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8}\n", label.empty() ? "" : label,
                    "R@10", "R@50", "P@10", "P@50", "NI@10", "NI@50");
  const auto& m = report.mean;
  os << fmt::format("{:<10} {:>8.4f} {:>8.4f} {:>8.4f} {:>8.4f} {:>8.4f} {:>8.4f}\n", "mean",
                    m[0].recall, m[1].recall, m[0].precision, m[1].precision, m[0].ni, m[1].ni);
  os << fmt::format("eligible users: {}\n", report.n_eligible);
}

}  // namespace tccml
