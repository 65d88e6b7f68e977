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
#include <cmath>
#include <utility>
#include <vector>

#include "tccml/data.hpp"
#include "tccml/error.hpp"
#include "tccml/loss.hpp"
#include "tccml/model.hpp"
#include "tccml/rng.hpp"

namespace tccml {

/// log(1 + floor(n_items * violators / U)): rank-based weight of a positive
/// pair, estimated from how many of its U sampled candidates violate the margin.
inline double warp_weight(std::size_t violators, std::size_t candidates, std::size_t n_items) {
  if (candidates == 0 || violators > candidates) {
    throw InvalidArgument("warp_weight: need 0 <= violators <= candidates, candidates >= 1");
  }
  const std::size_t rank = (n_items * violators) / candidates;
  return std::log1p(double(rank));
}

/// Training-split index structures and the sampling RNG.
class SamplerState {
 public:
  SamplerState(const InteractionTable& train, std::uint64_t seed) : train_(&train), rng_(seed) {
    for (const auto& x : train.interactions()) {
      (x.polarity == Polarity::Positive ? positive_pairs_ : negative_pairs_)
        .emplace_back(x.user, x.item);
    }
    for (UserId u = 0; u < train.n_users(); ++u) {
      if (!train.positives(u).empty() && !train.negatives(u).empty()) dp_users_.push_back(u);
    }
  }

  const InteractionTable& train() const { return *train_; }
  Rng& rng() { return rng_; }

  std::span<const std::pair<UserId, ItemId>> positive_pairs() const { return positive_pairs_; }
  std::span<const std::pair<UserId, ItemId>> negative_pairs() const { return negative_pairs_; }
  /// Users with at least one positive and one negative training item.
  std::span<const UserId> dp_users() const { return dp_users_; }

  /// Uniform draw among items the user never interacted with in train;
  /// false when the user has interacted with the whole catalog.
  bool draw_unobserved(UserId u, ItemId& out) {
    const auto seen = train_->items(u);
    const std::size_t n = train_->n_items();
    if (seen.size() >= n) return false;
    if (2 * seen.size() < n) {
      // rejection: accept probability > 1/2
      while (true) {
        const auto i = ItemId(rng_.below(n));
        if (!std::binary_search(seen.begin(), seen.end(), i)) {
          out = i;
          return true;
        }
      }
    }
    std::size_t pick = rng_.below(n - seen.size());
    std::size_t s = 0;
    for (ItemId i = 0; i < n; ++i) {
      while (s < seen.size() && seen[s] < i) ++s;
      if (s < seen.size() && seen[s] == i) continue;
      if (pick-- == 0) {
        out = i;
        return true;
      }
    }
    return false;
  }

 private:
  const InteractionTable* train_;
  Rng rng_;
  std::vector<std::pair<UserId, ItemId>> positive_pairs_;
  std::vector<std::pair<UserId, ItemId>> negative_pairs_;
  std::vector<UserId> dp_users_;
};

/// Draws n (positive item, negative item) pairs: a qualifying user uniformly,
/// then one positive and one negative of theirs uniformly.
inline std::vector<PushTerm> sample_dp_pairs(SamplerState& state, std::size_t n) {
  std::vector<PushTerm> out;
  const auto users = state.dp_users();
  if (users.empty()) return out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const UserId u = users[state.rng().below(users.size())];
    const auto pos = state.train().positives(u);
    const auto neg = state.train().negatives(u);
    const ItemId i = pos[state.rng().below(pos.size())];
    const ItemId j = neg[state.rng().below(neg.size())];
    out.push_back({PushKind::DissimilarPair, i, j});
  }
  return out;
}

namespace detail {

inline std::vector<ItemId> featured_items(const MiniBatch& batch, const TagTable& tags) {
  std::vector<ItemId> items;
  auto take = [&](ItemId i) {
    if (!tags.item_tags[i].empty()) items.push_back(i);
  };
  for (const auto& t : batch.triplets) {
    take(t.pos_item);
    take(t.neg_item);
  }
  for (const auto& p : batch.user_negatives) take(p.right);
  for (const auto& p : batch.dissimilar_pairs) {
    take(p.left);
    take(p.right);
  }
  std::sort(items.begin(), items.end());
  items.erase(std::unique(items.begin(), items.end()), items.end());
  return items;
}

}  // namespace detail

/// One training batch:
///  - N positive pairs, N user-negative pairs and N dissimilar pairs, each
///    uniform with replacement (an empty pool yields an empty component);
///  - for each positive pair, U fresh unobserved candidates, keeping the one
///    with the largest hinge argument (first drawn wins ties).
/// A positive pair whose user has no unobserved item yields no triplet.
inline MiniBatch sample_batch(SamplerState& state, const EmbeddingModel& model,
                              const HyperParams& hp, const TagTable* features = nullptr) {
  const auto pos = state.positive_pairs();
  if (pos.empty()) throw InvalidArgument("sample_batch: no positive training interactions");
  const std::size_t n = hp.batch_size;
  auto& rng = state.rng();

  std::vector<std::pair<UserId, ItemId>> anchors(n);
  for (auto& a : anchors) a = pos[rng.below(pos.size())];

  MiniBatch batch;
  const auto neg = state.negative_pairs();
  if (!neg.empty()) {
    batch.user_negatives.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
      const auto [u, i] = neg[rng.below(neg.size())];
      batch.user_negatives.push_back({PushKind::UserNegative, u, i});
    }
  }
  batch.dissimilar_pairs = sample_dp_pairs(state, n);

  batch.triplets.reserve(n);
  const std::size_t n_items = state.train().n_items();
  for (const auto& [u, p] : anchors) {
    const auto urow = model.users.row(u);
    const double dp = distance(urow, model.items.row(p));
    ItemId best = 0;
    double best_arg = 0.0;
    std::size_t violators = 0;
    bool any = false;
    for (std::size_t c = 0; c < hp.candidates; ++c) {
      ItemId k;
      if (!state.draw_unobserved(u, k)) break;
      const double arg = hp.margin + dp - distance(urow, model.items.row(k));
      if (arg > 0.0) ++violators;
      if (!any || arg > best_arg) {
        best = k;
        best_arg = arg;
        any = true;
      }
    }
    if (!any) continue;
    const double w = hp.warp_weight ? warp_weight(violators, hp.candidates, n_items) : 1.0;
    batch.triplets.push_back({u, p, best, w});
  }

  if (features_active(hp, features)) batch.feature_items = detail::featured_items(batch, *features);
  return batch;
}

/// Every term of the full-sum objective with w = 1: all (user, positive,
/// unobserved) triples, all user-negative pairs, every dissimilar pair of
/// every user, and every tagged item.
inline MiniBatch exhaustive_batch(const InteractionTable& train,
                                  const TagTable* features = nullptr) {
  MiniBatch batch;
  for (UserId u = 0; u < train.n_users(); ++u) {
    const auto pos = train.positives(u);
    const auto neg = train.negatives(u);
    for (auto p : pos) {
      for (ItemId k = 0; k < train.n_items(); ++k) {
        if (!train.contains(u, k)) batch.triplets.push_back({u, p, k, 1.0});
      }
    }
    for (auto i : neg) batch.user_negatives.push_back({PushKind::UserNegative, u, i});
    for (auto p : pos) {
      for (auto i : neg) batch.dissimilar_pairs.push_back({PushKind::DissimilarPair, p, i});
    }
  }
  if (features) {
    for (ItemId j = 0; j < features->n_items(); ++j) {
      if (!features->item_tags[j].empty()) batch.feature_items.push_back(j);
    }
  }
  return batch;
}

}  // namespace tccml
