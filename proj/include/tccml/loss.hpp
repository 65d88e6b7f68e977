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
#include <compare>
#include <map>
#include <span>
#include <vector>

#include "tccml/data.hpp"
#include "tccml/error.hpp"
#include "tccml/model.hpp"

namespace tccml {

/// One hinge ranking term: user, a positive item, an unobserved item.
struct TripletTerm {
  UserId user;
  ItemId pos_item;
  ItemId neg_item;
  double weight = 1.0;

  bool operator==(const TripletTerm&) const = default;
};

enum class PushKind : std::uint8_t {
  UserNegative,    // left = user, right = item the user rated negatively
  DissimilarPair,  // left = positive item, right = negative item of one user
};

struct PushTerm {
  PushKind kind;
  std::uint32_t left;
  std::uint32_t right;

  Block left_block() const { return kind == PushKind::UserNegative ? Block::User : Block::Item; }

  bool operator==(const PushTerm&) const = default;
};

struct MiniBatch {
  std::vector<TripletTerm> triplets;
  std::vector<PushTerm> user_negatives;
  std::vector<PushTerm> dissimilar_pairs;
  std::vector<ItemId> feature_items;  // distinct items whose feature term is included

  bool operator==(const MiniBatch&) const = default;
};

struct RowKey {
  Block block;
  std::uint32_t row;

  auto operator<=>(const RowKey&) const = default;
};

/// Sparse gradient: only rows that received a nonzero contribution exist.
/// Ordered by (block, row) so iteration is deterministic.
class GradAccumulator {
 public:
  explicit GradAccumulator(std::size_t dim = 0) : dim_(dim) {}

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return rows_.size(); }
  bool empty() const { return rows_.empty(); }

  /// rows[key] += coeff * direction
  void add(Block block, std::uint32_t row, std::span<const double> direction, double coeff) {
    if (coeff == 0.0) return;
    auto [it, inserted] = rows_.try_emplace(RowKey{block, row});
    if (inserted) it->second.assign(dim_, 0.0);
    for (std::size_t k = 0; k < dim_; ++k) it->second[k] += coeff * direction[k];
  }

  void merge(const GradAccumulator& other) {
    for (const auto& [key, g] : other.rows_) add(key.block, key.row, g, 1.0);
  }

  bool contains(Block block, std::uint32_t row) const {
    return rows_.count(RowKey{block, row}) != 0;
  }

  /// Empty span when the row is absent.
  std::span<const double> get(Block block, std::uint32_t row) const {
    auto it = rows_.find(RowKey{block, row});
    if (it == rows_.end()) return {};
    return it->second;
  }

  auto begin() const { return rows_.begin(); }
  auto end() const { return rows_.end(); }

 private:
  std::size_t dim_;
  std::map<RowKey, std::vector<double>> rows_;
};

inline double hinge_argument(const TripletTerm& t, const EmbeddingModel& model, double margin) {
  const auto u = model.users.row(t.user);
  return margin + distance(u, model.items.row(t.pos_item)) -
         distance(u, model.items.row(t.neg_item));
}

/// w * [m + d(u, i_j) - d(u, i_k)]_+
inline double hinge_triplet_loss(const TripletTerm& t, const EmbeddingModel& model,
                                 double margin) {
  return t.weight * std::max(hinge_argument(t, model, margin), 0.0);
}

inline std::span<const double> push_left(const PushTerm& p, const EmbeddingModel& model) {
  return p.kind == PushKind::UserNegative ? model.users.row(p.left) : model.items.row(p.left);
}

/// max(alpha / d(left, right), 1). Always >= 1; equals 1 once d >= alpha.
inline double push_loss(const PushTerm& p, const EmbeddingModel& model, double alpha) {
  const double d = distance(push_left(p, model), model.items.row(p.right));
  return std::max(alpha / d, 1.0);
}

struct FeatureLoss {
  double value = 0.0;
  GradAccumulator grad;
};

namespace detail {

inline void check_features(const EmbeddingModel& model, const TagTable& tags) {
  if (tags.n_tags() != model.features.rows() || tags.n_items() != model.n_items()) {
    throw InvalidArgument("feature dimension mismatch: model has " +
                          std::to_string(model.features.rows()) + " tag rows and " +
                          std::to_string(model.n_items()) + " items, tag table has " +
                          std::to_string(tags.n_tags()) + " tags over " +
                          std::to_string(tags.n_items()) + " items");
  }
}

// r = W x_j - v_j for the tag-indicator vector x_j of item j.
inline std::vector<double> feature_residual(const EmbeddingModel& model, const TagTable& tags,
                                            ItemId j) {
  std::vector<double> r(model.dim(), 0.0);
  for (auto t : tags.item_tags[j]) {
    const auto w = model.features.row(t);
    for (std::size_t k = 0; k < r.size(); ++k) r[k] += w[k];
  }
  const auto v = model.items.row(j);
  for (std::size_t k = 0; k < r.size(); ++k) r[k] -= v[k];
  return r;
}

inline double accumulate_feature_term(const EmbeddingModel& model, const TagTable& tags, ItemId j,
                                      double coeff, GradAccumulator* grad) {
  if (tags.item_tags[j].empty()) return 0.0;
  const auto r = feature_residual(model, tags, j);
  double sq = 0.0;
  for (double x : r) sq += x * x;
  if (grad) {
    for (auto t : tags.item_tags[j]) grad->add(Block::Feature, t, r, 2.0 * coeff);
    grad->add(Block::Item, j, r, -2.0 * coeff);
  }
  return sq;
}

}  // namespace detail

/// sum_j |W x_j - v_j|^2 over every item with at least one tag.
inline FeatureLoss feature_loss(const EmbeddingModel& model, const TagTable& tags) {
  detail::check_features(model, tags);
  FeatureLoss out{0.0, GradAccumulator(model.dim())};
  for (ItemId j = 0; j < model.n_items(); ++j) {
    out.value += detail::accumulate_feature_term(model, tags, j, 1.0, &out.grad);
  }
  return out;
}

/// Unweighted per-component sums of a batch, and their lambda combination.
struct LossBreakdown {
  double hinge = 0.0;
  double user_push = 0.0;
  double pair_push = 0.0;
  double feature = 0.0;
  double total = 0.0;
};

inline bool features_active(const HyperParams& hp, const TagTable* features) {
  return features != nullptr && hp.lambda_f > 0.0;
}

inline LossBreakdown loss_breakdown(const MiniBatch& batch, const EmbeddingModel& model,
                                    const HyperParams& hp, const TagTable* features = nullptr) {
  LossBreakdown out;
  for (const auto& t : batch.triplets) out.hinge += hinge_triplet_loss(t, model, hp.margin);
  for (const auto& p : batch.user_negatives) out.user_push += push_loss(p, model, hp.alpha);
  for (const auto& p : batch.dissimilar_pairs) out.pair_push += push_loss(p, model, hp.alpha);
  if (features_active(hp, features)) {
    detail::check_features(model, *features);
    for (auto j : batch.feature_items) {
      out.feature += detail::accumulate_feature_term(model, *features, j, 1.0, nullptr);
    }
  }
  out.total = out.hinge + hp.lambda1 * out.user_push + hp.lambda2 * out.pair_push +
              (features_active(hp, features) ? hp.lambda_f * out.feature : 0.0);
  return out;
}

/// L0 + lambda1 L1 + lambda2 L2 + lambda_f Lf, summed over the batch terms.
inline double total_loss(const MiniBatch& batch, const EmbeddingModel& model,
                         const HyperParams& hp, const TagTable* features = nullptr) {
  return loss_breakdown(batch, model, hp, features).total;
}

/// Exact (sub)gradient of total_loss. Flat regions and kinks contribute
/// nothing, so inactive terms leave no rows in the accumulator.
inline GradAccumulator grad_total_loss(const MiniBatch& batch, const EmbeddingModel& model,
                                       const HyperParams& hp,
                                       const TagTable* features = nullptr) {
  const std::size_t d = model.dim();
  GradAccumulator grad(d);
  std::vector<double> to_pos(d), to_neg(d);

  for (const auto& t : batch.triplets) {
    if (t.weight == 0.0) continue;
    const auto u = model.users.row(t.user);
    const auto p = model.items.row(t.pos_item);
    const auto n = model.items.row(t.neg_item);
    const double dp = distance(u, p);
    const double dn = distance(u, n);
    if (hp.margin + dp - dn <= 0.0) continue;
    for (std::size_t k = 0; k < d; ++k) {
      to_pos[k] = (u[k] - p[k]) / dp;  // d dp / d u
      to_neg[k] = (u[k] - n[k]) / dn;  // d dn / d u
    }
    grad.add(Block::User, t.user, to_pos, t.weight);
    grad.add(Block::User, t.user, to_neg, -t.weight);
    grad.add(Block::Item, t.pos_item, to_pos, -t.weight);
    grad.add(Block::Item, t.neg_item, to_neg, t.weight);
  }

  auto push_grads = [&](const std::vector<PushTerm>& terms, double lambda) {
    if (lambda == 0.0) return;
    std::vector<double> diff(d);
    for (const auto& p : terms) {
      const auto l = push_left(p, model);
      const auto r = model.items.row(p.right);
      const double dist = distance(l, r);
      if (hp.alpha / dist <= 1.0) continue;
      for (std::size_t k = 0; k < d; ++k) diff[k] = l[k] - r[k];
      // d(alpha / dist) / d left = -alpha (l - r) / dist^3
      const double c = lambda * hp.alpha / (dist * dist * dist);
      grad.add(p.left_block(), p.left, diff, -c);
      grad.add(Block::Item, p.right, diff, c);
    }
  };
  push_grads(batch.user_negatives, hp.lambda1);
  push_grads(batch.dissimilar_pairs, hp.lambda2);

  if (features_active(hp, features)) {
    detail::check_features(model, *features);
    for (auto j : batch.feature_items) {
      detail::accumulate_feature_term(model, *features, j, hp.lambda_f, &grad);
    }
  }
  return grad;
}

}  // namespace tccml
