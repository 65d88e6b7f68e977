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

// Brute-force reference computations used to cross-check the production
// paths. Nothing here calls into loss.hpp's term evaluation or eval.hpp's
// ranking code.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "tccml/data.hpp"
#include "tccml/error.hpp"
#include "tccml/eval.hpp"
#include "tccml/loss.hpp"
#include "tccml/model.hpp"

namespace tccml::oracle {

inline constexpr std::size_t kMaxBruteForcePairs = 10000;

namespace detail {

inline double dist(const RowMatrix& a, std::size_t i, const RowMatrix& b, std::size_t j) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.cols(); ++k) s += (a(i, k) - b(j, k)) * (a(i, k) - b(j, k));
  return std::sqrt(s + 1e-12);
}

}  // namespace detail

/// Full-sum objective with uniform weights: every (positive, unobserved)
/// hinge, every user-negative push, every dissimilar pair of every user,
/// and (when enabled) every tagged item's feature residual.
inline double bruteforce_loss(const EmbeddingModel& model, const InteractionTable& train,
                              const HyperParams& hp, const TagTable* features = nullptr) {
  const std::size_t nu = model.n_users(), ni = model.n_items();
  if (nu * ni > kMaxBruteForcePairs) {
    throw InvalidArgument("bruteforce_loss: instance too large for exhaustive sums");
  }
  // 0 = unobserved, 1 = positive, -1 = negative
  std::vector<int> cls(nu * ni, 0);
  for (const auto& x : train.interactions()) cls[x.user * ni + x.item] = int(x.polarity);

  double l0 = 0.0, l1 = 0.0, l2 = 0.0, lf = 0.0;
  for (std::size_t u = 0; u < nu; ++u) {
    for (std::size_t j = 0; j < ni; ++j) {
      if (cls[u * ni + j] == 1) {
        const double dj = detail::dist(model.users, u, model.items, j);
        for (std::size_t k = 0; k < ni; ++k) {
          if (cls[u * ni + k] != 0) continue;
          const double dk = detail::dist(model.users, u, model.items, k);
          l0 += std::max(hp.margin + dj - dk, 0.0);
        }
        for (std::size_t k = 0; k < ni; ++k) {
          if (cls[u * ni + k] != -1) continue;
          l2 += std::max(hp.alpha / detail::dist(model.items, j, model.items, k), 1.0);
        }
      } else if (cls[u * ni + j] == -1) {
        l1 += std::max(hp.alpha / detail::dist(model.users, u, model.items, j), 1.0);
      }
    }
  }
  const bool use_features = features != nullptr && hp.lambda_f > 0.0;
  if (use_features) {
    for (std::size_t j = 0; j < ni; ++j) {
      if (features->item_tags[j].empty()) continue;
      for (std::size_t k = 0; k < model.dim(); ++k) {
        double proj = 0.0;
        for (auto t : features->item_tags[j]) proj += model.features(t, k);
        const double r = proj - model.items(j, k);
        lf += r * r;
      }
    }
  }
  return l0 + hp.lambda1 * l1 + hp.lambda2 * l2 + (use_features ? hp.lambda_f * lf : 0.0);
}

using LossFn = std::function<double(const EmbeddingModel&)>;

/// Central differences (f(x+h) - f(x-h)) / 2h for every coordinate of every
/// parameter block. All rows are present in the result.
inline GradAccumulator finite_diff_grad(const EmbeddingModel& model, const LossFn& loss,
                                        double h = 1e-5) {
  EmbeddingModel work = model;
  GradAccumulator grad(model.dim());
  std::vector<double> g(model.dim());
  for (Block b : {Block::User, Block::Item, Block::Feature}) {
    RowMatrix& m = work.block(b);
    for (std::size_t r = 0; r < m.rows(); ++r) {
      for (std::size_t k = 0; k < m.cols(); ++k) {
        const double x = m(r, k);
        m(r, k) = x + h;
        const double up = loss(work);
        m(r, k) = x - h;
        const double down = loss(work);
        m(r, k) = x;
        g[k] = (up - down) / (2.0 * h);
      }
      grad.add(b, std::uint32_t(r), g, 1.0);
    }
  }
  return grad;
}

/// Finite differences of a scalar function of one variable.
inline double finite_diff(const std::function<double(double)>& f, double x, double h = 1e-5) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

/// Straightforward evaluator: full sort of the candidate catalog per user,
/// then direct counting over the tables' raw interaction lists.
inline EvalReport naive_evaluate(const EmbeddingModel& model, const InteractionTable& train,
                                 const InteractionTable& validation, const InteractionTable& test) {
  const std::size_t nu = model.n_users(), ni = model.n_items();
  std::vector<char> excluded(nu * ni, 0);
  std::vector<int> target(nu * ni, 0);
  for (const auto* t : {&train, &validation}) {
    for (const auto& x : t->interactions()) excluded[x.user * ni + x.item] = 1;
  }
  std::vector<std::size_t> n_pos(nu, 0), n_neg(nu, 0);
  for (const auto& x : test.interactions()) {
    target[x.user * ni + x.item] = int(x.polarity);
    (x.polarity == Polarity::Positive ? n_pos : n_neg)[x.user]++;
  }
  EvalReport rep;
  for (std::size_t u = 0; u < nu; ++u) {
    if (n_pos[u] < 3) continue;
    std::vector<std::pair<double, std::size_t>> cand;
    for (std::size_t i = 0; i < ni; ++i) {
      if (!excluded[u * ni + i]) cand.emplace_back(detail::dist(model.users, u, model.items, i), i);
    }
    std::sort(cand.begin(), cand.end());
    UserEval ue{UserId(u), n_pos[u], n_neg[u]};
    for (std::size_t c = 0; c < kCutoffs.size(); ++c) {
      const std::size_t k = kCutoffs[c];
      std::size_t hit = 0, neg = 0;
      for (std::size_t r = 0; r < k && r < cand.size(); ++r) {
        const int cls = target[u * ni + cand[r].second];
        hit += cls == 1;
        neg += cls == -1;
      }
      ue.hits[c] = hit;
      ue.negative_hits[c] = neg;
      ue.at[c] = {double(hit) / double(n_pos[u]), double(hit) / double(k), double(neg) / double(k)};
    }
    rep.users.push_back(ue);
  }
  rep.n_eligible = rep.users.size();
  if (rep.n_eligible == 0) throw InvalidArgument("naive_evaluate: no eligible user");
  for (const auto& ue : rep.users) {
    for (std::size_t c = 0; c < kCutoffs.size(); ++c) {
      rep.mean[c].recall += ue.at[c].recall / double(rep.n_eligible);
      rep.mean[c].precision += ue.at[c].precision / double(rep.n_eligible);
      rep.mean[c].ni += ue.at[c].ni / double(rep.n_eligible);
    }
  }
  return rep;
}

}  // namespace tccml::oracle
