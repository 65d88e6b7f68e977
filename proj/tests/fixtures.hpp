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

// Random instances shared by the unit and acceptance suites.

#include <algorithm>
#include <cmath>
#include <vector>

#include "tccml/data.hpp"
#include "tccml/loss.hpp"
#include "tccml/model.hpp"
#include "tccml/rng.hpp"

namespace tccml::testing {

struct Instance {
  EmbeddingModel model;
  InteractionTable train;
  TagTable tags;
  MiniBatch batch;
};

/// Random model with entries N(0, 0.5^2) (norms not constrained).
inline EmbeddingModel random_model(Rng& rng, std::size_t nu, std::size_t ni, std::size_t d,
                                   std::size_t n_tags = 0, double scale = 0.5) {
  EmbeddingModel m{RowMatrix(nu, d), RowMatrix(ni, d), RowMatrix(n_tags, d)};
  for (RowMatrix* block : {&m.users, &m.items, &m.features}) {
    for (double& x : block->data()) x = scale * rng.normal();
  }
  return m;
}

/// Each (user, item) cell is positive / negative / unobserved with
/// probabilities p_pos / p_neg / rest.
inline InteractionTable random_interactions(Rng& rng, std::size_t nu, std::size_t ni,
                                            double p_pos = 0.3, double p_neg = 0.2) {
  std::vector<SignedInteraction> xs;
  for (UserId u = 0; u < nu; ++u) {
    for (ItemId i = 0; i < ni; ++i) {
      const double r = rng.uniform();
      if (r < p_pos) xs.push_back({u, i, Polarity::Positive});
      else if (r < p_pos + p_neg) xs.push_back({u, i, Polarity::Negative});
    }
  }
  return InteractionTable(nu, ni, std::move(xs));
}

inline TagTable random_tags(Rng& rng, std::size_t ni, std::size_t n_tags) {
  TagTable t;
  for (std::size_t k = 0; k < n_tags; ++k) t.names.push_back("t" + std::to_string(k));
  t.item_tags.resize(ni);
  for (auto& tags : t.item_tags) {
    for (std::uint32_t k = 0; k < n_tags; ++k) {
      if (rng.bernoulli(0.4)) tags.push_back(k);
    }
  }
  return t;
}

/// Arbitrary terms over the whole catalog; membership constraints are not
/// needed for gradient checks.
inline MiniBatch random_batch(Rng& rng, std::size_t nu, std::size_t ni, std::size_t n_terms,
                              bool with_features) {
  MiniBatch b;
  for (std::size_t k = 0; k < n_terms; ++k) {
    const auto u = UserId(rng.below(nu));
    const auto p = ItemId(rng.below(ni));
    auto n = ItemId(rng.below(ni - 1));
    if (n >= p) ++n;
    b.triplets.push_back({u, p, n, 0.5 + 1.5 * rng.uniform()});
    b.user_negatives.push_back({PushKind::UserNegative, UserId(rng.below(nu)), ItemId(rng.below(ni))});
    const auto i = ItemId(rng.below(ni));
    auto j = ItemId(rng.below(ni - 1));
    if (j >= i) ++j;
    b.dissimilar_pairs.push_back({PushKind::DissimilarPair, i, j});
  }
  if (with_features) {
    for (ItemId i = 0; i < ni; ++i) {
      if (rng.bernoulli(0.6)) b.feature_items.push_back(i);
    }
  }
  return b;
}

/// True when every hinge argument and every alpha/d - 1 is at least `gap`
/// away from its kink, so finite differences never straddle one.
inline bool away_from_kinks(const MiniBatch& b, const EmbeddingModel& m, const HyperParams& hp,
                            double gap = 1e-3) {
  for (const auto& t : b.triplets) {
    if (std::abs(hinge_argument(t, m, hp.margin)) < gap) return false;
  }
  for (const auto* terms : {&b.user_negatives, &b.dissimilar_pairs}) {
    for (const auto& p : *terms) {
      const double d = distance(push_left(p, m), m.items.row(p.right));
      if (std::abs(hp.alpha / d - 1.0) < gap) return false;
    }
  }
  return true;
}

/// max over coordinates of |a - f| / max(|a|, |f|, floor); rows absent from
/// one accumulator count as zeros.
inline double max_relative_error(const GradAccumulator& analytic, const GradAccumulator& fd,
                                 double floor = 1e-2) {
  double worst = 0.0;
  auto check = [&](const GradAccumulator& x, const GradAccumulator& y) {
    for (const auto& [key, gx] : x) {
      const auto gy = y.get(key.block, key.row);
      for (std::size_t k = 0; k < gx.size(); ++k) {
        const double a = gx[k], f = gy.empty() ? 0.0 : gy[k];
        const double scale = std::max({std::abs(a), std::abs(f), floor});
        worst = std::max(worst, std::abs(a - f) / scale);
      }
    }
  };
  check(analytic, fd);
  check(fd, analytic);
  return worst;
}

}  // namespace tccml::testing
