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

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "tccml/data.hpp"
#include "tccml/error.hpp"
#include "tccml/model.hpp"
#include "tccml/rng.hpp"

namespace tccml {

enum class Affinity : std::uint8_t { Likes, Dislikes, Unknown };

/// Planted two-class preference structure: user u belongs to group
/// u % n_groups, item i to cluster i % n_clusters, and each group has an
/// affinity towards every cluster.
struct PlantedWorld {
  std::size_t n_groups = 2;
  std::size_t n_clusters = 3;
  std::vector<std::vector<Affinity>> affinity;  // [group][cluster]
  std::size_t n_users = 200;
  std::size_t n_items = 100;
  std::size_t ratings_per_user = 30;
  double noise = 0.05;  // probability of flipping an interaction's class
  std::uint64_t seed = 0;

  /// The desk-scale default: two groups with disjoint liked clusters and one
  /// cluster both dislike.
  static PlantedWorld standard() {
    PlantedWorld w;
    w.affinity = banded_affinity(w.n_groups, w.n_clusters);
    return w;
  }

  /// Group g likes cluster g % (C - 1); the last cluster is disliked by all;
  /// everything else is Unknown.
  static std::vector<std::vector<Affinity>> banded_affinity(std::size_t groups,
                                                            std::size_t clusters) {
    if (clusters < 2) throw InvalidArgument("planted world needs at least 2 clusters");
    std::vector<std::vector<Affinity>> a(groups, std::vector<Affinity>(clusters, Affinity::Unknown));
    for (std::size_t g = 0; g < groups; ++g) {
      a[g][g % (clusters - 1)] = Affinity::Likes;
      a[g][clusters - 1] = Affinity::Dislikes;
    }
    return a;
  }

  std::size_t group_of(UserId u) const { return u % n_groups; }
  std::size_t cluster_of(ItemId i) const { return i % n_clusters; }

  void validate() const {
    if (n_groups == 0 || n_clusters == 0) throw InvalidArgument("planted world: empty structure");
    if (affinity.size() != n_groups) throw InvalidArgument("planted world: affinity rows != groups");
    for (const auto& row : affinity) {
      if (row.size() != n_clusters) throw InvalidArgument("planted world: affinity cols != clusters");
      bool likes = false, dislikes = false;
      for (auto a : row) {
        likes |= a == Affinity::Likes;
        dislikes |= a == Affinity::Dislikes;
      }
      if (!likes || !dislikes) {
        throw InvalidArgument("planted world: every group needs a Likes and a Dislikes cluster");
      }
    }
    if (!(noise >= 0.0 && noise < 0.5)) throw InvalidArgument("planted world: noise must be in [0, 0.5)");
    if (n_users < n_groups || n_items < n_clusters) {
      throw InvalidArgument("planted world: fewer users/items than groups/clusters");
    }
    for (std::size_t g = 0; g < n_groups; ++g) {
      std::size_t available = 0;
      for (ItemId i = 0; i < n_items; ++i) available += affinity[g][cluster_of(i)] != Affinity::Unknown;
      if (ratings_per_user > available) {
        throw InvalidArgument("planted world: ratings_per_user " + std::to_string(ratings_per_user) +
                              " exceeds the " + std::to_string(available) +
                              " rateable items of group " + std::to_string(g));
      }
    }
  }
};

struct SyntheticData {
  std::size_t n_users = 0;
  std::size_t n_items = 0;
  std::vector<SignedInteraction> interactions;
  std::vector<Polarity> truth;  // class implied by affinity, before noise
};

/// Each user rates ratings_per_user distinct items drawn uniformly from the
/// clusters their group has an opinion about; the class follows the
/// affinity and is flipped with probability `noise`.
inline SyntheticData generate(const PlantedWorld& world) {
  world.validate();
  Rng rng(world.seed);
  SyntheticData out{world.n_users, world.n_items, {}, {}};
  out.interactions.reserve(world.n_users * world.ratings_per_user);
  for (UserId u = 0; u < world.n_users; ++u) {
    const auto& row = world.affinity[world.group_of(u)];
    std::vector<ItemId> pool;
    for (ItemId i = 0; i < world.n_items; ++i) {
      if (row[world.cluster_of(i)] != Affinity::Unknown) pool.push_back(i);
    }
    // partial Fisher-Yates: the first ratings_per_user entries are the sample
    for (std::size_t k = 0; k < world.ratings_per_user; ++k) {
      const std::size_t j = k + rng.below(pool.size() - k);
      std::swap(pool[k], pool[j]);
      const ItemId i = pool[k];
      const Polarity truth =
        row[world.cluster_of(i)] == Affinity::Likes ? Polarity::Positive : Polarity::Negative;
      Polarity observed = truth;
      if (rng.bernoulli(world.noise)) {
        observed = truth == Polarity::Positive ? Polarity::Negative : Polarity::Positive;
      }
      out.interactions.push_back({u, i, observed});
      out.truth.push_back(truth);
    }
  }
  return out;
}

/// Centroid embedding: user of group g at basis vector e_g; an item cluster
/// liked by groups S sits at sum_{g in S} e_g / sqrt|S|, and a cluster nobody
/// likes at -sum_g e_g / sqrt(G). For a liking group the distance is
/// sqrt(2 - 2/sqrt|S|) < sqrt(2) (the distance to anyone else's cluster), and
/// unliked clusters are farthest at sqrt(2 + 2/sqrt(G)).
inline EmbeddingModel ideal_embedding(const PlantedWorld& world, std::size_t dim = 0) {
  world.validate();
  if (dim == 0) dim = world.n_groups;
  if (dim < world.n_groups) throw InvalidArgument("ideal_embedding: dim < number of groups");
  EmbeddingModel m{RowMatrix(world.n_users, dim), RowMatrix(world.n_items, dim), RowMatrix(0, dim)};
  for (UserId u = 0; u < world.n_users; ++u) m.users(u, world.group_of(u)) = 1.0;
  std::vector<std::vector<double>> centroid(world.n_clusters, std::vector<double>(dim, 0.0));
  for (std::size_t c = 0; c < world.n_clusters; ++c) {
    std::size_t likers = 0;
    for (std::size_t g = 0; g < world.n_groups; ++g) likers += world.affinity[g][c] == Affinity::Likes;
    if (likers > 0) {
      for (std::size_t g = 0; g < world.n_groups; ++g) {
        if (world.affinity[g][c] == Affinity::Likes) centroid[c][g] = 1.0 / std::sqrt(double(likers));
      }
    } else {
      for (std::size_t g = 0; g < world.n_groups; ++g) {
        centroid[c][g] = -1.0 / std::sqrt(double(world.n_groups));
      }
    }
  }
  for (ItemId i = 0; i < world.n_items; ++i) {
    const auto& c = centroid[world.cluster_of(i)];
    std::copy(c.begin(), c.end(), m.items.row(i).begin());
  }
  return m;
}

}  // namespace tccml
