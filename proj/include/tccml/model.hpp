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
#include <span>
#include <string>
#include <vector>

#include "tccml/error.hpp"
#include "tccml/rng.hpp"

namespace tccml {

/// Model and optimization hyperparameters. Losses are summed over a batch,
/// so the lambdas scale with batch_size.
struct HyperParams {
  std::size_t dim = 70;
  double margin = 0.5;
  double alpha = 1.0;  // push radius, >= 1
  double lambda1 = 0.1;
  double lambda2 = 0.1;
  double lambda_f = 0.0;
  std::size_t batch_size = 256;
  std::size_t candidates = 10;  // U
  bool warp_weight = true;      // false: uniform w = 1
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::size_t max_steps = 20000;
  std::size_t patience = 5;
  std::uint64_t seed = 0;

  void validate() const {
    if (dim == 0) throw InvalidArgument("dim must be >= 1");
    if (!(margin >= 0.0)) throw InvalidArgument("margin must be >= 0");
    if (!(alpha >= 1.0)) throw InvalidArgument("alpha must be >= 1");
    if (!(lambda1 >= 0.0 && lambda2 >= 0.0 && lambda_f >= 0.0)) {
      throw InvalidArgument("loss weights must be >= 0");
    }
    if (batch_size == 0) throw InvalidArgument("batch_size must be >= 1");
    if (candidates == 0) throw InvalidArgument("candidates must be >= 1");
    if (!(learning_rate > 0.0)) throw InvalidArgument("learning_rate must be > 0");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
      throw InvalidArgument("adam betas must lie in [0, 1)");
    }
    if (!(adam_epsilon > 0.0)) throw InvalidArgument("adam_epsilon must be > 0");
  }

  bool operator==(const HyperParams&) const = default;
};

/// Dense row-major matrix of doubles.
class RowMatrix {
 public:
  RowMatrix() = default;
  RowMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  bool operator==(const RowMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Parameter blocks of a model; also the key space of gradient accumulators.
enum class Block : std::uint8_t { User = 0, Item = 1, Feature = 2 };

/// User and item embeddings in one Euclidean space, plus the optional
/// tag -> embedding projection (one d-vector per tag).
struct EmbeddingModel {
  RowMatrix users;
  RowMatrix items;
  RowMatrix features;

  std::size_t dim() const { return users.cols(); }
  std::size_t n_users() const { return users.rows(); }
  std::size_t n_items() const { return items.rows(); }

  RowMatrix& block(Block b) {
    return b == Block::User ? users : b == Block::Item ? items : features;
  }
  const RowMatrix& block(Block b) const {
    return b == Block::User ? users : b == Block::Item ? items : features;
  }

  bool operator==(const EmbeddingModel&) const = default;
};

inline constexpr double kDistanceEpsilon = 1e-12;

/// Stabilized Euclidean distance sqrt(|a - b|^2 + eps).
inline double distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw InvalidArgument("distance: dimension mismatch (" + std::to_string(a.size()) + " vs " +
                          std::to_string(b.size()) + ")");
  }
  double sq = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double diff = a[k] - b[k];
    sq += diff * diff;
  }
  return std::sqrt(sq + kDistanceEpsilon);
}

inline double norm(std::span<const double> v) {
  double sq = 0.0;
  for (double x : v) sq += x * x;
  return std::sqrt(sq);
}

/// In-place projection onto the closed unit ball.
inline void project_row(std::span<double> v) {
  double sq = 0.0;
  for (double x : v) {
    if (!std::isfinite(x)) throw NumericalError("project_unit_ball: non-finite entry");
    sq += x * x;
  }
  if (sq > 1.0) {
    const double n = std::sqrt(sq);
    for (double& x : v) x /= n;
  }
}

inline std::vector<double> project_unit_ball(std::span<const double> v) {
  std::vector<double> out(v.begin(), v.end());
  project_row(out);
  return out;
}

/// Gaussian entries with std 1/sqrt(d), each user/item row then projected
/// into the unit ball. Feature projection rows (n_tags of them) start at 0.
inline EmbeddingModel init_model(std::size_t n_users, std::size_t n_items,
                                 const HyperParams& hp, std::uint64_t seed,
                                 std::size_t n_tags = 0) {
  if (hp.dim == 0) throw InvalidArgument("init_model: dim must be >= 1");
  if (n_users == 0 || n_items == 0) throw InvalidArgument("init_model: empty catalog");
  EmbeddingModel model{RowMatrix(n_users, hp.dim), RowMatrix(n_items, hp.dim),
                       RowMatrix(n_tags, hp.dim)};
  Rng rng(derive_seed(seed, 0x1417));
  const double scale = 1.0 / std::sqrt(double(hp.dim));
  for (RowMatrix* m : {&model.users, &model.items}) {
    for (double& x : m->data()) x = scale * rng.normal();
    for (std::size_t r = 0; r < m->rows(); ++r) project_row(m->row(r));
  }
  return model;
}

}  // namespace tccml
