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

#include "tccml/error.hpp"
#include "tccml/loss.hpp"
#include "tccml/model.hpp"

namespace tccml {

/// First/second moments shaped like the model, with one global step counter
/// used for bias correction.
struct AdamState {
  EmbeddingModel first;
  EmbeddingModel second;
  std::uint64_t step = 0;

  static AdamState like(const EmbeddingModel& model) {
    auto zeros = [](const RowMatrix& m) { return RowMatrix(m.rows(), m.cols()); };
    EmbeddingModel z{zeros(model.users), zeros(model.items), zeros(model.features)};
    return {z, z, 0};
  }

  bool operator==(const AdamState&) const = default;
};

inline const char* block_name(Block b) {
  return b == Block::User ? "user" : b == Block::Item ? "item" : "feature";
}

/// One Adam update touching only rows present in `grads`; touched user and
/// item rows are projected back into the unit ball afterwards.
inline void adam_step(EmbeddingModel& model, AdamState& state, const GradAccumulator& grads,
                      const HyperParams& hp) {
  for (const auto& [key, g] : grads) {
    for (double x : g) {
      if (!std::isfinite(x)) {
        throw NumericalError(std::string("non-finite gradient in ") + block_name(key.block) +
                             " row " + std::to_string(key.row));
      }
    }
  }
  ++state.step;
  const double t = double(state.step);
  const double correct1 = 1.0 - std::pow(hp.adam_beta1, t);
  const double correct2 = 1.0 - std::pow(hp.adam_beta2, t);
  for (const auto& [key, g] : grads) {
    auto x = model.block(key.block).row(key.row);
    auto m = state.first.block(key.block).row(key.row);
    auto v = state.second.block(key.block).row(key.row);
    for (std::size_t k = 0; k < g.size(); ++k) {
      m[k] = hp.adam_beta1 * m[k] + (1.0 - hp.adam_beta1) * g[k];
      v[k] = hp.adam_beta2 * v[k] + (1.0 - hp.adam_beta2) * g[k] * g[k];
      const double m_hat = m[k] / correct1;
      const double v_hat = v[k] / correct2;
      x[k] -= hp.learning_rate * m_hat / (std::sqrt(v_hat) + hp.adam_epsilon);
    }
    if (key.block != Block::Feature) project_row(x);
  }
}

}  // namespace tccml
