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

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "tccml/checkpoint.hpp"
#include "tccml/config.hpp"
#include "tccml/data.hpp"
#include "tccml/eval.hpp"
#include "tccml/io.hpp"
#include "tccml/loss.hpp"
#include "tccml/model.hpp"
#include "tccml/optimizer.hpp"
#include "tccml/parallel.hpp"
#include "tccml/sampler.hpp"

namespace tccml {

struct TrainLogEntry {
  std::size_t step = 0;
  double train_loss = 0.0;  // mean batch loss since the previous entry
  bool evaluated = false;   // false when validation has no eligible user
  Metrics at10;
  Metrics at50;
  double wall_seconds = 0.0;

  /// Equality ignores wall time.
  bool operator==(const TrainLogEntry& o) const {
    auto same = [](double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); };
    return step == o.step && same(train_loss, o.train_loss) && evaluated == o.evaluated &&
           at10 == o.at10 && at50 == o.at50;
  }
};

using TrainLog = std::vector<TrainLogEntry>;

inline void write_train_log_csv(const std::filesystem::path& path, const TrainLog& log,
                                bool include_wall_time = true) {
  auto out = detail::open_out(path);
  out << "step,train_loss,val_R@10,val_R@50,val_NI@10,val_NI@50";
  out << (include_wall_time ? ",wall_seconds\n" : "\n");
  for (const auto& e : log) {
    out << fmt::format("{},{:.6f}", e.step, e.train_loss);
    if (e.evaluated) {
      out << fmt::format(",{:.6f},{:.6f},{:.6f},{:.6f}", e.at10.recall, e.at50.recall, e.at10.ni,
                         e.at50.ni);
    } else {
      out << ",,,,";
    }
    if (include_wall_time) out << fmt::format(",{:.3f}", e.wall_seconds);
    out << '\n';
  }
}

/// Hyperparameters actually used: CML mode zeroes both push weights.
inline HyperParams effective_params(const TrainConfig& cfg) {
  HyperParams hp = cfg.hp;
  if (cfg.mode == Mode::CML) {
    hp.lambda1 = 0.0;
    hp.lambda2 = 0.0;
  }
  return hp;
}

struct TrainResult {
  EmbeddingModel model;  // best validation checkpoint
  AdamState adam;        // optimizer state of the final step
  TrainLog log;
  std::size_t best_step = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  std::size_t steps_run = 0;
};

/// Called after every optimizer step with the updated model and the
/// gradient that produced it.
using StepObserver =
  std::function<void(std::size_t step, const EmbeddingModel&, const GradAccumulator&)>;

/// Adam training with validation-based early stopping. Validation runs at
/// step 0, every eval_every steps and after the final step; the returned
/// model is the best one seen. patience = 0 disables early stopping.
inline TrainResult train(const TrainConfig& cfg, const InteractionTable& train_split,
                         const InteractionTable& validation, const TagTable* features = nullptr,
                         const StepObserver& observer = {},
                         std::size_t eval_workers = worker_count()) {
  const HyperParams hp = effective_params(cfg);
  hp.validate();
  if (cfg.eval_every == 0) throw InvalidArgument("eval_every must be >= 1");
  if (train_split.count(Polarity::Positive) == 0) {
    throw InvalidArgument("train: training split has no positive interaction");
  }
  const TagTable* feats = features_active(hp, features) ? features : nullptr;
  const auto clock_start = std::chrono::steady_clock::now();

  TrainResult result;
  EmbeddingModel model = init_model(train_split.n_users(), train_split.n_items(), hp, hp.seed,
                                    feats ? feats->n_tags() : 0);
  AdamState adam = AdamState::like(model);
  SamplerState sampler(train_split, derive_seed(hp.seed, 0x5a3));

  const bool can_eval = !eligible_eval_users(validation).empty();
  const InteractionTable* exclude[] = {&train_split};
  std::size_t stale = 0;
  double loss_sum = 0.0;
  std::size_t loss_count = 0;

  auto checkpoint = [&](std::size_t step) {
    TrainLogEntry e;
    e.step = step;
    e.train_loss = loss_count ? loss_sum / double(loss_count) : 0.0;
    loss_sum = 0.0;
    loss_count = 0;
    double score = 0.0;
    if (can_eval) {
      const auto report = evaluate(model, validation, exclude, eval_workers);
      e.evaluated = true;
      e.at10 = report.at(10);
      e.at50 = report.at(50);
      score = cfg.early_stop == EarlyStopMetric::RecallAt50 ? e.at50.recall : e.at10.recall;
    }
    e.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_start).count();
    result.log.push_back(e);
    if (!can_eval || score > result.best_score) {
      result.best_score = can_eval ? score : result.best_score;
      result.best_step = step;
      result.model = model;
      stale = 0;
    } else {
      ++stale;
    }
  };

  checkpoint(0);
  for (std::size_t step = 1; step <= hp.max_steps; ++step) {
    const MiniBatch batch = sample_batch(sampler, model, hp, feats);
    const double loss = total_loss(batch, model, hp, feats);
    if (!std::isfinite(loss)) {
      throw NumericalError(fmt::format("non-finite batch loss at step {}", step));
    }
    loss_sum += loss;
    ++loss_count;
    const GradAccumulator grads = grad_total_loss(batch, model, hp, feats);
    adam_step(model, adam, grads, hp);
    result.steps_run = step;
    if (observer) observer(step, model, grads);
    if (step % cfg.eval_every == 0 || step == hp.max_steps) {
      checkpoint(step);
      if (hp.patience > 0 && stale >= hp.patience) break;
    }
  }
  result.adam = std::move(adam);
  if (!cfg.checkpoint_path.empty()) save_checkpoint(cfg.checkpoint_path, result.model);
  return result;
}

/// One evaluated grid point.
struct GridPoint {
  std::vector<std::pair<std::string, double>> assignment;  // sorted by name
  TrainConfig config;
  double score = 0.0;  // best validation R@50
  std::size_t best_step = 0;
};

struct GridResult {
  TrainConfig best;
  std::size_t best_index = 0;
  std::vector<GridPoint> points;  // lexicographic order of assignments
};

/// Cartesian product of the grid (values ascending per parameter), in
/// lexicographic order of (parameter name, value).
inline std::vector<std::vector<std::pair<std::string, double>>> grid_assignments(const Grid& grid) {
  std::vector<std::vector<std::pair<std::string, double>>> out{{}};
  for (const auto& [name, raw] : grid) {
    if (raw.empty()) throw ConfigError("grid parameter '" + name + "' has no values");
    std::vector<double> values = raw;
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    std::vector<std::vector<std::pair<std::string, double>>> next;
    for (const auto& prefix : out) {
      for (double v : values) {
        auto a = prefix;
        a.emplace_back(name, v);
        next.push_back(std::move(a));
      }
    }
    out = std::move(next);
  }
  return out;
}

/// Trains every grid point and selects the highest validation R@50; ties go
/// to the lexicographically first assignment.
inline GridResult run_grid_search(const TrainConfig& base, const Grid& grid,
                                  const InteractionTable& train_split,
                                  const InteractionTable& validation,
                                  const TagTable* features = nullptr,
                                  std::size_t workers = worker_count()) {
  if (grid.empty()) throw InvalidArgument("run_grid_search: empty grid");
  GridResult result;
  for (auto& a : grid_assignments(grid)) {
    GridPoint p{a, base};
    p.config.checkpoint_path.clear();
    p.config.early_stop = EarlyStopMetric::RecallAt50;
    for (const auto& [name, v] : a) set_config_value(p.config, name, fmt::format("{}", v));
    result.points.push_back(std::move(p));
  }
  parallel_for(result.points.size(), workers, [&](std::size_t i) {
    auto& p = result.points[i];
    const auto r = train(p.config, train_split, validation, features, {}, 1);
    p.score = r.best_score;
    p.best_step = r.best_step;
  });
  for (std::size_t i = 1; i < result.points.size(); ++i) {
    if (result.points[i].score > result.points[result.best_index].score) result.best_index = i;
  }
  result.best = result.points[result.best_index].config;
  return result;
}

struct RepeatResult {
  std::array<Metrics, kCutoffs.size()> mean{};
  std::vector<EvalReport> runs;
};

/// Element-wise mean of the reports' summary metrics.
inline std::array<Metrics, kCutoffs.size()> mean_metrics(std::span<const EvalReport> reports) {
  if (reports.empty()) throw InvalidArgument("mean_metrics: no reports");
  std::array<Metrics, kCutoffs.size()> mean{};
  for (const auto& rep : reports) {
    for (std::size_t c = 0; c < kCutoffs.size(); ++c) {
      mean[c].recall += rep.mean[c].recall;
      mean[c].precision += rep.mean[c].precision;
      mean[c].ni += rep.mean[c].ni;
    }
  }
  for (auto& m : mean) {
    m.recall /= double(reports.size());
    m.precision /= double(reports.size());
    m.ni /= double(reports.size());
  }
  return mean;
}

/// Trains n_runs models with seeds seed, seed+1, ... and averages their
/// test reports element-wise. Training sees only train and validation.
inline RepeatResult repeat_runs(const TrainConfig& cfg, const SplitAssignment& splits,
                                std::size_t n_runs = 3, const TagTable* features = nullptr,
                                std::size_t workers = worker_count()) {
  if (n_runs == 0) throw InvalidArgument("repeat_runs: n_runs must be >= 1");
  RepeatResult result;
  result.runs.resize(n_runs);
  parallel_for(n_runs, workers, [&](std::size_t r) {
    TrainConfig run_cfg = cfg;
    run_cfg.hp.seed = cfg.hp.seed + r;
    run_cfg.checkpoint_path.clear();
    const auto trained = train(run_cfg, splits.train, splits.validation, features, {}, 1);
    result.runs[r] = evaluate(trained.model, splits, 1);
  });
  result.mean = mean_metrics(result.runs);
  return result;
}

}  // namespace tccml
