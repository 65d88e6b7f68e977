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

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "tccml/data.hpp"
#include "tccml/error.hpp"
#include "tccml/model.hpp"

namespace tccml {

enum class Mode { CML, TCCML };
enum class EarlyStopMetric { RecallAt50, RecallAt10 };

struct TrainConfig {
  HyperParams hp;
  Mode mode = Mode::TCCML;
  std::size_t eval_every = 500;
  EarlyStopMetric early_stop = EarlyStopMetric::RecallAt50;
  std::filesystem::path checkpoint_path;  // best model written here when set

  bool operator==(const TrainConfig&) const = default;
};

inline const char* mode_name(Mode m) { return m == Mode::CML ? "cml" : "tccml"; }

inline Mode parse_mode(std::string_view s) {
  if (s == "cml" || s == "CML") return Mode::CML;
  if (s == "tccml" || s == "TCCML" || s == "tc-cml") return Mode::TCCML;
  throw ConfigError("unknown mode '" + std::string(s) + "' (expected cml or tccml)");
}

namespace detail {

template <typename T>
T parse_number(std::string_view key, std::string_view value, std::size_t line) {
  T out;
  bool ok;
  if constexpr (std::is_floating_point_v<T>) {
    ok = parse_double(value, out);
  } else {
    ok = parse_int(value, out);
  }
  if (!ok) {
    throw ConfigError("invalid value '" + std::string(value) + "' for '" + std::string(key) + "'",
                      line);
  }
  return out;
}

}  // namespace detail

/// Sets one key. Unknown keys and unparsable values raise ConfigError.
inline void set_config_value(TrainConfig& cfg, std::string_view key, std::string_view value,
                             std::size_t line = 0) {
  auto& hp = cfg.hp;
  auto real = [&] { return detail::parse_number<double>(key, value, line); };
  auto count = [&] { return detail::parse_number<std::size_t>(key, value, line); };
  if (key == "dim") hp.dim = count();
  else if (key == "margin") hp.margin = real();
  else if (key == "alpha") hp.alpha = real();
  else if (key == "lambda1") hp.lambda1 = real();
  else if (key == "lambda2") hp.lambda2 = real();
  else if (key == "lambda_f") hp.lambda_f = real();
  else if (key == "batch_size") hp.batch_size = count();
  else if (key == "candidates") hp.candidates = count();
  else if (key == "learning_rate") hp.learning_rate = real();
  else if (key == "adam_beta1") hp.adam_beta1 = real();
  else if (key == "adam_beta2") hp.adam_beta2 = real();
  else if (key == "adam_epsilon") hp.adam_epsilon = real();
  else if (key == "max_steps") hp.max_steps = count();
  else if (key == "patience") hp.patience = count();
  else if (key == "seed") hp.seed = detail::parse_number<std::uint64_t>(key, value, line);
  else if (key == "eval_every") {
    cfg.eval_every = count();
    if (cfg.eval_every == 0) throw ConfigError("eval_every must be >= 1", line);
  } else if (key == "warp_weight") {
    if (value == "true" || value == "1") hp.warp_weight = true;
    else if (value == "false" || value == "0") hp.warp_weight = false;
    else throw ConfigError("warp_weight must be true or false", line);
  } else if (key == "early_stop") {
    if (value == "R@50") cfg.early_stop = EarlyStopMetric::RecallAt50;
    else if (value == "R@10") cfg.early_stop = EarlyStopMetric::RecallAt10;
    else throw ConfigError("early_stop must be R@50 or R@10", line);
  } else if (key == "mode") {
    try {
      cfg.mode = parse_mode(value);
    } catch (const ConfigError& e) {
      throw ConfigError(e.what(), line);
    }
  } else {
    throw ConfigError("unknown key '" + std::string(key) + "'", line);
  }
}

namespace detail {

// Calls fn(key, value, line) for each `key = value` line; '#' starts a comment.
template <typename Fn>
void for_each_key_value(std::istream& in, Fn&& fn) {
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string_view view(raw);
    if (auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) throw ConfigError("expected 'key = value'", line);
    const auto key = trim(view.substr(0, eq));
    const auto value = trim(view.substr(eq + 1));
    if (key.empty() || value.empty()) throw ConfigError("expected 'key = value'", line);
    fn(key, value, line);
  }
}

}  // namespace detail

inline TrainConfig parse_config(std::istream& in, TrainConfig base = {}) {
  detail::for_each_key_value(in, [&](auto key, auto value, std::size_t line) {
    set_config_value(base, key, value, line);
  });
  return base;
}

inline TrainConfig load_config(const std::filesystem::path& path, TrainConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  try {
    return parse_config(in, std::move(base));
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

/// Parameter name -> candidate values, e.g. `lambda1 = 0.05, 0.1, 0.5`.
using Grid = std::map<std::string, std::vector<double>>;

inline Grid parse_grid(std::istream& in) {
  Grid grid;
  TrainConfig probe;
  detail::for_each_key_value(in, [&](auto key, auto value, std::size_t line) {
    std::vector<double> values;
    for (auto v : detail::split(value, ",")) {
      values.push_back(detail::parse_number<double>(key, v, line));
    }
    set_config_value(probe, key, fmt::format("{}", values.front()), line);  // rejects bad keys
    grid[std::string(key)] = std::move(values);
  });
  if (grid.empty()) throw ConfigError("grid is empty");
  return grid;
}

inline Grid load_grid(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open grid '" + path.string() + "'");
  try {
    return parse_grid(in);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

/// Config as `key = value` text that parse_config() reads back unchanged.
inline std::string to_config_text(const TrainConfig& cfg) {
  const auto& hp = cfg.hp;
  std::string s;
  auto put = [&](std::string_view k, const std::string& v) {
    s += fmt::format("{} = {}\n", k, v);
  };
  put("mode", mode_name(cfg.mode));
  put("dim", std::to_string(hp.dim));
  put("margin", fmt::format("{}", hp.margin));
  put("alpha", fmt::format("{}", hp.alpha));
  put("lambda1", fmt::format("{}", hp.lambda1));
  put("lambda2", fmt::format("{}", hp.lambda2));
  put("lambda_f", fmt::format("{}", hp.lambda_f));
  put("batch_size", std::to_string(hp.batch_size));
  put("candidates", std::to_string(hp.candidates));
  put("warp_weight", hp.warp_weight ? "true" : "false");
  put("learning_rate", fmt::format("{}", hp.learning_rate));
  put("adam_beta1", fmt::format("{}", hp.adam_beta1));
  put("adam_beta2", fmt::format("{}", hp.adam_beta2));
  put("adam_epsilon", fmt::format("{}", hp.adam_epsilon));
  put("max_steps", std::to_string(hp.max_steps));
  put("patience", std::to_string(hp.patience));
  put("seed", std::to_string(hp.seed));
  put("eval_every", std::to_string(cfg.eval_every));
  put("early_stop", cfg.early_stop == EarlyStopMetric::RecallAt50 ? "R@50" : "R@10");
  return s;
}

}  // namespace tccml
