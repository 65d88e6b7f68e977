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

// tccml: prepare datasets, train, evaluate and compare CML / TC-CML models.
//
// Exit codes: 0 success, 1 usage or other error, 2 input/ingest error,
// 3 checkpoint or format mismatch, 4 config error, 5 numerical failure.

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/chrono.h>
#include <fmt/format.h>
#include <json.hpp>

#include "tccml/tccml.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace tccml;

namespace {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kIngest = 2,
  kFormat = 3,
  kConfig = 4,
  kNumerical = 5,
};

std::string fingerprint(const fs::path& path) {
  // FNV-1a 64
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError("cannot open '" + path.string() + "'");
  std::uint64_t h = 0xcbf29ce484222325ull;
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize k = 0; k < in.gcount(); ++k) {
      h ^= std::uint8_t(buf[k]);
      h *= 0x100000001b3ull;
    }
  }
  return fmt::format("fnv1a64:{:016x}", h);
}

json fingerprints(const fs::path& dir) {
  json out = json::object();
  for (const char* name : {"train.csv", "validation.csv", "test.csv", "users.csv", "items.csv",
                           "item_tags.csv", "tags.csv"}) {
    if (fs::exists(dir / name)) out[name] = fingerprint(dir / name);
  }
  return out;
}

std::string utc_now() {
  return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}",
                     fmt::gmtime(std::chrono::system_clock::to_time_t(std::chrono::system_clock::now())));
}

void write_manifest(const fs::path& path, json manifest) {
  manifest["created"] = utc_now();
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IngestError("cannot write '" + path.string() + "'");
  out << manifest.dump(2) << '\n';
}

json config_json(const TrainConfig& cfg) {
  json j = json::object();
  std::istringstream text(to_config_text(cfg));
  std::string line;
  while (std::getline(text, line)) {
    const auto eq = line.find(" = ");
    j[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return j;
}

// Exit code 0 requires every declared output to exist and be non-empty.
void validate_outputs(const std::vector<fs::path>& paths) {
  for (const auto& p : paths) {
    if (!fs::exists(p) || fs::file_size(p) == 0) {
      throw IngestError("output '" + p.string() + "' missing or empty after write");
    }
  }
}

TrainConfig read_config(const std::string& path) {
  TrainConfig cfg;
  if (!path.empty()) {
    if (!fs::exists(path)) throw ConfigError("config file '" + path + "' not found");
    cfg = load_config(path, cfg);
  }
  return cfg;
}

const TagTable* features_for(const PreparedData& data, const TrainConfig& cfg) {
  return data.tags && cfg.hp.lambda_f > 0.0 ? &*data.tags : nullptr;
}

void check_model_matches(const EmbeddingModel& model, const PreparedData& data,
                         const std::string& model_path) {
  if (model.n_users() != data.n_users() || model.n_items() != data.n_items()) {
    throw FormatError(fmt::format("{}: model has {} users x {} items, data has {} x {}", model_path,
                                  model.n_users(), model.n_items(), data.n_users(),
                                  data.n_items()));
  }
}

// ---- prepare ---------------------------------------------------------------

struct PrepareArgs {
  std::string ratings, format = "ml1m", tags, out;
  std::uint64_t seed = 0;
};

int cmd_prepare(const PrepareArgs& a) {
  const RatingFormat format = a.format == "csv" ? RatingFormat::Csv : RatingFormat::DoubleColonDelimited;
  if (!fs::exists(a.ratings)) throw IngestError("ratings file '" + a.ratings + "' not found");
  const RatingTable table = parse_ratings(a.ratings, format);
  const auto signed_ = binarize_by_user_mean(table);

  PreparedData data;
  data.splits = split_three_way(signed_, table.n_users, table.n_items, a.seed);
  data.user_ids = table.user_ids;
  data.item_ids = table.item_ids;
  std::size_t dropped = 0;
  if (!a.tags.empty()) {
    if (!fs::exists(a.tags)) throw IngestError("tag file '" + a.tags + "' not found");
    const auto records = read_tag_records(a.tags, table, &dropped);
    data.tags = filter_tags(records, table.n_items);
  }

  const fs::path out(a.out);
  json manifest = {{"command", "prepare"},
                   {"ratings", a.ratings},
                   {"ratings_fingerprint", fingerprint(a.ratings)},
                   {"format", a.format},
                   {"seed", a.seed},
                   {"out", a.out}};
  if (!a.tags.empty()) {
    manifest["tags"] = a.tags;
    manifest["tags_fingerprint"] = fingerprint(a.tags);
  }
  write_manifest(out / "manifest.json", manifest);
  write_prepared(out, data);

  DatasetSummary s;
  s.n_users = table.n_users;
  s.n_items = table.n_items;
  s.n_ratings = table.ratings.size();
  s.density = table.density();
  s.mean_rating = table.mean_rating();
  s.n_positive = std::size_t(std::count_if(signed_.begin(), signed_.end(), [](const auto& x) {
    return x.polarity == Polarity::Positive;
  }));
  s.n_negative = signed_.size() - s.n_positive;
  s.n_tags = data.tags ? data.tags->n_tags() : 0;
  write_summary(out / "summary.csv", s);

  std::vector<fs::path> outputs{out / "train.csv", out / "validation.csv", out / "test.csv",
                                out / "users.csv", out / "items.csv", out / "summary.csv"};
  if (data.tags) {
    outputs.push_back(out / "item_tags.csv");
    outputs.push_back(out / "tags.csv");
  }
  validate_outputs(outputs);

  std::cout << fmt::format("users {}  items {}  ratings {}  density {:.4f}  mean rating {:.4f}\n",
                           s.n_users, s.n_items, s.n_ratings, s.density, s.mean_rating);
  std::cout << fmt::format("positive {}  negative {}  train/validation/test {}/{}/{}\n",
                           s.n_positive, s.n_negative, data.splits.train.size(),
                           data.splits.validation.size(), data.splits.test.size());
  if (data.tags) std::cout << fmt::format("tags kept {} (records dropped {})\n", s.n_tags, dropped);
  return kOk;
}

// ---- synth -----------------------------------------------------------------

struct SynthArgs {
  std::string out;
  PlantedWorld world = PlantedWorld::standard();
  std::uint64_t split_seed = 0;
};

int cmd_synth(SynthArgs a) {
  a.world.affinity = PlantedWorld::banded_affinity(a.world.n_groups, a.world.n_clusters);
  const auto data = generate(a.world);
  PreparedData prepared;
  prepared.splits = split_three_way(data.interactions, data.n_users, data.n_items, a.split_seed);
  for (std::size_t u = 0; u < data.n_users; ++u) prepared.user_ids.push_back(std::to_string(u));
  for (std::size_t i = 0; i < data.n_items; ++i) prepared.item_ids.push_back(std::to_string(i));

  const fs::path out(a.out);
  write_manifest(out / "manifest.json",
                 {{"command", "synth"},
                  {"groups", a.world.n_groups},
                  {"clusters", a.world.n_clusters},
                  {"users", a.world.n_users},
                  {"items", a.world.n_items},
                  {"ratings_per_user", a.world.ratings_per_user},
                  {"noise", a.world.noise},
                  {"seed", a.world.seed},
                  {"split_seed", a.split_seed},
                  {"out", a.out}});
  write_prepared(out, prepared);
  {
    auto gt = detail::open_out(out / "ground_truth.csv");
    gt << "user_id,item_id,group,cluster,truth,class\n";
    for (std::size_t k = 0; k < data.interactions.size(); ++k) {
      const auto& x = data.interactions[k];
      gt << x.user << ',' << x.item << ',' << a.world.group_of(x.user) << ','
         << a.world.cluster_of(x.item) << ',' << int(data.truth[k]) << ',' << int(x.polarity) << '\n';
    }
  }
  DatasetSummary s;
  s.n_users = data.n_users;
  s.n_items = data.n_items;
  s.n_ratings = data.interactions.size();
  s.density = double(s.n_ratings) / (double(s.n_users) * double(s.n_items));
  for (const auto& x : data.interactions) ++(x.polarity == Polarity::Positive ? s.n_positive : s.n_negative);
  write_summary(out / "summary.csv", s);
  save_checkpoint(out / "ideal.ckpt", ideal_embedding(a.world));
  validate_outputs({out / "train.csv", out / "validation.csv", out / "test.csv", out / "users.csv",
                    out / "items.csv", out / "ground_truth.csv", out / "summary.csv",
                    out / "ideal.ckpt"});
  load_checkpoint(out / "ideal.ckpt");
  std::cout << fmt::format("synthetic world: {} users, {} items, {} interactions ({} negative)\n",
                           s.n_users, s.n_items, s.n_ratings, s.n_negative);
  return kOk;
}

// ---- train -----------------------------------------------------------------

struct TrainArgs {
  std::string data, mode = "tccml", config, out;
};

int cmd_train(const TrainArgs& a) {
  TrainConfig cfg = read_config(a.config);
  cfg.mode = parse_mode(a.mode);
  const PreparedData data = load_prepared(a.data);
  const fs::path out(a.out);

  write_manifest(out / "manifest.json", {{"command", "train"},
                                         {"data", a.data},
                                         {"inputs", fingerprints(a.data)},
                                         {"config_path", a.config},
                                         {"config", config_json(cfg)},
                                         {"seed", cfg.hp.seed},
                                         {"outputs", {"model.ckpt", "train_log.csv", "config.txt"}}});
  const auto result = train(cfg, data.splits.train, data.splits.validation, features_for(data, cfg));
  save_checkpoint(out / "model.ckpt", result.model, &result.adam);
  write_train_log_csv(out / "train_log.csv", result.log);
  {
    auto cfg_out = detail::open_out(out / "config.txt");
    cfg_out << to_config_text(cfg);
  }
  validate_outputs({out / "model.ckpt", out / "train_log.csv", out / "config.txt"});
  load_checkpoint(out / "model.ckpt");
  std::cout << fmt::format("mode {}  steps {}  best step {}  best validation {} {:.4f}\n",
                           mode_name(cfg.mode), result.steps_run, result.best_step,
                           cfg.early_stop == EarlyStopMetric::RecallAt50 ? "R@50" : "R@10",
                           result.best_score);
  return kOk;
}

// ---- eval ------------------------------------------------------------------

struct EvalArgs {
  std::string model, data, out;
};

int cmd_eval(const EvalArgs& a) {
  const auto ck = load_checkpoint(a.model);
  const PreparedData data = load_prepared(a.data);
  check_model_matches(ck.model, data, a.model);
  const auto report = evaluate(ck.model, data.splits);
  write_report_csv(a.out, report, data.user_ids);
  validate_outputs({a.out});
  print_report(std::cout, report);
  return kOk;
}

// ---- compare ---------------------------------------------------------------

struct CompareArgs {
  std::string data, config, out;
  std::size_t runs = 3;
};

int cmd_compare(const CompareArgs& a) {
  const TrainConfig base = read_config(a.config);
  const PreparedData data = load_prepared(a.data);
  const fs::path out(a.out);
  write_manifest(out / "manifest.json",
                 {{"command", "compare"},
                  {"data", a.data},
                  {"inputs", fingerprints(a.data)},
                  {"config_path", a.config},
                  {"config", config_json(base)},
                  {"runs", a.runs},
                  {"seeds", [&] {
                     json s = json::array();
                     for (std::size_t r = 0; r < a.runs; ++r) s.push_back(base.hp.seed + r);
                     return s;
                   }()},
                  {"outputs", {"comparison.csv", "comparison_runs.csv"}}});

  auto summary = detail::open_out(out / "comparison.csv");
  auto per_run = detail::open_out(out / "comparison_runs.csv");
  summary << "method," << kMetricHeader << '\n';
  per_run << "method,run,seed," << kMetricHeader << '\n';
  for (Mode mode : {Mode::CML, Mode::TCCML}) {
    TrainConfig cfg = base;
    cfg.mode = mode;
    const auto result = repeat_runs(cfg, data.splits, a.runs, features_for(data, cfg));
    const char* label = mode == Mode::CML ? "CML" : "TC-CML";
    for (std::size_t r = 0; r < result.runs.size(); ++r) {
      per_run << label << ',' << r << ',' << base.hp.seed + r << ','
              << metric_row(result.runs[r].mean) << '\n';
    }
    summary << label << ',' << metric_row(result.mean) << '\n';
    EvalReport shown;
    shown.mean = result.mean;
    shown.n_eligible = result.runs.front().n_eligible;
    print_report(std::cout, shown, label);
  }
  summary.close();
  per_run.close();
  validate_outputs({out / "comparison.csv", out / "comparison_runs.csv"});
  return kOk;
}

// ---- recommend -------------------------------------------------------------

struct RecommendArgs {
  std::string model, user, data;
  std::size_t k = 10;
};

int cmd_recommend(const RecommendArgs& a) {
  const auto ck = load_checkpoint(a.model);
  std::optional<PreparedData> data;
  if (!a.data.empty()) {
    data = load_prepared(a.data);
    check_model_matches(ck.model, *data, a.model);
  }
  UserId user = 0;
  if (data) {
    auto it = std::find(data->user_ids.begin(), data->user_ids.end(), a.user);
    if (it == data->user_ids.end()) throw InvalidArgument("unknown user '" + a.user + "'");
    user = UserId(it - data->user_ids.begin());
  } else if (!detail::parse_int(a.user, user) || user >= ck.model.n_users()) {
    throw InvalidArgument("user '" + a.user + "' is not a dense id below " +
                          std::to_string(ck.model.n_users()));
  }
  std::vector<std::vector<ItemId>> excluded(1);
  if (data) {
    const InteractionTable* seen[] = {&data->splits.train, &data->splits.validation};
    excluded[0] = merged_items(data->n_users(), seen)[user];
  }
  const auto list = top_k_items(ck.model, user, excluded[0], a.k);
  for (std::size_t r = 0; r < list.items.size(); ++r) {
    const std::string id = data ? data->item_ids[list.items[r]] : std::to_string(list.items[r]);
    std::cout << fmt::format("{}\t{:.6f}\n", id, list.distances[r]);
  }
  return kOk;
}

// ---- grid ------------------------------------------------------------------

struct GridArgs {
  std::string data, grid, config, out, mode = "tccml";
};

int cmd_grid(const GridArgs& a) {
  if (!fs::exists(a.grid)) throw ConfigError("grid file '" + a.grid + "' not found");
  const Grid grid = load_grid(a.grid);
  TrainConfig base = read_config(a.config);
  base.mode = parse_mode(a.mode);
  const PreparedData data = load_prepared(a.data);
  const fs::path out(a.out);
  json grid_json = json::object();
  for (const auto& [k, v] : grid) grid_json[k] = v;
  write_manifest(out / "manifest.json", {{"command", "grid"},
                                         {"data", a.data},
                                         {"inputs", fingerprints(a.data)},
                                         {"grid", grid_json},
                                         {"config", config_json(base)},
                                         {"outputs", {"grid_results.csv", "best_config.txt"}}});
  const auto result = run_grid_search(base, grid, data.splits.train, data.splits.validation,
                                      features_for(data, base));
  {
    auto csv = detail::open_out(out / "grid_results.csv");
    for (const auto& [name, _] : grid) csv << name << ',';
    csv << "val_R@50,best_step,selected\n";
    for (std::size_t i = 0; i < result.points.size(); ++i) {
      const auto& p = result.points[i];
      for (const auto& [_, v] : p.assignment) csv << fmt::format("{},", v);
      csv << fmt::format("{:.6f},{},{}\n", p.score, p.best_step, i == result.best_index ? 1 : 0);
    }
    auto best = detail::open_out(out / "best_config.txt");
    best << to_config_text(result.best);
  }
  validate_outputs({out / "grid_results.csv", out / "best_config.txt"});
  std::cout << fmt::format("{} grid points; best validation R@50 {:.4f}\n", result.points.size(),
                           result.points[result.best_index].score);
  std::cout << to_config_text(result.best);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Collaborative metric learning with two-class (positive/negative) feedback"};
  app.require_subcommand(1);

  PrepareArgs prep;
  auto* prepare = app.add_subcommand("prepare", "Binarize and split a ratings file");
  prepare->add_option("--ratings", prep.ratings, "Ratings file")->required();
  prepare->add_option("--format", prep.format, "ml1m (user::item::rating::ts) or csv")
    ->check(CLI::IsMember({"ml1m", "csv"}));
  prepare->add_option("--tags", prep.tags, "Tag assignments CSV: user_id,item_id,tag");
  prepare->add_option("--out", prep.out, "Output directory")->required();
  prepare->add_option("--seed", prep.seed, "Split seed");

  SynthArgs syn;
  auto* synth = app.add_subcommand("synth", "Write a planted synthetic dataset");
  synth->add_option("--out", syn.out, "Output directory")->required();
  synth->add_option("--groups", syn.world.n_groups, "User groups");
  synth->add_option("--clusters", syn.world.n_clusters, "Item clusters (last one is disliked)");
  synth->add_option("--users", syn.world.n_users, "Users");
  synth->add_option("--items", syn.world.n_items, "Items");
  synth->add_option("--ratings-per-user", syn.world.ratings_per_user, "Interactions per user");
  synth->add_option("--noise", syn.world.noise, "Class flip probability");
  synth->add_option("--seed", syn.world.seed, "Generation seed");
  synth->add_option("--split-seed", syn.split_seed, "Split seed");

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train one model");
  train_cmd->add_option("--data", tr.data, "Prepared data directory")->required();
  train_cmd->add_option("--mode", tr.mode, "cml or tccml")->check(CLI::IsMember({"cml", "tccml"}));
  train_cmd->add_option("--config", tr.config, "key = value config file");
  train_cmd->add_option("--out", tr.out, "Output directory")->required();

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on the test split");
  eval_cmd->add_option("--model", ev.model, "Checkpoint")->required();
  eval_cmd->add_option("--data", ev.data, "Prepared data directory")->required();
  eval_cmd->add_option("--out", ev.out, "Report CSV")->required();

  CompareArgs cmp;
  auto* compare = app.add_subcommand("compare", "Train CML and TC-CML over several seeds");
  compare->add_option("--data", cmp.data, "Prepared data directory")->required();
  compare->add_option("--config", cmp.config, "key = value config file");
  compare->add_option("--runs", cmp.runs, "Runs per method")->check(CLI::PositiveNumber);
  compare->add_option("--out", cmp.out, "Output directory")->required();

  RecommendArgs rec;
  auto* recommend = app.add_subcommand("recommend", "Print a user's top-k items");
  recommend->add_option("--model", rec.model, "Checkpoint")->required();
  recommend->add_option("--user", rec.user, "User id (original id when --data is given)")->required();
  recommend->add_option("-k", rec.k, "List length")->check(CLI::PositiveNumber);
  recommend->add_option("--data", rec.data, "Prepared data directory (id maps, exclusions)");

  GridArgs gr;
  auto* grid = app.add_subcommand("grid", "Grid search on the validation split");
  grid->add_option("--data", gr.data, "Prepared data directory")->required();
  grid->add_option("--grid", gr.grid, "Grid file: key = v1, v2, ...")->required();
  grid->add_option("--config", gr.config, "Base config file");
  grid->add_option("--mode", gr.mode, "cml or tccml")->check(CLI::IsMember({"cml", "tccml"}));
  grid->add_option("--out", gr.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // help and version exit 0; every other parse error is a usage error
    return app.exit(e) == 0 ? kOk : kFailure;
  }

  try {
    if (*prepare) return cmd_prepare(prep);
    if (*synth) return cmd_synth(syn);
    if (*train_cmd) return cmd_train(tr);
    if (*eval_cmd) return cmd_eval(ev);
    if (*compare) return cmd_compare(cmp);
    if (*recommend) return cmd_recommend(rec);
    if (*grid) return cmd_grid(gr);
  } catch (const IngestError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIngest;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFormat;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kFailure;
}
