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

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "tccml/checkpoint.hpp"
#include "tccml/config.hpp"
#include "tccml/optimizer.hpp"

namespace tccml {
namespace {

namespace fs = std::filesystem;

fs::path temp_file(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "tccml_config_checkpoint_test";
  fs::create_directories(dir);
  return dir / name;
}

TEST(ParseConfig, KeysCommentsAndDefaults) {
  std::istringstream in(
    "# TC-CML on ML-1M\n"
    "mode = cml\n"
    "dim=32\n"
    "  margin = 1.0   # trailing comment\n"
    "\n"
    "lambda1 = 0.05\n"
    "warp_weight = false\n"
    "early_stop = R@10\n"
    "seed = 12345678901\n"
    "eval_every = 250\n");
  const auto cfg = parse_config(in);
  EXPECT_EQ(cfg.mode, Mode::CML);
  EXPECT_EQ(cfg.hp.dim, 32u);
  EXPECT_EQ(cfg.hp.margin, 1.0);
  EXPECT_EQ(cfg.hp.lambda1, 0.05);
  EXPECT_EQ(cfg.hp.lambda2, HyperParams{}.lambda2);
  EXPECT_FALSE(cfg.hp.warp_weight);
  EXPECT_EQ(cfg.early_stop, EarlyStopMetric::RecallAt10);
  EXPECT_EQ(cfg.hp.seed, 12345678901u);
  EXPECT_EQ(cfg.eval_every, 250u);
}

TEST(ParseConfig, DefaultsMatchDocumentedValues) {
  const TrainConfig cfg;
  EXPECT_EQ(cfg.hp.dim, 70u);
  EXPECT_EQ(cfg.hp.margin, 0.5);
  EXPECT_EQ(cfg.hp.batch_size, 256u);
  EXPECT_EQ(cfg.hp.candidates, 10u);
  EXPECT_EQ(cfg.hp.learning_rate, 1e-3);
  EXPECT_EQ(cfg.hp.adam_beta1, 0.9);
  EXPECT_EQ(cfg.hp.adam_beta2, 0.999);
  EXPECT_EQ(cfg.hp.adam_epsilon, 1e-8);
  EXPECT_EQ(cfg.hp.patience, 5u);
  EXPECT_EQ(cfg.eval_every, 500u);
  EXPECT_EQ(cfg.hp.lambda_f, 0.0);
  EXPECT_EQ(cfg.early_stop, EarlyStopMetric::RecallAt50);
}

TEST(ParseConfig, ErrorsCarryLineNumbers) {
  auto expect_line = [](const std::string& text, std::size_t line) {
    std::istringstream in(text);
    try {
      parse_config(in);
      ADD_FAILURE() << "expected ConfigError for: " << text;
    } catch (const ConfigError& e) {
      EXPECT_EQ(e.line(), line) << e.what();
      EXPECT_NE(std::string(e.what()).find("line " + std::to_string(line)), std::string::npos);
    }
  };
  expect_line("dim = 4\nbogus = 1\n", 2);
  expect_line("margin = abc\n", 1);
  expect_line("\n\nno equals sign\n", 3);
  expect_line("dim = -3\n", 1);
  expect_line("mode = bpr\n", 1);
  expect_line("warp_weight = maybe\n", 1);
  expect_line("eval_every = 0\n", 1);
  expect_line("early_stop = P@10\n", 1);
  expect_line("alpha =\n", 1);
}

TEST(LoadConfig, MissingFileAndBaseOverlay) {
  EXPECT_THROW(load_config(temp_file("absent.txt")), ConfigError);
  const auto path = temp_file("overlay.txt");
  std::ofstream(path) << "alpha = 2\n";
  TrainConfig base;
  base.hp.dim = 8;
  const auto cfg = load_config(path, base);
  EXPECT_EQ(cfg.hp.dim, 8u);
  EXPECT_EQ(cfg.hp.alpha, 2.0);
}

TEST(ConfigText, RoundTrips) {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    TrainConfig cfg;
    cfg.mode = trial % 2 ? Mode::CML : Mode::TCCML;
    cfg.hp.dim = 1 + rng.below(100);
    cfg.hp.margin = rng.uniform();
    cfg.hp.alpha = 1.0 + 3.0 * rng.uniform();
    cfg.hp.lambda1 = rng.uniform() / 7.0;
    cfg.hp.lambda2 = rng.uniform() * 1e-5;
    cfg.hp.lambda_f = rng.uniform();
    cfg.hp.learning_rate = 0.1 * rng.uniform();
    cfg.hp.warp_weight = trial % 3 != 0;
    cfg.hp.seed = rng.next();
    cfg.eval_every = 1 + rng.below(1000);
    cfg.early_stop = trial % 4 ? EarlyStopMetric::RecallAt50 : EarlyStopMetric::RecallAt10;
    std::istringstream in(to_config_text(cfg));
    EXPECT_EQ(parse_config(in), cfg);
  }
}

TEST(ParseGrid, ValuesAndErrors) {
  std::istringstream in("lambda1 = 0.05, 0.1, 0.5\nalpha = 1,2\n");
  const auto g = parse_grid(in);
  EXPECT_EQ(g.at("lambda1"), (std::vector<double>{0.05, 0.1, 0.5}));
  EXPECT_EQ(g.at("alpha"), (std::vector<double>{1.0, 2.0}));

  std::istringstream bad_key("alpha = 1\nsmoothing = 0.1\n");
  try {
    parse_grid(bad_key);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  std::istringstream bad_value("alpha = 1, x\n");
  EXPECT_THROW(parse_grid(bad_value), ConfigError);
  std::istringstream empty("# nothing\n");
  EXPECT_THROW(parse_grid(empty), ConfigError);
}

EmbeddingModel random_trained_model(Rng& rng, std::size_t n_tags) {
  auto m = testing::random_model(rng, 4, 6, 3, n_tags, 0.4);
  for (RowMatrix* b : {&m.users, &m.items}) {
    for (std::size_t r = 0; r < b->rows(); ++r) project_row(b->row(r));
  }
  return m;
}

TEST(Checkpoint, RoundTripWithinFloatPrecision) {
  Rng rng(2);
  const auto m = random_trained_model(rng, 0);
  const auto path = temp_file("plain.ckpt");
  save_checkpoint(path, m);
  EXPECT_EQ(fs::file_size(path), 6u + 3u * 8u + 4u * (4u * 3u + 6u * 3u));
  const auto ck = load_checkpoint(path);
  EXPECT_FALSE(ck.adam.has_value());
  ASSERT_EQ(ck.model.dim(), 3u);
  ASSERT_EQ(ck.model.n_users(), 4u);
  ASSERT_EQ(ck.model.n_items(), 6u);
  EXPECT_EQ(ck.model.features.rows(), 0u);
  for (std::size_t k = 0; k < m.users.data().size(); ++k) {
    EXPECT_NEAR(ck.model.users.data()[k], m.users.data()[k], 1e-7);
  }
  for (std::size_t k = 0; k < m.items.data().size(); ++k) {
    EXPECT_NEAR(ck.model.items.data()[k], m.items.data()[k], 1e-7);
  }
}

TEST(Checkpoint, HeaderLayoutIsLittleEndian) {
  Rng rng(3);
  const auto path = temp_file("header.ckpt");
  save_checkpoint(path, random_trained_model(rng, 0));
  std::ifstream in(path, std::ios::binary);
  unsigned char head[30];
  in.read(reinterpret_cast<char*>(head), sizeof head);
  EXPECT_EQ(std::memcmp(head, "TCCML1", 6), 0);
  const unsigned char d_le[8] = {3, 0, 0, 0, 0, 0, 0, 0};
  const unsigned char nu_le[8] = {4, 0, 0, 0, 0, 0, 0, 0};
  const unsigned char ni_le[8] = {6, 0, 0, 0, 0, 0, 0, 0};
  EXPECT_EQ(std::memcmp(head + 6, d_le, 8), 0);
  EXPECT_EQ(std::memcmp(head + 14, nu_le, 8), 0);
  EXPECT_EQ(std::memcmp(head + 22, ni_le, 8), 0);
}

TEST(Checkpoint, FeaturesAndAdamSections) {
  Rng rng(4);
  auto m = random_trained_model(rng, 2);
  auto adam = AdamState::like(m);
  GradAccumulator g(3);
  const std::vector<double> dir{0.1, -0.2, 0.3};
  g.add(Block::Item, 1, dir, 1.0);
  g.add(Block::Feature, 0, dir, 1.0);
  HyperParams hp;
  adam_step(m, adam, g, hp);
  adam_step(m, adam, g, hp);
  const auto path = temp_file("full.ckpt");
  save_checkpoint(path, m, &adam);
  const auto ck = load_checkpoint(path);
  ASSERT_TRUE(ck.adam.has_value());
  EXPECT_EQ(*ck.adam, adam);  // moments are stored at full precision
  ASSERT_EQ(ck.model.features.rows(), 2u);
  EXPECT_EQ(ck.model.features(0, 0), double(float(m.features(0, 0))));
}

TEST(Checkpoint, Errors) {
  EXPECT_THROW(load_checkpoint(temp_file("missing.ckpt")), IngestError);

  const auto bad = temp_file("bad_magic.ckpt");
  std::ofstream(bad, std::ios::binary) << "NOTAMODEL and some bytes after it........";
  EXPECT_THROW(load_checkpoint(bad), FormatError);

  Rng rng(5);
  const auto good = temp_file("good.ckpt");
  save_checkpoint(good, random_trained_model(rng, 1));
  std::ifstream in(good, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  const auto truncated = temp_file("truncated.ckpt");
  std::ofstream(truncated, std::ios::binary) << bytes.substr(0, bytes.size() - 5);
  EXPECT_THROW(load_checkpoint(truncated), FormatError);

  const auto header_only = temp_file("header_only.ckpt");
  std::ofstream(header_only, std::ios::binary) << bytes.substr(0, 20);
  EXPECT_THROW(load_checkpoint(header_only), FormatError);

  const auto unknown = temp_file("unknown_section.ckpt");
  std::ofstream(unknown, std::ios::binary) << bytes << "XTRA";
  EXPECT_THROW(load_checkpoint(unknown), FormatError);

  // a NaN in the first user entry
  std::string corrupt = bytes;
  const float nan = std::numeric_limits<float>::quiet_NaN();
  std::memcpy(corrupt.data() + 30, &nan, 4);
  const auto nan_path = temp_file("nan.ckpt");
  std::ofstream(nan_path, std::ios::binary) << corrupt;
  EXPECT_THROW(load_checkpoint(nan_path), FormatError);
}

TEST(Checkpoint, LoadReprojectsRows) {
  EmbeddingModel m{RowMatrix(1, 2), RowMatrix(1, 2), RowMatrix(0, 2)};
  m.users(0, 0) = 0.6;
  m.users(0, 1) = 0.8;
  m.items(0, 0) = 1.0;
  const auto path = temp_file("unit.ckpt");
  save_checkpoint(path, m);
  const auto ck = load_checkpoint(path);
  EXPECT_LE(norm(ck.model.users.row(0)), 1.0 + 1e-12);
  EXPECT_LE(norm(ck.model.items.row(0)), 1.0 + 1e-12);
}

}  // namespace
}  // namespace tccml
