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

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <gtest/gtest.h>

#include "tccml/data.hpp"
#include "tccml/io.hpp"
#include "tccml/rng.hpp"

#include <fmt/format.h>

namespace tccml {
namespace {

RatingTable parse(const std::string& text, RatingFormat f = RatingFormat::DoubleColonDelimited) {
  std::istringstream in(text);
  return parse_ratings(in, f, "fixture");
}

std::vector<Polarity> classes(const std::vector<SignedInteraction>& xs) {
  std::vector<Polarity> out;
  for (const auto& x : xs) out.push_back(x.polarity);
  return out;
}

constexpr Polarity P = Polarity::Positive;
constexpr Polarity N = Polarity::Negative;

TEST(ParseRatings, TwoLineFixture) {
  const auto t = parse("1::7::5\n2::7::3\n");
  EXPECT_EQ(t.n_users, 2u);
  EXPECT_EQ(t.n_items, 1u);
  ASSERT_EQ(t.ratings.size(), 2u);
  EXPECT_EQ(t.user_ids, (std::vector<std::string>{"1", "2"}));
  EXPECT_EQ(t.item_ids, (std::vector<std::string>{"7"}));
  EXPECT_DOUBLE_EQ(t.ratings[1].value, 3.0);
}

TEST(ParseRatings, TimestampIgnoredAndDenseIdsByFirstAppearance) {
  const auto t = parse("10::300::4::978300760\n5::200::2::978302109\n10::200::1::978301968\n");
  EXPECT_EQ(t.user_ids, (std::vector<std::string>{"10", "5"}));
  EXPECT_EQ(t.item_ids, (std::vector<std::string>{"300", "200"}));
  EXPECT_EQ(t.ratings[2].user, 0u);
  EXPECT_EQ(t.ratings[2].item, 1u);
}

TEST(ParseRatings, CsvWithHeader) {
  const auto t = parse("user_id,book_id,rating\r\n1,258,5\r\n2,4081,4\r\n2,260,5\r\n", RatingFormat::Csv);
  EXPECT_EQ(t.n_users, 2u);
  EXPECT_EQ(t.n_items, 3u);
  EXPECT_EQ(t.ratings.size(), 3u);
}

TEST(ParseRatings, DuplicatesKeepLastOccurrence) {
  const auto t = parse("1::7::5\n1::8::2\n1::7::1\n");
  ASSERT_EQ(t.ratings.size(), 2u);
  EXPECT_DOUBLE_EQ(t.ratings[0].value, 1.0);
}

TEST(ParseRatings, MalformedLineReportsLineNumber) {
  try {
    parse("1::7::5\n\n1::7\n");
    FAIL() << "expected IngestError";
  } catch (const IngestError& e) {
    EXPECT_NE(std::string(e.what()).find("fixture:3"), std::string::npos) << e.what();
  }
}

TEST(ParseRatings, Errors) {
  EXPECT_THROW(parse(""), IngestError);
  EXPECT_THROW(parse("\n\n"), IngestError);
  EXPECT_THROW(parse("1::7::6\n"), IngestError);
  EXPECT_THROW(parse("1::7::0.5\n"), IngestError);
  EXPECT_THROW(parse("1::7::abc\n"), IngestError);
  EXPECT_THROW(parse("user_id,book_id,rating\n", RatingFormat::Csv), IngestError);
  EXPECT_THROW(parse_ratings("/nonexistent/ratings.dat", RatingFormat::DoubleColonDelimited),
               IngestError);
}

TEST(ParseRatings, ReparseIsIdentical) {
  const std::string text = "3::1::4\n1::2::5\n3::2::2\n2::9::3\n";
  const auto a = parse(text), b = parse(text);
  EXPECT_EQ(a.user_ids, b.user_ids);
  EXPECT_EQ(a.item_ids, b.item_ids);
  ASSERT_EQ(a.ratings.size(), b.ratings.size());
  for (std::size_t k = 0; k < a.ratings.size(); ++k) {
    EXPECT_EQ(a.ratings[k].user, b.ratings[k].user);
    EXPECT_EQ(a.ratings[k].item, b.ratings[k].item);
    EXPECT_EQ(a.ratings[k].value, b.ratings[k].value);
  }
}

TEST(Binarize, MeanRule) {
  EXPECT_EQ(classes(binarize_by_user_mean(parse("1::1::5\n1::2::3\n1::3::1\n"))),
            (std::vector<Polarity>{P, P, N}));
  EXPECT_EQ(classes(binarize_by_user_mean(parse("1::1::4\n1::2::4\n"))),
            (std::vector<Polarity>{P, P}));
  EXPECT_EQ(classes(binarize_by_user_mean(parse("1::1::2\n"))), (std::vector<Polarity>{P}));
}

TEST(Binarize, PerUserAndAlwaysSomePositive) {
  Rng rng(7);
  std::string text;
  for (int u = 0; u < 40; ++u) {
    const int n = 1 + int(rng.below(12));
    for (int i = 0; i < n; ++i) text += fmt::format("{}::{}::{}\n", u, rng.below(50), 1 + rng.below(5));
  }
  const auto table = parse(text);
  const auto labels = binarize_by_user_mean(table);
  ASSERT_EQ(labels.size(), table.ratings.size());
  std::vector<bool> has_pos(table.n_users, false);
  for (const auto& x : labels) has_pos[x.user] = has_pos[x.user] || x.polarity == P;
  for (bool b : has_pos) EXPECT_TRUE(b);

  // scrambling every other user's values leaves user 0's labels alone
  RatingTable scrambled = table;
  for (auto& r : scrambled.ratings) {
    if (r.user != 0) r.value = double(1 + rng.below(5));
  }
  const auto relabeled = binarize_by_user_mean(scrambled);
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (labels[k].user == 0) {
      EXPECT_EQ(labels[k].polarity, relabeled[k].polarity);
    }
  }
}

std::vector<TagRecord> tag_usage(const std::string& tag, int users, std::vector<ItemId> items) {
  std::vector<TagRecord> out;
  for (int u = 0; u < users; ++u) out.push_back({"u" + std::to_string(u), items[u % items.size()], tag});
  return out;
}

TEST(FilterTags, Thresholds) {
  std::vector<TagRecord> records;
  for (const auto& v : {tag_usage("kept", 5, {0, 1}), tag_usage("few-users", 4, {0, 1, 2}),
                        tag_usage("one-item", 9, {3})}) {
    records.insert(records.end(), v.begin(), v.end());
  }
  const auto t = filter_tags(records, 4);
  EXPECT_EQ(t.names, (std::vector<std::string>{"kept"}));
  EXPECT_EQ(t.item_tags[0], (std::vector<std::uint32_t>{0}));
  EXPECT_EQ(t.item_tags[1], (std::vector<std::uint32_t>{0}));
  EXPECT_TRUE(t.item_tags[2].empty());
  EXPECT_TRUE(t.item_tags[3].empty());
}

TEST(FilterTags, SameUserRepeatingCountsOnce) {
  std::vector<TagRecord> records;
  for (int k = 0; k < 10; ++k) records.push_back({"same", ItemId(k % 2), "spam"});
  EXPECT_EQ(filter_tags(records, 2).n_tags(), 0u);
  EXPECT_THROW(filter_tags(records, 1), InvalidArgument);
}

std::vector<SignedInteraction> sequence(std::size_t n) {
  std::vector<SignedInteraction> xs;
  for (std::size_t k = 0; k < n; ++k) xs.push_back({UserId(k % 7), ItemId(k), k % 3 ? P : N});
  return xs;
}

TEST(SplitThreeWay, Sizes) {
  const auto nine = split_three_way(sequence(9), 7, 9, 1);
  EXPECT_EQ(nine.train.size(), 3u);
  EXPECT_EQ(nine.validation.size(), 3u);
  EXPECT_EQ(nine.test.size(), 3u);
  const auto ten = split_three_way(sequence(10), 7, 10, 1);
  std::vector<std::size_t> sizes{ten.train.size(), ten.validation.size(), ten.test.size()};
  std::sort(sizes.begin(), sizes.end());
  EXPECT_EQ(sizes, (std::vector<std::size_t>{3, 3, 4}));
  EXPECT_THROW(split_three_way(sequence(2), 7, 2, 1), InvalidArgument);
}

TEST(SplitThreeWay, DeterministicPartition) {
  for (std::size_t n : {3u, 11u, 100u, 1001u}) {
    const auto xs = sequence(n);
    const auto a = split_three_way(xs, 7, n, 42);
    const auto b = split_three_way(xs, 7, n, 42);
    const InteractionTable* pa[] = {&a.train, &a.validation, &a.test};
    const InteractionTable* pb[] = {&b.train, &b.validation, &b.test};
    std::vector<ItemId> all;
    for (int p = 0; p < 3; ++p) {
      EXPECT_TRUE(std::equal(pa[p]->interactions().begin(), pa[p]->interactions().end(),
                             pb[p]->interactions().begin(), pb[p]->interactions().end()));
      for (const auto& x : pa[p]->interactions()) all.push_back(x.item);
      EXPECT_LE(std::max(pa[p]->size(), pa[(p + 1) % 3]->size()) -
                  std::min(pa[p]->size(), pa[(p + 1) % 3]->size()),
                1u);
    }
    std::sort(all.begin(), all.end());
    ASSERT_EQ(all.size(), n);
    for (std::size_t k = 0; k < n; ++k) EXPECT_EQ(all[k], k);  // disjoint and complete
  }
  const auto c = split_three_way(sequence(100), 7, 100, 43);
  const auto a = split_three_way(sequence(100), 7, 100, 42);
  EXPECT_FALSE(std::equal(a.train.interactions().begin(), a.train.interactions().end(),
                          c.train.interactions().begin(), c.train.interactions().end()));
}

TEST(EligibleUsers, AtLeastThreePositives) {
  InteractionTable test(3, 10, {{0, 0, P}, {0, 1, P}, {0, 2, P}, {0, 3, N},
                                {1, 0, P}, {1, 1, P}, {1, 2, N}, {1, 3, N}});
  EXPECT_EQ(eligible_eval_users(test), (std::vector<UserId>{0}));
}

TEST(InteractionTable, Lookups) {
  InteractionTable t(2, 5, {{0, 4, P}, {0, 1, N}, {1, 2, P}, {0, 3, P}});
  EXPECT_EQ(std::vector<ItemId>(t.positives(0).begin(), t.positives(0).end()),
            (std::vector<ItemId>{3, 4}));
  EXPECT_EQ(std::vector<ItemId>(t.items(0).begin(), t.items(0).end()),
            (std::vector<ItemId>{1, 3, 4}));
  EXPECT_TRUE(t.contains(0, 1));
  EXPECT_FALSE(t.contains(1, 1));
  EXPECT_EQ(t.count(N), 1u);
  EXPECT_THROW(InteractionTable(1, 1, {{0, 2, P}}), InvalidArgument);
}

TEST(SplitFiles, WriteReadRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "tccml_data_test";
  std::filesystem::remove_all(dir);
  PreparedData data;
  data.splits = split_three_way(sequence(30), 7, 30, 5);
  for (int u = 0; u < 7; ++u) data.user_ids.push_back("u" + std::to_string(u));
  for (int i = 0; i < 30; ++i) data.item_ids.push_back("i" + std::to_string(i));
  TagTable tags;
  tags.names = {"a", "b,c"};
  tags.item_tags.resize(30);
  tags.item_tags[3] = {0, 1};
  data.tags = tags;
  write_prepared(dir, data);
  {
    std::ifstream in(dir / "train.csv");
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "user_id,item_id,class");
  }
  const auto back = load_prepared(dir);
  EXPECT_EQ(back.user_ids, data.user_ids);
  EXPECT_EQ(back.item_ids, data.item_ids);
  ASSERT_TRUE(back.tags);
  EXPECT_EQ(back.tags->names, tags.names);
  EXPECT_EQ(back.tags->item_tags, tags.item_tags);
  EXPECT_TRUE(std::equal(back.splits.test.interactions().begin(), back.splits.test.interactions().end(),
                         data.splits.test.interactions().begin(), data.splits.test.interactions().end()));
  std::ofstream(dir / "test.csv") << "user_id,item_id,class\n1,2,0\n";
  EXPECT_THROW(load_prepared(dir), IngestError);
  std::filesystem::remove_all(dir);
}

TEST(AsOneClass, AllPositiveSameCells) {
  const InteractionTable t(2, 3, {{0, 0, Polarity::Negative}, {0, 2, Polarity::Positive},
                                  {1, 1, Polarity::Negative}});
  const auto oc = as_one_class(t);
  EXPECT_EQ(oc.size(), 3u);
  EXPECT_EQ(oc.count(Polarity::Negative), 0u);
  EXPECT_EQ(oc.positives(0).size(), 2u);
  EXPECT_TRUE(oc.contains(1, 1));
  EXPECT_FALSE(oc.contains(1, 0));
}

}  // namespace
}  // namespace tccml
