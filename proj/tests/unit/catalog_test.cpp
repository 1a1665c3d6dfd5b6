/*
 * Copyright 2026 The AMRule Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include <fstream>
#include <set>

#include "amrule/catalog.hpp"
#include "amrule/error.hpp"
#include "amrule/random.hpp"
#include "test_support.hpp"

namespace amrule::catalog {
namespace {

using testing::Cat;
using testing::MakeProduct;
using testing::Num;
using testing::TempDir;

Catalog Anchors(int n) {
  std::vector<Product> ps;
  for (int i = 0; i < n; ++i) {
    ps.push_back(MakeProduct("a" + std::to_string(i), "Fixture",
                             {{"brand", Cat(i % 2 ? "m" : "k")}, {"watt", Num(10.0 * i)}}));
  }
  return Catalog::FromProducts(ps);
}

Catalog Recs(int n) {
  std::vector<Product> ps;
  for (int i = 0; i < n; ++i) {
    ps.push_back(MakeProduct("b" + std::to_string(i), "Bulb",
                             {{"brand", Cat(i % 3 ? "m" : "k")}, {"watt", Num(5.0 * i)}}));
  }
  return Catalog::FromProducts(ps);
}

int CountLabel(const std::vector<LabeledPair>& pairs, int label) {
  int n = 0;
  for (const auto& p : pairs) n += p.label == label ? 1 : 0;
  return n;
}

TEST(BuildWeakDataset, ThresholdFiltersPositives) {
  const auto a = Anchors(5);
  const auto b = Recs(5);
  std::vector<CoPurchaseRecord> log{{"a0", "b0", 5}, {"a1", "b1", 1}, {"a2", "b2", 9}};
  const auto pairs = BuildWeakDataset(a, b, log, {2, 1.0, 3});
  EXPECT_EQ(CountLabel(pairs, 1), 2);
}

TEST(BuildWeakDataset, NegativesMatchRatioAndAvoidLog) {
  const auto a = Anchors(5);
  const auto b = Recs(5);
  std::vector<CoPurchaseRecord> log{{"a0", "b0", 5}, {"a1", "b1", 1}, {"a2", "b2", 9}};
  const auto pairs = BuildWeakDataset(a, b, log, {2, 1.0, 3});
  EXPECT_EQ(CountLabel(pairs, -1), 2);
  std::set<PairKey> logged;
  for (const auto& r : log) logged.insert({r.anchor_id, r.rec_id});
  for (const auto& p : pairs) {
    if (p.label < 0) EXPECT_EQ(logged.count(p.pair), 0u) << p.pair.ToString();
  }
}

TEST(BuildWeakDataset, PositivesEqualBruteForceFilter) {
  const auto a = Anchors(20);
  const auto b = Recs(20);
  Rng rng = MakeRng(5);
  std::uniform_int_distribution<int> pick(0, 19), cnt(0, 8);
  std::vector<CoPurchaseRecord> log;
  std::set<PairKey> used;
  while (log.size() < 100) {
    PairKey k{"a" + std::to_string(pick(rng)), "b" + std::to_string(pick(rng))};
    if (!used.insert(k).second) continue;
    log.push_back({k.anchor_id, k.rec_id, cnt(rng)});
  }
  std::set<PairKey> expected;
  for (const auto& r : log) {
    if (r.count >= 3) expected.insert({r.anchor_id, r.rec_id});
  }
  std::set<PairKey> got;
  for (const auto& p : BuildWeakDataset(a, b, log, {3, 1.0, 1})) {
    if (p.label > 0) got.insert(p.pair);
  }
  EXPECT_EQ(got, expected);
}

TEST(BuildWeakDataset, NoPositivesIsAnError) {
  const auto a = Anchors(3);
  const auto b = Recs(3);
  std::vector<CoPurchaseRecord> log{{"a0", "b0", 1}};
  try {
    BuildWeakDataset(a, b, log, {3, 1.0, 0});
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyPositive);
  }
}

TEST(BuildWeakDataset, DeterministicForSeed) {
  const auto a = Anchors(10);
  const auto b = Recs(10);
  std::vector<CoPurchaseRecord> log{{"a0", "b0", 5}, {"a3", "b4", 7}};
  const auto x = BuildWeakDataset(a, b, log, {2, 2.0, 9});
  const auto y = BuildWeakDataset(a, b, log, {2, 2.0, 9});
  ASSERT_EQ(x.size(), y.size());
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(x[i].pair, y[i].pair);
}

std::vector<LabeledPair> Balanced(int n) {
  std::vector<LabeledPair> out;
  for (int i = 0; i < n; ++i) {
    LabeledPair p;
    p.pair = {"a" + std::to_string(i), "b" + std::to_string(i)};
    p.label = i % 2 ? 1 : -1;
    out.push_back(p);
  }
  return out;
}

TEST(SplitDataset, SevenToOnePointFiveRatio) {
  const auto s = SplitDataset(Balanced(1000), {}, 4);
  EXPECT_EQ(s.train.size(), 700u);
  EXPECT_EQ(s.validation.size(), 150u);
  EXPECT_EQ(s.test.size(), 150u);
}

TEST(SplitDataset, SameSeedSamePartition) {
  const auto pairs = Balanced(200);
  const auto x = SplitDataset(pairs, {}, 17);
  const auto y = SplitDataset(pairs, {}, 17);
  EXPECT_EQ(x.train, y.train);
  EXPECT_EQ(x.validation, y.validation);
  EXPECT_EQ(x.test, y.test);
}

TEST(SplitDataset, StratifiedOnTwentyPairs) {
  const auto pairs = Balanced(20);
  std::map<PairKey, int> label;
  for (const auto& p : pairs) label[p.pair] = p.label;
  // 12/4/4 so every part can hold an exact half.
  const auto s = SplitDataset(pairs, {0.6, 0.2, 0.2}, 2);
  for (const auto* part : {&s.train, &s.validation, &s.test}) {
    ASSERT_FALSE(part->empty());
    double pos = 0;
    for (const auto& k : *part) pos += label[k] > 0 ? 1 : 0;
    EXPECT_NEAR(pos / static_cast<double>(part->size()), 0.5, 0.05);
  }
}

TEST(SplitDataset, PartitionsAreDisjointAndComplete) {
  const auto pairs = Balanced(101);
  const auto s = SplitDataset(pairs, {}, 3);
  std::set<PairKey> all;
  for (const auto* part : {&s.train, &s.validation, &s.test}) {
    for (const auto& k : *part) EXPECT_TRUE(all.insert(k).second);
  }
  EXPECT_EQ(all.size(), pairs.size());
}

TEST(SplitDataset, TestPositivesPreferHighCounts) {
  auto pairs = Balanced(400);
  for (std::size_t i = 0; i < pairs.size(); ++i) pairs[i].count = pairs[i].label > 0 ? static_cast<std::int64_t>(i % 10) : 0;
  const auto s = SplitDataset(pairs, {}, 3, 6);
  std::map<PairKey, LabeledPair> by;
  for (const auto& p : pairs) by[p.pair] = p;
  for (const auto& k : s.test) {
    if (by[k].label > 0) EXPECT_GE(by[k].count, 6);
  }
}

TEST(Catalog, MissingSerializesAsNull) {
  TempDir dir;
  auto cat = Catalog::FromProducts(
      {MakeProduct("x", "X", {{"brand", Cat("m")}, {"size", testing::Missing()}})});
  SaveCatalog(dir / "c.jsonl", cat);
  const auto text = testing::Slurp(dir / "c.jsonl");
  EXPECT_NE(text.find("\"size\":null"), std::string::npos) << text;
  EXPECT_EQ(text.find("\"size\":\"\""), std::string::npos);
  const auto back = LoadCatalog(dir / "c.jsonl");
  EXPECT_TRUE(back.Get("x").attribute("size").is_missing());
  EXPECT_EQ(back.Get("x").attribute("brand").text(), "m");
}

TEST(Catalog, SparsityIsMissingRate) {
  std::vector<Product> ps;
  for (int i = 0; i < 10; ++i) {
    ps.push_back(MakeProduct("p" + std::to_string(i), "P",
                             {{"c", i < 6 ? testing::Missing() : Cat("v")}}));
  }
  const auto cat = Catalog::FromProducts(ps);
  EXPECT_DOUBLE_EQ(cat.schema().SparsityOf("c"), 0.6);
}

TEST(Catalog, DuplicateIdsRejected) {
  try {
    Catalog::FromProducts({MakeProduct("x", "X", {}), MakeProduct("x", "X", {})});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIngestion);
  }
}

TEST(Catalog, MixedKindsRejected) {
  try {
    Catalog::FromProducts({MakeProduct("x", "X", {{"c", Cat("v")}}),
                           MakeProduct("y", "X", {{"c", Num(1)}})});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIngestion);
  }
}

TEST(CoPurchase, CsvRoundTrip) {
  TempDir dir;
  std::vector<CoPurchaseRecord> log{{"a1", "b2", 4}, {"a3", "b1", 1}};
  SaveCoPurchase(dir / "log.csv", log);
  const auto back = LoadCoPurchase(dir / "log.csv");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].anchor_id, "a1");
  EXPECT_EQ(back[1].count, 1);
}

TEST(CoPurchase, NegativeCountRejected) {
  TempDir dir;
  std::ofstream(dir / "log.csv") << "anchor_id,rec_id,count\na1,b1,-2\n";
  EXPECT_THROW(LoadCoPurchase(dir / "log.csv"), Error);
}

TEST(UnlabeledPool, NeverTouchesExcludedPairs) {
  const auto a = Anchors(8);
  const auto b = Recs(8);
  std::vector<CoPurchaseRecord> log{{"a0", "b0", 1}, {"a1", "b1", 5}, {"a2", "b2", 2}};
  std::vector<PairKey> exclude{{"a0", "b0"}, {"a3", "b3"}};
  const auto pool = SampleUnlabeledPool(a, b, log, 3, exclude, 20, 1);
  EXPECT_EQ(pool.size(), 20u);
  std::set<PairKey> seen;
  for (const auto& k : pool) {
    EXPECT_TRUE(seen.insert(k).second);
    EXPECT_NE(k, (PairKey{"a0", "b0"}));
    EXPECT_NE(k, (PairKey{"a3", "b3"}));
    EXPECT_NE(k, (PairKey{"a1", "b1"}));
  }
  EXPECT_EQ(pool.front(), (PairKey{"a2", "b2"}));
}

TEST(BuildWeakDataset, SharedIdsAcrossCatalogsRejected) {
  const auto a = Catalog::FromProducts({MakeProduct("p1", "F", {{"brand", Cat("m")}})});
  const auto b = Catalog::FromProducts({MakeProduct("p1", "B", {{"brand", Cat("m")}})});
  const std::vector<CoPurchaseRecord> log{{"p1", "p1", 5}};
  try {
    BuildWeakDataset(a, b, log, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIngestion);
  }
}

}  // namespace
}  // namespace amrule::catalog
