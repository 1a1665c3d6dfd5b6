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

#include <set>

#include "amrule/error.hpp"
#include "amrule/synth.hpp"
#include "test_support.hpp"

namespace amrule::synth {
namespace {

std::size_t CountViolatingPositives(const SynthWorld& w, std::int64_t min_count,
                                    std::size_t* positives) {
  std::size_t bad = 0;
  *positives = 0;
  for (const auto& r : w.copurchase) {
    if (r.count < min_count) continue;
    ++*positives;
    if (!TrulyCompatible(w.rules, w.latent_anchors.Get(r.anchor_id),
                         w.latent_recs.Get(r.rec_id))) {
      ++bad;
    }
  }
  return bad;
}

TEST(Synth, NoiselessHighCountPairsSatisfyEveryRule) {
  SynthConfig c;
  c.noise = 0.0;
  c.pair_count = 2000;
  const auto w = Generate(c);
  ASSERT_EQ(w.rules.size(), 5u);
  std::size_t positives = 0;
  EXPECT_EQ(CountViolatingPositives(w, c.min_count, &positives), 0u);
  EXPECT_GT(positives, 0u);
}

TEST(Synth, TwentyPercentNoiseOnThousandPositives) {
  SynthConfig c;
  c.noise = 0.2;
  c.pair_count = 2000;
  c.compatible_fraction = 0.5;
  const auto w = Generate(c);
  std::size_t positives = 0;
  const std::size_t bad = CountViolatingPositives(w, c.min_count, &positives);
  EXPECT_NEAR(static_cast<double>(positives), 1000.0, 5.0);
  EXPECT_NEAR(static_cast<double>(bad), 200.0, 10.0);
}

TEST(Synth, SparseColumnsHitTheMissingRate) {
  SynthConfig c;
  const auto w = Generate(c);
  for (const std::string name : {"fit_code", "color", "warranty_tier"}) {
    EXPECT_NEAR(w.anchors.schema().SparsityOf(name), 0.6, 0.05) << name;
    EXPECT_NEAR(w.recs.schema().SparsityOf(name), 0.6, 0.05) << name;
  }
  // Latent catalogs keep the values behind the mask.
  EXPECT_EQ(w.latent_anchors.schema().SparsityOf("fit_code"), 0.0);
}

TEST(Synth, SchemaHasTwelveColumnsPerSide) {
  const auto w = Generate(SynthConfig{});
  EXPECT_EQ(w.anchors.schema().columns.size(), 12u);
  EXPECT_EQ(w.recs.schema().columns.size(), 12u);
  EXPECT_EQ(w.copurchase.size(), 5000u);
}

TEST(Synth, SameSeedSameWorld) {
  const auto a = Generate(testing::SmallWorldConfig(3));
  const auto b = Generate(testing::SmallWorldConfig(3));
  ASSERT_EQ(a.copurchase.size(), b.copurchase.size());
  for (std::size_t i = 0; i < a.copurchase.size(); ++i) {
    EXPECT_EQ(a.copurchase[i].anchor_id, b.copurchase[i].anchor_id);
    EXPECT_EQ(a.copurchase[i].rec_id, b.copurchase[i].rec_id);
    EXPECT_EQ(a.copurchase[i].count, b.copurchase[i].count);
  }
  EXPECT_EQ(a.anchors.products()[7].description, b.anchors.products()[7].description);
}

TEST(Synth, RuleOnUnknownAttributeIsConfigError) {
  SynthConfig c = testing::SmallWorldConfig();
  PlantedRule r;
  r.kind = RuleKind::kExactMatch;
  r.attribute = "no_such_column";
  c.planted_rules = {r};
  try {
    Generate(c);
    FAIL() << "expected a config error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfig);
  }
}

TEST(Synth, OutOfRangeNoiseRejected) {
  SynthConfig c;
  c.noise = 1.0;
  EXPECT_THROW(Generate(c), Error);
}

TEST(Synth, WriteWorldRoundTripsTruth) {
  testing::TempDir dir;
  const auto c = testing::SmallWorldConfig();
  const auto w = Generate(c);
  WriteWorld(w, c, dir.path());
  const auto rules = LoadPlantedRules(dir / "rules_truth.json");
  ASSERT_EQ(rules.size(), w.rules.size());
  for (std::size_t i = 0; i < rules.size(); ++i) {
    EXPECT_EQ(rules[i].Describe(), w.rules[i].Describe());
  }
  const auto anchors = catalog::LoadCatalog(dir / "catalog_anchor.jsonl");
  EXPECT_EQ(anchors.size(), w.anchors.size());
  EXPECT_EQ(catalog::LoadCoPurchase(dir / "copurchase.csv").size(), w.copurchase.size());
}

TEST(Synth, SatisfiesFollowsRuleKinds) {
  using testing::Cat;
  using testing::MakeProduct;
  using testing::Num;
  const auto a = MakeProduct("a", "Fixture", {{"brand", Cat("m")}, {"max_wattage", Num(60)}});
  const auto b = MakeProduct("b", "Bulb", {{"brand", Cat("m")}, {"wattage", Num(40)}});
  const auto rules = DefaultPlantedRules(5);
  EXPECT_TRUE(Satisfies(rules[0], a, b));
  EXPECT_FALSE(Satisfies(rules[1], a, b));  // fit_code missing on both
  EXPECT_TRUE(Satisfies(rules[2], a, b));   // 60 >= 40
  EXPECT_FALSE(Satisfies(rules[4], a, b));  // no adapter_type
}

}  // namespace
}  // namespace amrule::synth
