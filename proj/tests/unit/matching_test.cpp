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

#include <cmath>

#include "amrule/error.hpp"
#include "amrule/matching.hpp"
#include "test_support.hpp"

namespace amrule::matching {
namespace {

using testing::Cat;
using testing::MakeProduct;
using testing::Missing;
using testing::Num;

// Always predicts "same" and embeds every text to a fixed vector.
class FixedClient : public prompt_rules::LmClient {
 public:
  explicit FixedClient(std::vector<double> v) : v_(std::move(v)) {}
  prompt_rules::MaskDistribution FillMask(const std::string&) override {
    return {{"same"}, {1.0}};
  }
  std::vector<double> Embed(const std::string&) override { return v_; }
  std::size_t embedding_dim() const override { return v_.size(); }

 private:
  std::vector<double> v_;
};

CandidateRule Tree(const std::string& id, RuleKind kind, const std::string& attr, double mu) {
  CandidateRule r;
  r.id = id;
  r.kind = kind;
  r.attribute = attr;
  r.mu = mu;
  if (kind == RuleKind::kRange) {
    r.rec_attribute = "wattage";
    r.direction = RangeDirection::kGe;
  }
  return r;
}

CandidateRule Prompt(const std::string& id, double mu, std::vector<double> embedding) {
  CandidateRule r = Tree(id, RuleKind::kPrompt, "brand", mu);
  r.prompt = PromptPayload{};
  r.prompt->relation_token = "same";
  r.prompt->embedding = std::move(embedding);
  return r;
}

class MatchingTest : public ::testing::Test {
 protected:
  void SetUp() override {
    anchors_ = catalog::Catalog::FromProducts(
        {MakeProduct("a1", "Lamp", {{"brand", Cat("m")}, {"max_wattage", Num(60)}}, "Acme lamp."),
         MakeProduct("a2", "Lamp", {{"brand", Missing()}, {"max_wattage", Num(60)}}, "")});
    recs_ = catalog::Catalog::FromProducts(
        {MakeProduct("b1", "Bulb", {{"brand", Cat("m")}, {"wattage", Num(40)}}, "Acme bulb.")});
    encoder_ = featurize::PairEncoder::FromSchemas(anchors_.schema(), recs_.schema());
    for (const auto& a : anchors_.products()) {
      encodings_.push_back(encoder_.Encode(a, recs_.Get("b1")));
    }
  }
  PairView View(std::size_t i) const {
    const auto& a = anchors_.products()[i];
    return {{a.id, "b1"}, &encodings_[i], &a, &recs_.Get("b1")};
  }
  catalog::Catalog anchors_, recs_;
  featurize::PairEncoder encoder_;
  std::vector<featurize::PairEncoding> encodings_;
};

TEST_F(MatchingTest, TreeScoreIsMuWhenSatisfied) {
  const auto brand = Tree("r1", RuleKind::kExactMatch, "brand", 0.2);
  const auto watt = Tree("r2", RuleKind::kRange, "max_wattage", 0.3);
  EXPECT_EQ(ScoreTreeRule(brand, encodings_[0], encoder_.layout()), 0.2);
  EXPECT_EQ(ScoreTreeRule(watt, encodings_[0], encoder_.layout()), 0.3);
  EXPECT_EQ(ScoreTreeRule(brand, encodings_[1], encoder_.layout()), 0.0);  // missing
}

TEST(PromptScore, ClampedCosineTimesMu) {
  const auto r = Prompt("p", 0.2, {1.0, 0.0});
  EXPECT_DOUBLE_EQ(ScorePromptRule(r, std::vector<double>{2.0, 0.0}), 0.2);
  EXPECT_DOUBLE_EQ(ScorePromptRule(r, std::vector<double>{0.0, 1.0}), 0.0);
  EXPECT_DOUBLE_EQ(ScorePromptRule(r, std::vector<double>{-1.0, 0.0}), 0.0);
  EXPECT_EQ(ScorePromptRule(Tree("t", RuleKind::kExactMatch, "brand", 0.2),
                            std::vector<double>{1.0, 0.0}),
            0.0);
}

TEST_F(MatchingTest, PairTotalSumsTreeRules) {
  const std::vector<CandidateRule> rules = {Tree("r1", RuleKind::kExactMatch, "brand", 0.2),
                                            Tree("r2", RuleKind::kRange, "max_wattage", 0.3)};
  const auto s = ScorePair(rules, View(0), encoder_.layout(), nullptr);
  EXPECT_DOUBLE_EQ(s.total, 0.5);
  EXPECT_DOUBLE_EQ(s.normalized, 1.0);
  ASSERT_EQ(s.components.size(), 2u);
}

TEST_F(MatchingTest, PairTotalMixesTreeAndPrompt) {
  FixedClient client({0.5, std::sqrt(0.75)});  // cos 0.5 against {1, 0}
  const std::vector<CandidateRule> rules = {Tree("r1", RuleKind::kExactMatch, "brand", 0.2),
                                            Prompt("p1", 0.4, {1.0, 0.0})};
  const auto s = ScorePair(rules, View(0), encoder_.layout(), &client);
  EXPECT_NEAR(s.total, 0.4, 1e-12);
  EXPECT_NEAR(s.normalized, 0.4 / 0.6, 1e-12);
}

TEST_F(MatchingTest, EmptyRuleSetScoresZero) {
  const auto s = ScorePair({}, View(0), encoder_.layout(), nullptr);
  EXPECT_EQ(s.total, 0.0);
  EXPECT_EQ(s.normalized, 0.0);
}

TEST_F(MatchingTest, MissingDescriptionScoresZeroPrompt) {
  FixedClient client({1.0, 0.0});
  const std::vector<CandidateRule> rules = {Prompt("p1", 0.4, {1.0, 0.0})};
  EXPECT_EQ(ScorePair(rules, View(1), encoder_.layout(), &client).total, 0.0);
  EXPECT_DOUBLE_EQ(ScorePair(rules, View(0), encoder_.layout(), &client).total, 0.4);
}

TEST_F(MatchingTest, PromptWithoutClientIsConfigError) {
  const std::vector<CandidateRule> rules = {Prompt("p1", 0.4, {1.0, 0.0})};
  EXPECT_THROW(ScorePair(rules, View(0), encoder_.layout(), nullptr), Error);
}

MatchScore Score(const std::string& anchor, double normalized) {
  MatchScore s;
  s.pair = {anchor, "b"};
  s.normalized = normalized;
  s.total = normalized;
  return s;
}

TEST(AssignWeakLabels, ThresholdKeepsHighScores) {
  const auto out = AssignWeakLabels({Score("x", 0.9), Score("y", 0.55), Score("z", 0.2)}, 0.6, 10);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].pair.anchor_id, "x");
}

TEST(AssignWeakLabels, CapKeepsBestFirst) {
  const auto out = AssignWeakLabels({Score("y", 0.7), Score("x", 0.9)}, 0.6, 1);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].pair.anchor_id, "x");
}

TEST(AssignWeakLabels, TiesOrderedByPairId) {
  const auto out = AssignWeakLabels({Score("b", 0.8), Score("a", 0.8)}, 0.6, 10);
  EXPECT_EQ(out[0].pair.anchor_id, "a");
}

TEST(AssignWeakLabels, ThetaOutOfRangeRejected) {
  EXPECT_THROW(AssignWeakLabels({}, 0.0, 1), Error);
  EXPECT_THROW(AssignWeakLabels({}, 1.5, 1), Error);
}

}  // namespace
}  // namespace amrule::matching
