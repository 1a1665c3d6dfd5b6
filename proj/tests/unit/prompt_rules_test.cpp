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
#include <numeric>

#include "amrule/error.hpp"
#include "amrule/lm_client.hpp"
#include "amrule/prompt_rules.hpp"
#include "test_support.hpp"

namespace amrule::prompt_rules {
namespace {

using testing::MakeProduct;

catalog::Product Drill() {
  return MakeProduct("a", "Power tool", {},
                     "The Milwaukee M18 FUEL 1/2 in. Hammer Drill is the industry's most "
                     "powerful brushless battery powered drill, delivering up to 60% more "
                     "power.");
}

catalog::Product Battery() {
  return MakeProduct("b", "Battery", {},
                     "The Milwaukee M18 REDLITHIUM XC 5.0 Ah Battery Pack delivers up to "
                     "2.5X more runtime, 20% more power and 2X more recharges than "
                     "standard lithium-ion batteries.");
}

constexpr char kDrillPrompt[] =
    "Power tool: The Milwaukee M18 FUEL 1/2 in. Hammer Drill is the industry's most "
    "powerful brushless battery powered drill, delivering up to 60% more power. "
    "Battery: The Milwaukee M18 REDLITHIUM XC 5.0 Ah Battery Pack delivers up to 2.5X "
    "more runtime, 20% more power and 2X more recharges than standard lithium-ion "
    "batteries. The power tool is compatible with the battery because their brand "
    "names are [MASK].";

// Returns a fixed distribution for every prompt.
class FixedClient : public LmClient {
 public:
  explicit FixedClient(MaskDistribution d) : d_(std::move(d)) {}
  MaskDistribution FillMask(const std::string&) override { return d_; }
  std::vector<double> Embed(const std::string&) override { return {1.0, 0.0}; }
  std::size_t embedding_dim() const override { return 2; }

 private:
  MaskDistribution d_;
};

TEST(BuildPrompt, DrillAndBatteryTemplate) {
  const auto p = BuildPrompt(Drill(), Battery(), "brand_name", Polarity::kCompatible);
  EXPECT_EQ(p.text(), kDrillPrompt);
}

TEST(BuildPrompt, StubFillsSameForDrillAndBattery) {
  StubLmClient stub;
  const auto f = FillPrompt(stub, Drill(), Battery(), "brand_name", Polarity::kCompatible);
  EXPECT_EQ(f.prediction.token, "same");
  EXPECT_EQ(f.rule_text,
            "The power tool is compatible with the battery because their brand names are same.");
}

TEST(BuildPrompt, NegativePolarityUsesNotCompatible) {
  const auto p = BuildPrompt(Drill(), Battery(), "brand_name", Polarity::kNotCompatible);
  EXPECT_NE(p.sentence.find("is not compatible with"), std::string::npos);
}

TEST(BuildPrompt, MissingDescriptionIsUnavailable) {
  auto a = Drill();
  a.description.clear();
  try {
    BuildPrompt(a, Battery(), "brand", Polarity::kCompatible);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kPromptUnavailable);
  }
}

TEST(BuildPrompt, TruncatesAtSentenceBoundary) {
  auto a = MakeProduct("a", "Lamp", {}, "First sentence. Second sentence is rather long. Third.");
  auto b = MakeProduct("b", "Bulb", {}, "Bulb text. More bulb text here.");
  const auto full = BuildPrompt(a, b, "brand", Polarity::kCompatible);
  const auto cut = BuildPrompt(a, b, "brand", Polarity::kCompatible, full.text().size() - 10);
  EXPECT_LE(cut.text().size(), full.text().size() - 10);
  EXPECT_NE(cut.context.find("First sentence."), std::string::npos);
  EXPECT_EQ(cut.sentence, full.sentence);
  EXPECT_THROW(BuildPrompt(a, b, "brand", Polarity::kCompatible, 20), Error);
}

TEST(TruncateToSentence, Boundaries) {
  EXPECT_EQ(TruncateToSentence("A b. C d.", 100), "A b. C d.");
  EXPECT_EQ(TruncateToSentence("A b. C d.", 6), "A b.");
  EXPECT_EQ(TruncateToSentence("No boundary here", 5), "");
}

TEST(AttributePhrase, PluralizesAndSpaces) {
  EXPECT_EQ(AttributePhrase("brand_name"), "brand names");
  EXPECT_EQ(AttributePhrase("fit_code"), "fit codes");
  EXPECT_EQ(AttributePhrase("glass"), "glass");
}

TEST(PredictMask, UniformTiesToFirstToken) {
  FixedClient c({{"x", "y", "z", "w"}, {0.25, 0.25, 0.25, 0.25}});
  const auto m = PredictMask(c, "t [MASK].");
  EXPECT_EQ(m.token_id, 0u);
  EXPECT_EQ(m.token, "x");
}

TEST(PredictMask, UnnormalizedDistributionIsProtocolError) {
  FixedClient c({{"x", "y"}, {0.25, 0.25}});
  try {
    PredictMask(c, "t [MASK].");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kProtocol);
  }
}

TEST(PredictMask, PromptWithoutMaskRejected) {
  StubLmClient stub;
  EXPECT_THROW(PredictMask(stub, "no slot"), Error);
}

TEST(StubLmClient, DistributionIsValid) {
  StubLmClient stub;
  const auto d = stub.FillMask(kDrillPrompt);
  EXPECT_NO_THROW(ValidateDistribution(d));
  EXPECT_NEAR(std::accumulate(d.probs.begin(), d.probs.end(), 0.0), 1.0, 1e-9);
}

TEST(StubLmClient, DifferentValuesPredictDifferent) {
  StubLmClient stub;
  const auto a = MakeProduct("a", "Lamp", {}, "Acme lamp. Fit codes fc1.");
  const auto b = MakeProduct("b", "Bulb", {}, "Zenith bulb. Fit codes fc2.");
  EXPECT_EQ(FillPrompt(stub, a, b, "fit_code", Polarity::kCompatible).prediction.token,
            "different");
  const auto c = MakeProduct("c", "Bulb", {}, "Zenith bulb. Fit codes fc1.");
  EXPECT_EQ(FillPrompt(stub, a, c, "fit_code", Polarity::kCompatible).prediction.token, "same");
}

TEST(StubLmClient, EmbeddingIsDeterministicAndUnitLength) {
  StubLmClient stub;
  const auto e1 = stub.Embed("their brand names are same.");
  const auto e2 = stub.Embed("their brand names are same.");
  EXPECT_EQ(e1, e2);
  ASSERT_EQ(e1.size(), StubLmClient::kDim);
  EXPECT_NEAR(std::sqrt(std::inner_product(e1.begin(), e1.end(), e1.begin(), 0.0)), 1.0, 1e-12);
  EXPECT_NE(e1, stub.Embed("their brand names are different."));
}

TEST(ProposePromptRule, FillsPayload) {
  StubLmClient stub;
  CandidateRule placeholder;
  placeholder.id = "r1-3";
  placeholder.kind = RuleKind::kPrompt;
  placeholder.attribute = "brand_name";
  placeholder.mu = 0.2;
  const auto r = ProposePromptRule(stub, placeholder, Drill(), Battery(), 1);
  EXPECT_EQ(r.id, "r1-3");
  EXPECT_EQ(r.mu, 0.2);
  ASSERT_TRUE(r.prompt);
  EXPECT_EQ(r.prompt->relation_token, "same");
  EXPECT_EQ(r.prompt->source_pair, "a|b");
  EXPECT_TRUE(r.prompt->positive_polarity);
  EXPECT_EQ(r.prompt->embedding, stub.Embed(r.prompt->rule_text));
  EXPECT_FALSE(ProposePromptRule(stub, placeholder, Drill(), Battery(), -1)
                   .prompt->positive_polarity);
}

TEST(Cosine, KnownAngles) {
  EXPECT_DOUBLE_EQ(Cosine({1, 0}, {1, 0}), 1.0);
  EXPECT_DOUBLE_EQ(Cosine({1, 0}, {0, 1}), 0.0);
  EXPECT_DOUBLE_EQ(Cosine({1, 0}, {-1, 0}), -1.0);
  EXPECT_EQ(Cosine({0, 0}, {1, 0}), 0.0);
  EXPECT_THROW(Cosine({1}, {1, 0}), Error);
}

TEST(CachedLmClient, ForwardsAndMemoizes) {
  auto stub = std::make_shared<StubLmClient>();
  CachedLmClient cached(stub);
  EXPECT_EQ(cached.Embed("x y"), stub->Embed("x y"));
  EXPECT_EQ(cached.FillMask(kDrillPrompt).probs, stub->FillMask(kDrillPrompt).probs);
  EXPECT_EQ(cached.embedding_dim(), stub->embedding_dim());
}

}  // namespace
}  // namespace amrule::prompt_rules
