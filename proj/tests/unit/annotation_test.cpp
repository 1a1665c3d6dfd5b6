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

#include <thread>

#include "amrule/annotation.hpp"
#include "amrule/error.hpp"
#include "test_support.hpp"

namespace amrule::annotation {
namespace {

CandidateContext Candidate(const std::string& id, RuleKind kind, const std::string& attr = "brand") {
  CandidateContext c;
  c.rule.id = id;
  c.rule.kind = kind;
  c.rule.attribute = attr;
  if (kind == RuleKind::kRange) c.rule.rec_attribute = "wattage";
  c.rule.mu = 0.1;
  return c;
}

std::vector<CandidateContext> ExactCandidates(int n) {
  std::vector<CandidateContext> out;
  for (int i = 1; i <= n; ++i) {
    out.push_back(Candidate("r1-" + std::to_string(i), RuleKind::kExactMatch,
                            "attr" + std::to_string(i)));
  }
  return out;
}

Decision Make(const std::string& id, Verdict v) {
  Decision d;
  d.rule_id = id;
  d.verdict = v;
  return d;
}

ErrorCode CodeOf(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kIo;
}

TEST(SessionManager, OpenListsEveryCandidatePending) {
  SessionManager m(10);
  const auto s = m.Open(1, ExactCandidates(10));
  EXPECT_EQ(s.PendingIds().size(), 10u);
  EXPECT_EQ(s.state(), SessionState::kOpen);
}

TEST(SessionManager, EmptySessionFinalizesImmediately) {
  SessionManager m(10);
  const auto s = m.Open(1, {});
  EXPECT_EQ(s.state(), SessionState::kFinalized);
  EXPECT_TRUE(m.Finalize().accepted.empty());
}

TEST(SessionManager, SecondOpenConflicts) {
  SessionManager m(10);
  m.Open(1, ExactCandidates(2));
  EXPECT_EQ(CodeOf([&] { m.Open(2, ExactCandidates(2)); }), ErrorCode::kConflict);
}

TEST(SessionManager, OverBudgetRejected) {
  SessionManager m(3);
  EXPECT_EQ(CodeOf([&] { m.Open(1, ExactCandidates(4)); }), ErrorCode::kValidation);
}

TEST(SessionManager, SevenAcceptedThreeAbstained) {
  SessionManager m(10);
  m.Open(1, ExactCandidates(10));
  for (int i = 1; i <= 10; ++i) {
    m.Submit(Make("r1-" + std::to_string(i), i <= 7 ? Verdict::kExactMatch : Verdict::kAbstain));
  }
  const auto rs = m.Finalize();
  EXPECT_EQ(rs.accepted.size(), 7u);
  EXPECT_EQ(rs.rejected.size(), 3u);
  EXPECT_EQ(rs.accepted[0].id, "r1-1");
}

TEST(SessionManager, AllAbstainGivesEmptySet) {
  SessionManager m(10);
  m.Open(1, ExactCandidates(3));
  for (int i = 1; i <= 3; ++i) m.Submit(Make("r1-" + std::to_string(i), Verdict::kAbstain));
  EXPECT_TRUE(m.Finalize().accepted.empty());
}

TEST(SessionManager, FinalizeIsIdempotent) {
  SessionManager m(10);
  m.Open(1, ExactCandidates(1));
  m.Submit(Make("r1-1", Verdict::kExactMatch));
  const auto a = m.Finalize();
  const auto b = m.Finalize();
  ASSERT_EQ(a.accepted.size(), b.accepted.size());
  EXPECT_EQ(a.accepted[0].id, b.accepted[0].id);
}

TEST(SessionManager, FinalizeWithPendingIsIncomplete) {
  SessionManager m(10);
  m.Open(1, ExactCandidates(2));
  m.Submit(Make("r1-1", Verdict::kAbstain));
  EXPECT_EQ(CodeOf([&] { m.Finalize(); }), ErrorCode::kIncompleteSession);
}

TEST(SessionManager, UnknownRuleIsNotFound) {
  SessionManager m(10);
  m.Open(1, ExactCandidates(2));
  EXPECT_EQ(CodeOf([&] { m.Submit(Make("nope", Verdict::kAbstain)); }), ErrorCode::kNotFound);
}

TEST(SessionManager, ResubmissionReplacesVerdict) {
  SessionManager m(10);
  m.Open(1, ExactCandidates(1));
  m.Submit(Make("r1-1", Verdict::kExactMatch));
  m.Submit(Make("r1-1", Verdict::kAbstain));
  EXPECT_EQ(m.Finalize().rejected.size(), 1u);
}

TEST(SessionManager, PersistHookSeesEveryMutation) {
  int calls = 0;
  SessionManager m(10, [&](const AnnotationSession&) { ++calls; });
  m.Open(1, ExactCandidates(1));
  m.Submit(Make("r1-1", Verdict::kAbstain));
  m.Finalize();
  EXPECT_EQ(calls, 3);
}

TEST(SessionManager, WaitForFinalizeWakesOnFinalize) {
  SessionManager m(10);
  m.Open(4, ExactCandidates(1));
  std::thread t([&] {
    m.Submit(Make("r1-1", Verdict::kExactMatch));
    m.Finalize();
  });
  const auto rs = m.WaitForFinalize(4);
  t.join();
  EXPECT_EQ(rs.accepted.size(), 1u);
}

TEST(SessionManager, CancelReleasesWaiter) {
  SessionManager m(10);
  m.Open(1, ExactCandidates(1));
  std::thread t([&] { m.Cancel(); });
  EXPECT_EQ(CodeOf([&] { m.WaitForFinalize(1); }), ErrorCode::kConflict);
  t.join();
}

TEST(Decisions, RangeBindsDirection) {
  auto c = Candidate("r1-1", RuleKind::kRange, "max_wattage");
  Decision d = Make("r1-1", Verdict::kRange);
  d.direction = RangeDirection::kGe;
  const auto bound = BindDecision(c.rule, d);
  EXPECT_EQ(bound.direction, RangeDirection::kGe);
  EXPECT_EQ(bound.Describe(), "max_wattage >= wattage");
}

TEST(Decisions, RangeWithoutDirectionRejected) {
  auto c = Candidate("r1-1", RuleKind::kRange, "max_wattage");
  EXPECT_EQ(CodeOf([&] { ValidateDecision(c.rule, Make("r1-1", Verdict::kRange)); }),
            ErrorCode::kValidation);
}

TEST(Decisions, ExactMatchOnPromptRejected) {
  auto c = Candidate("r1-1", RuleKind::kPrompt);
  EXPECT_EQ(CodeOf([&] { ValidateDecision(c.rule, Make("r1-1", Verdict::kExactMatch)); }),
            ErrorCode::kValidation);
  EXPECT_NO_THROW(ValidateDecision(c.rule, Make("r1-1", Verdict::kAccept)));
  EXPECT_NO_THROW(ValidateDecision(c.rule, Make("r1-1", Verdict::kAbstain)));
}

TEST(Decisions, ContainSideMustAgree) {
  auto c = Candidate("r1-1", RuleKind::kContain, "adapter_type");
  c.rule.side = Side::kAnchor;
  Decision d = Make("r1-1", Verdict::kContain);
  d.side = Side::kRec;
  EXPECT_THROW(ValidateDecision(c.rule, d), Error);
  d.side = Side::kAnchor;
  EXPECT_NO_THROW(ValidateDecision(c.rule, d));
}

TEST(Decisions, JsonAndFileRoundTrip) {
  testing::TempDir dir;
  Decision d = Make("r2-3", Verdict::kRange);
  d.direction = RangeDirection::kLe;
  d.annotator = "alice";
  const auto j = d.ToJson();
  EXPECT_EQ(j.at("params").at("direction"), "le");
  EXPECT_TRUE(Decision::FromJson(j).SameVerdict(d));
  const std::vector<Decision> ds = {d, Make("r2-4", Verdict::kAbstain)};
  AppendDecisions(dir / "d.jsonl", ds);
  const auto back = LoadDecisions(dir / "d.jsonl");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_TRUE(back[0].SameVerdict(d));
  EXPECT_EQ(back[0].annotator, "alice");
}

TEST(Decisions, UnknownVerdictIsValidationError) {
  EXPECT_EQ(CodeOf([] { Decision::FromJson({{"rule_id", "x"}, {"verdict", "maybe"}}); }),
            ErrorCode::kValidation);
}

TEST(AnnotationSession, JsonRoundTripKeepsDecisions) {
  AnnotationSession s(2, ExactCandidates(3));
  s.Submit(Make("r1-2", Verdict::kExactMatch));
  const auto back = AnnotationSession::FromJson(Json::parse(s.ToJson().dump()));
  EXPECT_EQ(back.iteration(), 2);
  EXPECT_EQ(back.PendingIds(), (std::vector<std::string>{"r1-1", "r1-3"}));
  EXPECT_EQ(back.state(), SessionState::kOpen);
}

TEST(ScriptedAnnotator, AcceptsPlantedRulesOnly) {
  PlantedRule brand;
  brand.kind = RuleKind::kExactMatch;
  brand.attribute = "brand";
  PlantedRule watt;
  watt.kind = RuleKind::kRange;
  watt.attribute = "max_wattage";
  watt.rec_attribute = "wattage";
  watt.direction = RangeDirection::kGe;
  ScriptedAnnotator a({brand, watt});

  EXPECT_EQ(a.Decide(Candidate("r1", RuleKind::kExactMatch, "brand")).verdict, Verdict::kExactMatch);
  EXPECT_EQ(a.Decide(Candidate("r2", RuleKind::kExactMatch, "color")).verdict, Verdict::kAbstain);
  const auto r = a.Decide(Candidate("r3", RuleKind::kRange, "max_wattage"));
  EXPECT_EQ(r.verdict, Verdict::kRange);
  EXPECT_EQ(r.direction, RangeDirection::kGe);

  auto p = Candidate("r4", RuleKind::kPrompt, "brand");
  p.rule.prompt = PromptPayload{};
  p.rule.prompt->relation_token = "same";
  EXPECT_EQ(a.Decide(p).verdict, Verdict::kAccept);
  p.rule.prompt->relation_token = "different";
  EXPECT_EQ(a.Decide(p).verdict, Verdict::kAbstain);
}

TEST(ReplayAnnotator, MissingDecisionIsNotFound) {
  ReplayAnnotator a({Make("r1-1", Verdict::kAbstain)});
  EXPECT_EQ(a.Decide(Candidate("r1-1", RuleKind::kExactMatch)).verdict, Verdict::kAbstain);
  EXPECT_EQ(CodeOf([&] { a.Decide(Candidate("r1-2", RuleKind::kExactMatch)); }),
            ErrorCode::kNotFound);
}

}  // namespace
}  // namespace amrule::annotation
