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
#include "amrule/pipeline.hpp"
#include "amrule/synth.hpp"
#include "test_support.hpp"

namespace amrule::pipeline {
namespace {

namespace fs = std::filesystem;
using annotation::CandidateContext;
using annotation::Decision;
using annotation::Verdict;

class AbstainAll : public annotation::Annotator {
 public:
  Decision Decide(const CandidateContext& c) override {
    Decision d;
    d.rule_id = c.rule.id;
    return d;
  }
};

// Fails once the session is open, before any decision is made.
class FailingDriver : public AnnotationDriver {
 public:
  annotation::RuleSet Annotate(annotation::SessionManager&, int) override {
    throw Error(ErrorCode::kTransport, "annotator went away");
  }
};

class PipelineTest : public ::testing::Test {
 protected:
  void SetUp() override { config_ = testing::WriteWorldAndConfig(testing::SmallWorldConfig(), dir_.path()); }
  annotation::ScriptedAnnotator Scripted() const {
    return annotation::ScriptedAnnotator(synth::LoadPlantedRules(dir_ / "rules_truth.json"));
  }
  fs::path RunDir() const { return dir_ / "run"; }
  RunConfig WithRunDir(const std::string& name) const {
    RunConfig c = config_;
    c.run_dir = name;
    return c;
  }
  testing::TempDir dir_;
  RunConfig config_;
};

TEST_F(PipelineTest, CreateWritesSkeletonAndRefusesOverwrite) {
  auto run = Run::Create(config_);
  for (const char* f : {"config.json", "manifest.json", "encoding.json", "dataset.json",
                        "state.json", "metrics.json"}) {
    EXPECT_TRUE(fs::exists(RunDir() / f)) << f;
  }
  EXPECT_EQ(run->completed_iterations(), 0);
  EXPECT_EQ(run->status().stage, Stage::kIdle);
  try {
    Run::Create(config_);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConflict);
  }
  EXPECT_NO_THROW(Run::Create(config_, true));
}

TEST_F(PipelineTest, SplitsAreDisjointFromThePool) {
  auto run = Run::Create(config_);
  std::set<catalog::PairKey> labelled;
  for (const auto* part : {&run->split().train, &run->split().validation, &run->split().test}) {
    labelled.insert(part->begin(), part->end());
  }
  for (const auto& k : run->unlabeled_pool()) EXPECT_FALSE(labelled.contains(k));
  EXPECT_EQ(run->boost_state().weights.size(), run->split().train.size());
}

TEST_F(PipelineTest, FullRunAcceptsOnlyPlantedRulesAndMintsFreshPairs) {
  auto run = Run::Create(config_);
  auto scripted = Scripted();
  HeadlessDriver driver(scripted);
  run->RunToCompletion(driver);
  EXPECT_TRUE(run->finished());
  EXPECT_EQ(run->status().stage, Stage::kDone);
  for (int t = 1; t <= 3; ++t) {
    EXPECT_TRUE(fs::exists(RunDir() / "iterations" / std::to_string(t) / "model.json"));
    EXPECT_FALSE(fs::exists(RunDir() / "iterations" / (std::to_string(t) + ".partial")));
  }
  const auto truth = synth::LoadPlantedRules(dir_ / "rules_truth.json");
  for (const auto& r : run->accepted_rules()) {
    if (r.kind == RuleKind::kPrompt) continue;
    const bool planted = std::any_of(truth.begin(), truth.end(),
                                     [&](const PlantedRule& p) { return p.Matches(r); });
    EXPECT_TRUE(planted) << r.Describe();
  }
  // Minted pairs are unique, labelled +1 and gone from the pool.
  std::set<catalog::PairKey> minted;
  for (const auto& p : run->minted()) {
    EXPECT_TRUE(minted.insert(p.pair).second);
    EXPECT_EQ(p.label, 1);
    EXPECT_EQ(p.source, catalog::PairSource::kRule);
    EXPECT_TRUE(p.iteration.has_value());
  }
  for (const auto& k : run->unlabeled_pool()) EXPECT_FALSE(minted.contains(k));

  const Json m = run->metrics();
  ASSERT_EQ(m.at("iterations").size(), 3u);
  EXPECT_EQ(m.at("final").at("completed_iterations"), 3);
  EXPECT_EQ(m.at("final").at("minted_total").get<std::size_t>(), run->minted().size());
  EXPECT_EQ(ReadJsonFile(RunDir() / "metrics.json"), m);
  const auto decisions = annotation::LoadDecisions(RunDir() / "decisions.jsonl");
  std::size_t candidates = 0;
  for (const auto& h : m.at("iterations")) candidates += h.at("candidates").get<std::size_t>();
  EXPECT_EQ(decisions.size(), candidates);
}

TEST_F(PipelineTest, ResumedRunMatchesUninterruptedRun) {
  auto scripted = Scripted();
  HeadlessDriver driver(scripted);
  {
    auto run = Run::Create(WithRunDir("straight"));
    run->RunToCompletion(driver);
  }
  {
    auto run = Run::Create(WithRunDir("resumed"));
    run->RunIteration(driver);
  }
  auto reopened = Run::Open(dir_ / "resumed");
  EXPECT_EQ(reopened->completed_iterations(), 1);
  reopened->RunToCompletion(driver);
  EXPECT_EQ(testing::Slurp(dir_ / "straight" / "metrics.json"),
            testing::Slurp(dir_ / "resumed" / "metrics.json"));
  EXPECT_EQ(testing::Slurp(dir_ / "straight" / "state.json"),
            testing::Slurp(dir_ / "resumed" / "state.json"));
}

TEST_F(PipelineTest, OnlyBoostingSkipsDiscovery) {
  auto c = config_;
  c.ablation = Ablation::kOnlyBoosting;
  auto run = Run::Create(c);
  AbstainAll abstain;
  HeadlessDriver driver(abstain);
  run->RunToCompletion(driver);
  EXPECT_TRUE(run->accepted_rules().empty());
  EXPECT_TRUE(run->minted().empty());
  EXPECT_FALSE(fs::exists(RunDir() / "iterations" / "1" / "importances.json"));
  EXPECT_EQ(run->ensemble().size(), 3u);
  const Json m = run->metrics();
  for (const auto& h : m.at("iterations")) EXPECT_EQ(h.at("candidates"), 0);
}

TEST_F(PipelineTest, NoEnsembleProposesOnceAndPredictsWithLatestModel) {
  auto c = config_;
  c.ablation = Ablation::kNoEnsemble;
  auto run = Run::Create(c);
  auto scripted = Scripted();
  HeadlessDriver driver(scripted);
  run->RunToCompletion(driver);
  const Json m = run->metrics();
  const auto& it = m.at("iterations");
  EXPECT_LE(it[0].at("candidates").get<std::size_t>(), c.budget * 3);
  EXPECT_EQ(it[1].at("candidates"), 0);
  EXPECT_EQ(it[2].at("candidates"), 0);
  const auto final_model = run->FinalPredictor();
  ASSERT_EQ(final_model.size(), 1u);
  EXPECT_EQ(final_model.members()[0].model, run->models().back());
}

TEST_F(PipelineTest, EmptyRuleSetMintsNothing) {
  auto run = Run::Create(config_);
  AbstainAll abstain;
  HeadlessDriver driver(abstain);
  run->RunIteration(driver);
  EXPECT_TRUE(run->accepted_rules().empty());
  EXPECT_TRUE(run->minted().empty());
  EXPECT_TRUE(ReadJsonFile(RunDir() / "iterations" / "1" / "matches.json").empty());
  EXPECT_EQ(run->unlabeled_pool().size(), config_.unlabeled_size);
}

TEST_F(PipelineTest, FailedIterationLeavesStateUntouched) {
  auto run = Run::Create(config_);
  const auto before = testing::Slurp(RunDir() / "state.json");
  FailingDriver failing;
  EXPECT_THROW(run->RunIteration(failing), Error);
  EXPECT_EQ(run->completed_iterations(), 0);
  EXPECT_EQ(testing::Slurp(RunDir() / "state.json"), before);
  EXPECT_FALSE(fs::exists(RunDir() / "iterations" / "1"));
}

TEST_F(PipelineTest, IncompatibleSchemaRefused) {
  Run::Create(config_);
  Json manifest = ReadJsonFile(RunDir() / "manifest.json");
  manifest["schema_version"] = kRunSchemaVersion + 1;
  WriteJsonFile(RunDir() / "manifest.json", manifest);
  try {
    Run::Open(RunDir());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSchemaVersion);
  }
}

TEST_F(PipelineTest, PausedSessionResumesWithEarlierDecisions) {
  auto scripted = Scripted();
  HeadlessDriver headless(scripted);
  {
    auto straight = Run::Create(WithRunDir("straight"));
    straight->RunIteration(headless);
  }
  {
    auto run = Run::Create(config_);
    PauseDriver pause;
    EXPECT_THROW(run->RunIteration(pause), Paused);
    EXPECT_EQ(run->completed_iterations(), 0);
    EXPECT_TRUE(fs::exists(RunDir() / "iterations" / "1.partial" / "session.json"));
    // Decide the first candidate by hand, then stop again.
    const auto session = run->sessions().Current();
    if (!session.candidates().empty()) {
      run->sessions().Submit(scripted.Decide(session.candidates().front()));
    }
  }
  auto run = Run::Open(RunDir());
  run->RunIteration(headless);
  EXPECT_EQ(run->completed_iterations(), 1);
  EXPECT_EQ(ReadJsonFile(RunDir() / "iterations" / "1" / "rules.json"),
            ReadJsonFile(dir_ / "straight" / "iterations" / "1" / "rules.json"));
}

TEST(Evaluate, AllPositiveOnBalancedSetIsHalf) {
  learner::MlpModel always({1, 2});
  always.bias(0) << 1.0, 0.0;
  boosting::EnsembleModel e;
  e.Add(std::make_shared<const learner::MlpModel>(always), 1.0);
  EvalSet s;
  s.inputs = Eigen::MatrixXd::Zero(1, 100);
  for (int i = 0; i < 100; ++i) s.labels.push_back(i < 50 ? 1 : -1);
  const auto r = Evaluate(e, s);
  EXPECT_EQ(r.accuracy, 0.5);
  EXPECT_EQ(r.true_positive, 50u);
  EXPECT_EQ(r.false_positive, 50u);
  EXPECT_EQ(r.false_negative, 0u);
}

TEST(Evaluate, HandCountedTwentyPairs) {
  // Sign of the single input decides: weight +1 on class 0, -1 on class 1.
  learner::MlpModel sign({1, 2});
  sign.weight(0) << 1.0, -1.0;
  boosting::EnsembleModel e;
  e.Add(std::make_shared<const learner::MlpModel>(sign), 1.0);
  EvalSet s;
  s.inputs.resize(1, 20);
  for (int i = 0; i < 20; ++i) {
    s.inputs(0, i) = i < 12 ? 1.0 : -1.0;      // 12 predicted +1
    s.labels.push_back(i < 9 || i >= 17 ? 1 : -1);  // 9 + 3 positives
  }
  const auto r = Evaluate(e, s);
  EXPECT_EQ(r.true_positive, 9u);
  EXPECT_EQ(r.false_positive, 3u);
  EXPECT_EQ(r.true_negative, 5u);
  EXPECT_EQ(r.false_negative, 3u);
  EXPECT_DOUBLE_EQ(r.accuracy, 14.0 / 20.0);

  std::vector<int> labels = s.labels;
  EXPECT_EQ(Accuracy(labels, labels), 1.0);
  EXPECT_THROW(Accuracy(std::vector<int>{}, std::vector<int>{}), Error);
}

}  // namespace
}  // namespace amrule::pipeline
