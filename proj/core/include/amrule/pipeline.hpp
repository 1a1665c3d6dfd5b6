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

#ifndef AMRULE_PIPELINE_HPP_
#define AMRULE_PIPELINE_HPP_

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "amrule/annotation.hpp"
#include "amrule/boosting.hpp"
#include "amrule/catalog.hpp"
#include "amrule/featurize.hpp"
#include "amrule/lm_client.hpp"
#include "amrule/mlp.hpp"
#include "amrule/rule.hpp"
#include "amrule/run_config.hpp"

namespace amrule::pipeline {

inline constexpr int kMetricsSchemaVersion = 1;
inline constexpr int kRunSchemaVersion = 1;

enum class Stage { kIdle, kTraining, kDiscovery, kAnnotation, kMatching, kDone };
std::string_view StageName(Stage stage);

struct Status {
  int iteration = 0;  // iteration in progress, or the last one when done
  Stage stage = Stage::kIdle;
  int completed = 0;

  Json ToJson() const;
};

// Obtains a finalized rule set for a session that has been opened on
// `sessions`.
class AnnotationDriver {
 public:
  virtual ~AnnotationDriver() = default;
  virtual annotation::RuleSet Annotate(annotation::SessionManager& sessions,
                                       int iteration) = 0;
};

// Submits one decision per candidate from an annotator, then finalizes.
class HeadlessDriver : public AnnotationDriver {
 public:
  explicit HeadlessDriver(annotation::Annotator& annotator)
      : annotator_(annotator) {}
  annotation::RuleSet Annotate(annotation::SessionManager& sessions,
                               int iteration) override;

 private:
  annotation::Annotator& annotator_;
};

// Waits for an external party (the HTTP service) to finalize the session.
class InteractiveDriver : public AnnotationDriver {
 public:
  annotation::RuleSet Annotate(annotation::SessionManager& sessions,
                               int iteration) override;
};

// Thrown by PauseDriver once the session is persisted.
struct Paused {
  int iteration = 0;
};

// Leaves the session on disk and stops the run; `amrule serve` picks it up.
class PauseDriver : public AnnotationDriver {
 public:
  annotation::RuleSet Annotate(annotation::SessionManager& sessions,
                               int iteration) override;
};

double Accuracy(std::span<const int> predictions, std::span<const int> labels);

// A labelled split materialized as standardized MLP inputs.
struct EvalSet {
  std::vector<catalog::PairKey> keys;
  Eigen::MatrixXd inputs;  // d x n
  std::vector<int> labels;
};

struct EvalResult {
  std::size_t total = 0;
  std::size_t correct = 0;
  double accuracy = 0.0;
  // Confusion counts with +1 as the positive class.
  std::size_t true_positive = 0;
  std::size_t false_positive = 0;
  std::size_t true_negative = 0;
  std::size_t false_negative = 0;
  Json ToJson() const;
};

EvalResult Evaluate(const boosting::EnsembleModel& ensemble, const EvalSet& set);

class Run {
 public:
  // Curates the dataset, splits it, fits the encoder and writes the run
  // directory skeleton. Refuses a directory that already holds a run unless
  // `overwrite` is set.
  static std::unique_ptr<Run> Create(const RunConfig& config,
                                     bool overwrite = false);
  // Reloads a run from its directory alone.
  static std::unique_ptr<Run> Open(const std::filesystem::path& run_dir);

  // One pass of train, weight update, discovery, annotation, matching and
  // ensembling. State is only updated once every stage succeeded.
  void RunIteration(AnnotationDriver& driver);
  void RunToCompletion(AnnotationDriver& driver);

  bool finished() const;
  int completed_iterations() const;
  Status status() const;
  Json metrics() const;

  const RunConfig& config() const { return config_; }
  const std::filesystem::path& run_dir() const { return run_dir_; }
  annotation::SessionManager& sessions() { return sessions_; }
  const featurize::PairEncoder& encoder() const { return encoder_; }
  const catalog::DatasetSplit& split() const { return split_; }
  const std::vector<catalog::LabeledPair>& minted() const { return minted_; }
  const std::vector<catalog::PairKey>& unlabeled_pool() const { return pool_; }
  const std::vector<CandidateRule>& accepted_rules() const { return accepted_; }
  const std::vector<CandidateRule>& rejected_rules() const { return rejected_; }
  const boosting::BoostState& boost_state() const { return boost_; }
  const boosting::EnsembleModel& ensemble() const { return ensemble_; }
  const std::vector<std::shared_ptr<const learner::MlpModel>>& models() const {
    return models_;
  }

  // The predictor the run reports: the alpha-weighted ensemble, or the
  // latest model alone under no-ensemble.
  boosting::EnsembleModel FinalPredictor() const;
  EvalSet MakeEvalSet(std::span<const catalog::PairKey> keys) const;
  const EvalSet& test_set() const { return test_set_; }
  const EvalSet& validation_set() const { return validation_set_; }

  // Label of a curated pair.
  int LabelOf(const catalog::PairKey& key) const;

 private:
  Run() = default;

  void LoadInputs();
  void BuildEvalSets();
  void WriteState() const;
  Json BuildMetricsJson(const std::vector<Json>& history) const;
  void SetStage(int iteration, Stage stage);
  featurize::PairEncoding EncodingOf(const catalog::PairKey& key) const;
  std::filesystem::path IterationDir(int t, bool partial) const;
  int RecoveredPlanted(std::span<const CandidateRule> accepted) const;

  RunConfig config_;
  std::filesystem::path run_dir_;
  catalog::Catalog anchors_;
  catalog::Catalog recs_;
  std::vector<PlantedRule> truth_;
  featurize::PairEncoder encoder_;
  std::map<catalog::PairKey, catalog::LabeledPair> curated_;
  catalog::DatasetSplit split_;
  EvalSet test_set_;
  EvalSet validation_set_;
  std::shared_ptr<prompt_rules::LmClient> lm_;
  annotation::SessionManager sessions_;

  // Iteration state, replaced wholesale when an iteration commits.
  boosting::BoostState boost_;
  std::vector<std::shared_ptr<const learner::MlpModel>> models_;
  boosting::EnsembleModel ensemble_;
  std::vector<catalog::LabeledPair> minted_;
  std::vector<catalog::PairKey> pool_;
  std::vector<CandidateRule> accepted_;
  std::vector<CandidateRule> rejected_;
  std::set<std::string> seen_keys_;
  std::vector<Json> history_;

  mutable std::mutex status_mu_;
  Status status_;
  Json metrics_json_;
};

}  // namespace amrule::pipeline

#endif  // AMRULE_PIPELINE_HPP_
