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

#include "amrule/pipeline.hpp"

#include <algorithm>

#include <spdlog/spdlog.h>

#include "amrule/decision_tree.hpp"
#include "amrule/error.hpp"
#include "amrule/matching.hpp"
#include "amrule/prompt_rules.hpp"
#include "amrule/synth.hpp"
#include "amrule/tree_rules.hpp"

namespace amrule::pipeline {

namespace fs = std::filesystem;
using catalog::LabeledPair;
using catalog::PairKey;

std::string_view StageName(Stage stage) {
  switch (stage) {
    case Stage::kIdle:
      return "idle";
    case Stage::kTraining:
      return "training";
    case Stage::kDiscovery:
      return "discovery";
    case Stage::kAnnotation:
      return "annotation";
    case Stage::kMatching:
      return "matching";
    case Stage::kDone:
      return "done";
  }
  return "idle";
}

Json Status::ToJson() const {
  return {{"iteration", iteration},
          {"stage", StageName(stage)},
          {"completed_iterations", completed}};
}

annotation::RuleSet HeadlessDriver::Annotate(annotation::SessionManager& sessions,
                                             int iteration) {
  const auto session = sessions.Current();
  if (session.iteration() != iteration) {
    throw Error(ErrorCode::kConflict, "session belongs to another iteration");
  }
  if (session.state() == annotation::SessionState::kOpen) {
    for (const auto& c : session.candidates()) {
      if (session.decisions().contains(c.rule.id)) continue;
      sessions.Submit(annotator_.Decide(c));
    }
  }
  return sessions.Finalize();
}

annotation::RuleSet InteractiveDriver::Annotate(
    annotation::SessionManager& sessions, int iteration) {
  return sessions.WaitForFinalize(iteration);
}

annotation::RuleSet PauseDriver::Annotate(annotation::SessionManager& sessions,
                                          int iteration) {
  const auto session = sessions.Current();
  if (session.state() == annotation::SessionState::kFinalized) {
    return *session.result();
  }
  throw Paused{iteration};
}

double Accuracy(std::span<const int> predictions, std::span<const int> labels) {
  if (predictions.size() != labels.size()) {
    throw Error(ErrorCode::kShape, "predictions and labels disagree in length");
  }
  if (labels.empty()) {
    throw Error(ErrorCode::kEmptyDataset, "cannot evaluate an empty split");
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    correct += predictions[i] == labels[i] ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

Json EvalResult::ToJson() const {
  return {{"total", total},
          {"correct", correct},
          {"accuracy", accuracy},
          {"confusion",
           {{"tp", true_positive},
            {"fp", false_positive},
            {"tn", true_negative},
            {"fn", false_negative}}}};
}

EvalResult Evaluate(const boosting::EnsembleModel& ensemble, const EvalSet& set) {
  if (set.labels.empty()) {
    throw Error(ErrorCode::kEmptyDataset, "cannot evaluate an empty split");
  }
  const auto preds = ensemble.PredictBatch(set.inputs);
  EvalResult r;
  r.total = set.labels.size();
  for (std::size_t i = 0; i < r.total; ++i) {
    const bool pos = preds[i] > 0;
    if (set.labels[i] > 0) {
      ++(pos ? r.true_positive : r.false_negative);
    } else {
      ++(pos ? r.false_positive : r.true_negative);
    }
  }
  r.correct = r.true_positive + r.true_negative;
  r.accuracy = static_cast<double>(r.correct) / static_cast<double>(r.total);
  return r;
}

namespace {

constexpr char kVersion[] = "0.1.0";

std::uint64_t IterationSeed(std::uint64_t seed, int t) {
  return seed * 1000003ULL + static_cast<std::uint64_t>(t) * 7919ULL;
}

Json PairsToJson(std::span<const LabeledPair> pairs) {
  Json arr = Json::array();
  for (const auto& p : pairs) arr.push_back(catalog::ToJson(p));
  return arr;
}

std::vector<LabeledPair> PairsFromJson(const Json& arr) {
  std::vector<LabeledPair> out;
  for (const auto& j : arr) out.push_back(catalog::LabeledPairFromJson(j));
  return out;
}

Json KeysToJson(std::span<const PairKey> keys) {
  Json arr = Json::array();
  for (const auto& k : keys) arr.push_back({k.anchor_id, k.rec_id});
  return arr;
}

std::vector<PairKey> KeysFromJson(const Json& arr) {
  std::vector<PairKey> out;
  for (const auto& k : arr) {
    out.push_back({k.at(0).get<std::string>(), k.at(1).get<std::string>()});
  }
  return out;
}

Json RulesToJson(std::span<const CandidateRule> rules) {
  Json arr = Json::array();
  for (const auto& r : rules) arr.push_back(r.ToJson());
  return arr;
}

std::vector<CandidateRule> RulesFromJson(const Json& arr) {
  std::vector<CandidateRule> out;
  for (const auto& r : arr) out.push_back(CandidateRule::FromJson(r));
  return out;
}

}  // namespace

fs::path Run::IterationDir(int t, bool partial) const {
  return run_dir_ / "iterations" / (std::to_string(t) + (partial ? ".partial" : ""));
}

void Run::LoadInputs() {
  anchors_ = catalog::LoadCatalog(config_.catalog_anchor);
  recs_ = catalog::LoadCatalog(config_.catalog_rec);
  if (!config_.truth.empty()) truth_ = synth::LoadPlantedRules(config_.truth);
  std::shared_ptr<prompt_rules::LmClient> inner;
  if (config_.lm_url.empty()) {
    inner = std::make_shared<prompt_rules::StubLmClient>();
  } else {
    prompt_rules::HttpLmOptions opts;
    opts.retries = config_.lm_retries;
    inner = std::make_shared<prompt_rules::HttpLmClient>(config_.lm_url, opts);
  }
  lm_ = std::make_shared<prompt_rules::CachedLmClient>(inner);
  sessions_.set_budget(
      config_.ablation == Ablation::kNoEnsemble
          ? config_.budget * static_cast<std::size_t>(config_.iterations)
          : config_.budget);
}

featurize::PairEncoding Run::EncodingOf(const PairKey& key) const {
  return encoder_.Encode(anchors_.Get(key.anchor_id), recs_.Get(key.rec_id));
}

int Run::LabelOf(const PairKey& key) const {
  auto it = curated_.find(key);
  if (it == curated_.end()) {
    throw Error(ErrorCode::kNotFound, "pair " + key.ToString() + " is not curated");
  }
  return it->second.label;
}

EvalSet Run::MakeEvalSet(std::span<const PairKey> keys) const {
  EvalSet s;
  s.keys.assign(keys.begin(), keys.end());
  s.inputs.resize(static_cast<Eigen::Index>(encoder_.layout().size()),
                  static_cast<Eigen::Index>(keys.size()));
  for (std::size_t i = 0; i < keys.size(); ++i) {
    encoder_.Standardize(EncodingOf(keys[i]),
                         std::span<double>(s.inputs.col(static_cast<Eigen::Index>(i)).data(),
                                           encoder_.layout().size()));
    s.labels.push_back(LabelOf(keys[i]));
  }
  return s;
}

void Run::BuildEvalSets() {
  test_set_ = MakeEvalSet(split_.test);
  validation_set_ = MakeEvalSet(split_.validation);
}

std::unique_ptr<Run> Run::Create(const RunConfig& input, bool overwrite) {
  input.Validate();
  std::unique_ptr<Run> run(new Run());
  RunConfig& config = run->config_;
  config = input;
  config.catalog_anchor = fs::absolute(input.Resolve(input.catalog_anchor));
  config.catalog_rec = fs::absolute(input.Resolve(input.catalog_rec));
  config.copurchase = fs::absolute(input.Resolve(input.copurchase));
  if (!input.truth.empty()) config.truth = fs::absolute(input.Resolve(input.truth));
  if (!input.decisions.empty()) {
    config.decisions = fs::absolute(input.Resolve(input.decisions));
  }
  config.run_dir = fs::absolute(input.Resolve(input.run_dir));
  config.base_dir.clear();
  run->run_dir_ = config.run_dir;

  if (fs::exists(run->run_dir_ / "manifest.json")) {
    if (!overwrite) {
      throw Error(ErrorCode::kConflict,
                  run->run_dir_.string() + " already holds a run");
    }
    fs::remove_all(run->run_dir_);
  }
  fs::create_directories(run->run_dir_ / "iterations");

  run->LoadInputs();
  const auto log = catalog::LoadCoPurchase(config.copurchase);
  const auto weak = catalog::BuildWeakDataset(
      run->anchors_, run->recs_, log,
      {config.min_count, config.neg_ratio, config.seed});
  run->split_ = catalog::SplitDataset(weak, config.ratios, config.seed,
                                      config.EffectiveMinCountTest());
  std::vector<PairKey> curated_keys;
  for (const auto& p : weak) {
    run->curated_[p.pair] = p;
    curated_keys.push_back(p.pair);
  }
  run->split_.holdout_unlabeled = catalog::SampleUnlabeledPool(
      run->anchors_, run->recs_, log, config.min_count, curated_keys,
      config.unlabeled_size, config.seed);
  run->pool_ = run->split_.holdout_unlabeled;
  run->encoder_ = featurize::PairEncoder::Fit(run->anchors_, run->recs_,
                                              run->split_.train);
  for (const auto& w : run->encoder_.warnings()) spdlog::warn("{}", w);
  run->boost_ = boosting::BoostState::Create(run->split_.train.size());

  WriteJsonFile(run->run_dir_ / "config.json", config.ToJson());
  WriteJsonFile(run->run_dir_ / "manifest.json",
                {{"schema_version", kRunSchemaVersion},
                 {"metrics_schema_version", kMetricsSchemaVersion},
                 {"amrule_version", kVersion},
                 {"seed", config.seed},
                 {"weight_init", "uniform(-1/sqrt(fan_in), 1/sqrt(fan_in))"},
                 {"label_mapping", "class 0 = +1, class 1 = -1"}});
  WriteJsonFile(run->run_dir_ / "encoding.json", run->encoder_.ToJson());
  WriteJsonFile(run->run_dir_ / "dataset.json",
                {{"pairs", PairsToJson(weak)},
                 {"split", catalog::ToJson(run->split_)}});
  run->BuildEvalSets();
  run->WriteState();
  run->metrics_json_ = run->BuildMetricsJson(run->history_);
  WriteJsonFile(run->run_dir_ / "metrics.json", run->metrics_json_);
  spdlog::info("run created: {} train / {} validation / {} test / {} unlabeled",
               run->split_.train.size(), run->split_.validation.size(),
               run->split_.test.size(), run->pool_.size());
  return run;
}

std::unique_ptr<Run> Run::Open(const fs::path& dir) {
  std::unique_ptr<Run> run(new Run());
  run->run_dir_ = fs::absolute(dir);
  const Json manifest = ReadJsonFile(run->run_dir_ / "manifest.json");
  if (manifest.value("schema_version", 0) != kRunSchemaVersion ||
      manifest.value("metrics_schema_version", 0) != kMetricsSchemaVersion) {
    throw Error(ErrorCode::kSchemaVersion,
                "run directory was written by an incompatible version");
  }
  const Json metrics = ReadJsonFile(run->run_dir_ / "metrics.json");
  if (metrics.value("schema_version", 0) != kMetricsSchemaVersion) {
    throw Error(ErrorCode::kSchemaVersion, "metrics.json schema mismatch");
  }
  run->config_ = RunConfig::FromJson(ReadJsonFile(run->run_dir_ / "config.json"));
  run->config_.run_dir = run->run_dir_;
  run->LoadInputs();
  run->encoder_ =
      featurize::PairEncoder::FromJson(ReadJsonFile(run->run_dir_ / "encoding.json"));
  const Json dataset = ReadJsonFile(run->run_dir_ / "dataset.json");
  for (auto& p : PairsFromJson(dataset.at("pairs"))) run->curated_[p.pair] = p;
  run->split_ = catalog::DatasetSplitFromJson(dataset.at("split"));

  const Json state = ReadJsonFile(run->run_dir_ / "state.json");
  const int completed = state.at("completed").get<int>();
  run->boost_.weights = state.at("weights").get<std::vector<double>>();
  run->boost_.iteration = completed;
  for (const auto& r : state.at("records")) {
    run->boost_.records.push_back(boosting::IterationRecord::FromJson(r));
  }
  run->minted_ = PairsFromJson(state.at("minted"));
  run->pool_ = KeysFromJson(state.at("pool"));
  run->accepted_ = RulesFromJson(state.at("accepted"));
  run->rejected_ = RulesFromJson(state.at("rejected"));
  for (const auto& k : state.at("seen_keys")) {
    run->seen_keys_.insert(k.get<std::string>());
  }
  for (const auto& h : state.at("history")) run->history_.push_back(h);
  for (int t = 1; t <= completed; ++t) {
    auto model = std::make_shared<const learner::MlpModel>(learner::MlpModel::FromJson(
        ReadJsonFile(run->IterationDir(t, false) / "model.json")));
    run->models_.push_back(model);
    const auto& rec = run->boost_.records.at(static_cast<std::size_t>(t - 1));
    if (rec.in_ensemble) run->ensemble_.Add(model, rec.alpha);
  }
  // A committed directory without matching state is demoted so its session
  // can be restored on the rerun.
  const fs::path orphan = run->IterationDir(completed + 1, false);
  if (fs::exists(orphan)) {
    const fs::path partial = run->IterationDir(completed + 1, true);
    fs::remove_all(partial);
    fs::rename(orphan, partial);
  }
  run->BuildEvalSets();
  run->metrics_json_ = run->BuildMetricsJson(run->history_);
  {
    std::lock_guard lock(run->status_mu_);
    run->status_.completed = completed;
    run->status_.iteration = completed;
    run->status_.stage =
        completed >= run->config_.iterations ? Stage::kDone : Stage::kIdle;
  }
  return run;
}

void Run::WriteState() const {
  Json records = Json::array();
  for (const auto& r : boost_.records) records.push_back(r.ToJson());
  WriteJsonFile(run_dir_ / "state.json",
                {{"completed", static_cast<int>(history_.size())},
                 {"weights", boost_.weights},
                 {"records", records},
                 {"minted", PairsToJson(minted_)},
                 {"pool", KeysToJson(pool_)},
                 {"accepted", RulesToJson(accepted_)},
                 {"rejected", RulesToJson(rejected_)},
                 {"seen_keys", seen_keys_},
                 {"history", history_}});
}

Json Run::BuildMetricsJson(const std::vector<Json>& history) const {
  Json curve = Json::array();
  for (const auto& h : history) {
    curve.push_back({{"iteration", h.at("iteration")},
                     {"test_accuracy", h.at("test_accuracy")},
                     {"minted", h.at("minted")}});
  }
  Json j = {{"schema_version", kMetricsSchemaVersion},
            {"ablation", AblationName(config_.ablation)},
            {"seed", config_.seed},
            {"iterations_planned", config_.iterations},
            {"iterations", history},
            {"accuracy_curve", curve}};
  if (!history.empty()) {
    const auto& last = history.back();
    Json final_block = {
        {"completed_iterations", history.size()},
        {"test_accuracy", last.at("test_accuracy")},
        {"validation_accuracy", last.at("validation_accuracy")},
        {"iteration1_test_accuracy", history.front().at("model_test_accuracy")},
        {"accepted_rules", last.at("accepted_total")},
        {"minted_total", last.at("minted_total")}};
    if (!truth_.empty()) {
      final_block["planted_recovered"] = last.at("planted_recovered");
      final_block["planted_total"] = truth_.size();
    }
    j["final"] = final_block;
  }
  return j;
}

int Run::RecoveredPlanted(std::span<const CandidateRule> accepted) const {
  int count = 0;
  for (const auto& p : truth_) {
    const bool hit = std::any_of(accepted.begin(), accepted.end(), [&](const auto& r) {
      if (r.kind == RuleKind::kPrompt) {
        return p.kind == RuleKind::kExactMatch && r.attribute == p.attribute;
      }
      if (!p.Matches(r)) return false;
      return p.kind != RuleKind::kRange || r.direction == p.direction;
    });
    count += hit ? 1 : 0;
  }
  return count;
}

void Run::SetStage(int iteration, Stage stage) {
  std::lock_guard lock(status_mu_);
  status_.iteration = iteration;
  status_.stage = stage;
}

Status Run::status() const {
  std::lock_guard lock(status_mu_);
  return status_;
}

Json Run::metrics() const {
  std::lock_guard lock(status_mu_);
  return metrics_json_;
}

bool Run::finished() const { return completed_iterations() >= config_.iterations; }

int Run::completed_iterations() const { return static_cast<int>(history_.size()); }

boosting::EnsembleModel Run::FinalPredictor() const {
  if (models_.empty()) {
    throw Error(ErrorCode::kEmptyDataset, "no completed iterations");
  }
  if (config_.ablation == Ablation::kNoEnsemble) {
    boosting::EnsembleModel latest;
    latest.Add(models_.back(), 1.0);
    return latest;
  }
  if (ensemble_.empty()) {
    throw Error(ErrorCode::kEmptyDataset, "every model was dropped from the ensemble");
  }
  return ensemble_;
}

void Run::RunToCompletion(AnnotationDriver& driver) {
  while (!finished()) RunIteration(driver);
  SetStage(completed_iterations(), Stage::kDone);
}

void Run::RunIteration(AnnotationDriver& driver) {
  const int t = completed_iterations() + 1;
  if (t > config_.iterations) {
    throw Error(ErrorCode::kConflict, "run already completed its iterations");
  }
  const std::uint64_t seed_t = IterationSeed(config_.seed, t);
  const bool no_ensemble = config_.ablation == Ablation::kNoEnsemble;
  const bool discover = config_.ablation != Ablation::kOnlyBoosting &&
                        !(no_ensemble && t > 1);
  const std::size_t budget =
      no_ensemble ? config_.budget * static_cast<std::size_t>(config_.iterations)
                  : config_.budget;
  const std::size_t cap =
      no_ensemble ? config_.cap * static_cast<std::size_t>(config_.iterations)
                  : config_.cap;

  const fs::path partial = IterationDir(t, true);
  std::optional<Json> prior_session;
  if (fs::exists(partial / "session.json")) {
    prior_session = ReadJsonFile(partial / "session.json");
  }
  fs::remove_all(partial);
  fs::create_directories(partial);

  // Training on D_t = D_l plus every minted pair.
  SetStage(t, Stage::kTraining);
  const auto& dl = split_.train;
  std::vector<int> dl_labels;
  for (const auto& k : dl) dl_labels.push_back(LabelOf(k));
  const std::size_t d = encoder_.layout().size();
  const std::size_t n_train = dl.size() + minted_.size();
  learner::Dataset train;
  train.inputs.resize(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(n_train));
  std::vector<featurize::PairEncoding> dl_rows;
  dl_rows.reserve(dl.size());
  for (std::size_t i = 0; i < n_train; ++i) {
    const PairKey& key = i < dl.size() ? dl[i] : minted_[i - dl.size()].pair;
    auto enc = EncodingOf(key);
    encoder_.Standardize(enc, std::span<double>(
                                  train.inputs.col(static_cast<Eigen::Index>(i)).data(), d));
    if (i < dl.size()) {
      train.labels.push_back(dl_labels[i]);
      dl_rows.push_back(std::move(enc));
    } else {
      train.labels.push_back(minted_[i - dl.size()].label);
    }
  }
  learner::Dataset validation{validation_set_.inputs, validation_set_.labels};
  learner::TrainConfig tc = config_.train;
  tc.seed = seed_t;
  std::vector<double> rates{tc.learning_rate};
  if (config_.lr_search) rates.assign(std::begin(learner::kLearningRateGrid),
                                      std::end(learner::kLearningRateGrid));
  std::optional<learner::TrainResult> best;
  for (double lr : rates) {
    tc.learning_rate = lr;
    auto result = learner::TrainWeakModel(train, validation, tc);
    if (!best || result.best_loss < best->best_loss) best = std::move(result);
  }
  auto model = std::make_shared<const learner::MlpModel>(std::move(best->model));

  // Weighted error, coefficient and weight update over D_l.
  const Eigen::MatrixXd dl_inputs =
      train.inputs.leftCols(static_cast<Eigen::Index>(dl.size()));
  std::vector<int> model_preds;
  for (const auto& p : learner::PredictBatch(*model, dl_inputs)) {
    model_preds.push_back(p.label);
  }
  const auto err = boosting::ComputeWeightedError(boost_.weights, model_preds, dl_labels);
  const double alpha = boosting::ModelCoefficient(err.clipped);
  const bool in_ensemble = !(config_.drop_weak_models && err.clipped >= 0.5);
  boosting::EnsembleModel next_ensemble = ensemble_;
  if (in_ensemble) next_ensemble.Add(model, alpha);
  std::vector<int> indicator_preds = model_preds;
  if (config_.error_source == ErrorSource::kEnsemble && !next_ensemble.empty()) {
    indicator_preds = next_ensemble.PredictBatch(dl_inputs);
  }
  auto next_weights =
      boosting::UpdateWeights(boost_.weights, indicator_preds, dl_labels, alpha);

  // Rule discovery on the top-n large-error instances.
  std::vector<annotation::CandidateContext> contexts;
  std::vector<std::string> warnings;
  if (discover) {
    SetStage(t, Stage::kDiscovery);
    const auto selection = boosting::SelectLargeError(next_weights, config_.top_n);
    if (selection.truncated) warnings.push_back("top_n truncated to |D_l|");
    std::vector<featurize::PairEncoding> rows;
    std::vector<int> labels;
    for (auto id : selection.ids) {
      rows.push_back(dl_rows[id]);
      labels.push_back(dl_labels[id]);
    }
    int depth = config_.tree_depth;
    const auto tree =
        depth == 0 ? tree_rules::FitTreeWithDepthSearch(rows, labels, seed_t, 3, 10, &depth)
                   : tree_rules::FitTree(rows, labels, depth, seed_t);
    std::unique_ptr<tree_rules::Evaluator> mlp_eval;
    const tree_rules::Evaluator* evaluator = &tree;
    if (config_.importance_target == ImportanceTarget::kMlp) {
      mlp_eval = std::make_unique<tree_rules::MlpEvaluator>(*model, encoder_);
      evaluator = mlp_eval.get();
    }
    const auto importances = tree_rules::PermutationImportance(
        *evaluator, rows, labels, config_.repeats, seed_t);
    tree_rules::ProposalOptions opts;
    opts.budget = budget;
    opts.sparse_threshold = config_.sparse_threshold;
    opts.route_sparse_to_prompt = config_.ablation != Ablation::kOnlyAttributes;
    opts.prompt_only = config_.ablation == Ablation::kOnlyDescription;
    opts.iteration = t;
    auto proposal = tree_rules::ProposeTreeRules(
        importances, encoder_.layout(), anchors_.schema(), recs_.schema(), opts,
        seen_keys_);
    for (auto& w : proposal.warnings) warnings.push_back(std::move(w));

    // Example pairs shown with every candidate: the three heaviest.
    auto example = [&](std::size_t id) {
      const auto& key = dl[id];
      return Json{{"anchor", catalog::ProductToJson(anchors_.Get(key.anchor_id),
                                                    &anchors_.schema())},
                  {"rec", catalog::ProductToJson(recs_.Get(key.rec_id),
                                                 &recs_.schema())},
                  {"label", dl_labels[id]},
                  {"weight", next_weights[id]}};
    };
    std::vector<Json> top_examples;
    for (std::size_t k = 0; k < std::min<std::size_t>(3, selection.ids.size()); ++k) {
      top_examples.push_back(example(selection.ids[k]));
    }
    // Prompt rules come from the heaviest positive pair that has
    // descriptions, else the heaviest pair of either label.
    std::vector<std::size_t> prompt_order;
    for (auto id : selection.ids) {
      if (dl_labels[id] > 0) prompt_order.push_back(id);
    }
    for (auto id : selection.ids) {
      if (dl_labels[id] <= 0) prompt_order.push_back(id);
    }
    for (auto& rule : proposal.rules) {
      annotation::CandidateContext ctx;
      if (rule.kind == RuleKind::kPrompt) {
        std::optional<CandidateRule> filled;
        std::size_t used = 0;
        for (auto id : prompt_order) {
          const auto& key = dl[id];
          try {
            filled = prompt_rules::ProposePromptRule(
                *lm_, rule, anchors_.Get(key.anchor_id), recs_.Get(key.rec_id),
                dl_labels[id]);
            used = id;
            break;
          } catch (const Error& e) {
            if (e.code() != ErrorCode::kPromptUnavailable) throw;
          }
        }
        if (!filled) {
          warnings.push_back("no large-error pair can fill a prompt for " +
                             rule.attribute + "; candidate skipped");
          continue;
        }
        ctx.rule = std::move(*filled);
        ctx.examples.push_back(example(used));
        for (const auto& e : top_examples) {
          if (ctx.examples.size() >= 3) break;
          if (e != ctx.examples.front()) ctx.examples.push_back(e);
        }
      } else {
        ctx.rule = rule;
        ctx.examples = top_examples;
      }
      contexts.push_back(std::move(ctx));
    }
    Json imp = Json::array();
    for (const auto& i : importances) imp.push_back(i.ToJson());
    WriteJsonFile(partial / "importances.json",
                  {{"depth", depth}, {"tree", tree.ToJson()}, {"importances", imp}});
  }
  Json cands = Json::array();
  for (const auto& c : contexts) cands.push_back(c.ToJson());
  WriteJsonFile(partial / "candidates.json", cands);
  for (const auto& w : warnings) spdlog::warn("iteration {}: {}", t, w);

  // Annotation.
  annotation::RuleSet rule_set;
  std::vector<annotation::Decision> decisions;
  if (discover) {
    SetStage(t, Stage::kAnnotation);
    const fs::path session_path = partial / "session.json";
    sessions_.Discard();
    sessions_.set_persist_hook([session_path](const annotation::AnnotationSession& s) {
      WriteJsonFile(session_path, s.ToJson());
    });
    bool restored = false;
    if (prior_session && prior_session->at("candidates") == cands &&
        prior_session->at("iteration").get<int>() == t) {
      sessions_.Restore(annotation::AnnotationSession::FromJson(*prior_session));
      restored = true;
    }
    if (!restored) sessions_.Open(t, contexts);
    rule_set = driver.Annotate(sessions_, t);
    const auto session = sessions_.Current();
    for (const auto& c : session.candidates()) {
      decisions.push_back(session.decisions().at(c.rule.id));
    }
  }
  WriteJsonFile(partial / "rules.json", {{"iteration", t},
                                         {"accepted", RulesToJson(rule_set.accepted)},
                                         {"rejected", RulesToJson(rule_set.rejected)}});

  auto next_accepted = accepted_;
  auto next_rejected = rejected_;
  auto next_seen = seen_keys_;
  for (const auto& r : rule_set.accepted) {
    next_accepted.push_back(r);
    next_seen.insert(r.DedupKey());
  }
  for (const auto& r : rule_set.rejected) {
    next_rejected.push_back(r);
    next_seen.insert(r.DedupKey());
  }

  // Matching over D_u with the cumulative accepted set.
  auto next_minted = minted_;
  auto next_pool = pool_;
  std::vector<matching::MatchScore> minted_scores;
  if (!rule_set.accepted.empty()) {
    SetStage(t, Stage::kMatching);
    std::vector<matching::MatchScore> scores;
    scores.reserve(pool_.size());
    for (const auto& key : pool_) {
      const auto enc = EncodingOf(key);
      matching::PairView view{key, &enc, &anchors_.Get(key.anchor_id),
                              &recs_.Get(key.rec_id)};
      scores.push_back(matching::ScorePair(next_accepted, view, encoder_.layout(),
                                           lm_.get()));
    }
    minted_scores = matching::AssignWeakLabels(std::move(scores), config_.theta, cap);
    std::set<PairKey> taken;
    for (const auto& s : minted_scores) {
      LabeledPair p;
      p.pair = s.pair;
      p.label = 1;
      p.weak = true;
      p.source = catalog::PairSource::kRule;
      p.iteration = t;
      next_minted.push_back(p);
      taken.insert(s.pair);
    }
    std::erase_if(next_pool, [&](const PairKey& k) { return taken.contains(k); });
  }
  Json matches = Json::array();
  for (const auto& s : minted_scores) matches.push_back(s.ToJson());
  WriteJsonFile(partial / "matches.json", matches);
  if (!rule_set.accepted.empty() && minted_scores.empty()) {
    spdlog::info("iteration {}: no unlabeled pair reached the threshold", t);
  }

  // Ensemble and metrics.
  auto next_models = models_;
  next_models.push_back(model);
  boosting::IterationRecord record;
  record.iteration = t;
  record.err_raw = err.raw;
  record.err = err.clipped;
  record.alpha = alpha;
  record.model_ref = "iterations/" + std::to_string(t) + "/model.json";
  for (const auto& r : rule_set.accepted) record.accepted_rule_ids.push_back(r.id);
  record.in_ensemble = in_ensemble;

  boosting::EnsembleModel single;
  single.Add(model, 1.0);
  const boosting::EnsembleModel& reported =
      no_ensemble || next_ensemble.empty() ? single : next_ensemble;
  const auto test_eval = Evaluate(reported, test_set_);
  const auto val_eval = Evaluate(reported, validation_set_);
  const auto model_eval = Evaluate(single, test_set_);
  double weight_sum = 0.0;
  for (double w : next_weights) weight_sum += w;
  Json accepted_desc = Json::array();
  for (const auto& r : rule_set.accepted) accepted_desc.push_back(r.Describe());
  Json m = {{"iteration", t},
            {"err_raw", err.raw},
            {"err", err.clipped},
            {"alpha", alpha},
            {"in_ensemble", in_ensemble},
            {"weight_sum", weight_sum},
            {"train_size", n_train},
            {"train_epochs", best->epochs_run},
            {"candidates", contexts.size()},
            {"accepted", rule_set.accepted.size()},
            {"rejected", rule_set.rejected.size()},
            {"accepted_rules", accepted_desc},
            {"accepted_total", next_accepted.size()},
            {"minted", minted_scores.size()},
            {"minted_total", next_minted.size()},
            {"unlabeled_remaining", next_pool.size()},
            {"model_test_accuracy", model_eval.accuracy},
            {"test_accuracy", test_eval.accuracy},
            {"validation_accuracy", val_eval.accuracy}};
  if (!truth_.empty()) m["planted_recovered"] = RecoveredPlanted(next_accepted);

  WriteJsonFile(partial / "model.json", model->ToJson());
  WriteJsonFile(partial / "weights.json", {{"iteration", t}, {"weights", next_weights}});
  WriteJsonFile(partial / "metrics.json", m);

  // Commit.
  const fs::path final_dir = IterationDir(t, false);
  fs::remove_all(final_dir);
  fs::rename(partial, final_dir);
  const fs::path final_session = final_dir / "session.json";
  sessions_.set_persist_hook([final_session](const annotation::AnnotationSession& s) {
    WriteJsonFile(final_session, s.ToJson());
  });

  boost_.weights = std::move(next_weights);
  boost_.iteration = t;
  boost_.records.push_back(record);
  models_ = std::move(next_models);
  ensemble_ = std::move(next_ensemble);
  minted_ = std::move(next_minted);
  pool_ = std::move(next_pool);
  accepted_ = std::move(next_accepted);
  rejected_ = std::move(next_rejected);
  seen_keys_ = std::move(next_seen);
  history_.push_back(m);
  WriteState();
  Json metrics_json = BuildMetricsJson(history_);
  WriteJsonFile(run_dir_ / "metrics.json", metrics_json);
  if (!decisions.empty()) AppendDecisions(run_dir_ / "decisions.jsonl", decisions);
  {
    std::lock_guard lock(status_mu_);
    metrics_json_ = std::move(metrics_json);
    status_.completed = t;
    status_.iteration = t;
    status_.stage = t >= config_.iterations ? Stage::kDone : Stage::kIdle;
  }
  spdlog::info(
      "iteration {}: err={:.4f} alpha={:.4f} accepted={} minted={} test_acc={:.4f}",
      t, err.clipped, alpha, rule_set.accepted.size(), minted_scores.size(),
      test_eval.accuracy);
}

}  // namespace amrule::pipeline
