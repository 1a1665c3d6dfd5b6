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

#include "amrule/run_config.hpp"

#include <cmath>

#include "amrule/error.hpp"

namespace amrule {

std::string_view AblationName(Ablation a) {
  switch (a) {
    case Ablation::kFull:
      return "full";
    case Ablation::kOnlyAttributes:
      return "only-attributes";
    case Ablation::kOnlyDescription:
      return "only-description";
    case Ablation::kOnlyBoosting:
      return "only-boosting";
    case Ablation::kNoEnsemble:
      return "no-ensemble";
  }
  return "full";
}

Ablation AblationFromName(const std::string& name) {
  for (auto a : {Ablation::kFull, Ablation::kOnlyAttributes,
                 Ablation::kOnlyDescription, Ablation::kOnlyBoosting,
                 Ablation::kNoEnsemble}) {
    if (AblationName(a) == name) return a;
  }
  throw Error(ErrorCode::kConfig, "unknown ablation mode '" + name + "'");
}

std::string_view AnnotatorModeName(AnnotatorMode m) {
  switch (m) {
    case AnnotatorMode::kScripted:
      return "scripted";
    case AnnotatorMode::kDecisions:
      return "decisions";
    case AnnotatorMode::kInteractive:
      return "interactive";
  }
  return "scripted";
}

std::filesystem::path RunConfig::Resolve(const std::filesystem::path& p) const {
  if (p.empty() || p.is_absolute()) return p;
  return base_dir / p;
}

void RunConfig::Validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::kConfig, m); };
  if (iterations < 1) fail("iterations must be >= 1");
  if (budget < 1) fail("budget must be >= 1");
  if (top_n < 1) fail("top_n must be >= 1");
  if (tree_depth != 0 && (tree_depth < 3 || tree_depth > 10)) {
    fail("tree_depth must be 0 (search) or lie in [3, 10]");
  }
  if (repeats < 1) fail("repeats must be >= 1");
  if (!(theta > 0.0 && theta <= 1.0)) fail("theta must lie in (0, 1]");
  if (!(sparse_threshold >= 0.0 && sparse_threshold <= 1.0)) {
    fail("sparse_threshold must lie in [0, 1]");
  }
  if (min_count < 1) fail("min_count must be >= 1");
  if (!(neg_ratio > 0.0)) fail("neg_ratio must be positive");
  if (std::abs(ratios.train + ratios.validation + ratios.test - 1.0) > 1e-9) {
    fail("split ratios must sum to 1");
  }
  if (train.epochs < 1 || train.batch_size < 1) fail("epochs and batch must be >= 1");
  if (!(train.learning_rate > 0.0)) fail("learning rate must be positive");
  if (catalog_anchor.empty() || catalog_rec.empty() || copurchase.empty()) {
    fail("catalog_anchor, catalog_rec and copurchase are required");
  }
  if (annotator == AnnotatorMode::kScripted && truth.empty() &&
      ablation != Ablation::kOnlyBoosting) {
    fail("the scripted annotator needs a truth file");
  }
  if (annotator == AnnotatorMode::kDecisions && decisions.empty()) {
    fail("decisions mode needs a decisions file");
  }
}

Json RunConfig::ToJson() const {
  return {
      {"catalog_anchor", catalog_anchor.string()},
      {"catalog_rec", catalog_rec.string()},
      {"copurchase", copurchase.string()},
      {"truth", truth.string()},
      {"decisions", decisions.string()},
      {"run_dir", run_dir.string()},
      {"min_count", min_count},
      {"min_count_test", min_count_test},
      {"neg_ratio", neg_ratio},
      {"ratios", {ratios.train, ratios.validation, ratios.test}},
      {"unlabeled_size", unlabeled_size},
      {"iterations", iterations},
      {"budget", budget},
      {"top_n", top_n},
      {"tree_depth", tree_depth},
      {"repeats", repeats},
      {"theta", theta},
      {"cap", cap},
      {"sparse_threshold", sparse_threshold},
      {"seed", seed},
      {"ablation", AblationName(ablation)},
      {"importance_target",
       importance_target == ImportanceTarget::kTree ? "tree" : "mlp"},
      {"error_source", error_source == ErrorSource::kModel ? "model" : "ensemble"},
      {"drop_weak_models", drop_weak_models},
      {"train", train.ToJson()},
      {"lr_search", lr_search},
      {"annotator", AnnotatorModeName(annotator)},
      {"lm_url", lm_url},
      {"lm_retries", lm_retries},
  };
}

RunConfig RunConfig::FromJson(const Json& j, const std::filesystem::path& base_dir) {
  RunConfig c;
  c.base_dir = base_dir;
  try {
    auto path_of = [&](const char* key, std::filesystem::path& out) {
      if (j.contains(key)) out = j[key].get<std::string>();
    };
    path_of("catalog_anchor", c.catalog_anchor);
    path_of("catalog_rec", c.catalog_rec);
    path_of("copurchase", c.copurchase);
    path_of("truth", c.truth);
    path_of("decisions", c.decisions);
    path_of("run_dir", c.run_dir);
    c.min_count = j.value("min_count", c.min_count);
    c.min_count_test = j.value("min_count_test", c.min_count_test);
    c.neg_ratio = j.value("neg_ratio", c.neg_ratio);
    if (j.contains("ratios")) {
      const auto r = j["ratios"].get<std::vector<double>>();
      if (r.size() != 3) throw Error(ErrorCode::kConfig, "ratios needs 3 entries");
      c.ratios = {r[0], r[1], r[2]};
    }
    c.unlabeled_size = j.value("unlabeled_size", c.unlabeled_size);
    c.iterations = j.value("iterations", c.iterations);
    c.budget = j.value("budget", c.budget);
    c.top_n = j.value("top_n", c.top_n);
    c.tree_depth = j.value("tree_depth", c.tree_depth);
    c.repeats = j.value("repeats", c.repeats);
    c.theta = j.value("theta", c.theta);
    c.cap = j.value("cap", c.cap);
    c.sparse_threshold = j.value("sparse_threshold", c.sparse_threshold);
    c.seed = j.value("seed", c.seed);
    if (j.contains("ablation")) {
      c.ablation = AblationFromName(j["ablation"].get<std::string>());
    }
    if (j.contains("importance_target")) {
      const auto v = j["importance_target"].get<std::string>();
      if (v == "tree") {
        c.importance_target = ImportanceTarget::kTree;
      } else if (v == "mlp") {
        c.importance_target = ImportanceTarget::kMlp;
      } else {
        throw Error(ErrorCode::kConfig, "importance_target must be tree or mlp");
      }
    }
    if (j.contains("error_source")) {
      const auto v = j["error_source"].get<std::string>();
      if (v == "model") {
        c.error_source = ErrorSource::kModel;
      } else if (v == "ensemble") {
        c.error_source = ErrorSource::kEnsemble;
      } else {
        throw Error(ErrorCode::kConfig, "error_source must be model or ensemble");
      }
    }
    c.drop_weak_models = j.value("drop_weak_models", c.drop_weak_models);
    if (j.contains("train")) c.train = learner::TrainConfig::FromJson(j["train"]);
    c.lr_search = j.value("lr_search", c.lr_search);
    if (j.contains("annotator")) {
      const auto v = j["annotator"].get<std::string>();
      if (v == "scripted") {
        c.annotator = AnnotatorMode::kScripted;
      } else if (v == "decisions") {
        c.annotator = AnnotatorMode::kDecisions;
      } else if (v == "interactive") {
        c.annotator = AnnotatorMode::kInteractive;
      } else {
        throw Error(ErrorCode::kConfig, "unknown annotator mode '" + v + "'");
      }
    }
    c.lm_url = j.value("lm_url", c.lm_url);
    c.lm_retries = j.value("lm_retries", c.lm_retries);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kConfig, std::string("bad run config: ") + e.what());
  }
  return c;
}

RunConfig RunConfig::Load(const std::filesystem::path& path) {
  return FromJson(ReadJsonFile(path),
                  std::filesystem::absolute(path).parent_path());
}

}  // namespace amrule
