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

#ifndef AMRULE_RUN_CONFIG_HPP_
#define AMRULE_RUN_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <string>

#include "amrule/catalog.hpp"
#include "amrule/json_util.hpp"
#include "amrule/mlp.hpp"

namespace amrule {

enum class Ablation {
  kFull,
  kOnlyAttributes,
  kOnlyDescription,
  kOnlyBoosting,
  kNoEnsemble,
};
std::string_view AblationName(Ablation ablation);
Ablation AblationFromName(const std::string& name);

enum class ImportanceTarget { kTree, kMlp };
enum class ErrorSource { kModel, kEnsemble };
enum class AnnotatorMode { kScripted, kDecisions, kInteractive };
std::string_view AnnotatorModeName(AnnotatorMode mode);

struct RunConfig {
  // Inputs. Relative paths resolve against `base_dir` (the config file's
  // directory when loaded from disk).
  std::filesystem::path base_dir;
  std::filesystem::path catalog_anchor;
  std::filesystem::path catalog_rec;
  std::filesystem::path copurchase;
  std::filesystem::path truth;      // planted rules, scripted annotator only
  std::filesystem::path decisions;  // decisions mode only
  std::filesystem::path run_dir = "run";

  // Curation and splits.
  std::int64_t min_count = 3;
  std::int64_t min_count_test = 0;  // 0 means 2 * min_count
  double neg_ratio = 1.0;
  catalog::SplitRatios ratios;
  std::size_t unlabeled_size = 5000;

  // Loop.
  int iterations = 10;
  std::size_t budget = 10;
  std::size_t top_n = 300;
  int tree_depth = 5;  // 0 searches [3, 10] on a holdout of the subset
  int repeats = 10;
  double theta = 0.6;
  std::size_t cap = 500;
  double sparse_threshold = 0.5;
  std::uint64_t seed = 0;
  Ablation ablation = Ablation::kFull;
  ImportanceTarget importance_target = ImportanceTarget::kTree;
  ErrorSource error_source = ErrorSource::kModel;
  bool drop_weak_models = false;

  learner::TrainConfig train;
  bool lr_search = false;  // try every rate of the default grid

  AnnotatorMode annotator = AnnotatorMode::kScripted;
  std::string lm_url;  // empty selects the in-process stub
  int lm_retries = 3;

  std::filesystem::path Resolve(const std::filesystem::path& p) const;
  std::int64_t EffectiveMinCountTest() const {
    return min_count_test > 0 ? min_count_test : 2 * min_count;
  }

  // Throws kConfig on out-of-range values.
  void Validate() const;

  Json ToJson() const;
  static RunConfig FromJson(const Json& json,
                            const std::filesystem::path& base_dir = {});
  static RunConfig Load(const std::filesystem::path& path);
};

}  // namespace amrule

#endif  // AMRULE_RUN_CONFIG_HPP_
