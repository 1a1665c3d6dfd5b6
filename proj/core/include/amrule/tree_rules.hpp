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

#ifndef AMRULE_TREE_RULES_HPP_
#define AMRULE_TREE_RULES_HPP_

#include <cstdint>
#include <functional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "amrule/catalog.hpp"
#include "amrule/decision_tree.hpp"
#include "amrule/featurize.hpp"
#include "amrule/mlp.hpp"
#include "amrule/rule.hpp"

namespace amrule::tree_rules {

// Adapts a weak MLP (plus the encoder that standardizes its inputs) to the
// evaluator interface, for importance_target = mlp.
class MlpEvaluator : public Evaluator {
 public:
  MlpEvaluator(const learner::MlpModel& model,
               const featurize::PairEncoder& encoder)
      : model_(model), encoder_(encoder) {}
  int PredictLabel(const featurize::PairEncoding& encoding) const override;

 private:
  const learner::MlpModel& model_;
  const featurize::PairEncoder& encoder_;
};

struct FeatureImportance {
  std::size_t feature = 0;
  double mu = 0.0;
  int repeats = 0;
  double baseline = 0.0;       // accuracy on the unpermuted subset
  std::vector<double> scores;  // accuracy per repeat with the column permuted

  Json ToJson() const;
};

// permutations[feature][repeat] is a row permutation: row r of the permuted
// subset takes column `feature` from row permutations[feature][repeat][r].
struct PermutationPlan {
  std::vector<std::vector<std::vector<std::size_t>>> permutations;
};

PermutationPlan DrawPermutations(std::size_t num_features,
                                 std::size_t num_rows, int repeats,
                                 std::uint64_t seed);

double Accuracy(const Evaluator& evaluator,
                std::span<const featurize::PairEncoding> rows,
                std::span<const int> labels);

std::vector<FeatureImportance> PermutationImportance(
    const Evaluator& evaluator, std::span<const featurize::PairEncoding> rows,
    std::span<const int> labels, const PermutationPlan& plan);

std::vector<FeatureImportance> PermutationImportance(
    const Evaluator& evaluator, std::span<const featurize::PairEncoding> rows,
    std::span<const int> labels, int repeats, std::uint64_t seed,
    PermutationPlan* plan_out = nullptr);

struct ProposalOptions {
  std::size_t budget = 10;
  double sparse_threshold = 0.5;
  bool route_sparse_to_prompt = true;  // off for only-attributes
  bool prompt_only = false;            // only-description
  int iteration = 1;
};

struct Proposal {
  std::vector<CandidateRule> rules;
  std::vector<std::string> warnings;
};

// Walks features by descending mu (ties by ascending index), maps each usable
// one (mu > 0) to a prototype and skips keys in `seen` or already proposed.
// Rule ids are "r<iteration>-<ordinal>", unique across a run as long as
// iterations are unique.
Proposal ProposeTreeRules(std::span<const FeatureImportance> importances,
                          const featurize::EncodingLayout& layout,
                          const catalog::AttributeSchema& schema_a,
                          const catalog::AttributeSchema& schema_b,
                          const ProposalOptions& options,
                          const std::set<std::string>& seen);

// Sparsity of the attribute behind a feature column; shared-diff columns take
// the larger of the two sides.
double FeatureSparsity(const featurize::FeatureDescriptor& descriptor,
                       const catalog::AttributeSchema& schema_a,
                       const catalog::AttributeSchema& schema_b);

}  // namespace amrule::tree_rules

#endif  // AMRULE_TREE_RULES_HPP_
