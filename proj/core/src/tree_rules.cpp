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

#include "amrule/tree_rules.hpp"

#include <algorithm>
#include <numeric>

#include "amrule/error.hpp"
#include "amrule/random.hpp"

namespace amrule::tree_rules {

using featurize::AttributeKind;
using featurize::PairEncoding;
using featurize::Provenance;

int MlpEvaluator::PredictLabel(const PairEncoding& encoding) const {
  const auto x = encoder_.Standardize(encoding);
  return learner::Predict(model_, x).label;
}

Json FeatureImportance::ToJson() const {
  return {{"feature", feature},
          {"mu", mu},
          {"repeats", repeats},
          {"baseline", baseline},
          {"scores", scores}};
}

PermutationPlan DrawPermutations(std::size_t num_features,
                                 std::size_t num_rows, int repeats,
                                 std::uint64_t seed) {
  if (repeats < 1) {
    throw Error(ErrorCode::kConfig, "permutation repeats must be >= 1");
  }
  PermutationPlan plan;
  plan.permutations.resize(num_features);
  Rng rng = MakeRng(seed, 0x5045524d);
  for (std::size_t f = 0; f < num_features; ++f) {
    plan.permutations[f].resize(static_cast<std::size_t>(repeats));
    for (auto& perm : plan.permutations[f]) {
      perm.resize(num_rows);
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), rng);
    }
  }
  return plan;
}

namespace {

std::size_t CountCorrect(const Evaluator& evaluator,
                         std::span<const PairEncoding> rows,
                         std::span<const int> labels) {
  std::size_t correct = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    correct += evaluator.PredictLabel(rows[i]) == labels[i] ? 1 : 0;
  }
  return correct;
}

}  // namespace

double Accuracy(const Evaluator& evaluator, std::span<const PairEncoding> rows,
                std::span<const int> labels) {
  if (rows.empty()) return 0.0;
  return static_cast<double>(CountCorrect(evaluator, rows, labels)) /
         static_cast<double>(rows.size());
}

std::vector<FeatureImportance> PermutationImportance(
    const Evaluator& evaluator, std::span<const PairEncoding> rows,
    std::span<const int> labels, const PermutationPlan& plan) {
  if (rows.empty()) {
    throw Error(ErrorCode::kEmptyDataset, "importance needs a non-empty subset");
  }
  if (rows.size() != labels.size()) {
    throw Error(ErrorCode::kShape, "rows and labels disagree in length");
  }
  const std::size_t width = rows.front().size();
  if (plan.permutations.size() != width) {
    throw Error(ErrorCode::kShape, "permutation plan width mismatch");
  }
  const std::size_t n = rows.size();
  const std::size_t base_correct = CountCorrect(evaluator, rows, labels);
  const double baseline =
      static_cast<double>(base_correct) / static_cast<double>(n);

  std::vector<FeatureImportance> out(width);
  std::vector<PairEncoding> work(rows.begin(), rows.end());
  for (std::size_t f = 0; f < width; ++f) {
    auto& imp = out[f];
    imp.feature = f;
    imp.baseline = baseline;
    imp.repeats = static_cast<int>(plan.permutations[f].size());
    std::size_t permuted_total = 0;
    for (const auto& perm : plan.permutations[f]) {
      if (perm.size() != n) {
        throw Error(ErrorCode::kShape, "permutation length mismatch");
      }
      for (std::size_t r = 0; r < n; ++r) {
        work[r].values[f] = rows[perm[r]].values[f];
        work[r].mask[f] = rows[perm[r]].mask[f];
      }
      const std::size_t c = CountCorrect(evaluator, work, labels);
      permuted_total += c;
      imp.scores.push_back(static_cast<double>(c) / static_cast<double>(n));
    }
    for (std::size_t r = 0; r < n; ++r) {
      work[r].values[f] = rows[r].values[f];
      work[r].mask[f] = rows[r].mask[f];
    }
    // Integer numerator keeps mu exactly 0 when no repeat changes a
    // prediction.
    const auto k = static_cast<std::int64_t>(imp.repeats);
    const std::int64_t diff = k * static_cast<std::int64_t>(base_correct) -
                              static_cast<std::int64_t>(permuted_total);
    imp.mu = static_cast<double>(diff) /
             (static_cast<double>(k) * static_cast<double>(n));
  }
  return out;
}

std::vector<FeatureImportance> PermutationImportance(
    const Evaluator& evaluator, std::span<const PairEncoding> rows,
    std::span<const int> labels, int repeats, std::uint64_t seed,
    PermutationPlan* plan_out) {
  if (rows.empty()) {
    throw Error(ErrorCode::kEmptyDataset, "importance needs a non-empty subset");
  }
  auto plan = DrawPermutations(rows.front().size(), rows.size(), repeats, seed);
  auto out = PermutationImportance(evaluator, rows, labels, plan);
  if (plan_out != nullptr) *plan_out = std::move(plan);
  return out;
}

double FeatureSparsity(const featurize::FeatureDescriptor& d,
                       const catalog::AttributeSchema& schema_a,
                       const catalog::AttributeSchema& schema_b) {
  switch (d.provenance) {
    case Provenance::kAnchor:
      return schema_a.SparsityOf(d.attribute_name);
    case Provenance::kRec:
      return schema_b.SparsityOf(d.attribute_name);
    case Provenance::kSharedDiff:
      return std::max(schema_a.SparsityOf(d.attribute_name),
                      schema_b.SparsityOf(d.attribute_name));
  }
  return 0.0;
}

namespace {

// Highest-mu numerical feature on the opposite block, ties by index.
std::optional<std::size_t> RangePartner(
    const featurize::FeatureDescriptor& d,
    std::span<const FeatureImportance> importances,
    const featurize::EncodingLayout& layout) {
  const Provenance want =
      d.provenance == Provenance::kAnchor ? Provenance::kRec : Provenance::kAnchor;
  std::optional<std::size_t> best;
  double best_mu = 0.0;
  for (const auto& other : layout.descriptors()) {
    if (other.provenance != want || other.kind != AttributeKind::kNumerical) {
      continue;
    }
    const double mu = other.index < importances.size()
                          ? importances[other.index].mu
                          : 0.0;
    if (!best || mu > best_mu) {
      best = other.index;
      best_mu = mu;
    }
  }
  return best;
}

CandidateRule Prototype(const featurize::FeatureDescriptor& d,
                        std::span<const FeatureImportance> importances,
                        const featurize::EncodingLayout& layout,
                        bool as_prompt) {
  CandidateRule rule;
  rule.feature_index = d.index;
  rule.attribute = d.attribute_name;
  if (as_prompt) {
    rule.kind = RuleKind::kPrompt;
    return rule;
  }
  if (d.provenance == Provenance::kSharedDiff) {
    if (d.kind == AttributeKind::kCategorical) {
      rule.kind = RuleKind::kExactMatch;
    } else {
      rule.kind = RuleKind::kRange;
      rule.rec_attribute = d.attribute_name;
    }
    return rule;
  }
  const Side side =
      d.provenance == Provenance::kAnchor ? Side::kAnchor : Side::kRec;
  if (d.kind == AttributeKind::kNumerical) {
    if (auto partner = RangePartner(d, importances, layout)) {
      const auto& p = layout.at(*partner);
      rule.kind = RuleKind::kRange;
      if (side == Side::kAnchor) {
        rule.rec_attribute = p.attribute_name;
      } else {
        rule.attribute = p.attribute_name;
        rule.rec_attribute = d.attribute_name;
      }
      return rule;
    }
  }
  rule.kind = RuleKind::kContain;
  rule.side = side;
  return rule;
}

}  // namespace

Proposal ProposeTreeRules(std::span<const FeatureImportance> importances,
                          const featurize::EncodingLayout& layout,
                          const catalog::AttributeSchema& schema_a,
                          const catalog::AttributeSchema& schema_b,
                          const ProposalOptions& options,
                          const std::set<std::string>& seen) {
  if (options.budget < 1) {
    throw Error(ErrorCode::kConfig, "annotation budget must be >= 1");
  }
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < importances.size(); ++i) {
    if (importances[i].feature >= layout.size()) {
      throw Error(ErrorCode::kShape, "importance refers to an unknown column");
    }
    order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (importances[a].mu != importances[b].mu) {
      return importances[a].mu > importances[b].mu;
    }
    return importances[a].feature < importances[b].feature;
  });

  // Range partners are looked up by column index.
  std::vector<FeatureImportance> by_column(layout.size());
  for (const auto& imp : importances) by_column[imp.feature] = imp;

  Proposal out;
  std::set<std::string> proposed;
  for (std::size_t i : order) {
    if (out.rules.size() >= options.budget) break;
    const auto& imp = importances[i];
    if (!(imp.mu > 0.0)) break;
    const auto& d = layout.at(imp.feature);
    const bool sparse =
        FeatureSparsity(d, schema_a, schema_b) >= options.sparse_threshold;
    const bool as_prompt =
        options.prompt_only || (options.route_sparse_to_prompt && sparse);
    CandidateRule rule = Prototype(d, by_column, layout, as_prompt);
    const std::string key = rule.DedupKey();
    if (seen.contains(key) || proposed.contains(key)) continue;
    proposed.insert(key);
    rule.mu = imp.mu;
    rule.origin_iteration = options.iteration;
    rule.id = "r" + std::to_string(options.iteration) + "-" +
              std::to_string(out.rules.size() + 1);
    out.rules.push_back(std::move(rule));
  }
  if (out.rules.size() < options.budget) {
    out.warnings.push_back("only " + std::to_string(out.rules.size()) +
                           " usable features for a budget of " +
                           std::to_string(options.budget));
  }
  return out;
}

}  // namespace amrule::tree_rules
