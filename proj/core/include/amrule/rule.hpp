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

#ifndef AMRULE_RULE_HPP_
#define AMRULE_RULE_HPP_

#include <optional>
#include <string>
#include <vector>

#include "amrule/featurize.hpp"
#include "amrule/json_util.hpp"

namespace amrule {

enum class RuleKind { kExactMatch, kRange, kContain, kPrompt };
enum class RangeDirection { kUnresolved, kLe, kGe };
enum class Side { kAnchor, kRec };

std::string_view RuleKindName(RuleKind kind);
RuleKind RuleKindFromName(const std::string& name);
std::string_view RangeDirectionName(RangeDirection direction);
RangeDirection RangeDirectionFromName(const std::string& name);
std::string_view SideName(Side side);
Side SideFromName(const std::string& name);

struct PromptPayload {
  std::string relation_token;
  double token_probability = 0.0;
  std::string filled_text;  // full prompt with the mask filled in
  std::string rule_text;    // closing sentence only; this is what is embedded
  std::vector<double> embedding;
  std::string source_pair;  // "anchor|rec" of the large-error instance
  bool positive_polarity = true;
};

// An atomic labeling rule. Candidates carry unresolved parameters (Range
// direction); accepted rules have them bound by the annotator.
struct CandidateRule {
  std::string id;
  RuleKind kind = RuleKind::kExactMatch;
  std::string attribute;      // anchor-side attribute for Range
  std::string rec_attribute;  // Range only
  RangeDirection direction = RangeDirection::kUnresolved;
  Side side = Side::kAnchor;  // Contain only
  double mu = 0.0;
  int origin_iteration = 0;
  std::size_t feature_index = 0;
  std::optional<PromptPayload> prompt;

  // (kind, attributes) identity used for cross-iteration dedup.
  std::string DedupKey() const;
  std::string Describe() const;

  Json ToJson() const;
  static CandidateRule FromJson(const Json& json);
};

// Hard match of a tree-view rule against a pair encoding: ExactMatch needs
// both shared values present and equal, Range both values present and the
// bound inequality holding, Contain the designated side's value present.
// Prompt rules and unresolved Range rules never hard-match.
bool RuleSatisfied(const CandidateRule& rule,
                   const featurize::PairEncoding& encoding,
                   const featurize::EncodingLayout& layout);

// Labeling-function view: +1 when the rule fires, 0 (abstain) otherwise.
int ApplyRule(const CandidateRule& rule, const featurize::PairEncoding& encoding,
              const featurize::EncodingLayout& layout);

// Explicit AND of accepted atomic rules.
struct ConjunctionRule {
  std::vector<CandidateRule> atoms;

  int Apply(const featurize::PairEncoding& encoding,
            const featurize::EncodingLayout& layout) const;
  std::string Describe() const;
};

// A ground-truth rule of a synthetic world. Range rules read
// `attribute (anchor) <direction> rec_attribute (rec)`; ExactMatch compares
// `attribute` across both sides.
struct PlantedRule {
  RuleKind kind = RuleKind::kExactMatch;
  std::string attribute;
  std::string rec_attribute;
  RangeDirection direction = RangeDirection::kUnresolved;
  Side side = Side::kAnchor;

  // True when `candidate` has the same kind and attributes (direction is
  // not compared, it is what the annotator supplies).
  bool Matches(const CandidateRule& candidate) const;
  std::string Describe() const;
  Json ToJson() const;
  static PlantedRule FromJson(const Json& json);
};

}  // namespace amrule

#endif  // AMRULE_RULE_HPP_
