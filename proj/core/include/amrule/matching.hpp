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

#ifndef AMRULE_MATCHING_HPP_
#define AMRULE_MATCHING_HPP_

#include <span>
#include <string>
#include <vector>

#include "amrule/catalog.hpp"
#include "amrule/featurize.hpp"
#include "amrule/lm_client.hpp"
#include "amrule/rule.hpp"

namespace amrule::matching {

struct RuleComponent {
  std::string rule_id;
  double mu = 0.0;
  double tree = 0.0;    // s^d
  double prompt = 0.0;  // s^p
};

struct MatchScore {
  catalog::PairKey pair;
  std::vector<RuleComponent> components;
  double total = 0.0;
  double normalized = 0.0;

  Json ToJson() const;
};

// mu * I(rule satisfied); 0 for Prompt rules.
double ScoreTreeRule(const CandidateRule& rule,
                     const featurize::PairEncoding& encoding,
                     const featurize::EncodingLayout& layout);

// mu * clamp(cos(unlabeled, rule embedding), 0, 1); 0 for non-Prompt rules.
double ScorePromptRule(const CandidateRule& rule,
                       const std::vector<double>& unlabeled_embedding);

// Builds the unlabeled pair's embedding through `client`. Missing
// descriptions score 0; transport failures are logged and score 0.
double ScorePromptRule(const CandidateRule& rule, const catalog::Product& anchor,
                       const catalog::Product& rec, prompt_rules::LmClient& client);

struct PairView {
  catalog::PairKey key;
  const featurize::PairEncoding* encoding = nullptr;
  const catalog::Product* anchor = nullptr;
  const catalog::Product* rec = nullptr;
};

// Sums per-rule components; normalized divides by the summed mu of `rules`.
// `client` may be null when `rules` holds no Prompt rules.
MatchScore ScorePair(std::span<const CandidateRule> rules, const PairView& pair,
                     const featurize::EncodingLayout& layout,
                     prompt_rules::LmClient* client);

// Scores at or above `theta`, best first (ties by pair id), at most `cap`.
std::vector<MatchScore> AssignWeakLabels(std::vector<MatchScore> scores,
                                         double theta, std::size_t cap);

}  // namespace amrule::matching

#endif  // AMRULE_MATCHING_HPP_
