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

#include "amrule/matching.hpp"

#include <algorithm>

#include <spdlog/spdlog.h>

#include "amrule/error.hpp"
#include "amrule/prompt_rules.hpp"

namespace amrule::matching {

Json MatchScore::ToJson() const {
  Json comps = Json::array();
  for (const auto& c : components) {
    comps.push_back({{"rule_id", c.rule_id},
                     {"mu", c.mu},
                     {"s_tree", c.tree},
                     {"s_prompt", c.prompt}});
  }
  return {{"anchor_id", pair.anchor_id},
          {"rec_id", pair.rec_id},
          {"components", comps},
          {"total", total},
          {"normalized", normalized}};
}

double ScoreTreeRule(const CandidateRule& rule,
                     const featurize::PairEncoding& encoding,
                     const featurize::EncodingLayout& layout) {
  if (rule.kind == RuleKind::kPrompt) return 0.0;
  return RuleSatisfied(rule, encoding, layout) ? rule.mu : 0.0;
}

double ScorePromptRule(const CandidateRule& rule,
                       const std::vector<double>& unlabeled_embedding) {
  if (rule.kind != RuleKind::kPrompt || !rule.prompt) return 0.0;
  const double cos =
      prompt_rules::Cosine(unlabeled_embedding, rule.prompt->embedding);
  return rule.mu * std::clamp(cos, 0.0, 1.0);
}

double ScorePromptRule(const CandidateRule& rule, const catalog::Product& anchor,
                       const catalog::Product& rec,
                       prompt_rules::LmClient& client) {
  if (rule.kind != RuleKind::kPrompt || !rule.prompt) return 0.0;
  try {
    const auto e =
        prompt_rules::UnlabeledEmbedding(client, anchor, rec, rule.attribute);
    return ScorePromptRule(rule, e);
  } catch (const Error& err) {
    if (err.code() == ErrorCode::kPromptUnavailable) return 0.0;
    if (err.code() == ErrorCode::kTransport) {
      spdlog::warn("prompt score for {}|{} degraded to 0: {}", anchor.id, rec.id,
                   err.what());
      return 0.0;
    }
    throw;
  }
}

MatchScore ScorePair(std::span<const CandidateRule> rules, const PairView& pair,
                     const featurize::EncodingLayout& layout,
                     prompt_rules::LmClient* client) {
  MatchScore out;
  out.pair = pair.key;
  double mu_sum = 0.0;
  for (const auto& rule : rules) {
    RuleComponent c;
    c.rule_id = rule.id;
    c.mu = rule.mu;
    if (rule.kind == RuleKind::kPrompt) {
      if (client == nullptr || pair.anchor == nullptr || pair.rec == nullptr) {
        throw Error(ErrorCode::kConfig, "prompt rules need a client and products");
      }
      c.prompt = ScorePromptRule(rule, *pair.anchor, *pair.rec, *client);
    } else {
      c.tree = ScoreTreeRule(rule, *pair.encoding, layout);
    }
    out.total += c.tree + c.prompt;
    mu_sum += rule.mu;
    out.components.push_back(std::move(c));
  }
  out.normalized = mu_sum > 0.0 ? out.total / mu_sum : 0.0;
  return out;
}

std::vector<MatchScore> AssignWeakLabels(std::vector<MatchScore> scores,
                                         double theta, std::size_t cap) {
  if (!(theta > 0.0 && theta <= 1.0)) {
    throw Error(ErrorCode::kConfig, "threshold must lie in (0, 1]");
  }
  std::erase_if(scores,
                [&](const MatchScore& s) { return !(s.normalized >= theta); });
  std::sort(scores.begin(), scores.end(),
            [](const MatchScore& a, const MatchScore& b) {
              if (a.normalized != b.normalized) return a.normalized > b.normalized;
              return a.pair < b.pair;
            });
  if (scores.size() > cap) scores.resize(cap);
  return scores;
}

}  // namespace amrule::matching
