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

#include "amrule/rule.hpp"

#include "amrule/error.hpp"

namespace amrule {

using featurize::Provenance;

std::string_view RuleKindName(RuleKind kind) {
  switch (kind) {
    case RuleKind::kExactMatch: return "ExactMatch";
    case RuleKind::kRange: return "Range";
    case RuleKind::kContain: return "Contain";
    case RuleKind::kPrompt: return "Prompt";
  }
  return "ExactMatch";
}

RuleKind RuleKindFromName(const std::string& name) {
  if (name == "ExactMatch") return RuleKind::kExactMatch;
  if (name == "Range") return RuleKind::kRange;
  if (name == "Contain") return RuleKind::kContain;
  if (name == "Prompt") return RuleKind::kPrompt;
  throw Error(ErrorCode::kValidation, "unknown rule kind '" + name + "'");
}

std::string_view RangeDirectionName(RangeDirection direction) {
  switch (direction) {
    case RangeDirection::kUnresolved: return "unresolved";
    case RangeDirection::kLe: return "le";
    case RangeDirection::kGe: return "ge";
  }
  return "unresolved";
}

RangeDirection RangeDirectionFromName(const std::string& name) {
  if (name == "le") return RangeDirection::kLe;
  if (name == "ge") return RangeDirection::kGe;
  if (name == "unresolved") return RangeDirection::kUnresolved;
  throw Error(ErrorCode::kValidation, "unknown range direction '" + name + "'");
}

std::string_view SideName(Side side) {
  return side == Side::kAnchor ? "anchor" : "rec";
}

Side SideFromName(const std::string& name) {
  if (name == "anchor") return Side::kAnchor;
  if (name == "rec") return Side::kRec;
  throw Error(ErrorCode::kValidation, "unknown side '" + name + "'");
}

std::string CandidateRule::DedupKey() const {
  std::string key(RuleKindName(kind));
  key += ":" + attribute;
  if (kind == RuleKind::kRange) key += ":" + rec_attribute;
  if (kind == RuleKind::kContain) key += ":" + std::string(SideName(side));
  return key;
}

std::string CandidateRule::Describe() const {
  switch (kind) {
    case RuleKind::kExactMatch:
      return attribute + " = " + attribute;
    case RuleKind::kRange: {
      const char* op = direction == RangeDirection::kGe   ? " >= "
                       : direction == RangeDirection::kLe ? " <= "
                                                          : " ? ";
      return attribute + op + rec_attribute;
    }
    case RuleKind::kContain:
      return std::string(SideName(side)) + " has " + attribute;
    case RuleKind::kPrompt:
      return "their " + attribute + " are " +
             (prompt ? prompt->relation_token : std::string("[MASK]"));
  }
  return attribute;
}

Json CandidateRule::ToJson() const {
  Json j{{"id", id},
         {"kind", RuleKindName(kind)},
         {"attribute", attribute},
         {"mu", mu},
         {"origin_iteration", origin_iteration},
         {"feature_index", feature_index},
         {"description", Describe()}};
  if (kind == RuleKind::kRange) {
    j["rec_attribute"] = rec_attribute;
    j["direction"] = RangeDirectionName(direction);
  }
  if (kind == RuleKind::kContain) j["side"] = SideName(side);
  if (prompt) {
    j["prompt"] = {{"relation_token", prompt->relation_token},
                   {"token_probability", prompt->token_probability},
                   {"filled_text", prompt->filled_text},
                   {"rule_text", prompt->rule_text},
                   {"embedding", EncodeFloat64Base64(prompt->embedding)},
                   {"source_pair", prompt->source_pair},
                   {"polarity", prompt->positive_polarity ? "compatible"
                                                          : "not-compatible"}};
  }
  return j;
}

CandidateRule CandidateRule::FromJson(const Json& j) {
  CandidateRule r;
  r.id = j.at("id").get<std::string>();
  r.kind = RuleKindFromName(j.at("kind").get<std::string>());
  r.attribute = j.at("attribute").get<std::string>();
  r.mu = j.at("mu").get<double>();
  r.origin_iteration = j.value("origin_iteration", 0);
  r.feature_index = j.value("feature_index", std::size_t{0});
  if (r.kind == RuleKind::kRange) {
    r.rec_attribute = j.at("rec_attribute").get<std::string>();
    r.direction = RangeDirectionFromName(j.value("direction", "unresolved"));
  }
  if (r.kind == RuleKind::kContain) r.side = SideFromName(j.value("side", "anchor"));
  if (j.contains("prompt")) {
    const auto& p = j["prompt"];
    PromptPayload payload;
    payload.relation_token = p.at("relation_token").get<std::string>();
    payload.token_probability = p.value("token_probability", 0.0);
    payload.filled_text = p.at("filled_text").get<std::string>();
    payload.rule_text = p.at("rule_text").get<std::string>();
    payload.embedding =
        DecodeFloat64Base64(p.at("embedding").get<std::string>());
    payload.source_pair = p.value("source_pair", std::string());
    payload.positive_polarity = p.value("polarity", "compatible") == "compatible";
    r.prompt = std::move(payload);
  }
  return r;
}

bool RuleSatisfied(const CandidateRule& rule,
                   const featurize::PairEncoding& encoding,
                   const featurize::EncodingLayout& layout) {
  switch (rule.kind) {
    case RuleKind::kExactMatch: {
      auto col = layout.Find(rule.attribute, Provenance::kSharedDiff);
      return col && encoding.present(*col) && encoding.values[*col] == 0.0;
    }
    case RuleKind::kRange: {
      auto a = layout.Find(rule.attribute, Provenance::kAnchor);
      auto b = layout.Find(rule.rec_attribute, Provenance::kRec);
      if (!a || !b || !encoding.present(*a) || !encoding.present(*b)) {
        return false;
      }
      const double va = encoding.values[*a];
      const double vb = encoding.values[*b];
      if (rule.direction == RangeDirection::kGe) return va >= vb;
      if (rule.direction == RangeDirection::kLe) return va <= vb;
      return false;
    }
    case RuleKind::kContain: {
      auto col = layout.Find(rule.attribute, rule.side == Side::kAnchor
                                                 ? Provenance::kAnchor
                                                 : Provenance::kRec);
      return col && encoding.present(*col);
    }
    case RuleKind::kPrompt:
      return false;
  }
  return false;
}

int ApplyRule(const CandidateRule& rule, const featurize::PairEncoding& encoding,
              const featurize::EncodingLayout& layout) {
  return RuleSatisfied(rule, encoding, layout) ? 1 : 0;
}

int ConjunctionRule::Apply(const featurize::PairEncoding& encoding,
                           const featurize::EncodingLayout& layout) const {
  if (atoms.empty()) return 0;
  for (const auto& atom : atoms) {
    if (ApplyRule(atom, encoding, layout) == 0) return 0;
  }
  return 1;
}

std::string ConjunctionRule::Describe() const {
  std::string out;
  for (const auto& atom : atoms) {
    if (!out.empty()) out += " AND ";
    out += atom.Describe();
  }
  return out;
}

bool PlantedRule::Matches(const CandidateRule& c) const {
  if (c.kind != kind || c.attribute != attribute) return false;
  switch (kind) {
    case RuleKind::kRange:
      return c.rec_attribute == rec_attribute;
    case RuleKind::kContain:
      return c.side == side;
    default:
      return true;
  }
}

std::string PlantedRule::Describe() const {
  CandidateRule r;
  r.kind = kind;
  r.attribute = attribute;
  r.rec_attribute = rec_attribute;
  r.direction = direction;
  r.side = side;
  return r.Describe();
}

Json PlantedRule::ToJson() const {
  Json j = {{"kind", RuleKindName(kind)}, {"attribute", attribute}};
  if (kind == RuleKind::kRange) {
    j["rec_attribute"] = rec_attribute;
    j["direction"] = RangeDirectionName(direction);
  }
  if (kind == RuleKind::kContain) j["side"] = SideName(side);
  return j;
}

PlantedRule PlantedRule::FromJson(const Json& j) {
  PlantedRule r;
  r.kind = RuleKindFromName(j.at("kind").get<std::string>());
  r.attribute = j.at("attribute").get<std::string>();
  if (r.kind == RuleKind::kRange) {
    r.rec_attribute = j.at("rec_attribute").get<std::string>();
    r.direction = RangeDirectionFromName(j.at("direction").get<std::string>());
  }
  if (r.kind == RuleKind::kContain) {
    r.side = SideFromName(j.at("side").get<std::string>());
  }
  return r;
}

}  // namespace amrule
