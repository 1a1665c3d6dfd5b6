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

#include "amrule/prompt_rules.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "amrule/error.hpp"

namespace amrule::prompt_rules {

std::string AttributePhrase(const std::string& attribute) {
  std::string out = attribute;
  std::replace(out.begin(), out.end(), '_', ' ');
  if (!out.empty() && out.back() != 's') out.push_back('s');
  return out;
}

namespace {

bool IsSentenceEnd(const std::string& text, std::size_t i) {
  const char c = text[i];
  if (c != '.' && c != '!' && c != '?') return false;
  return i + 1 == text.size() || text[i + 1] == ' ';
}

std::string Terminated(std::string text) {
  while (!text.empty() && text.back() == ' ') text.pop_back();
  if (!text.empty() && text.back() != '.' && text.back() != '!' &&
      text.back() != '?') {
    text.push_back('.');
  }
  return text;
}

std::string Lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

std::string TruncateToSentence(const std::string& text, std::size_t limit) {
  if (text.size() <= limit) return text;
  for (std::size_t end = std::min(limit, text.size()); end > 0; --end) {
    if (IsSentenceEnd(text, end - 1)) return text.substr(0, end);
  }
  return {};
}

BuiltPrompt BuildPrompt(const catalog::Product& anchor,
                        const catalog::Product& rec,
                        const std::string& attribute, Polarity polarity,
                        std::size_t max_chars) {
  if (anchor.description.empty() || rec.description.empty()) {
    throw Error(ErrorCode::kPromptUnavailable,
                "pair " + anchor.id + "|" + rec.id + " lacks a description");
  }
  BuiltPrompt out;
  out.sentence = "The " + Lower(anchor.name) + " is " +
                 (polarity == Polarity::kNotCompatible ? "not " : "") +
                 "compatible with the " + Lower(rec.name) + " because their " +
                 AttributePhrase(attribute) + " are " + kMaskToken + ".";
  std::string desc_a = Terminated(anchor.description);
  std::string desc_b = Terminated(rec.description);
  const std::size_t fixed =
      anchor.name.size() + 2 + 1 + rec.name.size() + 2 + 1 + out.sentence.size();
  if (fixed + desc_a.size() + desc_b.size() > max_chars) {
    if (fixed >= max_chars) {
      throw Error(ErrorCode::kPromptUnavailable, "prompt template exceeds limit");
    }
    const std::size_t budget = max_chars - fixed;
    std::size_t share_a = budget / 2;
    if (desc_b.size() < budget - share_a) share_a = budget - desc_b.size();
    desc_a = TruncateToSentence(desc_a, share_a);
    desc_b = TruncateToSentence(desc_b, budget - desc_a.size());
    if (desc_a.empty() || desc_b.empty()) {
      throw Error(ErrorCode::kPromptUnavailable,
                  "no sentence boundary fits the prompt limit");
    }
  }
  out.context = anchor.name + ": " + desc_a + " " + rec.name + ": " + desc_b + " ";
  return out;
}

MaskPrediction PredictMask(LmClient& client, const std::string& prompt) {
  if (prompt.find(kMaskToken) == std::string::npos) {
    throw Error(ErrorCode::kValidation, "prompt has no mask slot");
  }
  const auto d = client.FillMask(prompt);
  ValidateDistribution(d);
  MaskPrediction best;
  best.probability = -1.0;
  for (std::size_t i = 0; i < d.probs.size(); ++i) {
    if (d.probs[i] > best.probability) {
      best = {d.tokens[i], i, d.probs[i]};
    }
  }
  return best;
}

std::string FillMaskSlot(const std::string& text, const std::string& token) {
  std::string out = text;
  const auto pos = out.find(kMaskToken);
  if (pos != std::string::npos) {
    out.replace(pos, std::char_traits<char>::length(kMaskToken), token);
  }
  return out;
}

FilledPrompt FillPrompt(LmClient& client, const catalog::Product& anchor,
                        const catalog::Product& rec,
                        const std::string& attribute, Polarity polarity) {
  FilledPrompt out;
  out.prompt = BuildPrompt(anchor, rec, attribute, polarity,
                           client.max_prompt_chars());
  out.prediction = PredictMask(client, out.prompt.text());
  out.filled_text = FillMaskSlot(out.prompt.text(), out.prediction.token);
  out.rule_text = FillMaskSlot(out.prompt.sentence, out.prediction.token);
  return out;
}

CandidateRule ProposePromptRule(LmClient& client, const CandidateRule& placeholder,
                                const catalog::Product& anchor,
                                const catalog::Product& rec, int label) {
  const Polarity polarity =
      label > 0 ? Polarity::kCompatible : Polarity::kNotCompatible;
  const auto filled =
      FillPrompt(client, anchor, rec, placeholder.attribute, polarity);
  CandidateRule rule = placeholder;
  rule.kind = RuleKind::kPrompt;
  PromptPayload payload;
  payload.relation_token = filled.prediction.token;
  payload.token_probability = filled.prediction.probability;
  payload.filled_text = filled.filled_text;
  payload.rule_text = filled.rule_text;
  payload.embedding = client.Embed(filled.rule_text);
  if (payload.embedding.size() != client.embedding_dim()) {
    throw Error(ErrorCode::kProtocol, "embedding dimension mismatch");
  }
  payload.source_pair = anchor.id + "|" + rec.id;
  payload.positive_polarity = polarity == Polarity::kCompatible;
  rule.prompt = std::move(payload);
  return rule;
}

std::vector<double> UnlabeledEmbedding(LmClient& client,
                                       const catalog::Product& anchor,
                                       const catalog::Product& rec,
                                       const std::string& attribute) {
  const auto filled =
      FillPrompt(client, anchor, rec, attribute, Polarity::kCompatible);
  return client.Embed(filled.rule_text);
}

double Cosine(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kShape, "embedding dimensions differ");
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace amrule::prompt_rules
