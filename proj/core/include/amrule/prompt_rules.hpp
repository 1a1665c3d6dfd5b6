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

#ifndef AMRULE_PROMPT_RULES_HPP_
#define AMRULE_PROMPT_RULES_HPP_

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "amrule/catalog.hpp"
#include "amrule/lm_client.hpp"
#include "amrule/rule.hpp"

namespace amrule::prompt_rules {

enum class Polarity { kCompatible, kNotCompatible };

struct BuiltPrompt {
  std::string context;   // "n_a: Desc_a. n_b: Desc_b. "
  std::string sentence;  // "The n_a is ... because their f are [MASK]."

  std::string text() const { return context + sentence; }
};

// "brand_name" -> "brand names".
std::string AttributePhrase(const std::string& attribute);

// Cuts `text` after the last sentence end ('.', '!' or '?' followed by a
// space or the end of text) that keeps it within `limit` bytes. Returns an
// empty string when no such boundary exists.
std::string TruncateToSentence(const std::string& text, std::size_t limit);

// Throws kPromptUnavailable for an empty description, or when the
// descriptions cannot be cut down to fit `max_chars`.
BuiltPrompt BuildPrompt(const catalog::Product& anchor,
                        const catalog::Product& rec,
                        const std::string& attribute, Polarity polarity,
                        std::size_t max_chars =
                            std::numeric_limits<std::size_t>::max());

struct MaskPrediction {
  std::string token;
  std::size_t token_id = 0;
  double probability = 0.0;
};

// Argmax over the client's distribution, ties to the lowest token id.
MaskPrediction PredictMask(LmClient& client, const std::string& prompt);

std::string FillMaskSlot(const std::string& text, const std::string& token);

struct FilledPrompt {
  BuiltPrompt prompt;
  MaskPrediction prediction;
  std::string filled_text;
  std::string rule_text;
};

FilledPrompt FillPrompt(LmClient& client, const catalog::Product& anchor,
                        const catalog::Product& rec,
                        const std::string& attribute, Polarity polarity);

// Completes a Prompt placeholder from tree_rules using the large-error pair
// (anchor, rec) and its weak label. The placeholder's id and mu are kept.
CandidateRule ProposePromptRule(LmClient& client, const CandidateRule& placeholder,
                                const catalog::Product& anchor,
                                const catalog::Product& rec, int label);

// Embedding of an unlabeled pair's rule sentence, built with polarity
// "compatible" and its own predicted token.
std::vector<double> UnlabeledEmbedding(LmClient& client,
                                       const catalog::Product& anchor,
                                       const catalog::Product& rec,
                                       const std::string& attribute);

double Cosine(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace amrule::prompt_rules

#endif  // AMRULE_PROMPT_RULES_HPP_
