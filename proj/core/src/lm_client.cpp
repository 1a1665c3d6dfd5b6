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

#include "amrule/lm_client.hpp"

#include <httplib.h>

#include <cctype>
#include <algorithm>
#include <cmath>
#include <optional>
#include <regex>
#include <set>

#include "amrule/error.hpp"
#include "amrule/json_util.hpp"

namespace amrule::prompt_rules {

void ValidateDistribution(const MaskDistribution& d) {
  if (d.tokens.empty() || d.tokens.size() != d.probs.size()) {
    throw Error(ErrorCode::kProtocol,
                "mask distribution needs matching non-empty tokens and probs");
  }
  double sum = 0.0;
  for (double p : d.probs) {
    if (!std::isfinite(p) || p < 0.0) {
      throw Error(ErrorCode::kProtocol, "mask probability out of range");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-6) {
    throw Error(ErrorCode::kProtocol,
                "mask probabilities sum to " + std::to_string(sum));
  }
}

std::vector<std::string> Tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

const std::vector<std::string>& StubLmClient::Vocabulary() {
  static const std::vector<std::string> vocab = {
      "same", "different", "compatible", "similar", "matching", "unknown"};
  return vocab;
}

namespace {

std::string Lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::size_t FindCaseInsensitive(const std::string& haystack,
                                const std::string& needle, std::size_t from) {
  return Lower(haystack).find(Lower(needle), from);
}

std::string Singular(const std::string& phrase) {
  if (phrase.size() > 1 && phrase.back() == 's') {
    return phrase.substr(0, phrase.size() - 1);
  }
  return phrase;
}

struct ParsedPrompt {
  std::string desc_a;
  std::string desc_b;
  std::string attribute_phrase;
};

// Splits "<n_a>: <Desc_a> <n_b>: <Desc_b> The <n_a> is [not] compatible with
// the <n_b> because their <f> are [MASK]."
std::optional<ParsedPrompt> ParsePrompt(const std::string& prompt) {
  const auto because = prompt.rfind(" because their ");
  if (because == std::string::npos) return std::nullopt;
  const auto tail_start = prompt.rfind("The ", because);
  if (tail_start == std::string::npos) return std::nullopt;
  const std::string tail = prompt.substr(tail_start);
  static const std::regex kTail(
      R"(^The (.+) is (not )?compatible with the (.+) because their (.+) are \[MASK\]\.\s*$)");
  std::smatch m;
  if (!std::regex_match(tail, m, kTail)) return std::nullopt;
  const std::string name_a = m[1].str();
  const std::string name_b = m[3].str();
  ParsedPrompt out;
  out.attribute_phrase = m[4].str();
  const std::string body = prompt.substr(0, tail_start);
  const auto head_a = FindCaseInsensitive(body, name_a + ": ", 0);
  if (head_a == std::string::npos) return std::nullopt;
  const auto start_a = head_a + name_a.size() + 2;
  const auto head_b = FindCaseInsensitive(body, " " + name_b + ": ", start_a);
  if (head_b == std::string::npos) return std::nullopt;
  out.desc_a = body.substr(start_a, head_b - start_a);
  out.desc_b = body.substr(head_b + name_b.size() + 3);
  return out;
}

std::uint64_t Fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

std::string StubLmClient::ValueToken(const std::string& description,
                                     const std::string& attribute_phrase) {
  static const std::set<std::string> kLinking = {"is", "are", "of", "was", "a",
                                                 "an", "the"};
  static const std::set<std::string> kArticles = {"the", "a", "an"};
  const auto words = Tokenize(description);
  for (const auto& phrase_text : {attribute_phrase, Singular(attribute_phrase)}) {
    const auto phrase = Tokenize(phrase_text);
    if (phrase.empty() || phrase.size() > words.size()) continue;
    for (std::size_t i = 0; i + phrase.size() <= words.size(); ++i) {
      if (!std::equal(phrase.begin(), phrase.end(), words.begin() + i)) continue;
      for (std::size_t j = i + phrase.size(); j < words.size(); ++j) {
        if (!kLinking.contains(words[j])) return words[j];
      }
    }
  }
  for (const auto& w : words) {
    if (!kArticles.contains(w)) return w;
  }
  return {};
}

MaskDistribution StubLmClient::FillMask(const std::string& prompt) {
  if (prompt.find(kMaskToken) == std::string::npos) {
    throw Error(ErrorCode::kProtocol, "prompt has no mask slot");
  }
  std::string target = "different";
  if (auto parsed = ParsePrompt(prompt)) {
    const auto va = ValueToken(parsed->desc_a, parsed->attribute_phrase);
    const auto vb = ValueToken(parsed->desc_b, parsed->attribute_phrase);
    if (!va.empty() && va == vb) target = "same";
  }
  const auto& vocab = Vocabulary();
  MaskDistribution d;
  d.tokens = vocab;
  const double rest = 0.1 / static_cast<double>(vocab.size() - 1);
  for (const auto& t : vocab) d.probs.push_back(t == target ? 0.9 : rest);
  return d;
}

std::vector<double> StubLmClient::Embed(const std::string& text) {
  std::vector<double> v(kDim, 0.0);
  for (const auto& tok : Tokenize(text)) {
    const std::uint64_t h = Fnv1a(tok);
    v[h % kDim] += (h >> 63) != 0 ? -1.0 : 1.0;
  }
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  if (norm > 0.0) {
    for (double& x : v) x /= norm;
  }
  return v;
}

HttpLmClient::HttpLmClient(std::string base_url, HttpLmOptions options)
    : base_url_(std::move(base_url)), options_(options) {
  if (options_.retries < 0) {
    throw Error(ErrorCode::kConfig, "retry count must be >= 0");
  }
}

std::string HttpLmClient::Post(const std::string& path, const std::string& body) {
  httplib::Client client(base_url_);
  const auto timeout = std::chrono::duration<double>(options_.timeout_seconds);
  client.set_connection_timeout(
      std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_read_timeout(
      std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  std::string last_error;
  const int attempts = options_.retries + 1;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    auto res = client.Post(path, body, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500) {
      last_error = "status " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw Error(ErrorCode::kProtocol, path + " returned status " +
                                            std::to_string(res->status));
    }
    return res->body;
  }
  throw Error(ErrorCode::kTransport,
              path + " failed after " + std::to_string(options_.retries) +
                  " retries: " + last_error);
}

MaskDistribution HttpLmClient::FillMask(const std::string& prompt) {
  const std::string body = Post("/v1/fill_mask", Json{{"prompt", prompt}}.dump());
  MaskDistribution d;
  try {
    const Json j = Json::parse(body);
    d.tokens = j.at("tokens").get<std::vector<std::string>>();
    d.probs = j.at("probs").get<std::vector<double>>();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kProtocol,
                std::string("malformed fill_mask response: ") + e.what());
  }
  ValidateDistribution(d);
  return d;
}

std::vector<double> HttpLmClient::Embed(const std::string& text) {
  const std::string body = Post("/v1/embed", Json{{"text", text}}.dump());
  std::vector<double> v;
  try {
    v = Json::parse(body).at("vector").get<std::vector<double>>();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kProtocol,
                std::string("malformed embed response: ") + e.what());
  }
  if (v.size() != options_.embedding_dim) {
    throw Error(ErrorCode::kProtocol, "embedding has dimension " +
                                          std::to_string(v.size()));
  }
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw Error(ErrorCode::kProtocol, "embedding has non-finite entries");
    }
  }
  return v;
}

MaskDistribution CachedLmClient::FillMask(const std::string& prompt) {
  {
    std::lock_guard lock(mu_);
    if (auto it = masks_.find(prompt); it != masks_.end()) return it->second;
  }
  auto d = inner_->FillMask(prompt);
  std::lock_guard lock(mu_);
  return masks_.emplace(prompt, std::move(d)).first->second;
}

std::vector<double> CachedLmClient::Embed(const std::string& text) {
  {
    std::lock_guard lock(mu_);
    if (auto it = embeddings_.find(text); it != embeddings_.end()) {
      return it->second;
    }
  }
  auto v = inner_->Embed(text);
  std::lock_guard lock(mu_);
  return embeddings_.emplace(text, std::move(v)).first->second;
}

}  // namespace amrule::prompt_rules
