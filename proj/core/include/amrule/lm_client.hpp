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

#ifndef AMRULE_LM_CLIENT_HPP_
#define AMRULE_LM_CLIENT_HPP_

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace amrule::prompt_rules {

inline constexpr char kMaskToken[] = "[MASK]";

struct MaskDistribution {
  std::vector<std::string> tokens;
  std::vector<double> probs;
};

// Throws kProtocol unless tokens/probs agree in length, are non-empty,
// non-negative, finite and sum to 1 within 1e-6.
void ValidateDistribution(const MaskDistribution& distribution);

class LmClient {
 public:
  virtual ~LmClient() = default;
  virtual MaskDistribution FillMask(const std::string& prompt) = 0;
  virtual std::vector<double> Embed(const std::string& text) = 0;
  virtual std::size_t embedding_dim() const = 0;
  // Longest prompt the client accepts, in bytes.
  virtual std::size_t max_prompt_chars() const { return 4096; }
};

// Lowercase alphanumeric word split used by the stub.
std::vector<std::string> Tokenize(const std::string& text);

// Offline client. The mask distribution puts 0.9 on "same" when the value
// tokens next to the attribute phrase agree in both descriptions, else 0.9 on
// "different"; the remaining mass is spread evenly over the rest of the
// vocabulary. Embeddings are signed hashed bags of words, L2-normalized.
class StubLmClient : public LmClient {
 public:
  static constexpr std::size_t kDim = 64;
  static const std::vector<std::string>& Vocabulary();

  explicit StubLmClient(std::size_t max_prompt_chars = 4096)
      : max_prompt_chars_(max_prompt_chars) {}

  MaskDistribution FillMask(const std::string& prompt) override;
  std::vector<double> Embed(const std::string& text) override;
  std::size_t embedding_dim() const override { return kDim; }
  std::size_t max_prompt_chars() const override { return max_prompt_chars_; }

  // The value token the stub reads for `attribute_phrase` in a description:
  // the word after the phrase (skipping linking words), or the first
  // non-article word when the phrase does not occur.
  static std::string ValueToken(const std::string& description,
                                const std::string& attribute_phrase);

 private:
  std::size_t max_prompt_chars_;
};

struct HttpLmOptions {
  int retries = 3;
  double timeout_seconds = 10.0;
  std::size_t embedding_dim = StubLmClient::kDim;
  std::size_t max_prompt_chars = 4096;
};

// Speaks POST /v1/fill_mask and POST /v1/embed against `base_url`
// ("http://host:port"). Exhausted retries raise kTransport; malformed bodies
// raise kProtocol.
class HttpLmClient : public LmClient {
 public:
  explicit HttpLmClient(std::string base_url, HttpLmOptions options = {});

  MaskDistribution FillMask(const std::string& prompt) override;
  std::vector<double> Embed(const std::string& text) override;
  std::size_t embedding_dim() const override { return options_.embedding_dim; }
  std::size_t max_prompt_chars() const override {
    return options_.max_prompt_chars;
  }

 private:
  std::string Post(const std::string& path, const std::string& body);

  std::string base_url_;
  HttpLmOptions options_;
};

// Memoizes another client by request text. Thread-safe.
class CachedLmClient : public LmClient {
 public:
  explicit CachedLmClient(std::shared_ptr<LmClient> inner)
      : inner_(std::move(inner)) {}

  MaskDistribution FillMask(const std::string& prompt) override;
  std::vector<double> Embed(const std::string& text) override;
  std::size_t embedding_dim() const override { return inner_->embedding_dim(); }
  std::size_t max_prompt_chars() const override {
    return inner_->max_prompt_chars();
  }

 private:
  std::shared_ptr<LmClient> inner_;
  std::mutex mu_;
  std::map<std::string, MaskDistribution> masks_;
  std::map<std::string, std::vector<double>> embeddings_;
};

}  // namespace amrule::prompt_rules

#endif  // AMRULE_LM_CLIENT_HPP_
