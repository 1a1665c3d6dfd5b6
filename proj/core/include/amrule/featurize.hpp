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

#ifndef AMRULE_FEATURIZE_HPP_
#define AMRULE_FEATURIZE_HPP_

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "amrule/catalog.hpp"
#include "amrule/json_util.hpp"

namespace amrule::featurize {

using catalog::AttributeKind;

enum class Provenance { kAnchor, kRec, kSharedDiff };

std::string_view ProvenanceName(Provenance provenance);

struct FeatureDescriptor {
  std::size_t index = 0;
  std::string attribute_name;
  Provenance provenance = Provenance::kAnchor;
  AttributeKind kind = AttributeKind::kCategorical;
};

// Column layout of [anchor block | rec block | shared-diff block].
class EncodingLayout {
 public:
  EncodingLayout() = default;
  explicit EncodingLayout(std::vector<FeatureDescriptor> descriptors);

  std::size_t size() const { return descriptors_.size(); }
  const std::vector<FeatureDescriptor>& descriptors() const {
    return descriptors_;
  }
  const FeatureDescriptor& at(std::size_t index) const {
    return descriptors_.at(index);
  }
  std::optional<std::size_t> Find(const std::string& attribute,
                                  Provenance provenance) const;

  Json ToJson() const;
  static EncodingLayout FromJson(const Json& json);

 private:
  std::vector<FeatureDescriptor> descriptors_;
  std::map<std::pair<std::string, Provenance>, std::size_t> lookup_;
};

// values[i] is the raw encoded value; mask[i] == 0 marks a missing input,
// in which case values[i] holds the placeholder 0.
struct PairEncoding {
  std::vector<double> values;
  std::vector<std::uint8_t> mask;

  std::size_t size() const { return values.size(); }
  bool present(std::size_t i) const { return mask[i] != 0; }
  friend bool operator==(const PairEncoding&, const PairEncoding&) = default;
};

struct SharedAttributes {
  std::vector<std::string> names;
  std::vector<std::string> warnings;
};

// Name intersection in schema_a order; same-name columns whose kinds disagree
// are dropped with a warning.
SharedAttributes FindSharedAttributes(const catalog::AttributeSchema& schema_a,
                                      const catalog::AttributeSchema& schema_b);

class PairEncoder {
 public:
  PairEncoder() = default;

  // Categorical codes are frequency ranks (1 = most frequent) over the
  // products appearing in `fit_pairs`; standardization statistics come from
  // the same pairs. Code 0 is reserved for the missing placeholder.
  static PairEncoder Fit(const catalog::Catalog& anchors,
                         const catalog::Catalog& recs,
                         std::span<const catalog::PairKey> fit_pairs);

  // Layout-only encoder with identity code maps learned lazily; used when the
  // caller wants raw encodings without a fitted dataset.
  static PairEncoder FromSchemas(const catalog::AttributeSchema& schema_a,
                                 const catalog::AttributeSchema& schema_b);

  const EncodingLayout& layout() const { return *layout_; }
  std::shared_ptr<const EncodingLayout> shared_layout() const { return layout_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  PairEncoding Encode(const catalog::Product& anchor,
                      const catalog::Product& rec) const;

  // Model-space copy: non-diff columns and numerical diff columns are
  // standardized; masked columns stay 0.
  void Standardize(const PairEncoding& encoding, std::span<double> out) const;
  std::vector<double> Standardize(const PairEncoding& encoding) const;

  Json ToJson() const;
  static PairEncoder FromJson(const Json& json);

 private:
  struct Column {
    std::string attribute;
    Provenance provenance;
    AttributeKind kind;
    std::map<std::string, double> codes;  // categorical blocks only
    double mean = 0.0;
    double scale = 1.0;
    bool standardize = false;
  };

  void BuildLayout();
  double CategoricalCode(const Column& column, const std::string& value) const;

  std::vector<Column> columns_;
  std::shared_ptr<const EncodingLayout> layout_ =
      std::make_shared<EncodingLayout>();
  std::vector<std::string> warnings_;
};

}  // namespace amrule::featurize

#endif  // AMRULE_FEATURIZE_HPP_
