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

#ifndef AMRULE_CATALOG_HPP_
#define AMRULE_CATALOG_HPP_

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "amrule/json_util.hpp"

namespace amrule::catalog {

enum class AttributeKind { kCategorical, kNumerical };

std::string_view AttributeKindName(AttributeKind kind);

// A single attribute cell. Missing values are a distinct state (serialized as
// JSON null) so they can never collide with a categorical string.
class AttributeValue {
 public:
  AttributeValue() = default;

  static AttributeValue Missing() { return AttributeValue(); }
  static AttributeValue Categorical(std::string value);
  static AttributeValue Numerical(double value);

  bool is_missing() const {
    return std::holds_alternative<std::monostate>(value_);
  }
  bool is_categorical() const {
    return std::holds_alternative<std::string>(value_);
  }
  bool is_numerical() const { return std::holds_alternative<double>(value_); }

  const std::string& text() const { return std::get<std::string>(value_); }
  double number() const { return std::get<double>(value_); }

  Json ToJson() const;
  static AttributeValue FromJson(const Json& value);

  friend bool operator==(const AttributeValue&, const AttributeValue&) =
      default;

 private:
  std::variant<std::monostate, std::string, double> value_;
};

struct Product {
  std::string id;
  std::string category;
  std::string name;
  std::map<std::string, AttributeValue> attributes;
  std::string description;

  // Absent keys read as missing.
  const AttributeValue& attribute(const std::string& name) const;
};

struct SchemaColumn {
  std::string name;
  AttributeKind kind = AttributeKind::kCategorical;
};

struct AttributeSchema {
  std::string category;
  std::vector<SchemaColumn> columns;
  std::vector<double> sparsity;  // missing-rate per column

  std::optional<std::size_t> IndexOf(const std::string& name) const;
  double SparsityOf(const std::string& name) const;
};

class Catalog {
 public:
  Catalog() = default;

  // Infers the schema (first-seen column order, kind from the JSON type) and
  // per-column sparsity. Throws kIngestion on duplicate ids or a column whose
  // values mix strings and numbers.
  static Catalog FromProducts(std::vector<Product> products,
                              const std::vector<std::string>& column_order = {});

  const AttributeSchema& schema() const { return schema_; }
  const std::vector<Product>& products() const { return products_; }
  std::size_t size() const { return products_.size(); }
  bool empty() const { return products_.empty(); }

  const Product* Find(const std::string& id) const;
  const Product& Get(const std::string& id) const;

 private:
  AttributeSchema schema_;
  std::vector<Product> products_;
  std::unordered_map<std::string, std::size_t> index_;
};

Catalog LoadCatalog(const std::filesystem::path& path);
void SaveCatalog(const std::filesystem::path& path, const Catalog& catalog);
OrderedJson ProductToJson(const Product& product,
                          const AttributeSchema* schema = nullptr);

struct CoPurchaseRecord {
  std::string anchor_id;
  std::string rec_id;
  std::int64_t count = 1;
};

// CSV with header anchor_id,rec_id,count.
std::vector<CoPurchaseRecord> LoadCoPurchase(const std::filesystem::path& path);
void SaveCoPurchase(const std::filesystem::path& path,
                    std::span<const CoPurchaseRecord> records);

struct PairKey {
  std::string anchor_id;
  std::string rec_id;

  std::string ToString() const { return anchor_id + "|" + rec_id; }
  friend auto operator<=>(const PairKey&, const PairKey&) = default;
};

enum class PairSource { kCopurchase, kRule, kSynthetic };

std::string_view PairSourceName(PairSource source);

struct LabeledPair {
  PairKey pair;
  int label = 1;  // +1 compatible, -1 not compatible
  bool weak = true;
  PairSource source = PairSource::kCopurchase;
  std::optional<int> iteration;  // set for rule-minted pairs
  std::int64_t count = 0;        // co-purchase count, 0 when not logged
};

Json ToJson(const LabeledPair& pair);
LabeledPair LabeledPairFromJson(const Json& json);

struct WeakDatasetOptions {
  std::int64_t min_count = 3;
  double neg_ratio = 1.0;
  std::uint64_t seed = 0;
};

// Positives are logged pairs with count >= min_count; negatives are uniformly
// drawn anchor x recommendation pairs that never appear in the log.
std::vector<LabeledPair> BuildWeakDataset(
    const Catalog& anchors, const Catalog& recs,
    std::span<const CoPurchaseRecord> copurchase,
    const WeakDatasetOptions& options);

struct SplitRatios {
  double train = 0.7;
  double validation = 0.15;
  double test = 0.15;
};

struct DatasetSplit {
  std::vector<PairKey> train;
  std::vector<PairKey> validation;
  std::vector<PairKey> test;
  std::vector<PairKey> holdout_unlabeled;
};

Json ToJson(const DatasetSplit& split);
DatasetSplit DatasetSplitFromJson(const Json& json);

// Stratified by label. When min_count_test > 0 the test positives are drawn
// from pairs whose co-purchase count reaches that threshold first.
DatasetSplit SplitDataset(std::span<const LabeledPair> pairs,
                          const SplitRatios& ratios, std::uint64_t seed,
                          std::int64_t min_count_test = 0);

// Unlabeled pool: logged pairs below the positive threshold first, then
// uniformly drawn cross pairs, never touching `exclude`.
std::vector<PairKey> SampleUnlabeledPool(
    const Catalog& anchors, const Catalog& recs,
    std::span<const CoPurchaseRecord> copurchase, std::int64_t min_count,
    std::span<const PairKey> exclude, std::size_t count, std::uint64_t seed);

}  // namespace amrule::catalog

#endif  // AMRULE_CATALOG_HPP_
