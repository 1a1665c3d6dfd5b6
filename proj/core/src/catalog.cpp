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

#include "amrule/catalog.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "amrule/error.hpp"
#include "amrule/random.hpp"

namespace amrule::catalog {

namespace fs = std::filesystem;

std::string_view AttributeKindName(AttributeKind kind) {
  return kind == AttributeKind::kNumerical ? "numerical" : "categorical";
}

AttributeValue AttributeValue::Categorical(std::string value) {
  AttributeValue v;
  v.value_ = std::move(value);
  return v;
}

AttributeValue AttributeValue::Numerical(double value) {
  if (!std::isfinite(value)) {
    throw Error(ErrorCode::kIngestion, "numerical attribute must be finite");
  }
  AttributeValue v;
  v.value_ = value;
  return v;
}

Json AttributeValue::ToJson() const {
  if (is_missing()) return nullptr;
  if (is_numerical()) return number();
  return text();
}

AttributeValue AttributeValue::FromJson(const Json& value) {
  if (value.is_null()) return Missing();
  if (value.is_number()) return Numerical(value.get<double>());
  if (value.is_string()) return Categorical(value.get<std::string>());
  if (value.is_boolean()) return Categorical(value.get<bool>() ? "true" : "false");
  throw Error(ErrorCode::kIngestion,
              "attribute value must be null, number or string");
}

const AttributeValue& Product::attribute(const std::string& name) const {
  static const AttributeValue kMissing;
  auto it = attributes.find(name);
  return it == attributes.end() ? kMissing : it->second;
}

std::optional<std::size_t> AttributeSchema::IndexOf(
    const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].name == name) return i;
  }
  return std::nullopt;
}

double AttributeSchema::SparsityOf(const std::string& name) const {
  auto idx = IndexOf(name);
  return idx && *idx < sparsity.size() ? sparsity[*idx] : 1.0;
}

Catalog Catalog::FromProducts(std::vector<Product> products,
                              const std::vector<std::string>& column_order) {
  Catalog catalog;
  std::vector<std::string> order = column_order;
  std::set<std::string> seen(order.begin(), order.end());
  for (const auto& p : products) {
    for (const auto& [name, value] : p.attributes) {
      if (seen.insert(name).second) order.push_back(name);
    }
  }

  std::map<std::string, std::optional<AttributeKind>> kinds;
  for (std::size_t i = 0; i < products.size(); ++i) {
    const auto& p = products[i];
    if (!catalog.index_.emplace(p.id, i).second) {
      throw Error(ErrorCode::kIngestion, "duplicate product id " + p.id);
    }
    for (const auto& [name, value] : p.attributes) {
      if (value.is_missing()) continue;
      const auto kind = value.is_numerical() ? AttributeKind::kNumerical
                                             : AttributeKind::kCategorical;
      auto& slot = kinds[name];
      if (slot && *slot != kind) {
        throw Error(ErrorCode::kIngestion,
                    "attribute '" + name + "' mixes numerical and "
                    "categorical values (product " + p.id + ")");
      }
      slot = kind;
    }
  }

  if (!products.empty()) catalog.schema_.category = products.front().category;
  for (const auto& name : order) {
    auto it = kinds.find(name);
    const auto kind = (it != kinds.end() && it->second) ? *it->second
                                                        : AttributeKind::kCategorical;
    catalog.schema_.columns.push_back({name, kind});
    std::size_t missing = 0;
    for (const auto& p : products) {
      if (p.attribute(name).is_missing()) ++missing;
    }
    catalog.schema_.sparsity.push_back(
        products.empty() ? 1.0
                         : static_cast<double>(missing) /
                               static_cast<double>(products.size()));
  }
  catalog.products_ = std::move(products);
  return catalog;
}

const Product* Catalog::Find(const std::string& id) const {
  auto it = index_.find(id);
  return it == index_.end() ? nullptr : &products_[it->second];
}

const Product& Catalog::Get(const std::string& id) const {
  const Product* p = Find(id);
  if (p == nullptr) throw Error(ErrorCode::kNotFound, "unknown product " + id);
  return *p;
}

namespace {

std::string RequireString(const OrderedJson& row, const char* key,
                          std::size_t line) {
  auto it = row.find(key);
  if (it == row.end() || !it->is_string()) {
    throw Error(ErrorCode::kIngestion, "catalog line " + std::to_string(line) +
                                           ": missing string field '" + key +
                                           "'");
  }
  return it->get<std::string>();
}

}  // namespace

Catalog LoadCatalog(const fs::path& path) {
  const auto rows = ReadJsonLines(path);
  std::vector<Product> products;
  std::vector<std::string> order;
  std::set<std::string> seen;
  products.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    Product p;
    p.id = RequireString(row, "id", i + 1);
    p.category = RequireString(row, "category", i + 1);
    p.name = RequireString(row, "name", i + 1);
    p.description = RequireString(row, "description", i + 1);
    if (auto it = row.find("attributes"); it != row.end()) {
      if (!it->is_object()) {
        throw Error(ErrorCode::kIngestion,
                    "catalog line " + std::to_string(i + 1) +
                        ": attributes must be an object");
      }
      for (const auto& [name, value] : it->items()) {
        if (seen.insert(name).second) order.push_back(name);
        p.attributes[name] = AttributeValue::FromJson(Json(value));
      }
    }
    products.push_back(std::move(p));
  }
  return Catalog::FromProducts(std::move(products), order);
}

OrderedJson ProductToJson(const Product& product,
                          const AttributeSchema* schema) {
  OrderedJson row;
  row["id"] = product.id;
  row["category"] = product.category;
  row["name"] = product.name;
  OrderedJson attrs = OrderedJson::object();
  if (schema != nullptr) {
    for (const auto& col : schema->columns) {
      attrs[col.name] = OrderedJson(product.attribute(col.name).ToJson());
    }
  } else {
    for (const auto& [name, value] : product.attributes) {
      attrs[name] = OrderedJson(value.ToJson());
    }
  }
  row["attributes"] = std::move(attrs);
  row["description"] = product.description;
  return row;
}

void SaveCatalog(const fs::path& path, const Catalog& catalog) {
  std::string text;
  for (const auto& p : catalog.products()) {
    text += ProductToJson(p, &catalog.schema()).dump();
    text += '\n';
  }
  WriteTextFileAtomic(path, text);
}

std::vector<CoPurchaseRecord> LoadCoPurchase(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorCode::kIngestion, "co-purchase file is empty");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "anchor_id,rec_id,count") {
    throw Error(ErrorCode::kIngestion,
                "co-purchase header must be anchor_id,rec_id,count");
  }
  std::vector<CoPurchaseRecord> records;
  std::set<std::pair<std::string, std::string>> keys;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
    if (c2 == std::string::npos || line.find(',', c2 + 1) != std::string::npos) {
      throw Error(ErrorCode::kIngestion,
                  "co-purchase line " + std::to_string(line_no) +
                      ": expected 3 fields");
    }
    CoPurchaseRecord rec{line.substr(0, c1), line.substr(c1 + 1, c2 - c1 - 1),
                         0};
    const char* first = line.data() + c2 + 1;
    const char* last = line.data() + line.size();
    auto [ptr, ec] = std::from_chars(first, last, rec.count);
    if (ec != std::errc() || ptr != last) {
      throw Error(ErrorCode::kIngestion, "co-purchase line " +
                                             std::to_string(line_no) +
                                             ": count is not an integer");
    }
    if (rec.count < 1) {
      throw Error(ErrorCode::kIngestion, "co-purchase line " +
                                             std::to_string(line_no) +
                                             ": count must be >= 1");
    }
    if (!keys.emplace(rec.anchor_id, rec.rec_id).second) {
      throw Error(ErrorCode::kIngestion,
                  "duplicate co-purchase pair " + rec.anchor_id + "," +
                      rec.rec_id);
    }
    records.push_back(std::move(rec));
  }
  return records;
}

void SaveCoPurchase(const fs::path& path,
                    std::span<const CoPurchaseRecord> records) {
  std::string text = "anchor_id,rec_id,count\n";
  for (const auto& r : records) {
    text += r.anchor_id + "," + r.rec_id + "," + std::to_string(r.count) + "\n";
  }
  WriteTextFileAtomic(path, text);
}

std::string_view PairSourceName(PairSource source) {
  switch (source) {
    case PairSource::kCopurchase: return "copurchase";
    case PairSource::kRule: return "rule";
    case PairSource::kSynthetic: return "synthetic";
  }
  return "copurchase";
}

Json ToJson(const LabeledPair& pair) {
  Json j;
  j["anchor_id"] = pair.pair.anchor_id;
  j["rec_id"] = pair.pair.rec_id;
  j["label"] = pair.label;
  j["weak"] = pair.weak;
  j["source"] = PairSourceName(pair.source);
  j["iteration"] = pair.iteration ? Json(*pair.iteration) : Json(nullptr);
  j["count"] = pair.count;
  return j;
}

LabeledPair LabeledPairFromJson(const Json& j) {
  LabeledPair p;
  p.pair = {j.at("anchor_id").get<std::string>(),
            j.at("rec_id").get<std::string>()};
  p.label = j.at("label").get<int>();
  p.weak = j.value("weak", true);
  const auto source = j.value("source", std::string("copurchase"));
  p.source = source == "rule"        ? PairSource::kRule
             : source == "synthetic" ? PairSource::kSynthetic
                                     : PairSource::kCopurchase;
  if (j.contains("iteration") && !j["iteration"].is_null()) {
    p.iteration = j["iteration"].get<int>();
  }
  p.count = j.value("count", std::int64_t{0});
  return p;
}

namespace {

Json KeysToJson(const std::vector<PairKey>& keys) {
  Json arr = Json::array();
  for (const auto& k : keys) arr.push_back(Json::array({k.anchor_id, k.rec_id}));
  return arr;
}

std::vector<PairKey> KeysFromJson(const Json& arr) {
  std::vector<PairKey> keys;
  for (const auto& k : arr) {
    keys.push_back({k.at(0).get<std::string>(), k.at(1).get<std::string>()});
  }
  return keys;
}

std::size_t PairSpace(const Catalog& a, const Catalog& b) {
  return a.size() * b.size();
}

}  // namespace

Json ToJson(const DatasetSplit& split) {
  return Json{{"train", KeysToJson(split.train)},
              {"validation", KeysToJson(split.validation)},
              {"test", KeysToJson(split.test)},
              {"holdout_unlabeled", KeysToJson(split.holdout_unlabeled)}};
}

DatasetSplit DatasetSplitFromJson(const Json& j) {
  return {KeysFromJson(j.at("train")), KeysFromJson(j.at("validation")),
          KeysFromJson(j.at("test")), KeysFromJson(j.at("holdout_unlabeled"))};
}

std::vector<LabeledPair> BuildWeakDataset(
    const Catalog& anchors, const Catalog& recs,
    std::span<const CoPurchaseRecord> copurchase,
    const WeakDatasetOptions& options) {
  if (anchors.empty() || recs.empty()) {
    throw Error(ErrorCode::kIngestion, "both catalogs must be non-empty");
  }
  if (options.min_count < 1) {
    throw Error(ErrorCode::kConfig, "min_count must be >= 1");
  }
  if (!(options.neg_ratio >= 0.0) || !std::isfinite(options.neg_ratio)) {
    throw Error(ErrorCode::kConfig, "neg_ratio must be a non-negative real");
  }
  for (const auto& p : anchors.products()) {
    if (recs.Find(p.id) != nullptr) {
      throw Error(ErrorCode::kIngestion,
                  "catalogs share product id " + p.id);
    }
  }

  std::set<PairKey> logged;
  std::vector<LabeledPair> out;
  for (const auto& r : copurchase) {
    if (anchors.Find(r.anchor_id) == nullptr || recs.Find(r.rec_id) == nullptr) {
      continue;  // belongs to another category pair
    }
    PairKey key{r.anchor_id, r.rec_id};
    logged.insert(key);
    if (r.count >= options.min_count) {
      out.push_back({key, 1, true, PairSource::kCopurchase, std::nullopt,
                     r.count});
    }
  }
  if (out.empty()) {
    throw Error(ErrorCode::kEmptyPositive,
                "no co-purchase pair reaches min_count " +
                    std::to_string(options.min_count));
  }

  const auto n_neg = static_cast<std::size_t>(
      std::llround(options.neg_ratio * static_cast<double>(out.size())));
  const std::size_t available = PairSpace(anchors, recs) - logged.size();
  if (n_neg > available) {
    throw Error(ErrorCode::kIngestion,
                "requested " + std::to_string(n_neg) +
                    " negatives but only " + std::to_string(available) +
                    " unlogged pairs exist");
  }

  Rng rng = MakeRng(options.seed, 0x4e4547);
  std::uniform_int_distribution<std::size_t> pick_a(0, anchors.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_b(0, recs.size() - 1);
  std::set<PairKey> chosen;
  while (chosen.size() < n_neg) {
    const auto& a = anchors.products()[pick_a(rng)];
    const auto& b = recs.products()[pick_b(rng)];
    PairKey key{a.id, b.id};
    if (logged.count(key) != 0 || !chosen.insert(key).second) continue;
    out.push_back({key, -1, true, PairSource::kCopurchase, std::nullopt, 0});
  }
  return out;
}

namespace {

// Largest-remainder rounding of total * ratios.
std::vector<std::size_t> Apportion(std::size_t total,
                                   const std::vector<double>& ratios) {
  std::vector<std::size_t> sizes(ratios.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t s = 0; s < ratios.size(); ++s) {
    const double quota = ratios[s] * static_cast<double>(total);
    sizes[s] = static_cast<std::size_t>(std::floor(quota + 1e-9));
    assigned += sizes[s];
    remainders.emplace_back(quota - static_cast<double>(sizes[s]), s);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& x, const auto& y) { return x.first > y.first; });
  for (std::size_t k = 0; assigned < total; ++k, ++assigned) {
    ++sizes[remainders[k % remainders.size()].second];
  }
  return sizes;
}

}  // namespace

DatasetSplit SplitDataset(std::span<const LabeledPair> pairs,
                          const SplitRatios& ratios, std::uint64_t seed,
                          std::int64_t min_count_test) {
  const std::vector<double> r{ratios.train, ratios.validation, ratios.test};
  const double sum = r[0] + r[1] + r[2];
  if (std::abs(sum - 1.0) > 1e-9 || r[0] < 0 || r[1] < 0 || r[2] < 0) {
    throw Error(ErrorCode::kConfig, "split ratios must be >= 0 and sum to 1");
  }
  if (pairs.size() < 10) {
    throw Error(ErrorCode::kSplit, "need at least 10 pairs to split, got " +
                                       std::to_string(pairs.size()));
  }

  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    (pairs[i].label > 0 ? pos : neg).push_back(i);
  }
  for (const auto* cls : {&pos, &neg}) {
    if (!cls->empty() && cls->size() < 3) {
      throw Error(ErrorCode::kSplit,
                  "a label class has fewer than 3 pairs; cannot stratify");
    }
  }

  Rng rng = MakeRng(seed, 0x53504c);
  std::shuffle(pos.begin(), pos.end(), rng);
  std::shuffle(neg.begin(), neg.end(), rng);

  const auto totals = Apportion(pairs.size(), r);
  const auto pos_sizes = Apportion(pos.size(), r);
  std::vector<std::size_t> neg_sizes(3);
  std::size_t neg_left = neg.size();
  for (std::size_t s = 0; s < 3; ++s) {
    const std::size_t want = totals[s] >= pos_sizes[s] ? totals[s] - pos_sizes[s] : 0;
    neg_sizes[s] = std::min(want, neg_left);
    neg_left -= neg_sizes[s];
  }
  neg_sizes[0] += neg_left;

  DatasetSplit split;
  auto emit = [&](const std::vector<std::size_t>& shuffled,
                  const std::vector<std::size_t>& sizes, bool prefer_high) {
    std::vector<std::size_t> ranked = shuffled;
    if (prefer_high && min_count_test > 0) {
      std::stable_partition(ranked.begin(), ranked.end(), [&](std::size_t i) {
        return pairs[i].count >= min_count_test;
      });
    }
    std::set<std::size_t> in_test(ranked.begin(),
                                  ranked.begin() + static_cast<long>(sizes[2]));
    std::size_t k = 0;
    for (auto i : shuffled) {
      if (in_test.count(i)) continue;
      (k++ < sizes[0] ? split.train : split.validation).push_back(pairs[i].pair);
    }
    for (std::size_t t = 0; t < sizes[2]; ++t) {
      split.test.push_back(pairs[ranked[t]].pair);
    }
  };
  emit(pos, pos_sizes, true);
  emit(neg, neg_sizes, false);
  return split;
}

std::vector<PairKey> SampleUnlabeledPool(
    const Catalog& anchors, const Catalog& recs,
    std::span<const CoPurchaseRecord> copurchase, std::int64_t min_count,
    std::span<const PairKey> exclude, std::size_t count, std::uint64_t seed) {
  std::set<PairKey> blocked(exclude.begin(), exclude.end());
  std::set<PairKey> logged;
  std::vector<PairKey> low;
  for (const auto& r : copurchase) {
    if (anchors.Find(r.anchor_id) == nullptr || recs.Find(r.rec_id) == nullptr) {
      continue;
    }
    PairKey key{r.anchor_id, r.rec_id};
    logged.insert(key);
    if (r.count < min_count && blocked.count(key) == 0) low.push_back(key);
  }
  Rng rng = MakeRng(seed, 0x504f4f4c);
  std::shuffle(low.begin(), low.end(), rng);
  if (low.size() > count) low.resize(count);

  std::vector<PairKey> pool = low;
  std::set<PairKey> chosen(pool.begin(), pool.end());
  const std::size_t space = PairSpace(anchors, recs);
  std::size_t unavailable = logged.size();
  for (const auto& k : blocked) unavailable += logged.count(k) == 0 ? 1 : 0;
  const std::size_t room = space > unavailable ? space - unavailable : 0;
  const std::size_t random_target = std::min(count - pool.size(), room);

  std::uniform_int_distribution<std::size_t> pick_a(0, anchors.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_b(0, recs.size() - 1);
  std::size_t added = 0;
  while (added < random_target) {
    PairKey key{anchors.products()[pick_a(rng)].id,
                recs.products()[pick_b(rng)].id};
    if (logged.count(key) || blocked.count(key) || !chosen.insert(key).second) {
      continue;
    }
    pool.push_back(std::move(key));
    ++added;
  }
  return pool;
}

}  // namespace amrule::catalog
