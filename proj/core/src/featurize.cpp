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

#include "amrule/featurize.hpp"

#include <algorithm>
#include <cmath>

#include "amrule/error.hpp"

namespace amrule::featurize {

std::string_view ProvenanceName(Provenance provenance) {
  switch (provenance) {
    case Provenance::kAnchor: return "anchor";
    case Provenance::kRec: return "rec";
    case Provenance::kSharedDiff: return "shared_diff";
  }
  return "anchor";
}

namespace {

Provenance ProvenanceFromName(const std::string& name) {
  if (name == "anchor") return Provenance::kAnchor;
  if (name == "rec") return Provenance::kRec;
  if (name == "shared_diff") return Provenance::kSharedDiff;
  throw Error(ErrorCode::kProtocol, "unknown provenance " + name);
}

AttributeKind KindFromName(const std::string& name) {
  if (name == "numerical") return AttributeKind::kNumerical;
  if (name == "categorical") return AttributeKind::kCategorical;
  throw Error(ErrorCode::kProtocol, "unknown attribute kind " + name);
}

}  // namespace

EncodingLayout::EncodingLayout(std::vector<FeatureDescriptor> descriptors)
    : descriptors_(std::move(descriptors)) {
  for (std::size_t i = 0; i < descriptors_.size(); ++i) {
    if (descriptors_[i].index != i) {
      throw Error(ErrorCode::kShape, "descriptor indices must be contiguous");
    }
    lookup_[{descriptors_[i].attribute_name, descriptors_[i].provenance}] = i;
  }
}

std::optional<std::size_t> EncodingLayout::Find(const std::string& attribute,
                                                Provenance provenance) const {
  auto it = lookup_.find({attribute, provenance});
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

Json EncodingLayout::ToJson() const {
  Json arr = Json::array();
  for (const auto& d : descriptors_) {
    arr.push_back({{"index", d.index},
                   {"attribute", d.attribute_name},
                   {"provenance", ProvenanceName(d.provenance)},
                   {"kind", catalog::AttributeKindName(d.kind)}});
  }
  return arr;
}

EncodingLayout EncodingLayout::FromJson(const Json& json) {
  std::vector<FeatureDescriptor> descriptors;
  for (const auto& d : json) {
    descriptors.push_back({d.at("index").get<std::size_t>(),
                           d.at("attribute").get<std::string>(),
                           ProvenanceFromName(d.at("provenance").get<std::string>()),
                           KindFromName(d.at("kind").get<std::string>())});
  }
  return EncodingLayout(std::move(descriptors));
}

SharedAttributes FindSharedAttributes(const catalog::AttributeSchema& schema_a,
                                      const catalog::AttributeSchema& schema_b) {
  SharedAttributes shared;
  for (const auto& col : schema_a.columns) {
    auto idx = schema_b.IndexOf(col.name);
    if (!idx) continue;
    if (schema_b.columns[*idx].kind != col.kind) {
      shared.warnings.push_back(
          "attribute '" + col.name + "' is " +
          std::string(catalog::AttributeKindName(col.kind)) + " in " +
          schema_a.category + " but " +
          std::string(catalog::AttributeKindName(schema_b.columns[*idx].kind)) +
          " in " + schema_b.category + "; excluded from the shared block");
      continue;
    }
    shared.names.push_back(col.name);
  }
  return shared;
}

PairEncoder PairEncoder::FromSchemas(const catalog::AttributeSchema& schema_a,
                                     const catalog::AttributeSchema& schema_b) {
  PairEncoder enc;
  for (const auto& col : schema_a.columns) {
    enc.columns_.push_back({col.name, Provenance::kAnchor, col.kind, {}, 0, 1,
                            true});
  }
  for (const auto& col : schema_b.columns) {
    enc.columns_.push_back({col.name, Provenance::kRec, col.kind, {}, 0, 1,
                            true});
  }
  auto shared = FindSharedAttributes(schema_a, schema_b);
  for (const auto& name : shared.names) {
    const auto kind = schema_a.columns[*schema_a.IndexOf(name)].kind;
    enc.columns_.push_back({name, Provenance::kSharedDiff, kind, {}, 0, 1,
                            kind == AttributeKind::kNumerical});
  }
  enc.warnings_ = std::move(shared.warnings);
  enc.BuildLayout();
  return enc;
}

PairEncoder PairEncoder::Fit(const catalog::Catalog& anchors,
                             const catalog::Catalog& recs,
                             std::span<const catalog::PairKey> fit_pairs) {
  PairEncoder enc = FromSchemas(anchors.schema(), recs.schema());

  for (auto& col : enc.columns_) {
    if (col.provenance == Provenance::kSharedDiff ||
        col.kind != AttributeKind::kCategorical) {
      continue;
    }
    std::map<std::string, std::size_t> freq;
    for (const auto& key : fit_pairs) {
      const auto& product = col.provenance == Provenance::kAnchor
                                ? anchors.Get(key.anchor_id)
                                : recs.Get(key.rec_id);
      const auto& v = product.attribute(col.attribute);
      if (v.is_categorical()) ++freq[v.text()];
    }
    std::vector<std::pair<std::string, std::size_t>> ranked(freq.begin(),
                                                            freq.end());
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& x, const auto& y) { return x.second > y.second; });
    for (std::size_t r = 0; r < ranked.size(); ++r) {
      col.codes[ranked[r].first] = static_cast<double>(r + 1);
    }
  }

  const std::size_t d = enc.columns_.size();
  std::vector<double> sum(d, 0.0), sum_sq(d, 0.0);
  std::vector<std::size_t> n(d, 0);
  for (const auto& key : fit_pairs) {
    const auto e = enc.Encode(anchors.Get(key.anchor_id), recs.Get(key.rec_id));
    for (std::size_t i = 0; i < d; ++i) {
      if (!e.present(i)) continue;
      sum[i] += e.values[i];
      sum_sq[i] += e.values[i] * e.values[i];
      ++n[i];
    }
  }
  for (std::size_t i = 0; i < d; ++i) {
    auto& col = enc.columns_[i];
    if (!col.standardize || n[i] == 0) continue;
    const double mean = sum[i] / static_cast<double>(n[i]);
    const double var =
        std::max(0.0, sum_sq[i] / static_cast<double>(n[i]) - mean * mean);
    col.mean = mean;
    col.scale = var > 1e-24 ? std::sqrt(var) : 1.0;
  }
  return enc;
}

void PairEncoder::BuildLayout() {
  std::vector<FeatureDescriptor> descriptors;
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    descriptors.push_back(
        {i, columns_[i].attribute, columns_[i].provenance, columns_[i].kind});
  }
  layout_ = std::make_shared<EncodingLayout>(std::move(descriptors));
}

double PairEncoder::CategoricalCode(const Column& column,
                                    const std::string& value) const {
  auto it = column.codes.find(value);
  if (it != column.codes.end()) return it->second;
  return static_cast<double>(column.codes.size() + 1);  // unseen level
}

PairEncoding PairEncoder::Encode(const catalog::Product& anchor,
                                 const catalog::Product& rec) const {
  PairEncoding out;
  out.values.assign(columns_.size(), 0.0);
  out.mask.assign(columns_.size(), 0);
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    const auto& col = columns_[i];
    if (col.provenance == Provenance::kSharedDiff) {
      const auto& a = anchor.attribute(col.attribute);
      const auto& b = rec.attribute(col.attribute);
      if (col.kind == AttributeKind::kNumerical) {
        if (a.is_numerical() && b.is_numerical()) {
          out.values[i] = a.number() - b.number();
          out.mask[i] = 1;
        }
      } else if (a.is_categorical() && b.is_categorical()) {
        out.values[i] = a.text() == b.text() ? 0.0 : 1.0;
        out.mask[i] = 1;
      }
      continue;
    }
    const auto& product = col.provenance == Provenance::kAnchor ? anchor : rec;
    const auto& v = product.attribute(col.attribute);
    if (col.kind == AttributeKind::kNumerical && v.is_numerical()) {
      out.values[i] = v.number();
      out.mask[i] = 1;
    } else if (col.kind == AttributeKind::kCategorical && v.is_categorical()) {
      out.values[i] = CategoricalCode(col, v.text());
      out.mask[i] = 1;
    }
  }
  return out;
}

void PairEncoder::Standardize(const PairEncoding& encoding,
                              std::span<double> out) const {
  if (encoding.size() != columns_.size() || out.size() != columns_.size()) {
    throw Error(ErrorCode::kShape, "encoding width does not match the layout");
  }
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    const auto& col = columns_[i];
    if (!encoding.present(i)) {
      out[i] = 0.0;
    } else if (col.standardize) {
      out[i] = (encoding.values[i] - col.mean) / col.scale;
    } else {
      out[i] = encoding.values[i];
    }
  }
}

std::vector<double> PairEncoder::Standardize(const PairEncoding& encoding) const {
  std::vector<double> out(columns_.size());
  Standardize(encoding, out);
  return out;
}

Json PairEncoder::ToJson() const {
  Json cols = Json::array();
  for (const auto& c : columns_) {
    Json codes = Json::object();
    for (const auto& [value, code] : c.codes) codes[value] = code;
    cols.push_back({{"attribute", c.attribute},
                    {"provenance", ProvenanceName(c.provenance)},
                    {"kind", catalog::AttributeKindName(c.kind)},
                    {"codes", codes},
                    {"mean", c.mean},
                    {"scale", c.scale},
                    {"standardize", c.standardize}});
  }
  return Json{{"descriptors", layout_->ToJson()},
              {"columns", cols},
              {"warnings", warnings_}};
}

PairEncoder PairEncoder::FromJson(const Json& json) {
  PairEncoder enc;
  for (const auto& c : json.at("columns")) {
    Column col{c.at("attribute").get<std::string>(),
               ProvenanceFromName(c.at("provenance").get<std::string>()),
               KindFromName(c.at("kind").get<std::string>()),
               {},
               c.at("mean").get<double>(),
               c.at("scale").get<double>(),
               c.at("standardize").get<bool>()};
    for (const auto& [value, code] : c.at("codes").items()) {
      col.codes[value] = code.get<double>();
    }
    enc.columns_.push_back(std::move(col));
  }
  enc.warnings_ = json.value("warnings", std::vector<std::string>{});
  enc.BuildLayout();
  return enc;
}

}  // namespace amrule::featurize
