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

#include "amrule/synth.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <tuple>

#include "amrule/error.hpp"
#include "amrule/random.hpp"

namespace amrule::synth {

using catalog::AttributeValue;
using catalog::Product;

namespace {

constexpr const char* kBrands[] = {"acme",  "boltco",  "corex",  "dynaflux",
                                   "everlite", "fortis", "galvan", "helix"};
constexpr double kWattages[] = {40, 60, 75, 100, 150};

struct NoiseColumn {
  const char* name;
  bool numerical;
  std::vector<std::string> levels;  // categorical only
};

const std::vector<NoiseColumn>& NoiseColumns() {
  static const std::vector<NoiseColumn> cols = {
      {"color", false, {"red", "blue", "black", "white", "silver"}},
      {"warranty_tier", false, {"t1", "t2", "t3"}},
      {"material", false, {"steel", "brass", "nylon", "aluminum"}},
      {"weight", true, {}},
      {"price", true, {}},
      {"voltage", true, {}},
      {"style", false, {"modern", "classic", "rustic", "industrial"}},
  };
  return cols;
}

// Columns whose values also appear in the description.
const std::vector<std::string>& SparseEligible() {
  static const std::vector<std::string> v = {"fit_code", "color", "warranty_tier",
                                             "material", "style"};
  return v;
}

std::string NoiseName(std::size_t k) {
  const auto& cols = NoiseColumns();
  if (k < cols.size()) return cols[k].name;
  return "extra_" + std::to_string(k - cols.size() + 1);
}

double Round(double v, double step) { return std::round(v / step) * step; }

std::string Capitalized(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

std::string Phrase(const std::string& attribute) {
  std::string out = attribute;
  std::replace(out.begin(), out.end(), '_', ' ');
  return out;
}

struct Columns {
  std::vector<std::string> anchor;
  std::vector<std::string> rec;
};

Columns ColumnNames(std::size_t n) {
  Columns c;
  c.anchor = {"brand", "fit_code", "max_wattage", "mount_depth", "adapter_type"};
  c.rec = {"brand", "fit_code", "wattage", "depth", "finish"};
  for (std::size_t k = 0; c.anchor.size() < n; ++k) {
    c.anchor.push_back(NoiseName(k));
    c.rec.push_back(NoiseName(k));
  }
  return c;
}

void Validate(const SynthConfig& c) {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::kConfig, m); };
  if (c.num_attributes < 5) fail("synth needs at least 5 attributes");
  if (c.num_sparse > SparseEligible().size()) fail("at most 5 sparse attributes");
  if (c.num_sparse > c.num_attributes - 3) fail("too many sparse attributes");
  if (!(c.sparse_missing >= 0.0 && c.sparse_missing < 1.0)) {
    fail("sparse_missing must lie in [0, 1)");
  }
  if (!(c.noise >= 0.0 && c.noise < 1.0)) fail("noise must lie in [0, 1)");
  if (!(c.compatible_fraction >= 0.0 && c.compatible_fraction <= 1.0)) {
    fail("compatible_fraction must lie in [0, 1]");
  }
  if (c.num_anchors == 0 || c.num_recs == 0) fail("catalogs must be non-empty");
  if (c.min_count < 2) fail("synth min_count must be >= 2");
  if (c.brand_levels < 1 || c.brand_levels > std::size(kBrands)) {
    fail("brand_levels out of range");
  }
  if (c.fit_levels < 1) fail("fit_levels must be >= 1");
  if (c.planted_rules.empty() && (c.num_planted < 1 || c.num_planted > 5)) {
    fail("num_planted must lie in [1, 5]");
  }
}

void ValidateRules(const std::vector<PlantedRule>& rules,
                   const catalog::AttributeSchema& a,
                   const catalog::AttributeSchema& b) {
  auto kind_of = [](const catalog::AttributeSchema& s, const std::string& name)
      -> std::optional<catalog::AttributeKind> {
    if (auto i = s.IndexOf(name)) return s.columns[*i].kind;
    return std::nullopt;
  };
  for (const auto& r : rules) {
    const std::string what = "planted rule " + r.Describe();
    switch (r.kind) {
      case RuleKind::kExactMatch: {
        auto ka = kind_of(a, r.attribute);
        auto kb = kind_of(b, r.attribute);
        if (!ka || !kb || *ka != *kb) {
          throw Error(ErrorCode::kConfig, what + " needs a shared attribute");
        }
        break;
      }
      case RuleKind::kRange: {
        auto ka = kind_of(a, r.attribute);
        auto kb = kind_of(b, r.rec_attribute);
        if (!ka || !kb || *ka != catalog::AttributeKind::kNumerical ||
            *kb != catalog::AttributeKind::kNumerical) {
          throw Error(ErrorCode::kConfig, what + " needs numerical attributes");
        }
        if (r.direction == RangeDirection::kUnresolved) {
          throw Error(ErrorCode::kConfig, what + " needs a direction");
        }
        break;
      }
      case RuleKind::kContain: {
        const auto& s = r.side == Side::kAnchor ? a : b;
        if (!kind_of(s, r.attribute)) {
          throw Error(ErrorCode::kConfig, what + " references a missing attribute");
        }
        break;
      }
      case RuleKind::kPrompt:
        throw Error(ErrorCode::kConfig, "Prompt rules cannot be planted");
    }
  }
}

}  // namespace

Json SynthConfig::ToJson() const {
  Json rules = Json::array();
  for (const auto& r : planted_rules) rules.push_back(r.ToJson());
  return {{"seed", seed},
          {"num_attributes", num_attributes},
          {"num_sparse", num_sparse},
          {"sparse_missing", sparse_missing},
          {"num_planted", num_planted},
          {"planted_rules", rules},
          {"pair_count", pair_count},
          {"noise", noise},
          {"noise_mode", noise_mode == NoiseMode::kUniform ? "uniform" : "near_miss"},
          {"compatible_fraction", compatible_fraction},
          {"num_anchors", num_anchors},
          {"num_recs", num_recs},
          {"min_count", min_count},
          {"brand_levels", brand_levels},
          {"fit_levels", fit_levels},
          {"contain_rate", contain_rate}};
}

SynthConfig SynthConfig::FromJson(const Json& j) {
  SynthConfig c;
  try {
    c.seed = j.value("seed", c.seed);
    c.num_attributes = j.value("num_attributes", c.num_attributes);
    c.num_sparse = j.value("num_sparse", c.num_sparse);
    c.sparse_missing = j.value("sparse_missing", c.sparse_missing);
    c.num_planted = j.value("num_planted", c.num_planted);
    if (j.contains("planted_rules")) {
      for (const auto& r : j["planted_rules"]) {
        c.planted_rules.push_back(PlantedRule::FromJson(r));
      }
    }
    c.pair_count = j.value("pair_count", c.pair_count);
    c.noise = j.value("noise", c.noise);
    if (j.contains("noise_mode")) {
      const auto m = j["noise_mode"].get<std::string>();
      if (m == "uniform") {
        c.noise_mode = NoiseMode::kUniform;
      } else if (m == "near_miss") {
        c.noise_mode = NoiseMode::kNearMiss;
      } else {
        throw Error(ErrorCode::kConfig, "unknown noise_mode '" + m + "'");
      }
    }
    c.compatible_fraction = j.value("compatible_fraction", c.compatible_fraction);
    c.num_anchors = j.value("num_anchors", c.num_anchors);
    c.num_recs = j.value("num_recs", c.num_recs);
    c.min_count = j.value("min_count", c.min_count);
    c.brand_levels = j.value("brand_levels", c.brand_levels);
    c.fit_levels = j.value("fit_levels", c.fit_levels);
    c.contain_rate = j.value("contain_rate", c.contain_rate);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kConfig, std::string("bad synth config: ") + e.what());
  }
  return c;
}

std::vector<PlantedRule> DefaultPlantedRules(std::size_t count) {
  std::vector<PlantedRule> all(5);
  all[0].kind = RuleKind::kExactMatch;
  all[0].attribute = "brand";
  all[1].kind = RuleKind::kExactMatch;
  all[1].attribute = "fit_code";
  all[2].kind = RuleKind::kRange;
  all[2].attribute = "max_wattage";
  all[2].rec_attribute = "wattage";
  all[2].direction = RangeDirection::kGe;
  all[3].kind = RuleKind::kRange;
  all[3].attribute = "mount_depth";
  all[3].rec_attribute = "depth";
  all[3].direction = RangeDirection::kLe;
  all[4].kind = RuleKind::kContain;
  all[4].attribute = "adapter_type";
  all[4].side = Side::kAnchor;
  all.resize(std::min<std::size_t>(count, all.size()));
  return all;
}

bool Satisfies(const PlantedRule& rule, const Product& a, const Product& b) {
  switch (rule.kind) {
    case RuleKind::kExactMatch: {
      const auto& va = a.attribute(rule.attribute);
      const auto& vb = b.attribute(rule.attribute);
      return !va.is_missing() && !vb.is_missing() && va == vb;
    }
    case RuleKind::kRange: {
      const auto& va = a.attribute(rule.attribute);
      const auto& vb = b.attribute(rule.rec_attribute);
      if (!va.is_numerical() || !vb.is_numerical()) return false;
      return rule.direction == RangeDirection::kGe ? va.number() >= vb.number()
                                                   : va.number() <= vb.number();
    }
    case RuleKind::kContain:
      return !(rule.side == Side::kAnchor ? a : b)
                  .attribute(rule.attribute)
                  .is_missing();
    case RuleKind::kPrompt:
      return false;
  }
  return false;
}

bool TrulyCompatible(const std::vector<PlantedRule>& rules, const Product& a,
                     const Product& b) {
  for (const auto& r : rules) {
    if (!Satisfies(r, a, b)) return false;
  }
  return true;
}

namespace {

std::map<std::string, AttributeValue> NoiseValues(const Columns& cols,
                                                  std::size_t first, Rng& rng) {
  std::map<std::string, AttributeValue> out;
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (std::size_t k = first; k < cols.anchor.size(); ++k) {
    const std::size_t noise_index = k - first;
    const auto& name = cols.anchor[k];
    if (noise_index < NoiseColumns().size()) {
      const auto& nc = NoiseColumns()[noise_index];
      if (!nc.numerical) {
        std::uniform_int_distribution<std::size_t> pick(0, nc.levels.size() - 1);
        out[name] = AttributeValue::Categorical(nc.levels[pick(rng)]);
      } else if (name == "weight") {
        out[name] = AttributeValue::Numerical(Round(0.5 + 9.5 * u01(rng), 0.1));
      } else if (name == "price") {
        out[name] = AttributeValue::Numerical(Round(5.0 + 195.0 * u01(rng), 0.01));
      } else {
        constexpr double kVolts[] = {12, 18, 20, 24};
        std::uniform_int_distribution<int> pick(0, 3);
        out[name] = AttributeValue::Numerical(kVolts[pick(rng)]);
      }
    } else {
      out[name] = AttributeValue::Numerical(Round(100.0 * u01(rng), 0.1));
    }
  }
  return out;
}

std::string ValueText(const AttributeValue& v) {
  if (v.is_categorical()) return v.text();
  if (v.is_numerical()) {
    const double x = v.number();
    if (x == std::floor(x)) return std::to_string(static_cast<long long>(x));
    return Json(x).dump();
  }
  return "none";
}

// Descriptions always carry the latent values of the sparse columns.
std::string Describe(const Product& latent, const std::vector<std::string>& sparse,
                     const std::string& noun, const std::string& highlight_attr) {
  std::string d = Capitalized(ValueText(latent.attribute("brand"))) + " " + noun;
  const auto& hv = latent.attribute(highlight_attr);
  if (!hv.is_missing()) {
    d += " rated at " + ValueText(hv) + " " +
         (highlight_attr.find("watt") != std::string::npos ? "watts" : "inches");
  }
  d += ".";
  for (const auto& name : sparse) {
    const auto& v = latent.attribute(name);
    if (v.is_missing()) continue;
    d += " " + Capitalized(Phrase(name)) + " " + ValueText(v) + ".";
  }
  d += " Built for everyday use.";
  return d;
}

}  // namespace

SynthWorld Generate(const SynthConfig& config) {
  Validate(config);
  const Columns cols = ColumnNames(config.num_attributes);
  std::vector<std::string> sparse(SparseEligible().begin(),
                                  SparseEligible().begin() +
                                      static_cast<std::ptrdiff_t>(config.num_sparse));
  Rng rng = MakeRng(config.seed, 0x53594e54);
  std::uniform_int_distribution<std::size_t> pick_brand(0, config.brand_levels - 1);
  std::uniform_int_distribution<std::size_t> pick_fit(1, config.fit_levels);
  std::uniform_int_distribution<int> pick_watt(0, 4);
  std::uniform_int_distribution<int> pick_depth(2, 12);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  constexpr const char* kAdapters[] = {"twist", "pin", "screw"};
  constexpr const char* kFinishes[] = {"matte", "gloss", "satin"};
  std::uniform_int_distribution<int> pick3(0, 2);

  std::vector<Product> la, lr;
  for (std::size_t i = 0; i < config.num_anchors; ++i) {
    Product p;
    p.id = "a" + std::to_string(i);
    p.category = "light_fixture";
    p.name = "Light fixture";
    p.attributes["brand"] = AttributeValue::Categorical(kBrands[pick_brand(rng)]);
    p.attributes["fit_code"] =
        AttributeValue::Categorical("fc" + std::to_string(pick_fit(rng)));
    p.attributes["max_wattage"] = AttributeValue::Numerical(kWattages[pick_watt(rng)]);
    p.attributes["mount_depth"] = AttributeValue::Numerical(pick_depth(rng));
    p.attributes["adapter_type"] =
        u01(rng) < config.contain_rate
            ? AttributeValue::Categorical(kAdapters[pick3(rng)])
            : AttributeValue::Missing();
    for (auto& [k, v] : NoiseValues(cols, 5, rng)) p.attributes[k] = v;
    la.push_back(std::move(p));
  }
  for (std::size_t i = 0; i < config.num_recs; ++i) {
    Product p;
    p.id = "b" + std::to_string(i);
    p.category = "light_bulb";
    p.name = "Light bulb";
    p.attributes["brand"] = AttributeValue::Categorical(kBrands[pick_brand(rng)]);
    p.attributes["fit_code"] =
        AttributeValue::Categorical("fc" + std::to_string(pick_fit(rng)));
    p.attributes["wattage"] = AttributeValue::Numerical(kWattages[pick_watt(rng)]);
    p.attributes["depth"] = AttributeValue::Numerical(pick_depth(rng));
    p.attributes["finish"] = AttributeValue::Categorical(kFinishes[pick3(rng)]);
    for (auto& [k, v] : NoiseValues(cols, 5, rng)) p.attributes[k] = v;
    lr.push_back(std::move(p));
  }
  for (auto& p : la) p.description = Describe(p, sparse, "light fixture", "max_wattage");
  for (auto& p : lr) p.description = Describe(p, sparse, "light bulb", "wattage");

  // Mask an exact share of each sparse column.
  auto mask_sparse = [&](const std::vector<Product>& latent) {
    std::vector<Product> observed = latent;
    const auto n_missing = static_cast<std::size_t>(
        std::llround(config.sparse_missing * static_cast<double>(latent.size())));
    for (const auto& name : sparse) {
      std::vector<std::size_t> order(latent.size());
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), rng);
      for (std::size_t k = 0; k < n_missing; ++k) {
        observed[order[k]].attributes[name] = AttributeValue::Missing();
      }
    }
    return observed;
  };
  auto oa = mask_sparse(la);
  auto orc = mask_sparse(lr);

  SynthWorld world;
  world.latent_anchors = catalog::Catalog::FromProducts(la, cols.anchor);
  world.latent_recs = catalog::Catalog::FromProducts(lr, cols.rec);
  world.anchors = catalog::Catalog::FromProducts(std::move(oa), cols.anchor);
  world.recs = catalog::Catalog::FromProducts(std::move(orc), cols.rec);
  world.rules = config.planted_rules.empty() ? DefaultPlantedRules(config.num_planted)
                                             : config.planted_rules;
  ValidateRules(world.rules, world.latent_anchors.schema(),
                world.latent_recs.schema());

  // Classify the full cross product on latent values.
  std::vector<std::pair<std::size_t, std::size_t>> compatible, near_miss, other;
  for (std::size_t i = 0; i < la.size(); ++i) {
    for (std::size_t j = 0; j < lr.size(); ++j) {
      std::size_t violated = 0;
      for (const auto& r : world.rules) violated += Satisfies(r, la[i], lr[j]) ? 0 : 1;
      if (violated == 0) {
        compatible.emplace_back(i, j);
      } else if (violated == 1) {
        near_miss.emplace_back(i, j);
      } else {
        other.emplace_back(i, j);
      }
    }
  }
  const auto n_compat = static_cast<std::size_t>(std::llround(
      config.compatible_fraction * static_cast<double>(config.pair_count)));
  const std::size_t n_incompat = config.pair_count - n_compat;
  if (compatible.size() < n_compat) {
    throw Error(ErrorCode::kConfig,
                "only " + std::to_string(compatible.size()) +
                    " compatible pairs exist, " + std::to_string(n_compat) +
                    " requested; enlarge the catalogs");
  }
  std::shuffle(compatible.begin(), compatible.end(), rng);
  compatible.resize(n_compat);

  std::vector<std::pair<std::size_t, std::size_t>> incompat;
  if (config.noise_mode == NoiseMode::kNearMiss) {
    std::shuffle(near_miss.begin(), near_miss.end(), rng);
    incompat = near_miss;
  } else {
    incompat = near_miss;
    incompat.insert(incompat.end(), other.begin(), other.end());
    std::shuffle(incompat.begin(), incompat.end(), rng);
  }
  if (incompat.size() < n_incompat) {
    throw Error(ErrorCode::kConfig, "not enough incompatible pairs for the log");
  }
  incompat.resize(n_incompat);

  // Exactly `noise` of the high-count records violate a planted rule; the
  // same share of compatible records stays below min_count.
  const auto n_compat_high = static_cast<std::size_t>(
      std::llround((1.0 - config.noise) * static_cast<double>(n_compat)));
  const auto n_noisy = static_cast<std::size_t>(std::llround(
      config.noise / (1.0 - config.noise) * static_cast<double>(n_compat_high)));
  if (n_noisy > n_incompat) {
    throw Error(ErrorCode::kConfig,
                "noise needs " + std::to_string(n_noisy) +
                    " incompatible records but the log has " +
                    std::to_string(n_incompat));
  }
  const std::int64_t mc = config.min_count;
  std::uniform_int_distribution<std::int64_t> low(1, mc - 1);
  std::uniform_int_distribution<std::int64_t> high_compat(mc, 4 * mc);
  std::uniform_int_distribution<std::int64_t> high_incompat(mc, 2 * mc - 1);
  std::vector<catalog::CoPurchaseRecord> log;
  for (std::size_t k = 0; k < compatible.size(); ++k) {
    const auto [i, j] = compatible[k];
    log.push_back({la[i].id, lr[j].id, k < n_compat_high ? high_compat(rng) : low(rng)});
  }
  for (std::size_t k = 0; k < incompat.size(); ++k) {
    const auto [i, j] = incompat[k];
    log.push_back({la[i].id, lr[j].id, k < n_noisy ? high_incompat(rng) : low(rng)});
  }
  std::sort(log.begin(), log.end(), [](const auto& x, const auto& y) {
    return std::tie(x.anchor_id, x.rec_id) < std::tie(y.anchor_id, y.rec_id);
  });
  world.copurchase = std::move(log);
  return world;
}

void WriteWorld(const SynthWorld& world, const SynthConfig& config,
                const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  catalog::SaveCatalog(out_dir / "catalog_anchor.jsonl", world.anchors);
  catalog::SaveCatalog(out_dir / "catalog_rec.jsonl", world.recs);
  catalog::SaveCoPurchase(out_dir / "copurchase.csv", world.copurchase);
  Json rules = Json::array();
  for (const auto& r : world.rules) rules.push_back(r.ToJson());
  WriteJsonFile(out_dir / "rules_truth.json",
                {{"rules", rules}, {"synth_config", config.ToJson()}});
  WriteJsonFile(out_dir / "run_config.json",
                {{"catalog_anchor", "catalog_anchor.jsonl"},
                 {"catalog_rec", "catalog_rec.jsonl"},
                 {"copurchase", "copurchase.csv"},
                 {"truth", "rules_truth.json"},
                 {"min_count", config.min_count},
                 {"seed", config.seed},
                 {"run_dir", "run"}});
}

std::vector<PlantedRule> LoadPlantedRules(const std::filesystem::path& path) {
  const Json j = ReadJsonFile(path);
  const Json& arr = j.is_array() ? j : j.at("rules");
  std::vector<PlantedRule> out;
  for (const auto& r : arr) out.push_back(PlantedRule::FromJson(r));
  return out;
}

}  // namespace amrule::synth
