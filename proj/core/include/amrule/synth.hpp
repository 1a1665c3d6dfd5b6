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

#ifndef AMRULE_SYNTH_HPP_
#define AMRULE_SYNTH_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "amrule/catalog.hpp"
#include "amrule/json_util.hpp"
#include "amrule/rule.hpp"

namespace amrule::synth {

enum class NoiseMode {
  kUniform,   // noisy co-purchases are uniform over incompatible pairs
  kNearMiss,  // noisy co-purchases violate exactly one planted rule
};

struct SynthConfig {
  std::uint64_t seed = 7;
  std::size_t num_attributes = 12;  // columns per catalog
  std::size_t num_sparse = 3;
  double sparse_missing = 0.6;
  std::size_t num_planted = 5;
  // Overrides the built-in planted rules when non-empty.
  std::vector<PlantedRule> planted_rules;
  std::size_t pair_count = 5000;  // co-purchase records
  double noise = 0.2;
  NoiseMode noise_mode = NoiseMode::kUniform;
  double compatible_fraction = 0.5;  // share of logged pairs that are compatible
  std::size_t num_anchors = 500;
  std::size_t num_recs = 500;
  std::int64_t min_count = 3;
  std::size_t brand_levels = 4;
  std::size_t fit_levels = 3;
  double contain_rate = 0.75;

  Json ToJson() const;
  static SynthConfig FromJson(const Json& json);
};

struct SynthWorld {
  catalog::Catalog anchors;  // observed, sparse columns masked
  catalog::Catalog recs;
  catalog::Catalog latent_anchors;  // every generated value
  catalog::Catalog latent_recs;
  std::vector<catalog::CoPurchaseRecord> copurchase;
  std::vector<PlantedRule> rules;
};

// The planted rule set the generator uses when none is configured.
std::vector<PlantedRule> DefaultPlantedRules(std::size_t count);

// Whether a planted rule holds on latent products.
bool Satisfies(const PlantedRule& rule, const catalog::Product& anchor,
               const catalog::Product& rec);
bool TrulyCompatible(const std::vector<PlantedRule>& rules,
                     const catalog::Product& anchor, const catalog::Product& rec);

// Throws kConfig for out-of-range settings or planted rules that reference
// missing columns or columns of the wrong kind.
SynthWorld Generate(const SynthConfig& config);

// Writes catalog_anchor.jsonl, catalog_rec.jsonl, copurchase.csv,
// rules_truth.json and a run_config.json that points at them.
void WriteWorld(const SynthWorld& world, const SynthConfig& config,
                const std::filesystem::path& out_dir);

std::vector<PlantedRule> LoadPlantedRules(const std::filesystem::path& path);

}  // namespace amrule::synth

#endif  // AMRULE_SYNTH_HPP_
