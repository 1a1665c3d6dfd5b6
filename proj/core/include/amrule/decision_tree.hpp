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

#ifndef AMRULE_DECISION_TREE_HPP_
#define AMRULE_DECISION_TREE_HPP_

#include <cstdint>
#include <set>
#include <span>
#include <vector>

#include "amrule/featurize.hpp"
#include "amrule/json_util.hpp"

namespace amrule::tree_rules {

// Anything that labels a pair encoding in {+1, -1}.
class Evaluator {
 public:
  virtual ~Evaluator() = default;
  virtual int PredictLabel(const featurize::PairEncoding& encoding) const = 0;
};

inline constexpr int kMinTreeDepth = 3;
inline constexpr int kMaxTreeDepth = 10;

// Binary CART classifier over pair encodings. Split nodes test
// `value <= threshold`; a masked value follows the child that received more
// unmasked training rows.
class DecisionTree : public Evaluator {
 public:
  struct Node {
    int feature = -1;  // -1 for leaves
    double threshold = 0.0;
    bool missing_left = true;
    int left = -1;
    int right = -1;
    int depth = 0;
    std::size_t positives = 0;
    std::size_t negatives = 0;

    bool is_leaf() const { return feature < 0; }
    int label() const { return positives >= negatives ? 1 : -1; }
  };

  int PredictLabel(const featurize::PairEncoding& encoding) const override;

  const std::vector<Node>& nodes() const { return nodes_; }
  int depth() const;
  std::set<std::size_t> SplitFeatures() const;

  // Root-to-leaf paths as lists of split features, used to pair Range
  // candidates with the attribute they were split against.
  std::vector<std::vector<std::size_t>> Paths() const;

  Json ToJson() const;

 private:
  friend DecisionTree FitTree(std::span<const featurize::PairEncoding>,
                              std::span<const int>, int, std::uint64_t);
  std::vector<Node> nodes_;
};

// Greedy Gini splits over unmasked values, at most `max_depth` split levels
// (3..10). Equal-gain candidates are ordered by a seeded feature permutation.
// A pure or unsplittable subset yields a single leaf.
DecisionTree FitTree(std::span<const featurize::PairEncoding> rows,
                     std::span<const int> labels, int max_depth,
                     std::uint64_t seed);

// Picks the depth in [min_depth, max_depth] with the best accuracy on a
// seeded 30% holdout of `rows` (ties to the shallower tree), then refits on
// all rows.
DecisionTree FitTreeWithDepthSearch(std::span<const featurize::PairEncoding> rows,
                                    std::span<const int> labels,
                                    std::uint64_t seed,
                                    int min_depth = kMinTreeDepth,
                                    int max_depth = kMaxTreeDepth,
                                    int* chosen_depth = nullptr);

}  // namespace amrule::tree_rules

#endif  // AMRULE_DECISION_TREE_HPP_
