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

#include "amrule/decision_tree.hpp"

#include <algorithm>
#include <numeric>

#include "amrule/error.hpp"
#include "amrule/random.hpp"

namespace amrule::tree_rules {

int DecisionTree::PredictLabel(const featurize::PairEncoding& encoding) const {
  if (nodes_.empty()) return 1;
  int at = 0;
  while (!nodes_[at].is_leaf()) {
    const auto& node = nodes_[at];
    const auto f = static_cast<std::size_t>(node.feature);
    bool go_left;
    if (f >= encoding.size() || !encoding.present(f)) {
      go_left = node.missing_left;
    } else {
      go_left = encoding.values[f] <= node.threshold;
    }
    at = go_left ? node.left : node.right;
  }
  return nodes_[at].label();
}

int DecisionTree::depth() const {
  int d = 0;
  for (const auto& n : nodes_) d = std::max(d, n.depth);
  return d;
}

std::set<std::size_t> DecisionTree::SplitFeatures() const {
  std::set<std::size_t> out;
  for (const auto& n : nodes_) {
    if (!n.is_leaf()) out.insert(static_cast<std::size_t>(n.feature));
  }
  return out;
}

std::vector<std::vector<std::size_t>> DecisionTree::Paths() const {
  std::vector<std::vector<std::size_t>> paths;
  if (nodes_.empty()) return paths;
  std::vector<std::pair<int, std::vector<std::size_t>>> stack{{0, {}}};
  while (!stack.empty()) {
    auto [at, path] = std::move(stack.back());
    stack.pop_back();
    const auto& node = nodes_[at];
    if (node.is_leaf()) {
      paths.push_back(std::move(path));
      continue;
    }
    path.push_back(static_cast<std::size_t>(node.feature));
    stack.push_back({node.right, path});
    stack.push_back({node.left, std::move(path)});
  }
  return paths;
}

Json DecisionTree::ToJson() const {
  Json arr = Json::array();
  for (const auto& n : nodes_) {
    arr.push_back({{"feature", n.feature},
                   {"threshold", n.threshold},
                   {"missing_left", n.missing_left},
                   {"left", n.left},
                   {"right", n.right},
                   {"depth", n.depth},
                   {"positives", n.positives},
                   {"negatives", n.negatives}});
  }
  return arr;
}

namespace {

double Gini(double pos, double neg) {
  const double n = pos + neg;
  if (n <= 0.0) return 0.0;
  const double p = pos / n;
  const double q = neg / n;
  return 1.0 - p * p - q * q;
}

struct Split {
  bool found = false;
  int feature = -1;
  double threshold = 0.0;
  bool missing_left = true;
  double impurity = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(std::span<const featurize::PairEncoding> rows,
              std::span<const int> labels, int max_depth, std::uint64_t seed)
      : rows_(rows), labels_(labels), max_depth_(max_depth) {
    const std::size_t width = rows.empty() ? 0 : rows.front().size();
    feature_order_.resize(width);
    std::iota(feature_order_.begin(), feature_order_.end(), 0);
    Rng rng = MakeRng(seed, 0x54524545);
    std::shuffle(feature_order_.begin(), feature_order_.end(), rng);
  }

  std::vector<DecisionTree::Node> Build() {
    std::vector<std::size_t> all(rows_.size());
    std::iota(all.begin(), all.end(), 0);
    Grow(all, 0);
    return std::move(nodes_);
  }

 private:
  int Grow(const std::vector<std::size_t>& idx, int depth) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    std::size_t pos = 0;
    for (auto i : idx) pos += labels_[i] > 0 ? 1 : 0;
    nodes_[id].positives = pos;
    nodes_[id].negatives = idx.size() - pos;
    nodes_[id].depth = depth;
    if (depth >= max_depth_ || pos == 0 || pos == idx.size() || idx.size() < 2) {
      return id;
    }
    const Split split = BestSplit(idx, pos);
    if (!split.found) return id;

    std::vector<std::size_t> left, right;
    for (auto i : idx) {
      const auto f = static_cast<std::size_t>(split.feature);
      const bool go_left = rows_[i].present(f)
                               ? rows_[i].values[f] <= split.threshold
                               : split.missing_left;
      (go_left ? left : right).push_back(i);
    }
    nodes_[id].feature = split.feature;
    nodes_[id].threshold = split.threshold;
    nodes_[id].missing_left = split.missing_left;
    const int l = Grow(left, depth + 1);
    const int r = Grow(right, depth + 1);
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
  }

  Split BestSplit(const std::vector<std::size_t>& idx, std::size_t pos) const {
    const double n = static_cast<double>(idx.size());
    const double parent =
        Gini(static_cast<double>(pos), static_cast<double>(idx.size() - pos));
    Split best;
    best.impurity = parent - 1e-12;
    std::vector<std::pair<double, int>> present;
    for (auto f : feature_order_) {
      present.clear();
      double miss_pos = 0, miss_neg = 0;
      for (auto i : idx) {
        if (rows_[i].present(f)) {
          present.emplace_back(rows_[i].values[f], labels_[i]);
        } else {
          (labels_[i] > 0 ? miss_pos : miss_neg) += 1.0;
        }
      }
      if (present.size() < 2) continue;
      std::sort(present.begin(), present.end());
      double tot_pos = 0;
      for (const auto& [v, y] : present) tot_pos += y > 0 ? 1.0 : 0.0;
      const double tot = static_cast<double>(present.size());
      double lp = 0, ln = 0;
      for (std::size_t k = 0; k + 1 < present.size(); ++k) {
        (present[k].second > 0 ? lp : ln) += 1.0;
        if (present[k].first == present[k + 1].first) continue;
        const double nl = lp + ln;
        const double rp = tot_pos - lp;
        const double rn = (tot - tot_pos) - ln;
        const bool miss_left = nl >= tot - nl;
        const double Lp = lp + (miss_left ? miss_pos : 0.0);
        const double Ln = ln + (miss_left ? miss_neg : 0.0);
        const double Rp = rp + (miss_left ? 0.0 : miss_pos);
        const double Rn = rn + (miss_left ? 0.0 : miss_neg);
        const double impurity =
            ((Lp + Ln) * Gini(Lp, Ln) + (Rp + Rn) * Gini(Rp, Rn)) / n;
        if (impurity < best.impurity) {
          best.found = true;
          best.feature = static_cast<int>(f);
          best.threshold = 0.5 * (present[k].first + present[k + 1].first);
          best.missing_left = miss_left;
          best.impurity = impurity;
        }
      }
    }
    return best;
  }

  std::span<const featurize::PairEncoding> rows_;
  std::span<const int> labels_;
  int max_depth_;
  std::vector<std::size_t> feature_order_;
  std::vector<DecisionTree::Node> nodes_;
};

}  // namespace

DecisionTree FitTree(std::span<const featurize::PairEncoding> rows,
                     std::span<const int> labels, int max_depth,
                     std::uint64_t seed) {
  if (rows.empty()) {
    throw Error(ErrorCode::kEmptyDataset, "cannot fit a tree on no rows");
  }
  if (rows.size() != labels.size()) {
    throw Error(ErrorCode::kShape, "rows and labels disagree in length");
  }
  if (max_depth < kMinTreeDepth || max_depth > kMaxTreeDepth) {
    throw Error(ErrorCode::kConfig, "tree depth must lie in [3, 10]");
  }
  const std::size_t width = rows.front().size();
  for (const auto& r : rows) {
    if (r.size() != width) {
      throw Error(ErrorCode::kShape, "rows have inconsistent widths");
    }
  }
  DecisionTree tree;
  tree.nodes_ = TreeBuilder(rows, labels, max_depth, seed).Build();
  return tree;
}

DecisionTree FitTreeWithDepthSearch(std::span<const featurize::PairEncoding> rows,
                                    std::span<const int> labels,
                                    std::uint64_t seed, int min_depth,
                                    int max_depth, int* chosen_depth) {
  if (rows.size() != labels.size()) {
    throw Error(ErrorCode::kShape, "rows and labels disagree in length");
  }
  int best_depth = min_depth;
  if (rows.size() >= 10) {
    std::vector<std::size_t> order(rows.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng = MakeRng(seed, 0x44455054);
    std::shuffle(order.begin(), order.end(), rng);
    const std::size_t n_hold = std::max<std::size_t>(1, rows.size() * 3 / 10);
    std::vector<featurize::PairEncoding> fit_rows, hold_rows;
    std::vector<int> fit_labels, hold_labels;
    for (std::size_t k = 0; k < order.size(); ++k) {
      auto& dst_rows = k < n_hold ? hold_rows : fit_rows;
      auto& dst_labels = k < n_hold ? hold_labels : fit_labels;
      dst_rows.push_back(rows[order[k]]);
      dst_labels.push_back(labels[order[k]]);
    }
    double best_acc = -1.0;
    for (int d = min_depth; d <= max_depth; ++d) {
      const auto tree = FitTree(fit_rows, fit_labels, d, seed);
      std::size_t correct = 0;
      for (std::size_t i = 0; i < hold_rows.size(); ++i) {
        correct += tree.PredictLabel(hold_rows[i]) == hold_labels[i] ? 1 : 0;
      }
      const double acc =
          static_cast<double>(correct) / static_cast<double>(hold_rows.size());
      if (acc > best_acc) {
        best_acc = acc;
        best_depth = d;
      }
    }
  }
  if (chosen_depth != nullptr) *chosen_depth = best_depth;
  return FitTree(rows, labels, best_depth, seed);
}

}  // namespace amrule::tree_rules
