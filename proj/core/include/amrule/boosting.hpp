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

#ifndef AMRULE_BOOSTING_HPP_
#define AMRULE_BOOSTING_HPP_

#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "amrule/json_util.hpp"
#include "amrule/mlp.hpp"

namespace amrule::boosting {

// Weighted errors are clipped into [kErrorClip, 1 - kErrorClip] so the model
// coefficient stays finite.
inline constexpr double kErrorClip = 1e-8;

// Every entry 1/n. Throws kEmptyDataset for n == 0.
std::vector<double> InitWeights(std::size_t n);

struct WeightedError {
  double raw = 0.0;
  double clipped = 0.0;
};

WeightedError ComputeWeightedError(std::span<const double> weights,
                                   std::span<const int> predictions,
                                   std::span<const int> labels);

// ln((1 - err) / err); requires err in [kErrorClip, 1 - kErrorClip].
double ModelCoefficient(double err);

// Misclassified weights are multiplied by exp(alpha); nothing is
// renormalized. Throws kOverflow naming the first non-finite instance.
std::vector<double> UpdateWeights(std::span<const double> weights,
                                  std::span<const int> predictions,
                                  std::span<const int> labels, double alpha);

struct LargeErrorSelection {
  std::vector<std::size_t> ids;  // descending weight, ties by ascending id
  bool truncated = false;        // n exceeded the number of instances
};

LargeErrorSelection SelectLargeError(std::span<const double> weights,
                                     std::size_t n);

// sign(sum_t alpha_t * vote_t) with votes in {+1, -1}; an exact zero sum
// resolves to +1.
int WeightedVote(std::span<const int> votes, std::span<const double> alphas);

struct IterationRecord {
  int iteration = 0;
  double err_raw = 0.0;
  double err = 0.0;
  double alpha = 0.0;
  std::string model_ref;
  std::vector<std::string> accepted_rule_ids;
  bool in_ensemble = true;

  Json ToJson() const;
  static IterationRecord FromJson(const Json& json);
};

struct BoostState {
  std::vector<double> weights;
  int iteration = 0;
  std::vector<IterationRecord> records;

  static BoostState Create(std::size_t n) { return {InitWeights(n), 0, {}}; }
};

class EnsembleModel {
 public:
  struct Member {
    std::shared_ptr<const learner::MlpModel> model;
    double alpha = 0.0;
  };

  void Add(std::shared_ptr<const learner::MlpModel> model, double alpha);

  bool empty() const { return members_.empty(); }
  std::size_t size() const { return members_.size(); }
  const std::vector<Member>& members() const { return members_; }

  // Ensemble of the first `count` members.
  EnsembleModel Prefix(std::size_t count) const;

  int Predict(std::span<const double> x) const;
  // inputs: d x n, one sample per column.
  std::vector<int> PredictBatch(const Eigen::MatrixXd& inputs) const;

 private:
  std::vector<Member> members_;
};

}  // namespace amrule::boosting

#endif  // AMRULE_BOOSTING_HPP_
