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

#include "amrule/boosting.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "amrule/error.hpp"

namespace amrule::boosting {

std::vector<double> InitWeights(std::size_t n) {
  if (n == 0) {
    throw Error(ErrorCode::kEmptyDataset, "cannot weight an empty dataset");
  }
  return std::vector<double>(n, 1.0 / static_cast<double>(n));
}

namespace {

void CheckLengths(std::size_t weights, std::size_t predictions,
                  std::size_t labels) {
  if (weights != predictions || weights != labels) {
    throw Error(ErrorCode::kShape,
                "weights, predictions and labels must have equal length (" +
                    std::to_string(weights) + ", " +
                    std::to_string(predictions) + ", " +
                    std::to_string(labels) + ")");
  }
}

}  // namespace

WeightedError ComputeWeightedError(std::span<const double> weights,
                                   std::span<const int> predictions,
                                   std::span<const int> labels) {
  CheckLengths(weights.size(), predictions.size(), labels.size());
  if (weights.empty()) {
    throw Error(ErrorCode::kEmptyDataset, "no instances to score");
  }
  double wrong = 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!(weights[i] > 0.0)) {
      throw Error(ErrorCode::kValidation,
                  "weight of instance " + std::to_string(i) + " is not positive");
    }
    total += weights[i];
    if (predictions[i] != labels[i]) wrong += weights[i];
  }
  WeightedError err;
  err.raw = wrong / total;
  err.clipped = std::clamp(err.raw, kErrorClip, 1.0 - kErrorClip);
  return err;
}

double ModelCoefficient(double err) {
  if (!(err >= kErrorClip && err <= 1.0 - kErrorClip)) {
    throw Error(ErrorCode::kValidation,
                "error rate must be clipped into [1e-8, 1 - 1e-8]");
  }
  return std::log((1.0 - err) / err);
}

std::vector<double> UpdateWeights(std::span<const double> weights,
                                  std::span<const int> predictions,
                                  std::span<const int> labels, double alpha) {
  CheckLengths(weights.size(), predictions.size(), labels.size());
  if (!std::isfinite(alpha)) {
    throw Error(ErrorCode::kValidation, "alpha must be finite");
  }
  const double factor = std::exp(alpha);
  std::vector<double> out(weights.begin(), weights.end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (predictions[i] != labels[i]) out[i] *= factor;
    if (!std::isfinite(out[i]) || !(out[i] > 0.0)) {
      throw Error(ErrorCode::kOverflow,
                  "weight of instance " + std::to_string(i) +
                      " left the positive finite range");
    }
  }
  return out;
}

LargeErrorSelection SelectLargeError(std::span<const double> weights,
                                     std::size_t n) {
  LargeErrorSelection sel;
  if (n > weights.size()) {
    sel.truncated = true;
    n = weights.size();
  }
  std::vector<std::size_t> ids(weights.size());
  std::iota(ids.begin(), ids.end(), 0);
  auto heavier = [&](std::size_t a, std::size_t b) {
    if (weights[a] != weights[b]) return weights[a] > weights[b];
    return a < b;
  };
  std::partial_sort(ids.begin(), ids.begin() + static_cast<long>(n), ids.end(),
                    heavier);
  ids.resize(n);
  sel.ids = std::move(ids);
  return sel;
}

int WeightedVote(std::span<const int> votes, std::span<const double> alphas) {
  if (votes.size() != alphas.size()) {
    throw Error(ErrorCode::kShape, "votes and alphas must have equal length");
  }
  double sum = 0.0;
  for (std::size_t t = 0; t < votes.size(); ++t) {
    sum += alphas[t] * static_cast<double>(votes[t]);
  }
  return sum < 0.0 ? -1 : 1;
}

Json IterationRecord::ToJson() const {
  return Json{{"iteration", iteration},
              {"err_raw", err_raw},
              {"err", err},
              {"alpha", alpha},
              {"model_ref", model_ref},
              {"accepted_rule_ids", accepted_rule_ids},
              {"in_ensemble", in_ensemble}};
}

IterationRecord IterationRecord::FromJson(const Json& json) {
  IterationRecord r;
  r.iteration = json.at("iteration").get<int>();
  r.err_raw = json.at("err_raw").get<double>();
  r.err = json.at("err").get<double>();
  r.alpha = json.at("alpha").get<double>();
  r.model_ref = json.value("model_ref", std::string());
  r.accepted_rule_ids =
      json.value("accepted_rule_ids", std::vector<std::string>{});
  r.in_ensemble = json.value("in_ensemble", true);
  return r;
}

void EnsembleModel::Add(std::shared_ptr<const learner::MlpModel> model,
                        double alpha) {
  if (!std::isfinite(alpha)) {
    throw Error(ErrorCode::kValidation, "ensemble coefficient must be finite");
  }
  members_.push_back({std::move(model), alpha});
}

EnsembleModel EnsembleModel::Prefix(std::size_t count) const {
  EnsembleModel out;
  out.members_.assign(members_.begin(),
                      members_.begin() +
                          static_cast<long>(std::min(count, members_.size())));
  return out;
}

int EnsembleModel::Predict(std::span<const double> x) const {
  if (members_.empty()) {
    throw Error(ErrorCode::kValidation, "ensemble has no members");
  }
  std::vector<int> votes;
  std::vector<double> alphas;
  for (const auto& m : members_) {
    votes.push_back(learner::Predict(*m.model, x).label);
    alphas.push_back(m.alpha);
  }
  return WeightedVote(votes, alphas);
}

std::vector<int> EnsembleModel::PredictBatch(const Eigen::MatrixXd& inputs) const {
  if (members_.empty()) {
    throw Error(ErrorCode::kValidation, "ensemble has no members");
  }
  const auto n = static_cast<std::size_t>(inputs.cols());
  std::vector<std::vector<int>> votes(n);
  std::vector<double> alphas;
  for (const auto& m : members_) {
    const auto preds = learner::PredictBatch(*m.model, inputs);
    for (std::size_t i = 0; i < n; ++i) votes[i].push_back(preds[i].label);
    alphas.push_back(m.alpha);
  }
  std::vector<int> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = WeightedVote(votes[i], alphas);
  return out;
}

}  // namespace amrule::boosting
