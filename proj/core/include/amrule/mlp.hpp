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

#ifndef AMRULE_MLP_HPP_
#define AMRULE_MLP_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "amrule/json_util.hpp"

namespace amrule::learner {

// Class index 0 <-> label +1, index 1 <-> label -1.
constexpr int LabelFromClass(Eigen::Index cls) { return cls == 0 ? 1 : -1; }
constexpr int ClassFromLabel(int label) { return label > 0 ? 0 : 1; }

// Fully connected ReLU network with a softmax head over two classes.
class MlpModel {
 public:
  MlpModel() = default;

  // Zero weights and biases.
  explicit MlpModel(std::vector<std::size_t> layer_sizes);

  // Uniform fan-in initialization: W ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)),
  // biases zero.
  static MlpModel Initialize(std::vector<std::size_t> layer_sizes,
                             std::uint64_t seed);

  const std::vector<std::size_t>& layer_sizes() const { return layer_sizes_; }
  std::size_t input_dim() const { return layer_sizes_.front(); }
  std::size_t num_layers() const { return weights_.size(); }

  Eigen::MatrixXd& weight(std::size_t layer) { return weights_[layer]; }
  const Eigen::MatrixXd& weight(std::size_t layer) const {
    return weights_[layer];
  }
  Eigen::VectorXd& bias(std::size_t layer) { return biases_[layer]; }
  const Eigen::VectorXd& bias(std::size_t layer) const {
    return biases_[layer];
  }

  std::size_t parameter_count() const;
  // Layer by layer: weight (column-major) then bias.
  std::vector<double> FlatParameters() const;
  void SetFlatParameters(std::span<const double> flat);

  // Logits for a batch stored one sample per column (d_in x n).
  Eigen::MatrixXd Logits(const Eigen::MatrixXd& inputs) const;
  // Softmax probabilities, 2 x n.
  Eigen::MatrixXd Probabilities(const Eigen::MatrixXd& inputs) const;

  bool AllFinite() const;

  Json ToJson() const;
  static MlpModel FromJson(const Json& json);

  friend bool operator==(const MlpModel& a, const MlpModel& b) {
    return a.layer_sizes_ == b.layer_sizes_ &&
           a.FlatParameters() == b.FlatParameters();
  }

 private:
  std::vector<std::size_t> layer_sizes_;
  std::vector<Eigen::MatrixXd> weights_;  // out x in
  std::vector<Eigen::VectorXd> biases_;
};

// Column-wise stable softmax.
Eigen::MatrixXd Softmax(const Eigen::MatrixXd& logits);

struct Prediction {
  int label = 1;
  double probability = 0.5;
};

// Throws kShape when x does not match the model input width.
Prediction Predict(const MlpModel& model, std::span<const double> x);
std::vector<Prediction> PredictBatch(const MlpModel& model,
                                     const Eigen::MatrixXd& inputs);

// Mean cross-entropy with labels in {+1, -1}.
double CrossEntropyLoss(const MlpModel& model, const Eigen::MatrixXd& inputs,
                        std::span<const int> labels);

struct LossAndGradient {
  double loss = 0.0;
  std::vector<double> gradient;  // same order as FlatParameters()
};

LossAndGradient ComputeLossAndGradient(const MlpModel& model,
                                       const Eigen::MatrixXd& inputs,
                                       std::span<const int> labels);

struct Dataset {
  Eigen::MatrixXd inputs;  // d x n, one sample per column
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
};

struct TrainConfig {
  double learning_rate = 2e-4;
  double weight_decay = 1e-2;
  int epochs = 100;
  int batch_size = 64;
  std::uint64_t seed = 0;
  std::vector<std::size_t> hidden = {64, 32};
  int patience = 5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  Json ToJson() const;
  static TrainConfig FromJson(const Json& json);
};

// Learning rates the pipeline may search over.
inline constexpr double kLearningRateGrid[] = {2e-4, 1e-4, 5e-5};

struct TrainResult {
  MlpModel model;  // snapshot with the best monitored loss
  int best_epoch = 0;
  int epochs_run = 0;
  double best_loss = 0.0;
  std::vector<double> train_loss;
  std::vector<double> monitored_loss;
};

// Mini-batch AdamW on mean cross-entropy. The monitored loss is the
// validation loss when `validation` is non-empty, else the full training
// loss; training stops after `patience` epochs without improvement.
TrainResult TrainWeakModel(const Dataset& train, const Dataset& validation,
                           const TrainConfig& config);

}  // namespace amrule::learner

#endif  // AMRULE_MLP_HPP_
