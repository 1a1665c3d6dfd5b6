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

#include "amrule/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "amrule/error.hpp"
#include "amrule/random.hpp"

namespace amrule::learner {

MlpModel::MlpModel(std::vector<std::size_t> layer_sizes)
    : layer_sizes_(std::move(layer_sizes)) {
  if (layer_sizes_.size() < 2) {
    throw Error(ErrorCode::kConfig, "an MLP needs at least input and output");
  }
  for (std::size_t l = 0; l + 1 < layer_sizes_.size(); ++l) {
    const auto in = static_cast<Eigen::Index>(layer_sizes_[l]);
    const auto out = static_cast<Eigen::Index>(layer_sizes_[l + 1]);
    weights_.push_back(Eigen::MatrixXd::Zero(out, in));
    biases_.push_back(Eigen::VectorXd::Zero(out));
  }
}

MlpModel MlpModel::Initialize(std::vector<std::size_t> layer_sizes,
                              std::uint64_t seed) {
  MlpModel model(std::move(layer_sizes));
  Rng rng = MakeRng(seed, 0x494e4954);
  for (auto& w : model.weights_) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(w.cols()));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = dist(rng);
    }
  }
  return model;
}

std::size_t MlpModel::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    n += static_cast<std::size_t>(weights_[l].size() + biases_[l].size());
  }
  return n;
}

std::vector<double> MlpModel::FlatParameters() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    flat.insert(flat.end(), weights_[l].data(),
                weights_[l].data() + weights_[l].size());
    flat.insert(flat.end(), biases_[l].data(),
                biases_[l].data() + biases_[l].size());
  }
  return flat;
}

void MlpModel::SetFlatParameters(std::span<const double> flat) {
  if (flat.size() != parameter_count()) {
    throw Error(ErrorCode::kShape, "parameter vector has wrong length");
  }
  std::size_t offset = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    std::copy_n(flat.data() + offset, weights_[l].size(), weights_[l].data());
    offset += static_cast<std::size_t>(weights_[l].size());
    std::copy_n(flat.data() + offset, biases_[l].size(), biases_[l].data());
    offset += static_cast<std::size_t>(biases_[l].size());
  }
}

Eigen::MatrixXd MlpModel::Logits(const Eigen::MatrixXd& inputs) const {
  if (static_cast<std::size_t>(inputs.rows()) != input_dim()) {
    throw Error(ErrorCode::kShape,
                "input has " + std::to_string(inputs.rows()) +
                    " features, model expects " + std::to_string(input_dim()));
  }
  Eigen::MatrixXd act = inputs;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    Eigen::MatrixXd z = weights_[l] * act;
    z.colwise() += biases_[l];
    if (l + 1 < weights_.size()) {
      act = z.cwiseMax(0.0);
    } else {
      act = std::move(z);
    }
  }
  return act;
}

Eigen::MatrixXd Softmax(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd out(logits.rows(), logits.cols());
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    const double m = logits.col(j).maxCoeff();
    out.col(j) = (logits.col(j).array() - m).exp();
    out.col(j) /= out.col(j).sum();
  }
  return out;
}

Eigen::MatrixXd MlpModel::Probabilities(const Eigen::MatrixXd& inputs) const {
  return Softmax(Logits(inputs));
}

bool MlpModel::AllFinite() const {
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    if (!weights_[l].allFinite() || !biases_[l].allFinite()) return false;
  }
  return true;
}

Json MlpModel::ToJson() const {
  const auto flat = FlatParameters();
  return Json{{"layer_sizes", layer_sizes_},
              {"activation", "relu"},
              {"output", "softmax"},
              {"parameters", EncodeFloat64Base64(flat)}};
}

MlpModel MlpModel::FromJson(const Json& json) {
  MlpModel model(json.at("layer_sizes").get<std::vector<std::size_t>>());
  model.SetFlatParameters(
      DecodeFloat64Base64(json.at("parameters").get<std::string>()));
  return model;
}

namespace {

Prediction FromProbabilities(const Eigen::VectorXd& p) {
  // Ties resolve to class 0 (label +1).
  const Eigen::Index cls = p(1) > p(0) ? 1 : 0;
  return {LabelFromClass(cls), p(cls)};
}

}  // namespace

Prediction Predict(const MlpModel& model, std::span<const double> x) {
  if (x.size() != model.input_dim()) {
    throw Error(ErrorCode::kShape,
                "encoding has " + std::to_string(x.size()) +
                    " columns, model expects " +
                    std::to_string(model.input_dim()));
  }
  Eigen::Map<const Eigen::VectorXd> col(x.data(),
                                        static_cast<Eigen::Index>(x.size()));
  const Eigen::MatrixXd p = model.Probabilities(col);
  return FromProbabilities(p.col(0));
}

std::vector<Prediction> PredictBatch(const MlpModel& model,
                                     const Eigen::MatrixXd& inputs) {
  const Eigen::MatrixXd p = model.Probabilities(inputs);
  std::vector<Prediction> out;
  out.reserve(static_cast<std::size_t>(p.cols()));
  for (Eigen::Index j = 0; j < p.cols(); ++j) {
    out.push_back(FromProbabilities(p.col(j)));
  }
  return out;
}

double CrossEntropyLoss(const MlpModel& model, const Eigen::MatrixXd& inputs,
                        std::span<const int> labels) {
  const Eigen::MatrixXd logits = model.Logits(inputs);
  double total = 0.0;
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    const double m = logits.col(j).maxCoeff();
    const double lse =
        m + std::log((logits.col(j).array() - m).exp().sum());
    total += lse - logits(ClassFromLabel(labels[static_cast<std::size_t>(j)]), j);
  }
  return total / static_cast<double>(logits.cols());
}

LossAndGradient ComputeLossAndGradient(const MlpModel& model,
                                       const Eigen::MatrixXd& inputs,
                                       std::span<const int> labels) {
  const std::size_t layers = model.num_layers();
  const auto n = inputs.cols();
  if (static_cast<std::size_t>(n) != labels.size() || n == 0) {
    throw Error(ErrorCode::kShape, "inputs and labels disagree in length");
  }
  if (static_cast<std::size_t>(inputs.rows()) != model.input_dim()) {
    throw Error(ErrorCode::kShape, "input width does not match the model");
  }

  std::vector<Eigen::MatrixXd> acts;  // acts[0] = input, acts[l+1] = post-activation
  std::vector<Eigen::MatrixXd> pre;
  acts.reserve(layers + 1);
  pre.reserve(layers);
  acts.push_back(inputs);
  for (std::size_t l = 0; l < layers; ++l) {
    Eigen::MatrixXd z = model.weight(l) * acts.back();
    z.colwise() += model.bias(l);
    pre.push_back(z);
    acts.push_back(l + 1 < layers ? Eigen::MatrixXd(z.cwiseMax(0.0)) : z);
  }

  const Eigen::MatrixXd& logits = acts.back();
  Eigen::MatrixXd delta = Softmax(logits);
  double loss = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto cls = ClassFromLabel(labels[static_cast<std::size_t>(j)]);
    const double m = logits.col(j).maxCoeff();
    loss += m + std::log((logits.col(j).array() - m).exp().sum()) -
            logits(cls, j);
    delta(cls, j) -= 1.0;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  loss *= inv_n;
  delta *= inv_n;

  std::vector<Eigen::MatrixXd> grad_w(layers);
  std::vector<Eigen::VectorXd> grad_b(layers);
  for (std::size_t l = layers; l-- > 0;) {
    grad_w[l] = delta * acts[l].transpose();
    grad_b[l] = delta.rowwise().sum();
    if (l > 0) {
      Eigen::MatrixXd back = model.weight(l).transpose() * delta;
      delta = back.cwiseProduct(
          (pre[l - 1].array() > 0.0).cast<double>().matrix());
    }
  }

  LossAndGradient out;
  out.loss = loss;
  out.gradient.reserve(model.parameter_count());
  for (std::size_t l = 0; l < layers; ++l) {
    out.gradient.insert(out.gradient.end(), grad_w[l].data(),
                        grad_w[l].data() + grad_w[l].size());
    out.gradient.insert(out.gradient.end(), grad_b[l].data(),
                        grad_b[l].data() + grad_b[l].size());
  }
  return out;
}

Json TrainConfig::ToJson() const {
  return Json{{"learning_rate", learning_rate}, {"weight_decay", weight_decay},
              {"epochs", epochs},               {"batch_size", batch_size},
              {"seed", seed},                   {"hidden", hidden},
              {"patience", patience},           {"beta1", beta1},
              {"beta2", beta2},                 {"epsilon", epsilon}};
}

TrainConfig TrainConfig::FromJson(const Json& json) {
  TrainConfig c;
  c.learning_rate = json.value("learning_rate", c.learning_rate);
  c.weight_decay = json.value("weight_decay", c.weight_decay);
  c.epochs = json.value("epochs", c.epochs);
  c.batch_size = json.value("batch_size", c.batch_size);
  c.seed = json.value("seed", c.seed);
  c.hidden = json.value("hidden", c.hidden);
  c.patience = json.value("patience", c.patience);
  c.beta1 = json.value("beta1", c.beta1);
  c.beta2 = json.value("beta2", c.beta2);
  c.epsilon = json.value("epsilon", c.epsilon);
  return c;
}

namespace {

void CheckTrainable(const Dataset& data, const char* what) {
  if (data.size() == 0) {
    throw Error(ErrorCode::kEmptyDataset, std::string(what) + " set is empty");
  }
  if (static_cast<std::size_t>(data.inputs.cols()) != data.size()) {
    throw Error(ErrorCode::kShape,
                std::string(what) + " inputs and labels disagree in length");
  }
}

}  // namespace

TrainResult TrainWeakModel(const Dataset& train, const Dataset& validation,
                           const TrainConfig& config) {
  CheckTrainable(train, "training");
  const bool has_pos = std::any_of(train.labels.begin(), train.labels.end(),
                                   [](int y) { return y > 0; });
  const bool has_neg = std::any_of(train.labels.begin(), train.labels.end(),
                                   [](int y) { return y < 0; });
  if (!has_pos || !has_neg) {
    throw Error(ErrorCode::kDegenerateData,
                "training set contains a single class");
  }
  if (config.epochs < 1 || config.batch_size < 1 ||
      !(config.learning_rate > 0.0)) {
    throw Error(ErrorCode::kConfig,
                "epochs, batch_size and learning_rate must be positive");
  }
  const bool monitor_validation = validation.size() > 0;
  if (monitor_validation) CheckTrainable(validation, "validation");

  std::vector<std::size_t> sizes{static_cast<std::size_t>(train.inputs.rows())};
  sizes.insert(sizes.end(), config.hidden.begin(), config.hidden.end());
  sizes.push_back(2);
  MlpModel model = MlpModel::Initialize(sizes, config.seed);

  std::vector<double> params = model.FlatParameters();
  std::vector<double> m(params.size(), 0.0), v(params.size(), 0.0);
  Rng rng = MakeRng(config.seed, 0x5348554620);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  TrainResult result;
  result.best_loss = std::numeric_limits<double>::infinity();
  result.model = model;
  int since_best = 0;
  std::int64_t step = 0;
  const auto d = train.inputs.rows();

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      const auto bn = static_cast<Eigen::Index>(end - start);
      Eigen::MatrixXd batch(d, bn);
      std::vector<int> labels(static_cast<std::size_t>(bn));
      for (Eigen::Index k = 0; k < bn; ++k) {
        const auto idx = order[start + static_cast<std::size_t>(k)];
        batch.col(k) = train.inputs.col(static_cast<Eigen::Index>(idx));
        labels[static_cast<std::size_t>(k)] = train.labels[idx];
      }
      const auto lg = ComputeLossAndGradient(model, batch, labels);
      if (!std::isfinite(lg.loss)) {
        throw Error(ErrorCode::kDivergence,
                    "non-finite training loss at epoch " + std::to_string(epoch));
      }
      epoch_loss += lg.loss * static_cast<double>(bn);

      ++step;
      const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
      for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = lg.gradient[i];
        params[i] -= config.learning_rate * config.weight_decay * params[i];
        m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g;
        v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g * g;
        params[i] -= config.learning_rate * (m[i] / bc1) /
                     (std::sqrt(v[i] / bc2) + config.epsilon);
      }
      model.SetFlatParameters(params);
    }
    epoch_loss /= static_cast<double>(train.size());
    result.train_loss.push_back(epoch_loss);

    const double monitored =
        monitor_validation
            ? CrossEntropyLoss(model, validation.inputs, validation.labels)
            : CrossEntropyLoss(model, train.inputs, train.labels);
    if (!std::isfinite(monitored)) {
      throw Error(ErrorCode::kDivergence,
                  "non-finite monitored loss at epoch " + std::to_string(epoch));
    }
    result.monitored_loss.push_back(monitored);
    result.epochs_run = epoch;
    if (monitored < result.best_loss) {
      result.best_loss = monitored;
      result.best_epoch = epoch;
      result.model = model;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  return result;
}

}  // namespace amrule::learner
