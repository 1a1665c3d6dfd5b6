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


#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "amrule/error.hpp"
#include "amrule/mlp.hpp"
#include "amrule/random.hpp"

namespace amrule::learner {
namespace {

Dataset Blobs(std::size_t n, std::uint64_t seed, bool shuffle_labels = false) {
  Rng rng = MakeRng(seed);
  std::normal_distribution<double> noise(0.0, 0.3);
  Dataset d;
  d.inputs.resize(2, static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const int y = i % 2 == 0 ? 1 : -1;
    d.inputs(0, static_cast<Eigen::Index>(i)) = 2.0 * y + noise(rng);
    d.inputs(1, static_cast<Eigen::Index>(i)) = noise(rng);
    d.labels.push_back(y);
  }
  if (shuffle_labels) std::shuffle(d.labels.begin(), d.labels.end(), rng);
  return d;
}

double TrainAccuracy(const MlpModel& m, const Dataset& d) {
  const auto preds = PredictBatch(m, d.inputs);
  std::size_t ok = 0;
  for (std::size_t i = 0; i < d.size(); ++i) ok += preds[i].label == d.labels[i] ? 1 : 0;
  return static_cast<double>(ok) / static_cast<double>(d.size());
}

TrainConfig Fast() {
  TrainConfig c;
  c.learning_rate = 1e-2;
  c.epochs = 50;
  c.hidden = {16, 8};
  c.seed = 3;
  c.patience = 50;
  return c;
}

TEST(TrainWeakModel, SeparableSetReachesPerfectTrainAccuracy) {
  const auto d = Blobs(200, 1);
  const auto r = TrainWeakModel(d, {}, Fast());
  EXPECT_LE(r.epochs_run, 50);
  EXPECT_EQ(TrainAccuracy(r.model, d), 1.0);
}

TEST(TrainWeakModel, PermutedLabelsStayNearChance) {
  const auto train = Blobs(400, 2, true);
  const auto val = Blobs(400, 9, true);
  const auto r = TrainWeakModel(train, val, Fast());
  EXPECT_NEAR(TrainAccuracy(r.model, val), 0.5, 0.1);
}

TEST(TrainWeakModel, SameSeedIdenticalParameters) {
  const auto d = Blobs(100, 4);
  auto c = Fast();
  c.epochs = 5;
  EXPECT_EQ(TrainWeakModel(d, {}, c).model, TrainWeakModel(d, {}, c).model);
}

TEST(TrainWeakModel, SingleClassIsDegenerate) {
  auto d = Blobs(10, 1);
  std::fill(d.labels.begin(), d.labels.end(), 1);
  try {
    TrainWeakModel(d, {}, Fast());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateData);
  }
}

TEST(MlpModel, ZeroWeightsPredictHalfAndPositive) {
  const MlpModel m({3, 4, 2});
  const std::vector<double> x = {0.3, -1.0, 2.0};
  const auto p = Predict(m, x);
  EXPECT_EQ(p.label, 1);
  EXPECT_DOUBLE_EQ(p.probability, 0.5);
}

TEST(MlpModel, ProbabilitiesSumToOneAndMatchLogitSign) {
  const auto m = MlpModel::Initialize({4, 6, 2}, 17);
  Rng rng = MakeRng(5);
  std::normal_distribution<double> g(0.0, 2.0);
  Eigen::MatrixXd x(4, 50);
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    for (Eigen::Index i = 0; i < 4; ++i) x(i, j) = g(rng);
  }
  const auto logits = m.Logits(x);
  const auto probs = m.Probabilities(x);
  const auto preds = PredictBatch(m, x);
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    EXPECT_NEAR(probs(0, j) + probs(1, j), 1.0, 1e-12);
    const int expected = logits(0, j) - logits(1, j) >= 0 ? 1 : -1;
    EXPECT_EQ(preds[static_cast<std::size_t>(j)].label, expected);
  }
}

TEST(MlpModel, SoftmaxStableForLargeLogits) {
  Eigen::MatrixXd z(2, 1);
  z << 1000.0, 0.0;
  const auto p = Softmax(z);
  EXPECT_DOUBLE_EQ(p(0, 0), 1.0);
  EXPECT_TRUE(std::isfinite(p(1, 0)));
}

TEST(MlpModel, WrongWidthIsShapeError) {
  const MlpModel m({3, 2});
  const std::vector<double> x = {1.0};
  EXPECT_THROW(Predict(m, x), Error);
}

TEST(MlpModel, JsonRoundTrip) {
  const auto m = MlpModel::Initialize({5, 4, 3, 2}, 8);
  EXPECT_EQ(MlpModel::FromJson(Json::parse(m.ToJson().dump())), m);
}

TEST(MlpModel, GradientMatchesCentralDifferences) {
  const auto m = MlpModel::Initialize({3, 5, 4, 2}, 21);
  const auto d = Blobs(7, 6);
  Eigen::MatrixXd x(3, 7);
  x.topRows(2) = d.inputs;
  x.row(2).setConstant(0.5);
  const auto lg = ComputeLossAndGradient(m, x, d.labels);
  EXPECT_NEAR(lg.loss, CrossEntropyLoss(m, x, d.labels), 1e-12);
  auto params = m.FlatParameters();
  MlpModel probe = m;
  constexpr double h = 1e-6;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double keep = params[i];
    params[i] = keep + h;
    probe.SetFlatParameters(params);
    const double up = CrossEntropyLoss(probe, x, d.labels);
    params[i] = keep - h;
    probe.SetFlatParameters(params);
    const double down = CrossEntropyLoss(probe, x, d.labels);
    params[i] = keep;
    const double numeric = (up - down) / (2 * h);
    EXPECT_NEAR(lg.gradient[i], numeric, 1e-6 + 1e-4 * std::abs(numeric)) << i;
  }
}

}  // namespace
}  // namespace amrule::learner
