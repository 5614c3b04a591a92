// Copyright 2026 The tenseg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "tenseg/policy.hpp"
#include "tenseg/rng.hpp"

using namespace tenseg;
using namespace tenseg::nn;

namespace {

SupervisedBatch random_batch(int n, int in_dim, std::mt19937_64& rng,
                             const MatX* map = nullptr) {
  std::normal_distribution<Scalar> normal(0.0, 1.0);
  SupervisedBatch b;
  b.observations.resize(n, in_dim);
  b.targets.resize(n, kActionDim);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < in_dim; ++j) b.observations(i, j) = normal(rng);
    if (map) {
      b.targets.row(i) = (*map * b.observations.row(i).transpose()).transpose();
    } else {
      for (int j = 0; j < kActionDim; ++j) b.targets(i, j) = normal(rng);
    }
  }
  b.weights.assign(static_cast<std::size_t>(n),
                   MatX::Identity(kActionDim, kActionDim));
  return b;
}

// Independent scalar re-implementation of the forward pass.
VecX forward_oracle(const NeuralPolicy& p, const VecX& obs) {
  std::vector<double> x(static_cast<std::size_t>(p.input_dim));
  for (int i = 0; i < p.input_dim; ++i) {
    x[static_cast<std::size_t>(i)] =
        (obs[i] - p.input_mean[i]) / p.input_scale[i];
  }
  for (std::size_t l = 0; l < p.W.size(); ++l) {
    std::vector<double> y(static_cast<std::size_t>(p.W[l].rows()), 0.0);
    for (int i = 0; i < p.W[l].rows(); ++i) {
      double acc = p.b[l][i];
      for (int j = 0; j < p.W[l].cols(); ++j) {
        acc += p.W[l](i, j) * x[static_cast<std::size_t>(j)];
      }
      y[static_cast<std::size_t>(i)] = acc;
    }
    if (l + 1 < p.W.size()) {
      for (double& v : y) v = v > 0 ? v : 0.0;
    }
    x = std::move(y);
  }
  VecX out(static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[static_cast<Eigen::Index>(i)] = x[i];
  }
  return out;
}

}  // namespace

TEST_CASE("forward pass basics") {
  std::mt19937_64 rng = make_stream(201);
  NeuralPolicy p = make_policy(ObservationKind::kLimited, 11);

  SUBCASE("all-zero weights give zero action") {
    for (auto& w : p.W) w.setZero();
    for (auto& b : p.b) b.setZero();
    std::normal_distribution<Scalar> normal(0.0, 1.0);
    VecX obs(12);
    for (int i = 0; i < 12; ++i) obs[i] = normal(rng);
    CHECK(p.forward(obs).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("scaling the output layer scales the action") {
    std::normal_distribution<Scalar> normal(0.0, 1.0);
    VecX obs(12);
    for (int i = 0; i < 12; ++i) obs[i] = normal(rng);
    const VecX base = p.forward(obs);
    p.W.back() *= 2.0;
    p.b.back() *= 2.0;
    CHECK((p.forward(obs) - 2.0 * base).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("matches the scalar recomputation oracle") {
    p.input_mean.setConstant(0.3);
    p.input_scale.setConstant(1.7);
    std::normal_distribution<Scalar> normal(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
      VecX obs(12);
      for (int i = 0; i < 12; ++i) obs[i] = 3.0 * normal(rng);
      CHECK((p.forward(obs) - forward_oracle(p, obs)).cwiseAbs().maxCoeff() <
            1e-10);
    }
  }
  SUBCASE("batched forward agrees with per-row forward") {
    std::normal_distribution<Scalar> normal(0.0, 1.0);
    MatX obs(5, 12);
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 12; ++j) obs(i, j) = normal(rng);
    const MatX batched = p.forward_batch(obs);
    for (int i = 0; i < 5; ++i) {
      CHECK((batched.row(i).transpose() - p.forward(obs.row(i).transpose()))
                .cwiseAbs()
                .maxCoeff() < 1e-12);
    }
  }
  SUBCASE("dimension mismatch is an error") {
    CHECK_THROWS_AS(p.forward(VecX::Zero(36)), std::invalid_argument);
  }
}

TEST_CASE("supervised training fits simple targets") {
  std::mt19937_64 rng = make_stream(202);

  SUBCASE("linear map with identity weights: loss drops 10x") {
    MatX map = MatX::Zero(kActionDim, 12);
    std::normal_distribution<Scalar> normal(0.0, 1.0);
    for (int i = 0; i < map.rows(); ++i)
      for (int j = 0; j < map.cols(); ++j) map(i, j) = 0.5 * normal(rng);
    SupervisedBatch batch = random_batch(512, 12, rng, &map);
    NeuralPolicy p = make_policy(ObservationKind::kLimited, 5);
    OptConfig cfg;
    cfg.epochs = 60;
    cfg.learning_rate = 2e-3;
    const TrainStats stats = train_supervised(p, batch, cfg);
    CHECK(stats.epoch_loss[cfg.epochs] <= stats.epoch_loss[0] / 10.0);
  }
  SUBCASE("single repeated pair converges to the target") {
    SupervisedBatch batch = random_batch(1, 12, rng);
    SupervisedBatch repeated;
    repeated.observations = batch.observations.replicate(32, 1);
    repeated.targets = batch.targets.replicate(32, 1);
    repeated.weights.assign(32, MatX::Identity(kActionDim, kActionDim));
    NeuralPolicy p = make_policy(ObservationKind::kLimited, 6);
    OptConfig cfg;
    cfg.epochs = 300;
    cfg.learning_rate = 5e-3;
    train_supervised(p, repeated, cfg);
    const VecX err = p.forward(repeated.observations.row(0).transpose()) -
                     repeated.targets.row(0).transpose();
    CHECK(err.squaredNorm() < 1e-6);
  }
  SUBCASE("epoch loss trend is non-increasing within 1%") {
    SupervisedBatch batch = random_batch(256, 12, rng);
    NeuralPolicy p = make_policy(ObservationKind::kLimited, 7);
    OptConfig cfg;
    cfg.epochs = 40;
    const TrainStats stats = train_supervised(p, batch, cfg);
    for (int e = 1; e <= cfg.epochs; ++e) {
      CHECK(stats.epoch_loss[e] <= stats.epoch_loss[e - 1] * 1.01);
    }
  }
}

TEST_CASE("zero precision weight removes a row's influence") {
  std::mt19937_64 rng = make_stream(203);
  SupervisedBatch batch = random_batch(24, 12, rng);
  for (int i = 16; i < 24; ++i) {
    batch.weights[static_cast<std::size_t>(i)].setZero();
  }

  SUBCASE("zero-weight rows contribute exactly zero gradient") {
    SupervisedBatch only_zero;
    only_zero.observations = batch.observations.bottomRows(8);
    only_zero.targets = batch.targets.bottomRows(8);
    only_zero.weights.assign(8, MatX::Zero(kActionDim, kActionDim));
    NeuralPolicy p = make_policy(ObservationKind::kLimited, 8);
    CHECK(batch_gradient(p, only_zero).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("training result identical with zero-weight rows removed") {
    // Plain SGD, fixed order, single-sample batches: a zero-gradient row is
    // an exact no-op, so dropping it cannot change the trajectory.
    OptConfig cfg;
    cfg.batch_size = 1;
    cfg.shuffle = false;
    cfg.momentum = 0.0;
    cfg.epochs = 5;
    NeuralPolicy a = make_policy(ObservationKind::kLimited, 9);
    NeuralPolicy b = a;
    train_supervised(a, batch, cfg);
    SupervisedBatch trimmed;
    trimmed.observations = batch.observations.topRows(16);
    trimmed.targets = batch.targets.topRows(16);
    trimmed.weights.assign(batch.weights.begin(), batch.weights.begin() + 16);
    train_supervised(b, trimmed, cfg);
    for (std::size_t l = 0; l < a.W.size(); ++l) {
      CHECK((a.W[l] - b.W[l]).cwiseAbs().maxCoeff() == 0.0);
    }
  }
}

TEST_CASE("analytic gradients match central finite differences") {
  std::mt19937_64 rng = make_stream(204);
  SupervisedBatch batch = random_batch(8, 12, rng);
  for (auto& w : batch.weights) {
    MatX a = MatX::Random(kActionDim, kActionDim);
    w = a * a.transpose() + MatX::Identity(kActionDim, kActionDim);
  }
  NeuralPolicy p = make_policy(ObservationKind::kLimited, 10, 16, 2);

  const Scalar err_h = gradient_check(p, batch, 1e-5);
  CHECK(err_h < 1e-4);
  SUBCASE("halving h does not grow the error past the threshold") {
    const Scalar err_h2 = gradient_check(p, batch, 5e-6);
    CHECK((err_h2 <= err_h || err_h2 < 1e-4));
  }
  SUBCASE("zero network with zero targets sits at a stationary point") {
    NeuralPolicy z = make_policy(ObservationKind::kLimited, 11, 16, 2);
    for (auto& w : z.W) w.setZero();
    for (auto& b : z.b) b.setZero();
    SupervisedBatch zb = batch;
    zb.targets.setZero();
    CHECK(batch_gradient(z, zb).cwiseAbs().maxCoeff() == 0.0);
    CHECK(gradient_check(z, zb) == 0.0);
  }
}

TEST_CASE("training failure paths") {
  std::mt19937_64 rng = make_stream(205);
  SupervisedBatch batch = random_batch(32, 12, rng);
  NeuralPolicy p = make_policy(ObservationKind::kLimited, 12);
  OptConfig cfg;
  cfg.learning_rate = 1e6;  // guaranteed blow-up
  cfg.epochs = 50;
  CHECK_THROWS_AS(train_supervised(p, batch, cfg), std::runtime_error);
}

TEST_CASE("neural policy checkpoint round-trips bitwise") {
  std::mt19937_64 rng = make_stream(206);
  NeuralPolicy p = make_policy(ObservationKind::kFull, 13);
  p.input_mean.setRandom();
  p.input_scale.setConstant(2.5);
  p.action_var.setConstant(0.04);
  const std::string path = "/tmp/tenseg_test_nn.bin";
  save_neural_policy(p, path);
  const NeuralPolicy q = load_neural_policy(path);
  REQUIRE(q.kind == p.kind);
  REQUIRE(q.input_dim == p.input_dim);
  for (std::size_t l = 0; l < p.W.size(); ++l) {
    CHECK((q.W[l] - p.W[l]).cwiseAbs().maxCoeff() == 0.0);
    CHECK((q.b[l] - p.b[l]).cwiseAbs().maxCoeff() == 0.0);
  }
  CHECK((q.input_mean - p.input_mean).cwiseAbs().maxCoeff() == 0.0);
  CHECK((q.action_var - p.action_var).cwiseAbs().maxCoeff() == 0.0);
  std::normal_distribution<Scalar> normal(0.0, 1.0);
  VecX obs(36);
  for (int i = 0; i < 36; ++i) obs[i] = normal(rng);
  CHECK((q.forward(obs) - p.forward(obs)).cwiseAbs().maxCoeff() == 0.0);
}
