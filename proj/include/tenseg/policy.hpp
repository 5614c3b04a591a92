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

#ifndef TENSEG_POLICY_HPP_
#define TENSEG_POLICY_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "tenseg/sim.hpp"
#include "tenseg/types.hpp"

namespace tenseg::nn {

// Feed-forward policy: observation -> normalized input -> ReLU hidden
// layers -> linear action mean, plus a diagonal state-independent action
// covariance.
struct NeuralPolicy {
  ObservationKind kind = ObservationKind::kLimited;
  int input_dim = 12;
  int action_dim = kActionDim;
  std::vector<MatX> W;  // layer weights, W[l] is (out x in)
  std::vector<VecX> b;
  VecX input_mean, input_scale;  // frozen input normalization
  VecX action_var;               // diagonal action covariance, > 0

  VecX forward(const VecX& obs) const;
  // Batched evaluation; observations and result have one row per sample.
  MatX forward_batch(const MatX& observations) const;
  Vec12 sample(const VecX& obs, std::mt19937_64& rng) const;

  std::int64_t parameter_count() const;
};

// Random He-initialized policy (3 hidden layers of 64 by default).
NeuralPolicy make_policy(ObservationKind kind, std::uint64_t seed,
                         int hidden_units = 64, int hidden_layers = 3);

// Rows of (observation, target action mean, action-space precision) from the
// current iteration's episodes.
struct SupervisedBatch {
  MatX observations;          // N x input_dim
  MatX targets;               // N x action_dim
  std::vector<MatX> weights;  // N PSD precision matrices (action x action)

  int size() const { return static_cast<int>(observations.rows()); }
};

struct OptConfig {
  Scalar learning_rate = 1e-3;
  Scalar momentum = 0.9;
  int batch_size = 64;
  int epochs = 200;
  bool shuffle = true;
  bool plain_mse = false;  // ignore precision weights
  std::uint64_t seed = 0;
};

struct TrainStats {
  // Full-dataset weighted loss before training and after each epoch.
  VecX epoch_loss;
};

// Minimizes the precision-weighted squared error by mini-batch gradient
// descent with momentum, then sets the policy covariance to the diagonal of
// the inverse mean precision. Throws std::runtime_error if the loss stops
// being finite.
TrainStats train_supervised(NeuralPolicy& policy, const SupervisedBatch& batch,
                            const OptConfig& cfg);

// Full-dataset weighted loss (mean over rows).
Scalar batch_loss(const NeuralPolicy& policy, const SupervisedBatch& batch,
                  bool plain_mse = false);

// Analytic parameter gradient of batch_loss, flattened in parameter order.
VecX batch_gradient(const NeuralPolicy& policy, const SupervisedBatch& batch,
                    bool plain_mse = false);

// Compares the analytic gradient against central finite differences and
// returns the maximum relative deviation.
Scalar gradient_check(const NeuralPolicy& policy, const SupervisedBatch& batch,
                      Scalar h = 1e-5);

// Versioned checkpoint with input kind, dimensions, normalization constants,
// weights and covariance.
void save_neural_policy(const NeuralPolicy& policy, const std::string& path);
NeuralPolicy load_neural_policy(const std::string& path);

}  // namespace tenseg::nn

#endif  // TENSEG_POLICY_HPP_
