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

#include "tenseg/policy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>

namespace tenseg::nn {

namespace {

// Forward pass keeping pre-activation inputs of every layer for backprop.
// Layer inputs/outputs are column-per-sample.
struct ForwardTrace {
  std::vector<MatX> inputs;  // inputs[l] is the input to layer l
  MatX output;
};

ForwardTrace forward_trace(const NeuralPolicy& p, const MatX& obs_rows) {
  ForwardTrace tr;
  const int layers = static_cast<int>(p.W.size());
  MatX x = ((obs_rows.rowwise() - p.input_mean.transpose()).array().rowwise() /
            p.input_scale.transpose().array())
               .transpose();
  for (int l = 0; l < layers; ++l) {
    tr.inputs.push_back(x);
    MatX a = (p.W[l] * x).colwise() + p.b[l];
    if (l + 1 < layers) a = a.cwiseMax(0.0);  // ReLU on hidden layers
    x = std::move(a);
  }
  tr.output = std::move(x);
  return tr;
}

struct Gradients {
  std::vector<MatX> dW;
  std::vector<VecX> db;
};

// Backprop of the mean weighted squared error over the batch.
Gradients backward(const NeuralPolicy& p, const ForwardTrace& tr,
                   const SupervisedBatch& batch, bool plain_mse) {
  const int layers = static_cast<int>(p.W.size());
  const int n = static_cast<int>(tr.output.cols());
  Gradients g;
  g.dW.resize(layers);
  g.db.resize(layers);

  MatX delta(p.action_dim, n);
  for (int j = 0; j < n; ++j) {
    const VecX err = tr.output.col(j) - batch.targets.row(j).transpose();
    if (plain_mse) {
      delta.col(j) = 2.0 * err / n;
    } else {
      delta.col(j) = 2.0 * (batch.weights[static_cast<std::size_t>(j)] * err) / n;
    }
  }
  for (int l = layers - 1; l >= 0; --l) {
    g.dW[l].noalias() = delta * tr.inputs[static_cast<std::size_t>(l)].transpose();
    g.db[l] = delta.rowwise().sum();
    if (l > 0) {
      MatX back = p.W[l].transpose() * delta;
      // ReLU mask: the input of layer l is the activation of layer l-1.
      delta = (tr.inputs[static_cast<std::size_t>(l)].array() > 0.0)
                  .select(back, MatX::Zero(back.rows(), back.cols()));
    }
  }
  return g;
}

}  // namespace

VecX NeuralPolicy::forward(const VecX& obs) const {
  if (obs.size() != input_dim) {
    throw std::invalid_argument("NeuralPolicy::forward: observation has " +
                                std::to_string(obs.size()) +
                                " channels, policy expects " +
                                std::to_string(input_dim));
  }
  VecX x = (obs - input_mean).cwiseQuotient(input_scale);
  const int layers = static_cast<int>(W.size());
  for (int l = 0; l < layers; ++l) {
    x = W[l] * x + b[l];
    if (l + 1 < layers) x = x.cwiseMax(0.0);
  }
  return x;
}

MatX NeuralPolicy::forward_batch(const MatX& observations) const {
  if (observations.cols() != input_dim) {
    throw std::invalid_argument("NeuralPolicy::forward_batch: bad width");
  }
  return forward_trace(*this, observations).output.transpose();
}

Vec12 NeuralPolicy::sample(const VecX& obs, std::mt19937_64& rng) const {
  std::normal_distribution<Scalar> normal(0.0, 1.0);
  VecX mean = forward(obs);
  Vec12 out;
  for (int i = 0; i < action_dim; ++i) {
    out[i] = mean[i] + std::sqrt(action_var[i]) * normal(rng);
  }
  return out;
}

std::int64_t NeuralPolicy::parameter_count() const {
  std::int64_t n = 0;
  for (std::size_t l = 0; l < W.size(); ++l) n += W[l].size() + b[l].size();
  return n;
}

NeuralPolicy make_policy(ObservationKind kind, std::uint64_t seed,
                         int hidden_units, int hidden_layers) {
  NeuralPolicy p;
  p.kind = kind;
  p.input_dim = observation_dim(kind);
  p.action_dim = kActionDim;
  std::mt19937_64 rng(seed);
  std::normal_distribution<Scalar> normal(0.0, 1.0);
  std::vector<int> dims;
  dims.push_back(p.input_dim);
  for (int l = 0; l < hidden_layers; ++l) dims.push_back(hidden_units);
  dims.push_back(p.action_dim);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const int in = dims[l], out = dims[l + 1];
    MatX w(out, in);
    const Scalar std_dev = std::sqrt(2.0 / in);
    for (int i = 0; i < out; ++i)
      for (int j = 0; j < in; ++j) w(i, j) = std_dev * normal(rng);
    p.W.push_back(std::move(w));
    p.b.push_back(VecX::Zero(out));
  }
  p.input_mean = VecX::Zero(p.input_dim);
  p.input_scale = VecX::Ones(p.input_dim);
  p.action_var = VecX::Ones(p.action_dim);
  return p;
}

Scalar batch_loss(const NeuralPolicy& policy, const SupervisedBatch& batch,
                  bool plain_mse) {
  const MatX out = policy.forward_batch(batch.observations);
  Scalar total = 0;
  for (int j = 0; j < batch.size(); ++j) {
    const VecX err = (out.row(j) - batch.targets.row(j)).transpose();
    total += plain_mse
                 ? err.squaredNorm()
                 : err.dot(batch.weights[static_cast<std::size_t>(j)] * err);
  }
  return total / batch.size();
}

VecX batch_gradient(const NeuralPolicy& policy, const SupervisedBatch& batch,
                    bool plain_mse) {
  const ForwardTrace tr = forward_trace(policy, batch.observations);
  const Gradients g = backward(policy, tr, batch, plain_mse);
  VecX flat(policy.parameter_count());
  int at = 0;
  for (std::size_t l = 0; l < g.dW.size(); ++l) {
    for (int i = 0; i < g.dW[l].rows(); ++i)
      for (int j = 0; j < g.dW[l].cols(); ++j) flat[at++] = g.dW[l](i, j);
    for (int i = 0; i < g.db[l].size(); ++i) flat[at++] = g.db[l][i];
  }
  return flat;
}

TrainStats train_supervised(NeuralPolicy& policy, const SupervisedBatch& batch,
                            const OptConfig& cfg) {
  if (batch.size() == 0) {
    throw std::invalid_argument("train_supervised: empty batch");
  }
  if (!batch.observations.allFinite() || !batch.targets.allFinite()) {
    throw std::invalid_argument("train_supervised: non-finite data");
  }
  if (!cfg.plain_mse &&
      batch.weights.size() != static_cast<std::size_t>(batch.size())) {
    throw std::invalid_argument("train_supervised: missing precision weights");
  }

  const int layers = static_cast<int>(policy.W.size());
  std::vector<MatX> vW(layers);
  std::vector<VecX> vb(layers);
  for (int l = 0; l < layers; ++l) {
    vW[l] = MatX::Zero(policy.W[l].rows(), policy.W[l].cols());
    vb[l] = VecX::Zero(policy.b[l].size());
  }

  TrainStats stats;
  stats.epoch_loss = VecX::Zero(cfg.epochs + 1);
  stats.epoch_loss[0] = batch_loss(policy, batch, cfg.plain_mse);

  std::mt19937_64 rng(cfg.seed);
  std::vector<int> order(static_cast<std::size_t>(batch.size()));
  std::iota(order.begin(), order.end(), 0);

  SupervisedBatch mini;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.shuffle) std::shuffle(order.begin(), order.end(), rng);
    for (int start = 0; start < batch.size(); start += cfg.batch_size) {
      const int count = std::min(cfg.batch_size, batch.size() - start);
      mini.observations.resize(count, batch.observations.cols());
      mini.targets.resize(count, batch.targets.cols());
      mini.weights.resize(static_cast<std::size_t>(count));
      for (int i = 0; i < count; ++i) {
        const int src = order[static_cast<std::size_t>(start + i)];
        mini.observations.row(i) = batch.observations.row(src);
        mini.targets.row(i) = batch.targets.row(src);
        if (!cfg.plain_mse) {
          mini.weights[static_cast<std::size_t>(i)] =
              batch.weights[static_cast<std::size_t>(src)];
        }
      }
      const ForwardTrace tr = forward_trace(policy, mini.observations);
      const Gradients g = backward(policy, tr, mini, cfg.plain_mse);
      for (int l = 0; l < layers; ++l) {
        vW[l] = cfg.momentum * vW[l] - cfg.learning_rate * g.dW[l];
        vb[l] = cfg.momentum * vb[l] - cfg.learning_rate * g.db[l];
        policy.W[l] += vW[l];
        policy.b[l] += vb[l];
      }
    }
    const Scalar loss = batch_loss(policy, batch, cfg.plain_mse);
    if (!std::isfinite(loss)) {
      throw std::runtime_error(
          "train_supervised: loss diverged at epoch " + std::to_string(epoch) +
          "; try a lower learning rate");
    }
    stats.epoch_loss[epoch + 1] = loss;
  }

  // Action covariance: diagonal of the inverse mean precision. The plain-MSE
  // loss alternative still uses the provided precisions here.
  if (!batch.weights.empty()) {
    MatX mean_precision =
        MatX::Zero(policy.action_dim, policy.action_dim);
    for (const MatX& w : batch.weights) mean_precision += w;
    mean_precision /= static_cast<Scalar>(batch.weights.size());
    mean_precision.diagonal().array() += 1e-9;
    const MatX cov = mean_precision.inverse();
    policy.action_var = cov.diagonal().cwiseMax(1e-12);
  }
  return stats;
}

Scalar gradient_check(const NeuralPolicy& policy, const SupervisedBatch& batch,
                      Scalar h) {
  const VecX analytic = batch_gradient(policy, batch);
  NeuralPolicy probe = policy;
  std::vector<Scalar*> params;
  for (std::size_t l = 0; l < probe.W.size(); ++l) {
    for (int i = 0; i < probe.W[l].rows(); ++i)
      for (int j = 0; j < probe.W[l].cols(); ++j)
        params.push_back(&probe.W[l](i, j));
    for (int i = 0; i < probe.b[l].size(); ++i)
      params.push_back(&probe.b[l][i]);
  }
  Scalar worst = 0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Scalar saved = *params[i];
    *params[i] = saved + h;
    const Scalar plus = batch_loss(probe, batch);
    *params[i] = saved - h;
    const Scalar minus = batch_loss(probe, batch);
    *params[i] = saved;
    const Scalar numeric = (plus - minus) / (2 * h);
    const Scalar a = analytic[static_cast<Eigen::Index>(i)];
    const Scalar rel =
        std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric),
                                          Scalar(1e-6)});
    worst = std::max(worst, rel);
  }
  return worst;
}

void save_neural_policy(const NeuralPolicy& p, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open checkpoint " + path);
  out.write("TGNN1\n\0\0", 8);
  const std::int32_t kind = p.kind == ObservationKind::kFull ? 1 : 0;
  const std::int32_t layers = static_cast<std::int32_t>(p.W.size());
  const std::int32_t in = p.input_dim, act = p.action_dim;
  out.write(reinterpret_cast<const char*>(&kind), 4);
  out.write(reinterpret_cast<const char*>(&in), 4);
  out.write(reinterpret_cast<const char*>(&act), 4);
  out.write(reinterpret_cast<const char*>(&layers), 4);
  auto write_vec = [&](const VecX& v) {
    const std::int64_t n = v.size();
    out.write(reinterpret_cast<const char*>(&n), 8);
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(sizeof(Scalar) * n));
  };
  for (std::int32_t l = 0; l < layers; ++l) {
    const std::int64_t rows = p.W[l].rows(), cols = p.W[l].cols();
    out.write(reinterpret_cast<const char*>(&rows), 8);
    out.write(reinterpret_cast<const char*>(&cols), 8);
    // Row-major element order.
    for (std::int64_t r = 0; r < rows; ++r) {
      for (std::int64_t c = 0; c < cols; ++c) {
        const Scalar v = p.W[l](r, c);
        out.write(reinterpret_cast<const char*>(&v), sizeof(Scalar));
      }
    }
    write_vec(p.b[l]);
  }
  write_vec(p.input_mean);
  write_vec(p.input_scale);
  write_vec(p.action_var);
  if (!out) throw std::runtime_error("failed writing checkpoint " + path);
}

NeuralPolicy load_neural_policy(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path);
  char magic[8];
  in.read(magic, 8);
  if (std::string(magic, 6) != "TGNN1\n") {
    throw std::runtime_error("unrecognized checkpoint " + path);
  }
  std::int32_t kind, input_dim, action_dim, layers;
  in.read(reinterpret_cast<char*>(&kind), 4);
  in.read(reinterpret_cast<char*>(&input_dim), 4);
  in.read(reinterpret_cast<char*>(&action_dim), 4);
  in.read(reinterpret_cast<char*>(&layers), 4);
  if (!in || layers < 1 || layers > 64) {
    throw std::runtime_error("corrupt checkpoint " + path);
  }
  NeuralPolicy p;
  p.kind = kind == 1 ? ObservationKind::kFull : ObservationKind::kLimited;
  p.input_dim = input_dim;
  p.action_dim = action_dim;
  auto read_vec = [&]() {
    std::int64_t n = 0;
    in.read(reinterpret_cast<char*>(&n), 8);
    if (!in || n < 0 || n > (1 << 24)) {
      throw std::runtime_error("corrupt checkpoint " + path);
    }
    VecX v(n);
    in.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(sizeof(Scalar) * n));
    return v;
  };
  for (std::int32_t l = 0; l < layers; ++l) {
    std::int64_t rows = 0, cols = 0;
    in.read(reinterpret_cast<char*>(&rows), 8);
    in.read(reinterpret_cast<char*>(&cols), 8);
    if (!in || rows < 0 || cols < 0 || rows * cols > (1 << 26)) {
      throw std::runtime_error("corrupt checkpoint " + path);
    }
    MatX w(rows, cols);
    for (std::int64_t r = 0; r < rows; ++r) {
      for (std::int64_t c = 0; c < cols; ++c) {
        Scalar v;
        in.read(reinterpret_cast<char*>(&v), sizeof(Scalar));
        w(r, c) = v;
      }
    }
    p.W.push_back(std::move(w));
    p.b.push_back(read_vec());
  }
  p.input_mean = read_vec();
  p.input_scale = read_vec();
  p.action_var = read_vec();
  if (!in) throw std::runtime_error("corrupt checkpoint " + path);
  return p;
}

}  // namespace tenseg::nn
