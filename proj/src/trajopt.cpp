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

#include "tenseg/trajopt.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>

namespace tenseg::trajopt {

namespace {

// Per-timestep regression samples pooled from neighboring steps with
// decaying weights until `needed` raw samples are available.
struct PooledWindow {
  int halfwidth = 0;
  std::vector<std::pair<int, Scalar>> offsets;  // (dt, weight)
};

PooledWindow pooling_window(int t, int T, int per_step, int needed) {
  PooledWindow w;
  int count = per_step;
  while (count < needed) {
    ++w.halfwidth;
    int gained = 0;
    if (t - w.halfwidth >= 0) gained += per_step;
    if (t + w.halfwidth < T) gained += per_step;
    if (gained == 0) break;  // window already covers the whole horizon
    count += gained;
  }
  for (int dt = -w.halfwidth; dt <= w.halfwidth; ++dt) {
    if (t + dt < 0 || t + dt >= T) continue;
    w.offsets.emplace_back(dt, Scalar(1) / (1 + std::abs(dt)));
  }
  return w;
}

void write_matrix(std::ofstream& out, const MatX& m) {
  const std::int64_t rows = m.rows(), cols = m.cols();
  out.write(reinterpret_cast<const char*>(&rows), 8);
  out.write(reinterpret_cast<const char*>(&cols), 8);
  for (std::int64_t r = 0; r < rows; ++r) {
    for (std::int64_t c = 0; c < cols; ++c) {
      const Scalar v = m(r, c);
      out.write(reinterpret_cast<const char*>(&v), sizeof(Scalar));
    }
  }
}

MatX read_matrix(std::ifstream& in) {
  std::int64_t rows = 0, cols = 0;
  in.read(reinterpret_cast<char*>(&rows), 8);
  in.read(reinterpret_cast<char*>(&cols), 8);
  if (!in || rows < 0 || cols < 0 || rows > (1 << 24) || cols > (1 << 24)) {
    throw std::runtime_error("checkpoint: corrupt matrix header");
  }
  MatX m(rows, cols);
  for (std::int64_t r = 0; r < rows; ++r) {
    for (std::int64_t c = 0; c < cols; ++c) {
      Scalar v;
      in.read(reinterpret_cast<char*>(&v), sizeof(Scalar));
      m(r, c) = v;
    }
  }
  if (!in) throw std::runtime_error("checkpoint: truncated matrix");
  return m;
}

}  // namespace

VecX LinearGaussianPolicy::sample_action(int t, const VecX& x,
                                         std::mt19937_64& rng) const {
  std::normal_distribution<Scalar> normal(0.0, 1.0);
  VecX z(m);
  for (int i = 0; i < m; ++i) z[i] = normal(rng);
  return mean_action(t, x) + sigma_chol[t] * z;
}

void LinearGaussianPolicy::refresh_cholesky() {
  sigma_chol.resize(sigma.size());
  for (std::size_t t = 0; t < sigma.size(); ++t) {
    Eigen::LLT<MatX> llt(sigma[t]);
    if (llt.info() != Eigen::Success) {
      throw std::runtime_error(
          "LinearGaussianPolicy: covariance not positive definite at t=" +
          std::to_string(t));
    }
    sigma_chol[t] = llt.matrixL();
  }
}

LinearGaussianPolicy LinearGaussianPolicy::initial(int T, int n, int m,
                                                   const VecX& offset,
                                                   Scalar stddev) {
  LinearGaussianPolicy p;
  p.T = T;
  p.n = n;
  p.m = m;
  p.K.assign(T, MatX::Zero(m, n));
  p.k.assign(T, offset);
  p.sigma.assign(T, stddev * stddev * MatX::Identity(m, m));
  p.refresh_cholesky();
  return p;
}

TimeVaryingLinearDynamics fit_dynamics(const std::vector<Episode>& episodes,
                                       Scalar pool_factor, Scalar ridge) {
  if (episodes.size() < 3) {
    throw std::invalid_argument(
        "fit_dynamics: need at least 3 episodes, got " +
        std::to_string(episodes.size()));
  }
  const int T = episodes.front().horizon();
  const int n = static_cast<int>(episodes.front().states.cols());
  const int m = static_cast<int>(episodes.front().actions.cols());
  for (const Episode& e : episodes) {
    if (e.horizon() != T || e.states.cols() != n || e.actions.cols() != m) {
      throw std::invalid_argument("fit_dynamics: inconsistent episode shapes");
    }
    if (!e.states.allFinite() || !e.actions.allFinite()) {
      throw std::invalid_argument("fit_dynamics: non-finite episode data");
    }
  }
  const int n_eps = static_cast<int>(episodes.size());
  const int dim = n + m + 1;

  TimeVaryingLinearDynamics dyn;
  dyn.T = T;
  dyn.n = n;
  dyn.m = m;
  dyn.fx.resize(T);
  dyn.fu.resize(T);
  dyn.fc.resize(T);
  dyn.F.resize(T);
  dyn.x_mean = MatX::Zero(T + 1, n);
  dyn.u_mean = MatX::Zero(T, m);
  for (const Episode& e : episodes) {
    dyn.x_mean += e.states / n_eps;
    dyn.u_mean += e.actions / n_eps;
  }
  dyn.x0_mean = dyn.x_mean.row(0).transpose();
  dyn.x0_cov = MatX::Zero(n, n);
  for (const Episode& e : episodes) {
    const VecX d = e.states.row(0).transpose() - dyn.x0_mean;
    dyn.x0_cov += d * d.transpose() / n_eps;
  }

  const int needed =
      std::max(dim + 1, static_cast<int>(std::ceil(pool_factor * dim)));
  VecX z(dim);
  for (int t = 0; t < T; ++t) {
    const PooledWindow window = pooling_window(t, T, n_eps, needed);
    MatX gram = MatX::Zero(dim, dim);
    MatX cross = MatX::Zero(dim, n);
    Scalar weight_sum = 0;
    for (const auto& [dt, w] : window.offsets) {
      const int s = t + dt;
      for (const Episode& e : episodes) {
        z.head(n) = e.states.row(s).transpose();
        z.segment(n, m) = e.actions.row(s).transpose();
        z[dim - 1] = 1.0;
        gram.noalias() += w * z * z.transpose();
        cross.noalias() += w * z * e.states.row(s + 1);
        weight_sum += w;
      }
    }
    gram /= weight_sum;
    cross /= weight_sum;
    const Scalar scale = gram.trace() / dim;
    gram.diagonal().array() += ridge * std::max(scale, Scalar(1e-12));
    Eigen::LDLT<MatX> ldlt(gram);
    if (ldlt.info() != Eigen::Success) {
      throw std::runtime_error("fit_dynamics: singular regression at t=" +
                               std::to_string(t));
    }
    const MatX coeffs = ldlt.solve(cross);  // dim x n
    dyn.fx[t] = coeffs.topRows(n).transpose();
    dyn.fu[t] = coeffs.middleRows(n, m).transpose();
    dyn.fc[t] = coeffs.row(dim - 1).transpose();

    // Residual covariance over the pooled samples, floored to stay PD.
    MatX F = MatX::Zero(n, n);
    for (const auto& [dt, w] : window.offsets) {
      const int s = t + dt;
      for (const Episode& e : episodes) {
        z.head(n) = e.states.row(s).transpose();
        z.segment(n, m) = e.actions.row(s).transpose();
        z[dim - 1] = 1.0;
        const VecX resid =
            e.states.row(s + 1).transpose() - coeffs.transpose() * z;
        F.noalias() += w * resid * resid.transpose();
      }
    }
    F /= weight_sum;
    F = 0.5 * (F + F.transpose());
    F.diagonal().array() += ridge * std::max(scale, Scalar(1e-12));
    dyn.F[t] = F;
  }
  return dyn;
}

Scalar QuadraticCostExpansion::evaluate(int t, const VecX& x,
                                        const VecX& u) const {
  const VecX dx = x - x_ref.row(t).transpose();
  Scalar v = constant[t] + lx[t].dot(dx) + 0.5 * dx.dot(lxx[t] * dx);
  if (t < T) {
    const VecX du = u - u_ref.row(t).transpose();
    v += lu[t].dot(du) + 0.5 * du.dot(luu[t] * du) + du.dot(lux[t] * dx);
  }
  return v;
}

QuadraticCostExpansion expand_cost(const std::vector<Episode>& episodes,
                                   const CostConfig& cost_cfg,
                                   Scalar state_reg) {
  if (episodes.empty()) {
    throw std::invalid_argument("expand_cost: no episodes");
  }
  const int T = episodes.front().horizon();
  const int n = static_cast<int>(episodes.front().states.cols());
  const int m = static_cast<int>(episodes.front().actions.cols());
  if (n != kStateDim || m != kActionDim) {
    throw std::invalid_argument(
        "expand_cost: expects the robot state/action layout");
  }
  const int n_eps = static_cast<int>(episodes.size());

  QuadraticCostExpansion c;
  c.T = T;
  c.n = n;
  c.m = m;
  c.x_ref = MatX::Zero(T + 1, n);
  c.u_ref = MatX::Zero(T, m);
  Vec12 prev0 = Vec12::Zero();
  for (const Episode& e : episodes) {
    c.x_ref += e.states / n_eps;
    c.u_ref += e.actions / n_eps;
    prev0 += e.initial_prev_action / n_eps;
  }

  // Stage t carries the action-change term of u_t; the velocity reward of
  // x_{t+1} lands on stage t+1 (velocity coordinates occupy 36..71).
  const Vec3 heading = cost_cfg.heading();
  VecX vel_grad = VecX::Zero(n);
  for (int e = 0; e < kNumEndpoints; ++e) {
    vel_grad.segment<3>(36 + 3 * e) = -heading / kNumEndpoints;
  }

  c.lx.assign(T + 1, VecX::Zero(n));
  c.lxx.assign(T + 1, state_reg * MatX::Identity(n, n));
  c.lu.assign(T, VecX::Zero(m));
  c.luu.assign(T, (2.0 * cost_cfg.action_reg_weight + state_reg) *
                      MatX::Identity(m, m));
  c.lux.assign(T, MatX::Zero(m, n));
  c.constant = VecX::Zero(T + 1);

  for (int t = 0; t <= T; ++t) {
    if (t >= 1) {
      c.lx[t] = vel_grad;
      c.constant[t] += vel_grad.dot(c.x_ref.row(t).transpose());
    }
    if (t < T) {
      const VecX u_prev =
          t == 0 ? VecX(prev0) : VecX(c.u_ref.row(t - 1).transpose());
      const VecX delta = c.u_ref.row(t).transpose() - u_prev;
      c.lu[t] = 2.0 * cost_cfg.action_reg_weight * delta;
      c.constant[t] += cost_cfg.action_reg_weight * delta.squaredNorm();
    }
  }
  return c;
}

LinearGaussianPolicy backward_pass(const TimeVaryingLinearDynamics& dyn,
                                   const QuadraticCostExpansion& cost,
                                   const LinearGaussianPolicy* prev,
                                   Scalar eta) {
  const int T = dyn.T, n = dyn.n, m = dyn.m;
  if (cost.T != T || cost.n != n || cost.m != m) {
    throw std::invalid_argument("backward_pass: cost/dynamics shape mismatch");
  }
  const bool use_kl = prev != nullptr && std::isfinite(eta);
  if (use_kl && (prev->T != T || prev->n != n || prev->m != m)) {
    throw std::invalid_argument("backward_pass: prev policy shape mismatch");
  }
  if (!(eta > 0)) throw std::invalid_argument("backward_pass: eta must be > 0");
  const Scalar cost_scale = std::isfinite(eta) ? eta : 1.0;

  LinearGaussianPolicy pol;
  pol.T = T;
  pol.n = n;
  pol.m = m;
  pol.K.resize(T);
  pol.k.resize(T);
  pol.sigma.resize(T);

  MatX Vxx = cost_scale * cost.lxx[T];
  VecX vx = cost_scale * cost.lx[T];

  for (int t = T - 1; t >= 0; --t) {
    MatX Cxx = cost_scale * cost.lxx[t];
    MatX Cuu = cost_scale * cost.luu[t];
    MatX Cux = cost_scale * cost.lux[t];
    VecX cx = cost_scale * cost.lx[t];
    VecX cu = cost_scale * cost.lu[t];

    if (use_kl) {
      // Penalty -log prev(u|x) expanded around the reference trajectory.
      const MatX& Kp = prev->K[t];
      Eigen::LLT<MatX> llt(prev->sigma[t]);
      if (llt.info() != Eigen::Success) {
        throw std::runtime_error(
            "backward_pass: prev covariance not PD at t=" + std::to_string(t));
      }
      const MatX S = llt.solve(MatX::Identity(m, m));
      const VecX b = Kp * cost.x_ref.row(t).transpose() + prev->k[t] -
                     cost.u_ref.row(t).transpose();
      Cuu += S;
      Cux -= S * Kp;
      Cxx += Kp.transpose() * S * Kp;
      cu -= S * b;
      cx += Kp.transpose() * S * b;
    }

    const MatX& fx = dyn.fx[t];
    const MatX& fu = dyn.fu[t];
    const VecX resid = fx * cost.x_ref.row(t).transpose() +
                       fu * cost.u_ref.row(t).transpose() + dyn.fc[t] -
                       cost.x_ref.row(t + 1).transpose();

    const VecX vplus = vx + Vxx * resid;
    MatX Qxx = Cxx;
    Qxx.noalias() += fx.transpose() * Vxx * fx;
    MatX Quu = Cuu;
    Quu.noalias() += fu.transpose() * Vxx * fu;
    MatX Qux = Cux;
    Qux.noalias() += fu.transpose() * Vxx * fx;
    const VecX qx = cx + fx.transpose() * vplus;
    const VecX qu = cu + fu.transpose() * vplus;

    Quu = 0.5 * (Quu + Quu.transpose());
    const Scalar quu_scale =
        std::max(Quu.diagonal().maxCoeff(), Scalar(1e-12));
    Scalar reg = 0.0;
    Eigen::LLT<MatX> llt(Quu);
    while (llt.info() != Eigen::Success) {
      reg = reg == 0.0 ? 1e-10 * quu_scale : 10 * reg;
      if (reg > 1e8 * quu_scale) {
        throw std::runtime_error(
            "backward_pass: action curvature not positive definite at t=" +
            std::to_string(t));
      }
      MatX Quu_reg = Quu;
      Quu_reg.diagonal().array() += reg;
      llt.compute(Quu_reg);
    }

    const MatX Kdev = -llt.solve(Qux);
    const VecX kdev = -llt.solve(qu);
    MatX sig = llt.solve(MatX::Identity(m, m));
    pol.sigma[t] = 0.5 * (sig + sig.transpose());
    pol.K[t] = Kdev;
    pol.k[t] = cost.u_ref.row(t).transpose() + kdev -
               Kdev * cost.x_ref.row(t).transpose();

    Vxx = Qxx + Qux.transpose() * Kdev;
    Vxx = 0.5 * (Vxx + Vxx.transpose());
    vx = qx + Qux.transpose() * kdev;
  }
  pol.refresh_cholesky();
  return pol;
}

Scalar expected_kl(const LinearGaussianPolicy& p,
                   const LinearGaussianPolicy& q,
                   const TimeVaryingLinearDynamics& dyn) {
  const int T = dyn.T, n = dyn.n, m = dyn.m;
  if (p.T != T || q.T != T || p.n != n || q.n != n || p.m != m || q.m != m) {
    throw std::invalid_argument("expected_kl: shape mismatch");
  }
  VecX mu = dyn.x0_mean;
  MatX cov = dyn.x0_cov;
  Scalar total = 0;
  for (int t = 0; t < T; ++t) {
    Eigen::LLT<MatX> lq(q.sigma[t]);
    Eigen::LLT<MatX> lp(p.sigma[t]);
    if (lq.info() != Eigen::Success || lp.info() != Eigen::Success) {
      throw std::runtime_error("expected_kl: singular covariance at t=" +
                               std::to_string(t));
    }
    const MatX qinv = lq.solve(MatX::Identity(m, m));
    Scalar logdet_q = 0, logdet_p = 0;
    for (int i = 0; i < m; ++i) {
      logdet_q += 2.0 * std::log(lq.matrixL()(i, i));
      logdet_p += 2.0 * std::log(lp.matrixL()(i, i));
    }
    const MatX dK = p.K[t] - q.K[t];
    const VecX d = dK * mu + (p.k[t] - q.k[t]);
    const Scalar quad =
        d.dot(qinv * d) + (dK.transpose() * qinv * dK * cov).trace();
    total +=
        0.5 * ((qinv * p.sigma[t]).trace() - m + logdet_q - logdet_p + quad);

    // State marginal under p through the fitted dynamics.
    const MatX A = dyn.fx[t] + dyn.fu[t] * p.K[t];
    const VecX mu_next =
        dyn.fx[t] * mu + dyn.fu[t] * (p.K[t] * mu + p.k[t]) + dyn.fc[t];
    MatX cov_next = A * cov * A.transpose() +
                    dyn.fu[t] * p.sigma[t] * dyn.fu[t].transpose() + dyn.F[t];
    mu = mu_next;
    cov = 0.5 * (cov_next + cov_next.transpose());
  }
  return total;
}

Scalar expected_cost(const LinearGaussianPolicy& p,
                     const TimeVaryingLinearDynamics& dyn,
                     const QuadraticCostExpansion& cost) {
  const int T = dyn.T;
  VecX mu = dyn.x0_mean;
  MatX cov = dyn.x0_cov;
  Scalar total = 0;
  for (int t = 0; t <= T; ++t) {
    const VecX dx = mu - cost.x_ref.row(t).transpose();
    total += cost.constant[t] + cost.lx[t].dot(dx) +
             0.5 * dx.dot(cost.lxx[t] * dx) +
             0.5 * (cost.lxx[t] * cov).trace();
    if (t == T) break;
    const VecX du_mean = p.K[t] * mu + p.k[t] - cost.u_ref.row(t).transpose();
    const MatX cov_u = p.K[t] * cov * p.K[t].transpose() + p.sigma[t];
    const MatX cov_xu = cov * p.K[t].transpose();  // E[dx du']
    total += cost.lu[t].dot(du_mean) +
             0.5 * du_mean.dot(cost.luu[t] * du_mean) +
             0.5 * (cost.luu[t] * cov_u).trace() +
             du_mean.dot(cost.lux[t] * dx) + (cost.lux[t] * cov_xu).trace();

    const MatX A = dyn.fx[t] + dyn.fu[t] * p.K[t];
    const VecX mu_next =
        dyn.fx[t] * mu + dyn.fu[t] * (p.K[t] * mu + p.k[t]) + dyn.fc[t];
    MatX cov_next = A * cov * A.transpose() +
                    dyn.fu[t] * p.sigma[t] * dyn.fu[t].transpose() + dyn.F[t];
    mu = mu_next;
    cov = 0.5 * (cov_next + cov_next.transpose());
  }
  return total;
}

KLStepResult kl_step(const TimeVaryingLinearDynamics& dyn,
                     const QuadraticCostExpansion& cost,
                     const LinearGaussianPolicy& ref,
                     const KLStepConfig& cfg) {
  if (!(cfg.epsilon > 0)) {
    throw std::invalid_argument("kl_step: epsilon must be > 0");
  }
  const Scalar lo_target = (1.0 - cfg.window) * cfg.epsilon;
  const Scalar hi_target = (1.0 + cfg.window) * cfg.epsilon;

  auto eval = [&](Scalar eta) {
    KLStepResult r;
    r.policy = backward_pass(dyn, cost, &ref, eta);
    r.eta = eta;
    r.kl = expected_kl(r.policy, ref, dyn);
    r.converged = r.kl >= lo_target && r.kl <= hi_target;
    return r;
  };

  // KL(eta) is monotone increasing: more cost weight moves further from ref.
  KLStepResult at_max = eval(cfg.eta_max);
  if (at_max.kl <= hi_target) {
    at_max.boundary = !at_max.converged;
    return at_max;
  }
  KLStepResult at_min = eval(cfg.eta_min);
  if (at_min.kl >= lo_target) {
    at_min.boundary = !at_min.converged;
    return at_min;
  }

  Scalar lo = cfg.eta_min, hi = cfg.eta_max;
  KLStepResult best_feasible = at_min;  // largest eta with kl <= 1.1 eps
  for (int it = 0; it < cfg.max_bisect_iterations; ++it) {
    const Scalar mid = std::sqrt(lo * hi);
    KLStepResult r = eval(mid);
    if (r.converged) return r;
    if (r.kl < lo_target) {
      lo = mid;
      best_feasible = std::move(r);
    } else {
      hi = mid;
    }
  }
  best_feasible.converged = false;
  best_feasible.boundary = false;
  return best_feasible;
}

LinearGaussianPolicy linearize_from_samples(
    const std::vector<MatX>& states_per_t,
    const std::vector<MatX>& actions_per_t, const MatX& sigma, Scalar ridge) {
  const int T = static_cast<int>(states_per_t.size());
  if (T == 0 || actions_per_t.size() != states_per_t.size()) {
    throw std::invalid_argument("linearize_from_samples: bad inputs");
  }
  const int n = static_cast<int>(states_per_t.front().cols());
  const int m = static_cast<int>(actions_per_t.front().cols());
  const int dim = n + 1;
  const int per_step = static_cast<int>(states_per_t.front().rows());
  const int needed =
      std::max(dim + 1, static_cast<int>(std::ceil(1.25 * dim)));

  LinearGaussianPolicy pol;
  pol.T = T;
  pol.n = n;
  pol.m = m;
  pol.K.resize(T);
  pol.k.resize(T);
  pol.sigma.assign(T, sigma);

  VecX z(dim);
  for (int t = 0; t < T; ++t) {
    const PooledWindow window = pooling_window(t, T, per_step, needed);
    MatX gram = MatX::Zero(dim, dim);
    MatX cross = MatX::Zero(dim, m);
    Scalar weight_sum = 0;
    for (const auto& [dt, w] : window.offsets) {
      const MatX& X = states_per_t[static_cast<std::size_t>(t + dt)];
      const MatX& U = actions_per_t[static_cast<std::size_t>(t + dt)];
      for (int i = 0; i < X.rows(); ++i) {
        z.head(n) = X.row(i).transpose();
        z[dim - 1] = 1.0;
        gram.noalias() += w * z * z.transpose();
        cross.noalias() += w * z * U.row(i);
        weight_sum += w;
      }
    }
    gram /= weight_sum;
    cross /= weight_sum;
    const Scalar scale = gram.trace() / dim;
    gram.diagonal().array() += ridge * std::max(scale, Scalar(1e-12));
    Eigen::LDLT<MatX> ldlt(gram);
    if (ldlt.info() != Eigen::Success) {
      throw std::runtime_error(
          "linearize_from_samples: singular regression at t=" +
          std::to_string(t));
    }
    const MatX coeffs = ldlt.solve(cross);
    pol.K[t] = coeffs.topRows(n).transpose();
    pol.k[t] = coeffs.row(dim - 1).transpose();
  }
  pol.refresh_cholesky();
  return pol;
}

void save_policy(const LinearGaussianPolicy& p, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open checkpoint " + path);
  out.write("TGLGP1\n", 8);
  const std::int64_t T = p.T, n = p.n, m = p.m;
  out.write(reinterpret_cast<const char*>(&T), 8);
  out.write(reinterpret_cast<const char*>(&n), 8);
  out.write(reinterpret_cast<const char*>(&m), 8);
  for (int t = 0; t < p.T; ++t) {
    write_matrix(out, p.K[t]);
    write_matrix(out, p.k[t]);
    write_matrix(out, p.sigma[t]);
  }
  if (!out) throw std::runtime_error("failed writing checkpoint " + path);
}

LinearGaussianPolicy load_lg_policy(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path);
  char magic[8];
  in.read(magic, 8);
  if (std::string(magic, 7) != "TGLGP1\n") {
    throw std::runtime_error("unrecognized checkpoint " + path);
  }
  std::int64_t T, n, m;
  in.read(reinterpret_cast<char*>(&T), 8);
  in.read(reinterpret_cast<char*>(&n), 8);
  in.read(reinterpret_cast<char*>(&m), 8);
  LinearGaussianPolicy p;
  p.T = static_cast<int>(T);
  p.n = static_cast<int>(n);
  p.m = static_cast<int>(m);
  for (int t = 0; t < p.T; ++t) {
    p.K.push_back(read_matrix(in));
    p.k.push_back(read_matrix(in).col(0));
    p.sigma.push_back(read_matrix(in));
  }
  p.refresh_cholesky();
  return p;
}

void save_dynamics(const TimeVaryingLinearDynamics& d,
                   const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open checkpoint " + path);
  out.write("TGDYN1\n", 8);
  const std::int64_t T = d.T, n = d.n, m = d.m;
  out.write(reinterpret_cast<const char*>(&T), 8);
  out.write(reinterpret_cast<const char*>(&n), 8);
  out.write(reinterpret_cast<const char*>(&m), 8);
  for (int t = 0; t < d.T; ++t) {
    write_matrix(out, d.fx[t]);
    write_matrix(out, d.fu[t]);
    write_matrix(out, d.fc[t]);
    write_matrix(out, d.F[t]);
  }
  write_matrix(out, d.x_mean);
  write_matrix(out, d.u_mean);
  write_matrix(out, d.x0_mean);
  write_matrix(out, d.x0_cov);
  if (!out) throw std::runtime_error("failed writing checkpoint " + path);
}

TimeVaryingLinearDynamics load_dynamics(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path);
  char magic[8];
  in.read(magic, 8);
  if (std::string(magic, 7) != "TGDYN1\n") {
    throw std::runtime_error("unrecognized checkpoint " + path);
  }
  std::int64_t T, n, m;
  in.read(reinterpret_cast<char*>(&T), 8);
  in.read(reinterpret_cast<char*>(&n), 8);
  in.read(reinterpret_cast<char*>(&m), 8);
  TimeVaryingLinearDynamics d;
  d.T = static_cast<int>(T);
  d.n = static_cast<int>(n);
  d.m = static_cast<int>(m);
  for (int t = 0; t < d.T; ++t) {
    d.fx.push_back(read_matrix(in));
    d.fu.push_back(read_matrix(in));
    d.fc.push_back(read_matrix(in).col(0));
    d.F.push_back(read_matrix(in));
  }
  d.x_mean = read_matrix(in);
  d.u_mean = read_matrix(in);
  d.x0_mean = read_matrix(in).col(0);
  d.x0_cov = read_matrix(in);
  return d;
}

}  // namespace tenseg::trajopt
