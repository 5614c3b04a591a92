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

#ifndef TENSEG_TRAJOPT_HPP_
#define TENSEG_TRAJOPT_HPP_

#include <random>
#include <string>
#include <vector>

#include "tenseg/sim.hpp"
#include "tenseg/types.hpp"

namespace tenseg::trajopt {

// Time-varying linear-Gaussian dynamics
//   p(x_{t+1} | x_t, u_t) = N(fx_t x_t + fu_t u_t + fc_t, F_t)
// together with the sample-mean trajectory the fit was made around and the
// empirical initial-state statistics.
struct TimeVaryingLinearDynamics {
  int T = 0, n = 0, m = 0;
  std::vector<MatX> fx, fu;
  std::vector<VecX> fc;
  std::vector<MatX> F;   // symmetric PSD process noise
  MatX x_mean;           // (T+1) x n
  MatX u_mean;           // T x m
  VecX x0_mean;
  MatX x0_cov;
};

// Time-varying linear-Gaussian policy p(u_t | x_t) = N(K_t x_t + k_t, S_t).
struct LinearGaussianPolicy {
  int T = 0, n = 0, m = 0;
  std::vector<MatX> K;
  std::vector<VecX> k;
  std::vector<MatX> sigma;       // covariance, SPD
  std::vector<MatX> sigma_chol;  // lower Cholesky factor, kept in sync

  VecX mean_action(int t, const VecX& x) const { return K[t] * x + k[t]; }
  VecX sample_action(int t, const VecX& x, std::mt19937_64& rng) const;
  void refresh_cholesky();

  // Wide isotropic-noise policy with zero gains, used at the start of
  // training ("explore around the offset").
  static LinearGaussianPolicy initial(int T, int n, int m, const VecX& offset,
                                      Scalar stddev);
};

// Quadratic cost model in deviation coordinates around a reference
// trajectory (x_ref, u_ref):
//   l_t(x, u) ~= const_t + lx' dx + lu' du
//                + 1/2 dx' lxx dx + 1/2 du' luu du + du' lux dx.
struct QuadraticCostExpansion {
  int T = 0, n = 0, m = 0;
  std::vector<VecX> lx, lu;
  std::vector<MatX> lxx, luu, lux;
  VecX constant;  // T
  MatX x_ref;     // (T+1) x n
  MatX u_ref;     // T x m

  Scalar evaluate(int t, const VecX& x, const VecX& u) const;
};

struct KLStepConfig {
  // Total KL budget per trajectory, nats.
  Scalar epsilon = 1.0;
  // Dual variable bounds and bisection control. Larger eta weighs the cost
  // more; eta -> 0 reproduces the reference policy.
  Scalar eta_min = 1e-6;
  Scalar eta_max = 1e16;
  int max_bisect_iterations = 64;
  // Accept when total KL is within [0.9, 1.1] * epsilon.
  Scalar window = 0.1;
  // Levenberg-style curvature regularization floor for Quu.
  Scalar mu_reg = 1e-8;
};

struct KLStepResult {
  LinearGaussianPolicy policy;
  Scalar eta = 0.0;
  Scalar kl = 0.0;          // measured total KL(new || ref)
  bool converged = false;   // KL landed inside the window
  bool boundary = false;    // an eta bound was hit
};

// Fits time-varying linear dynamics by ridge regression of x_{t+1} on
// [x_t; u_t; 1] across episodes. When per-step sample count is below
// pool_factor * (n + m + 1), samples from neighboring timesteps are pooled
// with decaying weights. Throws std::invalid_argument/std::runtime_error on
// bad input or a singular regression.
TimeVaryingLinearDynamics fit_dynamics(const std::vector<Episode>& episodes,
                                       Scalar pool_factor = 1.25,
                                       Scalar ridge = 1e-6);

// Exact expansion of the rolling cost around the episode means: the cost is
// linear in endpoint velocities and quadratic in the action change, so the
// expansion reproduces step_cost exactly when state_reg = 0.
QuadraticCostExpansion expand_cost(const std::vector<Episode>& episodes,
                                   const CostConfig& cost_cfg,
                                   Scalar state_reg = 1e-6);

// LQR dynamic programming on the surrogate cost
//   eta * l_t(x, u) + KL(p(.|x) || prev(.|x)),
// returning the maximum-entropy solution (Sigma_t = Quu_t^{-1}).
// eta = +infinity (or prev == nullptr) drops the KL term and solves the
// plain LQR on l. Throws std::runtime_error when the action curvature
// cannot be made positive definite.
LinearGaussianPolicy backward_pass(const TimeVaryingLinearDynamics& dyn,
                                   const QuadraticCostExpansion& cost,
                                   const LinearGaussianPolicy* prev,
                                   Scalar eta);

// Bisects eta until the trajectory-total expected KL(new || ref) under the
// fitted dynamics lands in [0.9, 1.1] * epsilon, or an eta bound is hit
// (the boundary solution is returned flagged).
KLStepResult kl_step(const TimeVaryingLinearDynamics& dyn,
                     const QuadraticCostExpansion& cost,
                     const LinearGaussianPolicy& ref, const KLStepConfig& cfg);

// Sum over t of E_{x_t ~ p}[KL(p(.|x_t) || q(.|x_t))] with the state
// marginals propagated through the fitted dynamics from the recorded
// initial-state statistics. Throws on singular covariance.
Scalar expected_kl(const LinearGaussianPolicy& p,
                   const LinearGaussianPolicy& q,
                   const TimeVaryingLinearDynamics& dyn);

// Expected total cost of running the policy under the fitted dynamics,
// evaluated on the quadratic cost model (includes constants).
Scalar expected_cost(const LinearGaussianPolicy& p,
                     const TimeVaryingLinearDynamics& dyn,
                     const QuadraticCostExpansion& cost);

// Time-varying linearization of an arbitrary state -> action-mean map from
// samples: per-t ridge regression of the provided action means on states.
// Covariance is taken from `sigma` (shared across t). Used to express the
// global policy as a LinearGaussianPolicy for the KL constraint.
LinearGaussianPolicy linearize_from_samples(
    const std::vector<MatX>& states_per_t,   // T entries, rows = samples
    const std::vector<MatX>& actions_per_t,  // T entries, rows = samples
    const MatX& sigma, Scalar ridge = 1e-6);

// Checkpoint round-trip: dimensions, horizon and matrices, row-major.
void save_policy(const LinearGaussianPolicy& p, const std::string& path);
LinearGaussianPolicy load_lg_policy(const std::string& path);
void save_dynamics(const TimeVaryingLinearDynamics& d, const std::string& path);
TimeVaryingLinearDynamics load_dynamics(const std::string& path);

}  // namespace tenseg::trajopt

#endif  // TENSEG_TRAJOPT_HPP_
