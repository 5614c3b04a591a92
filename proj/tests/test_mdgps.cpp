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

#include <cstdio>
#include <fstream>
#include <sstream>

#include "tenseg/mdgps.hpp"
#include "tenseg/rng.hpp"

using namespace tenseg;
using namespace tenseg::mdgps;

namespace {

struct Fixture {
  TensegrityModel model;
  EnvConfig env;
  safety::SafeActionDB db;

  Fixture() : model(build_icosahedron_model(RobotConfig{})) {
    env.noise.gaussian_fraction = 0.05;
    env.noise.drop_probability = 0.05;
    safety::SafetyConfig scfg;
    scfg.target_entries = 3000;
    scfg.tension_threshold = 1e12;
    scfg.mode = safety::ScreenMode::kKinematic;
    scfg.sampling = safety::SamplingScheme::kStratified;
    scfg.seed = 3;
    db = safety::build_db(model, scfg);
  }
};

TrainConfig tiny_config() {
  TrainConfig cfg;
  cfg.initial_states = 2;
  cfg.segments = 2;
  cfg.segment_horizon = 10;
  cfg.episodes_per_policy = 4;
  cfg.iterations = 2;
  cfg.initial_policy_stddev = 1.0;
  cfg.kl.epsilon = 2.0;
  cfg.seed = 5;
  cfg.threads = 2;
  cfg.optimizer.epochs = 3;
  cfg.optimizer.plain_mse = true;
  return cfg;
}

}  // namespace

TEST_CASE("chained collection") {
  Fixture fx;
  Simulator sim(fx.model, fx.env);
  TrainConfig cfg = tiny_config();

  TrainState state;
  state.C = 1;
  state.L = 2;
  state.horizon = cfg.segment_horizon;
  state.initial_states.push_back(sim.settle_on_face(fx.model.closed_faces[0]));
  const VecX offset = state.initial_states[0].motor_position;
  for (int l = 0; l < 2; ++l) {
    state.locals.push_back(trajopt::LinearGaussianPolicy::initial(
        cfg.segment_horizon, kStateDim, kActionDim, offset, 1.0));
    state.active.push_back(true);
  }
  state.global = nn::make_policy(cfg.observation, 1);

  SUBCASE("segments share boundary states bitwise") {
    const auto episodes = collect_chained_episodes(
        state, 0, SampleSource::kLocal, sim, fx.db, cfg, 1, 0);
    REQUIRE(episodes.size() == 2);
    CHECK(episodes[0].segment == 0);
    CHECK(episodes[1].segment == 1);
    const VecX end0 = episodes[0].states.row(cfg.segment_horizon).transpose();
    const VecX start1 = episodes[1].states.row(0).transpose();
    CHECK((end0 - start1).cwiseAbs().maxCoeff() == 0.0);
    // Chain continuity extends to the previous-action reference.
    CHECK((episodes[1].initial_prev_action.transpose() -
           episodes[0].actions.row(cfg.segment_horizon - 1))
              .cwiseAbs()
              .maxCoeff() == 0.0);
  }
  SUBCASE("L = 1 reduces to plain sampling") {
    TrainConfig one = cfg;
    one.segments = 1;
    TrainState s1 = state;
    s1.L = 1;
    const auto episodes = collect_chained_episodes(
        s1, 0, SampleSource::kLocal, sim, fx.db, one, 1, 0);
    CHECK(episodes.size() == 1);
    CHECK(episodes[0].horizon() == one.segment_horizon);
    CHECK(episodes[0].steps_completed == one.segment_horizon);
  }
  SUBCASE("collection is deterministic per (iteration, chain, episode)") {
    const auto a = collect_chained_episodes(state, 0, SampleSource::kLocal,
                                            sim, fx.db, cfg, 3, 1);
    const auto b = collect_chained_episodes(state, 0, SampleSource::kLocal,
                                            sim, fx.db, cfg, 3, 1);
    CHECK((a[0].states - b[0].states).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a[1].actions - b[1].actions).cwiseAbs().maxCoeff() == 0.0);
    const auto c = collect_chained_episodes(state, 0, SampleSource::kLocal,
                                            sim, fx.db, cfg, 3, 2);
    CHECK((a[0].actions - c[0].actions).cwiseAbs().maxCoeff() > 0.0);
  }
}

TEST_CASE("stability gate") {
  SUBCASE("needs enough history") {
    CHECK(!stability_gate_check({-1.0}, 3, 0.10));
    CHECK(!stability_gate_check({-1.0, -1.0}, 3, 0.10));
  }
  SUBCASE("steep improvement keeps the gate closed") {
    CHECK(!stability_gate_check({-1.0, -1.3, -1.7}, 3, 0.10));
  }
  SUBCASE("flat history opens the gate") {
    CHECK(stability_gate_check({-1.0, -1.3, -1.31}, 3, 0.10));
    CHECK(stability_gate_check({-1.0, -1.0, -1.0, -1.0}, 3, 0.10));
  }
}

TEST_CASE("a small training run behaves structurally") {
  Fixture fx;
  TrainConfig cfg = tiny_config();
  cfg.initial_states = 2;
  cfg.iterations = 4;
  cfg.gate_iterations = 2;
  cfg.snapshot_iteration = 2;

  const TrainResult res =
      run_training(cfg, fx.model, fx.env, fx.db, "/tmp/tenseg_mdgps_run");
  REQUIRE(res.logs.size() == 4);

  SUBCASE("all C*L policies receive samples each iteration") {
    for (const auto& log : res.logs) {
      REQUIRE(log.policies.size() == 4);  // 2 chains x 2 segments
      for (const auto& p : log.policies) {
        CHECK(p.episodes_used >= 0);
        CHECK(p.episodes_used <= cfg.episodes_per_policy);
      }
    }
  }
  SUBCASE("segment-2 policies stay inactive before the gate") {
    for (const auto& p : res.logs[0].policies) {
      if (p.segment == 1) {
        CHECK(!p.active);
        CHECK(!p.updated);
      } else {
        CHECK(p.active);
      }
    }
  }
  SUBCASE("gate activation is monotone") {
    std::vector<bool> was_active(4, false);
    for (const auto& log : res.logs) {
      for (std::size_t i = 0; i < log.policies.size(); ++i) {
        if (was_active[i]) CHECK(log.policies[i].active);
        if (log.policies[i].active) was_active[i] = true;
      }
    }
  }
  SUBCASE("every accepted update satisfies the KL budget") {
    for (const auto& log : res.logs) {
      for (const auto& p : log.policies) {
        if (p.updated && p.accepted) {
          CHECK(p.kl <= 1.1 * cfg.kl.epsilon + 1e-9);
        }
      }
    }
  }
  SUBCASE("snapshot files exist and are consistent") {
    const auto dyn =
        trajopt::load_dynamics("/tmp/tenseg_mdgps_run/snapshot_dynamics.bin");
    const auto ref =
        trajopt::load_lg_policy("/tmp/tenseg_mdgps_run/snapshot_ref.bin");
    const auto fresh =
        trajopt::load_lg_policy("/tmp/tenseg_mdgps_run/snapshot_new.bin");
    const Scalar kl = trajopt::expected_kl(fresh, ref, dyn);
    std::ifstream meta("/tmp/tenseg_mdgps_run/snapshot_meta.json");
    std::string text((std::istreambuf_iterator<char>(meta)),
                     std::istreambuf_iterator<char>());
    const auto pos = text.find("\"kl\":");
    REQUIRE(pos != std::string::npos);
    const Scalar recorded = std::stod(text.substr(pos + 5));
    CHECK(kl == doctest::Approx(recorded).epsilon(1e-9));
  }
  SUBCASE("the metrics log is valid JSON lines with one record per iteration") {
    std::ifstream in(res.metrics_path);
    int lines = 0;
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty()) ++lines;
    }
    CHECK(lines == cfg.iterations);
  }
}

TEST_CASE("training runs are deterministic") {
  Fixture fx;
  TrainConfig cfg = tiny_config();
  cfg.iterations = 3;
  run_training(cfg, fx.model, fx.env, fx.db, "/tmp/tenseg_mdgps_det_a");
  cfg.threads = 1;  // determinism must not depend on worker count
  run_training(cfg, fx.model, fx.env, fx.db, "/tmp/tenseg_mdgps_det_b");
  std::ifstream a("/tmp/tenseg_mdgps_det_a/metrics.jsonl");
  std::ifstream b("/tmp/tenseg_mdgps_det_b/metrics.jsonl");
  const std::string text_a((std::istreambuf_iterator<char>(a)),
                           std::istreambuf_iterator<char>());
  const std::string text_b((std::istreambuf_iterator<char>(b)),
                           std::istreambuf_iterator<char>());
  CHECK(text_a == text_b);
  CHECK(!text_a.empty());
}

TEST_CASE("two KL steps on an exact LQ system reach the Riccati cost") {
  // A toy LQ environment driven through the same fit -> expand -> kl_step
  // loop the robot updates use; with an effectively unconstrained budget the
  // optimum is reached immediately and held.
  std::mt19937_64 rng = make_stream(601);
  const int n = 4, m = 2, T = 20;
  MatX A = MatX::Random(n, n) * 0.3 + MatX::Identity(n, n) * 0.6;
  MatX B = MatX::Random(n, m) * 0.8;
  const MatX Q = MatX::Identity(n, n) * 0.5;
  const MatX R = MatX::Identity(m, m) * 0.2;
  const VecX x0 = VecX::Ones(n);

  auto rollout = [&](const trajopt::LinearGaussianPolicy& pol,
                     std::mt19937_64& r) {
    Episode e;
    e.states = MatX::Zero(T + 1, n);
    e.actions = MatX::Zero(T, m);
    e.costs = VecX::Zero(T);
    VecX x = x0;
    e.states.row(0) = x.transpose();
    for (int t = 0; t < T; ++t) {
      const VecX u = pol.sample_action(t, x, r);
      x = A * x + B * u;
      e.actions.row(t) = u.transpose();
      e.states.row(t + 1) = x.transpose();
    }
    e.steps_completed = T;
    return e;
  };
  auto true_cost = [&](const trajopt::LinearGaussianPolicy& pol) {
    // Expected quadratic cost of the policy means (deterministic part).
    VecX x = x0;
    Scalar total = 0;
    for (int t = 0; t < T; ++t) {
      const VecX u = pol.mean_action(t, x);
      total += 0.5 * x.dot(Q * x) + 0.5 * u.dot(R * u);
      x = A * x + B * u;
    }
    total += 0.5 * x.dot(Q * x);
    return total;
  };
  auto build_cost = [&](const std::vector<Episode>& eps) {
    trajopt::QuadraticCostExpansion c;
    c.T = T;
    c.n = n;
    c.m = m;
    c.x_ref = MatX::Zero(T + 1, n);
    c.u_ref = MatX::Zero(T, m);
    for (const Episode& e : eps) {
      c.x_ref += e.states / static_cast<Scalar>(eps.size());
      c.u_ref += e.actions / static_cast<Scalar>(eps.size());
    }
    c.lx.assign(T + 1, VecX::Zero(n));
    c.lu.assign(T, VecX::Zero(m));
    c.lxx.assign(T + 1, Q);
    c.luu.assign(T, R);
    c.lux.assign(T, MatX::Zero(m, n));
    c.constant = VecX::Zero(T + 1);
    for (int t = 0; t <= T; ++t) {
      const VecX xr = c.x_ref.row(t).transpose();
      c.lx[t] = Q * xr;
      c.constant[t] = 0.5 * xr.dot(Q * xr);
      if (t < T) {
        const VecX ur = c.u_ref.row(t).transpose();
        c.lu[t] = R * ur;
        c.constant[t] += 0.5 * ur.dot(R * ur);
      }
    }
    return c;
  };

  // Riccati-optimal reference cost.
  Scalar optimal;
  {
    MatX P = Q;
    std::vector<MatX> K(T);
    for (int t = T - 1; t >= 0; --t) {
      K[t] = -(R + B.transpose() * P * B).inverse() *
             (B.transpose() * P * A);
      P = Q + A.transpose() * P * A + A.transpose() * P * B * K[t];
    }
    trajopt::LinearGaussianPolicy opt;
    opt.T = T;
    opt.n = n;
    opt.m = m;
    opt.K = K;
    opt.k.assign(T, VecX::Zero(m));
    opt.sigma.assign(T, 1e-6 * MatX::Identity(m, m));
    optimal = true_cost(opt);
  }

  trajopt::LinearGaussianPolicy pol =
      trajopt::LinearGaussianPolicy::initial(T, n, m, VecX::Zero(m), 0.5);
  trajopt::KLStepConfig kl;
  kl.epsilon = 1e9;  // effectively unconstrained
  for (int iteration = 0; iteration < 2; ++iteration) {
    std::vector<Episode> eps;
    for (int i = 0; i < 30; ++i) eps.push_back(rollout(pol, rng));
    const auto dyn = trajopt::fit_dynamics(eps, 1.25, 1e-9);
    const auto cost = build_cost(eps);
    const auto res = trajopt::kl_step(dyn, cost, pol, kl);
    pol = res.policy;
    pol.refresh_cholesky();
  }
  CHECK(true_cost(pol) <= optimal * 1.01 + 1e-9);
}
