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

#include "tenseg/mdgps.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "tenseg/io.hpp"
#include "tenseg/parallel.hpp"
#include "tenseg/rng.hpp"

namespace tenseg::mdgps {

namespace {

Scalar heading_displacement(const Episode& e, const CostConfig& cost) {
  if (e.steps_completed <= 0) return 0.0;
  const RobotState first = RobotState::from_vector(e.states.row(0).transpose());
  const RobotState last =
      RobotState::from_vector(e.states.row(e.steps_completed).transpose());
  Vec3 d = last.com() - first.com();
  d.z() = 0;
  return d.dot(cost.heading());
}

// Time-varying linearization of the global policy on this policy's samples,
// used as the KL reference (the policy's means evaluated on the recorded
// observations, regressed against the sampled states).
trajopt::LinearGaussianPolicy linearize_global(
    const nn::NeuralPolicy& global, const std::vector<Episode>& episodes,
    int horizon) {
  std::vector<MatX> states_per_t(static_cast<std::size_t>(horizon));
  std::vector<MatX> actions_per_t(static_cast<std::size_t>(horizon));
  const int n_eps = static_cast<int>(episodes.size());
  for (int t = 0; t < horizon; ++t) {
    MatX X(n_eps, episodes.front().states.cols());
    MatX U(n_eps, kActionDim);
    for (int i = 0; i < n_eps; ++i) {
      const Episode& e = episodes[static_cast<std::size_t>(i)];
      X.row(i) = e.states.row(t);
      U.row(i) =
          global.forward(e.observations.row(t).transpose()).transpose();
    }
    states_per_t[static_cast<std::size_t>(t)] = std::move(X);
    actions_per_t[static_cast<std::size_t>(t)] = std::move(U);
  }
  const MatX sigma = global.action_var.asDiagonal();
  return trajopt::linearize_from_samples(states_per_t, actions_per_t, sigma);
}

void write_metrics_line(std::ofstream& out, const IterationLog& log) {
  out << "{\"iteration\":" << log.iteration << ",\"on_policy\":"
      << (log.on_policy ? "true" : "false") << ",\"failed_episodes\":"
      << log.failed_episodes << ",\"policies\":[";
  for (std::size_t i = 0; i < log.policies.size(); ++i) {
    const PolicyIterationLog& p = log.policies[i];
    if (i) out << ",";
    out << "{\"chain\":" << p.chain << ",\"segment\":" << p.segment
        << ",\"active\":" << (p.active ? "true" : "false")
        << ",\"updated\":" << (p.updated ? "true" : "false")
        << ",\"accepted\":" << (p.accepted ? "true" : "false")
        << ",\"boundary\":" << (p.boundary ? "true" : "false")
        << ",\"episodes\":" << p.episodes_used
        << ",\"mean_cost\":" << io::format_scalar(p.mean_cost)
        << ",\"mean_distance\":" << io::format_scalar(p.mean_distance)
        << ",\"eta\":" << io::format_scalar(p.eta)
        << ",\"kl\":" << io::format_scalar(p.kl)
        << ",\"epsilon\":" << io::format_scalar(p.epsilon) << "}";
  }
  out << "],\"global_loss_before\":" << io::format_scalar(log.global_loss_before)
      << ",\"global_loss_after\":" << io::format_scalar(log.global_loss_after)
      << ",\"supervision_rows\":" << log.supervision_rows << "}\n";
}

}  // namespace

std::vector<Episode> collect_chained_episodes(
    const TrainState& state, int chain, SampleSource source,
    const Simulator& sim, const safety::SafeActionDB& db,
    const TrainConfig& cfg, int iteration, int episode_index) {
  const int H = cfg.segment_horizon;
  const TensegrityModel& model = sim.model();

  std::mt19937_64 policy_rng = make_stream(cfg.seed, 0xA11, iteration,
                                           static_cast<std::uint64_t>(chain),
                                           episode_index);
  const std::uint64_t noise_seed =
      make_stream(cfg.seed, 0xB22, iteration,
                  static_cast<std::uint64_t>(chain), episode_index)();
  SensorPipeline pipeline(model, sim.env(), cfg.observation, noise_seed);

  std::vector<Episode> out;
  RobotState x = state.initial_states[static_cast<std::size_t>(chain)];
  Vec12 prev_action = x.motor_position;
  bool chain_alive = true;

  for (int l = 0; l < cfg.segments; ++l) {
    Episode e;
    e.chain = chain;
    e.segment = l;
    e.obs_kind = cfg.observation;
    e.seed = noise_seed;
    e.from_global_policy = source == SampleSource::kGlobal;
    e.initial_prev_action = prev_action;
    e.states = MatX::Zero(H + 1, kStateDim);
    e.observations = MatX::Zero(H, observation_dim(cfg.observation));
    e.actions = MatX::Zero(H, kActionDim);
    e.costs = VecX::Zero(H);
    e.states.row(0) = x.to_vector().transpose();
    if (!chain_alive) {
      e.failed = true;
      out.push_back(std::move(e));
      continue;
    }
    const trajopt::LinearGaussianPolicy& local =
        state.locals[static_cast<std::size_t>(state.index(chain, l))];
    for (int t = 0; t < H; ++t) {
      const Observation obs = pipeline.next(x);
      Vec12 u;
      if (source == SampleSource::kGlobal) {
        u = state.global.sample(obs.values, policy_rng);
      } else {
        u = local.sample_action(t, x.to_vector(), policy_rng);
      }
      const Vec12 projected = db.project(model.clamp_motors(u));
      try {
        const RobotState next = sim.step(x, Action{projected});
        e.observations.row(t) = obs.values.transpose();
        e.actions.row(t) = projected.transpose();
        e.costs[t] = step_cost(next, Action{projected}, prev_action, cfg.cost);
        e.states.row(t + 1) = next.to_vector().transpose();
        prev_action = projected;
        x = next;
        e.steps_completed = t + 1;
      } catch (const SimulationDivergedError&) {
        e.failed = true;
        chain_alive = false;
        break;
      }
    }
    out.push_back(std::move(e));
  }
  return out;
}

bool stability_gate_check(const std::vector<Scalar>& cost_history,
                          int gate_iterations, Scalar improvement_threshold) {
  if (static_cast<int>(cost_history.size()) < std::max(gate_iterations, 2)) {
    return false;
  }
  const Scalar prev = cost_history[cost_history.size() - 2];
  const Scalar cur = cost_history.back();
  const Scalar improvement =
      (prev - cur) / std::max(std::abs(prev), Scalar(1e-9));
  return improvement < improvement_threshold;
}

void update_locals(TrainState& state,
                   const std::vector<std::vector<Episode>>& episodes_by_policy,
                   const TrainConfig& cfg, IterationLog& log,
                   const std::string& snapshot_dir) {
  const int n_policies = state.C * state.L;
  log.policies.assign(static_cast<std::size_t>(n_policies),
                      PolicyIterationLog{});

  const int threads = cfg.threads > 0 ? cfg.threads : hardware_threads();
  parallel_for(n_policies, threads, [&](int idx) {
    PolicyIterationLog& plog = log.policies[static_cast<std::size_t>(idx)];
    plog.chain = idx / state.L;
    plog.segment = idx % state.L;
    plog.active = state.active[static_cast<std::size_t>(idx)];
    plog.epsilon = cfg.kl.epsilon;

    std::vector<Episode> usable;
    for (const Episode& e :
         episodes_by_policy[static_cast<std::size_t>(idx)]) {
      if (!e.failed && e.steps_completed == cfg.segment_horizon) {
        usable.push_back(e);
      }
    }
    plog.episodes_used = static_cast<int>(usable.size());
    if (!usable.empty()) {
      Scalar cost_sum = 0, dist_sum = 0;
      for (const Episode& e : usable) {
        cost_sum += e.costs.sum();
        dist_sum += heading_displacement(e, cfg.cost);
      }
      plog.mean_cost = cost_sum / plog.episodes_used;
      plog.mean_distance = dist_sum / plog.episodes_used;
    }
    if (!plog.active || static_cast<int>(usable.size()) < 3) return;

    const trajopt::TimeVaryingLinearDynamics dyn = trajopt::fit_dynamics(
        usable, cfg.dynamics_pool_factor, cfg.dynamics_ridge);
    const trajopt::QuadraticCostExpansion cost_exp =
        trajopt::expand_cost(usable, cfg.cost, cfg.cost_state_reg);
    const trajopt::LinearGaussianPolicy& prev_local =
        state.locals[static_cast<std::size_t>(idx)];
    // The global policy becomes the KL anchor only once sampling is
    // on-policy; constraining to a still-mushy imitator pins the locals to
    // its behavior and freezes learning.
    trajopt::LinearGaussianPolicy ref =
        (state.global_trained && !cfg.trajopt_only &&
         cfg.constrain_to_global && log.on_policy)
            ? linearize_global(state.global, usable, cfg.segment_horizon)
            : prev_local;

    const trajopt::KLStepResult res =
        trajopt::kl_step(dyn, cost_exp, ref, cfg.kl);
    plog.updated = true;
    plog.eta = res.eta;
    plog.kl = res.kl;
    plog.accepted = res.kl <= 1.1 * cfg.kl.epsilon;
    plog.boundary = res.boundary;
    if (plog.accepted) {
      state.locals[static_cast<std::size_t>(idx)] = res.policy;
    }

    if (!snapshot_dir.empty() && idx == 0) {
      trajopt::save_dynamics(dyn, snapshot_dir + "/snapshot_dynamics.bin");
      trajopt::save_policy(ref, snapshot_dir + "/snapshot_ref.bin");
      trajopt::save_policy(res.policy, snapshot_dir + "/snapshot_new.bin");
      std::ofstream meta(snapshot_dir + "/snapshot_meta.json");
      meta << "{\"kl\":" << io::format_scalar(res.kl)
           << ",\"eta\":" << io::format_scalar(res.eta)
           << ",\"epsilon\":" << io::format_scalar(cfg.kl.epsilon) << "}\n";
    }
  });

  // Serial bookkeeping: cost history and gate activation.
  for (int idx = 0; idx < n_policies; ++idx) {
    const PolicyIterationLog& plog =
        log.policies[static_cast<std::size_t>(idx)];
    if (plog.active && plog.episodes_used > 0) {
      state.cost_history[static_cast<std::size_t>(idx)].push_back(
          plog.mean_cost);
    }
  }
  for (int chain = 0; chain < state.C; ++chain) {
    for (int l = 0; l + 1 < state.L; ++l) {
      const int idx = state.index(chain, l);
      const int next = state.index(chain, l + 1);
      if (state.active[static_cast<std::size_t>(idx)] &&
          !state.active[static_cast<std::size_t>(next)] &&
          stability_gate_check(state.cost_history[static_cast<std::size_t>(idx)],
                               cfg.gate_iterations,
                               cfg.gate_improvement_threshold)) {
        state.active[static_cast<std::size_t>(next)] = true;
      }
    }
  }
}

nn::SupervisedBatch build_supervision_batch(
    const TrainState& state,
    const std::vector<std::vector<Episode>>& episodes_by_policy,
    const TrainConfig& cfg) {
  std::vector<VecX> obs_rows;
  std::vector<VecX> target_rows;
  std::vector<MatX> weight_rows;
  const int n_policies = state.C * state.L;
  for (int idx = 0; idx < n_policies; ++idx) {
    const trajopt::LinearGaussianPolicy& local =
        state.locals[static_cast<std::size_t>(idx)];
    for (const Episode& e :
         episodes_by_policy[static_cast<std::size_t>(idx)]) {
      // Partially completed episodes contribute only if at least half the
      // segment ran.
      if (e.failed && e.steps_completed < cfg.segment_horizon / 2) continue;
      for (int t = 0; t < e.steps_completed; ++t) {
        obs_rows.push_back(e.observations.row(t).transpose());
        target_rows.push_back(
            local.mean_action(t, e.states.row(t).transpose()));
        Eigen::LLT<MatX> llt(local.sigma[static_cast<std::size_t>(t)]);
        weight_rows.push_back(
            llt.solve(MatX::Identity(kActionDim, kActionDim)));
      }
    }
  }
  const int rows = static_cast<int>(obs_rows.size());
  nn::SupervisedBatch batch;
  batch.observations.resize(rows, observation_dim(cfg.observation));
  batch.targets.resize(rows, kActionDim);
  batch.weights.resize(static_cast<std::size_t>(rows));
  // Normalize to a median trace of action_dim and clamp heavy rows so a few
  // high-confidence policies cannot drown the rest of the dataset.
  std::vector<Scalar> traces(static_cast<std::size_t>(rows));
  for (int i = 0; i < rows; ++i) {
    traces[static_cast<std::size_t>(i)] =
        weight_rows[static_cast<std::size_t>(i)].trace();
  }
  std::vector<Scalar> sorted = traces;
  std::nth_element(sorted.begin(), sorted.begin() + rows / 2, sorted.end());
  const Scalar median = std::max(sorted[static_cast<std::size_t>(rows / 2)],
                                 Scalar(1e-12));
  for (int i = 0; i < rows; ++i) {
    batch.observations.row(i) =
        obs_rows[static_cast<std::size_t>(i)].transpose();
    batch.targets.row(i) = target_rows[static_cast<std::size_t>(i)].transpose();
    Scalar scale = kActionDim / median;
    const Scalar t = traces[static_cast<std::size_t>(i)];
    if (t * scale > 10.0 * kActionDim) scale = 10.0 * kActionDim / t;
    batch.weights[static_cast<std::size_t>(i)] =
        scale * weight_rows[static_cast<std::size_t>(i)];
  }
  return batch;
}

TrainResult run_training(const TrainConfig& cfg, const TensegrityModel& model,
                         const EnvConfig& env, const safety::SafeActionDB& db,
                         const std::string& run_dir) {
  if (cfg.initial_states < 1 || cfg.segments < 1 || cfg.segment_horizon < 1 ||
      cfg.iterations < 1 || cfg.episodes_per_policy < 3) {
    throw std::invalid_argument("run_training: invalid train config");
  }
  if (db.model_hash() != model.content_hash()) {
    throw std::runtime_error(
        "run_training: safety DB was built for a different model");
  }
  io::ensure_dir(run_dir);
  io::ensure_dir(run_dir + "/checkpoints");
  if (cfg.save_traces) io::ensure_dir(run_dir + "/traces");

  const int switch_iteration = cfg.on_policy_switch_iteration > 0
                                   ? cfg.on_policy_switch_iteration
                                   : std::max(1, cfg.iterations / 2);
  const Simulator sim(model, env);
  const int threads = cfg.threads > 0 ? cfg.threads : hardware_threads();

  TrainResult result;
  TrainState& state = result.state;
  state.C = cfg.initial_states;
  state.L = cfg.segments;
  state.horizon = cfg.segment_horizon;

  // Initial states: distinct stable faces, settled.
  std::mt19937_64 face_rng = make_stream(cfg.seed, 0xFACE);
  const std::vector<GroundFace> faces =
      enumerate_stable_faces(model, env.terrain, cfg.initial_states, face_rng);
  state.initial_states.resize(static_cast<std::size_t>(cfg.initial_states));
  parallel_for(cfg.initial_states, threads, [&](int i) {
    state.initial_states[static_cast<std::size_t>(i)] =
        sim.settle_on_face(faces[static_cast<std::size_t>(i)]);
  });

  // Local policies explore around the settled motor neutral.
  const int n_policies = state.C * state.L;
  for (int idx = 0; idx < n_policies; ++idx) {
    const int chain = idx / state.L;
    const VecX offset =
        state.initial_states[static_cast<std::size_t>(chain)].motor_position;
    state.locals.push_back(trajopt::LinearGaussianPolicy::initial(
        cfg.segment_horizon, kStateDim, kActionDim, offset,
        cfg.initial_policy_stddev));
    state.active.push_back(idx % state.L == 0);  // segment 1 trains first
  }
  state.cost_history.assign(static_cast<std::size_t>(n_policies), {});
  state.global = nn::make_policy(cfg.observation,
                                 make_stream(cfg.seed, 0x6106AL)());

  result.metrics_path = run_dir + "/metrics.jsonl";
  std::ofstream metrics(result.metrics_path);
  if (!metrics) {
    throw std::runtime_error("cannot open metrics log " + result.metrics_path);
  }

  for (int k = 1; k <= cfg.iterations; ++k) {
    state.iteration = k;
    IterationLog log;
    log.iteration = k;
    const SampleSource source =
        (!cfg.trajopt_only && state.global_trained && k > switch_iteration)
            ? SampleSource::kGlobal
            : SampleSource::kLocal;
    log.on_policy = source == SampleSource::kGlobal;

    // Chained collection, parallel over (chain, episode) with per-task RNG
    // streams so scheduling cannot change the data.
    const int passes = state.C * cfg.episodes_per_policy;
    std::vector<std::vector<Episode>> chains(
        static_cast<std::size_t>(passes));
    parallel_for(passes, threads, [&](int slot) {
      const int chain = slot / cfg.episodes_per_policy;
      const int ep = slot % cfg.episodes_per_policy;
      chains[static_cast<std::size_t>(slot)] = collect_chained_episodes(
          state, chain, source, sim, db, cfg, k, ep);
    });

    std::vector<std::vector<Episode>> by_policy(
        static_cast<std::size_t>(n_policies));
    int completed_episodes = 0;
    for (const auto& chain_eps : chains) {
      for (const Episode& e : chain_eps) {
        if (e.failed) {
          ++log.failed_episodes;
        } else {
          ++completed_episodes;
        }
        by_policy[static_cast<std::size_t>(state.index(e.chain, e.segment))]
            .push_back(e);
      }
    }
    if (completed_episodes == 0) {
      throw std::runtime_error(
          "run_training: every episode failed in iteration " +
          std::to_string(k));
    }
    if (cfg.save_traces) {
      int trace_id = 0;
      for (const auto& chain_eps : chains) {
        for (const Episode& e : chain_eps) {
          char name[64];
          std::snprintf(name, sizeof(name), "/traces/iter%03d_%04d.trace", k,
                        trace_id++);
          io::save_trace(e, run_dir + name);
        }
      }
    }

    const std::string snapshot_dir =
        (k == cfg.snapshot_iteration) ? run_dir : "";
    update_locals(state, by_policy, cfg, log, snapshot_dir);

    if (!cfg.trajopt_only) {
      // Per-channel input normalization from the current iteration's
      // samples. The first iteration's statistics describe a robot that has
      // not moved yet, so freezing them there starves the later supervised
      // fits; the constants used are stored in every checkpoint.
      {
        const int dim = observation_dim(cfg.observation);
        VecX mean = VecX::Zero(dim), var = VecX::Zero(dim);
        std::int64_t rows = 0;
        for (const auto& eps : by_policy) {
          for (const Episode& e : eps) {
            for (int t = 0; t < e.steps_completed; ++t) {
              mean += e.observations.row(t).transpose();
              ++rows;
            }
          }
        }
        mean /= std::max<std::int64_t>(rows, 1);
        for (const auto& eps : by_policy) {
          for (const Episode& e : eps) {
            for (int t = 0; t < e.steps_completed; ++t) {
              var += (e.observations.row(t).transpose() - mean)
                         .cwiseAbs2();
            }
          }
        }
        var /= std::max<std::int64_t>(rows, 1);
        state.global.input_mean = mean;
        state.global.input_scale = var.cwiseSqrt().cwiseMax(1e-3);
        state.normalization_frozen = true;
      }

      nn::SupervisedBatch batch =
          build_supervision_batch(state, by_policy, cfg);
      log.supervision_rows = batch.size();

      nn::OptConfig opt = cfg.optimizer;
      opt.seed = make_stream(cfg.seed, 0x5D, k)();
      if (!cfg.warm_start_global) {
        const VecX mean = state.global.input_mean;
        const VecX scale = state.global.input_scale;
        state.global =
            nn::make_policy(cfg.observation, make_stream(cfg.seed, 0x6106AL)());
        state.global.input_mean = mean;
        state.global.input_scale = scale;
      }
      const nn::TrainStats stats =
          nn::train_supervised(state.global, batch, opt);
      log.global_loss_before = stats.epoch_loss[0];
      log.global_loss_after = stats.epoch_loss[stats.epoch_loss.size() - 1];
      state.global_trained = true;

      char ckpt[64];
      std::snprintf(ckpt, sizeof(ckpt), "/checkpoints/policy_iter%03d.nnpol",
                    k);
      nn::save_neural_policy(state.global, run_dir + ckpt);
    }

    write_metrics_line(metrics, log);
    metrics.flush();
    result.logs.push_back(std::move(log));
  }

  result.policy = state.global;
  if (!cfg.trajopt_only) {
    result.policy_path = run_dir + "/final.nnpol";
    nn::save_neural_policy(result.policy, result.policy_path);
  }
  return result;
}

}  // namespace tenseg::mdgps
