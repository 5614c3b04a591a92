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

#ifndef TENSEG_MDGPS_HPP_
#define TENSEG_MDGPS_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "tenseg/model.hpp"
#include "tenseg/policy.hpp"
#include "tenseg/safety.hpp"
#include "tenseg/sim.hpp"
#include "tenseg/trajopt.hpp"

namespace tenseg::mdgps {

struct TrainConfig {
  int initial_states = 6;       // C
  int segments = 2;             // L; the optimized horizon is L * segment_horizon
  int segment_horizon = 50;     // steps of control_dt
  int episodes_per_policy = 8;  // chain passes per initial state per iteration
  int iterations = 14;          // K
  // Iteration after which episodes are sampled from the global policy
  // instead of the local policies; -1 selects K/2.
  int on_policy_switch_iteration = -1;
  // A segment's successor starts training once the segment has trained for
  // gate_iterations and its mean cost improved less than
  // gate_improvement_threshold over the last two iterations.
  int gate_iterations = 3;
  Scalar gate_improvement_threshold = 0.10;

  trajopt::KLStepConfig kl;
  Scalar initial_policy_stddev = 0.1;  // rad
  Scalar dynamics_pool_factor = 1.25;
  Scalar dynamics_ridge = 1e-6;
  Scalar cost_state_reg = 1e-6;
  nn::OptConfig optimizer;
  ObservationKind observation = ObservationKind::kLimited;
  CostConfig cost;

  // Local-policies-only mode (no global policy): sampling stays on-local and
  // the KL reference is always the previous local policy.
  bool trajopt_only = false;
  // When true, local updates during the on-policy phase are constrained
  // against the linearized global policy (the previous local policy is the
  // reference before the sampling switch, and always when false).
  bool constrain_to_global = true;
  // Retrain the global policy from scratch on each iteration's samples
  // (the supervised step as written); warm starting tends to lock the net
  // into the behavior of the first iterations.
  bool warm_start_global = false;

  std::uint64_t seed = 0;
  int threads = 0;           // 0: hardware concurrency
  bool save_traces = false;  // write episode traces under the run directory
  // Iteration whose first local update (chain 0, segment 0) is snapshotted
  // to the run directory for offline KL verification; -1 disables.
  int snapshot_iteration = -1;

  int horizon_total() const { return segments * segment_horizon; }
};

struct PolicyIterationLog {
  int chain = 0, segment = 0;
  bool active = false;
  bool updated = false;
  bool accepted = false;
  bool boundary = false;
  int episodes_used = 0;
  Scalar mean_cost = 0.0;
  Scalar mean_distance = 0.0;  // displacement along the heading, meters
  Scalar eta = 0.0;
  Scalar kl = 0.0;
  Scalar epsilon = 0.0;
};

struct IterationLog {
  int iteration = 0;
  bool on_policy = false;
  std::vector<PolicyIterationLog> policies;
  Scalar global_loss_before = 0.0;
  Scalar global_loss_after = 0.0;
  int supervision_rows = 0;
  int failed_episodes = 0;
};

struct TrainState {
  int C = 0, L = 0, horizon = 0;
  std::vector<trajopt::LinearGaussianPolicy> locals;  // index chain * L + seg
  nn::NeuralPolicy global;
  bool global_trained = false;
  bool normalization_frozen = false;
  std::vector<bool> active;                        // per local policy
  std::vector<std::vector<Scalar>> cost_history;   // per local policy
  std::vector<RobotState> initial_states;          // C settled states
  int iteration = 0;

  int index(int chain, int segment) const { return chain * L + segment; }
};

struct TrainResult {
  nn::NeuralPolicy policy;
  TrainState state;
  std::vector<IterationLog> logs;
  std::string metrics_path;
  std::string policy_path;
};

enum class SampleSource { kLocal, kGlobal };

// One pass of the chain from initial state `chain`: L segments run back to
// back, each segment's start state being the previous segment's end state.
// Episodes that diverge are marked failed and truncate the chain.
std::vector<Episode> collect_chained_episodes(
    const TrainState& state, int chain, SampleSource source,
    const Simulator& sim, const safety::SafeActionDB& db,
    const TrainConfig& cfg, int iteration, int episode_index);

// Fits dynamics and performs the KL-constrained update for every active
// local policy; inactive segments and policies with too few usable episodes
// are skipped. Episode lists are indexed by policy (chain * L + segment).
void update_locals(TrainState& state,
                   const std::vector<std::vector<Episode>>& episodes_by_policy,
                   const TrainConfig& cfg, IterationLog& log,
                   const std::string& snapshot_dir = "");

// Gate for starting the next segment: enough iterations of history and the
// relative mean-cost improvement over the last two below the threshold.
bool stability_gate_check(const std::vector<Scalar>& cost_history,
                          int gate_iterations, Scalar improvement_threshold);

// Supervision rows for the global policy: observations from the episodes,
// target means and precisions from the (updated) local policies at the
// sampled states. Weights are normalized to a median trace of action_dim
// and clamped so no row dominates.
nn::SupervisedBatch build_supervision_batch(
    const TrainState& state,
    const std::vector<std::vector<Episode>>& episodes_by_policy,
    const TrainConfig& cfg);

// Full training loop (Algorithm: chained collection -> local updates ->
// supervised global training), writing metrics, checkpoints, and optional
// traces under run_dir. Throws on unrecoverable errors (all episodes failed
// in an iteration).
TrainResult run_training(const TrainConfig& cfg, const TensegrityModel& model,
                         const EnvConfig& env, const safety::SafeActionDB& db,
                         const std::string& run_dir);

}  // namespace tenseg::mdgps

#endif  // TENSEG_MDGPS_HPP_
