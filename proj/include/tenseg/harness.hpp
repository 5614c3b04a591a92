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

#ifndef TENSEG_HARNESS_HPP_
#define TENSEG_HARNESS_HPP_

#include <optional>
#include <string>
#include <vector>

#include "tenseg/mdgps.hpp"
#include "tenseg/model.hpp"
#include "tenseg/policy.hpp"
#include "tenseg/safety.hpp"
#include "tenseg/sim.hpp"

namespace tenseg::harness {

enum class ControllerKind {
  kLearned,         // neural policy from a checkpoint, observation-driven
  kOpenLoopMean,    // time-indexed playback of mean actions, no input
  kHandEngineered,  // punctuated rolling state machine, full state access
  kZeroAction       // holds the neutral position (drift reference)
};

struct EvalSpec {
  ControllerKind controller = ControllerKind::kLearned;
  std::string checkpoint;  // kLearned: neural policy file
  std::string playback;    // kOpenLoopMean: playback file
  EnvConfig env;
  CostConfig cost;
  int trials = 5;
  Scalar duration = 60.0;  // seconds
};

struct EvalResult {
  VecX heading_distance;   // per trial: CoM ground displacement along d
  VecX absolute_distance;  // per trial: |start -> end| ground displacement
  VecX path_length;        // per trial: integrated CoM ground path
  Scalar mean_absolute = 0, std_absolute = 0;
  Scalar mean_heading = 0, std_heading = 0;
};

// Runs `trials` rollouts from the settled initial state with per-trial
// seeds; every commanded action is clamped and safety-projected. Optionally
// returns the executed episodes (for trace export and post-hoc audits).
EvalResult evaluate(const EvalSpec& spec, const TensegrityModel& model,
                    const safety::SafeActionDB& db, std::uint64_t seed,
                    std::vector<Episode>* episodes_out = nullptr);

// Punctuated rolling: contract the ground-face cable whose predicted tip
// direction best matches the heading, release to neutral on a face change,
// repeat. Holds the previous command while airborne.
class HandEngineeredController {
 public:
  HandEngineeredController(const TensegrityModel& model, const Vec3& heading);

  Action step(const RobotState& state, const Terrain& terrain);
  void reset();
  int transition_count() const { return transitions_; }

 private:
  int pick_cable(const GroundFace& face, const RobotState& state) const;

  const TensegrityModel& model_;
  Vec3 heading_;
  Action previous_;
  int committed_face_ = -1;
  int active_motor_ = -1;
  int steps_committed_ = 0;
  int transitions_ = 0;
  std::vector<int> tried_;
};

// Looped per-phase mean action sequence extracted from a learned policy's
// rollout; pure time-indexed playback.
struct GaitPlayback {
  MatX actions;     // period x 12
  int period = 0;   // control steps
  int source_steps = 0;  // extraction window length

  Vec12 at(int t) const {
    return actions.row(t % actions.rows()).transpose();
  }
};

// Rolls the policy under training conditions, finds the dominant period of
// the face-transition events by autocorrelation, and averages the executed
// actions per phase across full periods.
GaitPlayback extract_gait_playback(const nn::NeuralPolicy& policy,
                                   const TensegrityModel& model,
                                   const safety::SafeActionDB& db,
                                   const EnvConfig& env, std::uint64_t seed,
                                   int record_steps = 600);

void save_playback(const GaitPlayback& playback, const std::string& path);
GaitPlayback load_playback(const std::string& path);

// One row of the condition grid.
struct GridCondition {
  std::string name;
  EnvConfig env;
  bool noise_condition = false;  // open-loop cells are N/A on noise rows
};

// The default grid: normal plus terrain, gravity, robot, and noise rows.
std::vector<GridCondition> default_grid(const EnvConfig& training_env,
                                        std::uint64_t terrain_seed);

struct GridCell {
  bool applicable = true;
  bool failed = false;
  std::string error;
  EvalResult result;
};

struct GridResult {
  std::vector<std::string> controller_names;
  std::vector<std::string> condition_names;
  std::vector<std::vector<GridCell>> cells;  // [condition][controller]

  std::string table() const;  // console rendering
  void save_json(const std::string& path) const;
};

struct GridControllerSpec {
  std::string name;
  ControllerKind kind;
  std::string checkpoint;  // or playback path
};

GridResult run_condition_grid(const std::vector<GridControllerSpec>& columns,
                              const std::vector<GridCondition>& grid,
                              const TensegrityModel& model,
                              const safety::SafeActionDB& db,
                              const CostConfig& cost, int trials,
                              Scalar duration, std::uint64_t seed);

// Appendix-style comparison: two chained segment policies versus one local
// policy over the doubled horizon, same episode budget, local policies only.
struct SeqCmpConfig {
  mdgps::TrainConfig base;  // C/L/horizon fields are overridden per arm
  int trials = 5;
  Scalar eval_duration = 10.0;  // seconds
  std::vector<std::uint64_t> seeds;
  std::string out_dir;
};

struct SeqCmpResult {
  VecX sequential_by_seed;  // mean absolute distance per seed
  VecX single_by_seed;
  Scalar sequential_mean = 0, single_mean = 0;
  int episodes_per_arm = 0;
  std::vector<int> sequential_episodes_to_stabilize;  // per seed
  std::vector<int> single_episodes_to_stabilize;

  std::string table() const;
  void save_json(const std::string& path) const;
};

SeqCmpResult sequential_vs_single_experiment(const SeqCmpConfig& cfg,
                                             const TensegrityModel& model,
                                             const EnvConfig& env,
                                             const safety::SafeActionDB& db);

}  // namespace tenseg::harness

#endif  // TENSEG_HARNESS_HPP_
