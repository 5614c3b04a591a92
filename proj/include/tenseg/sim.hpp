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

#ifndef TENSEG_SIM_HPP_
#define TENSEG_SIM_HPP_

#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "tenseg/model.hpp"
#include "tenseg/terrain.hpp"
#include "tenseg/types.hpp"

namespace tenseg {

// Full simulator state. The 96-number vector view
// [endpoint positions; endpoint velocities; motor positions; motor
// velocities] is the canonical x_t. endpoint_specific_force is auxiliary:
// the per-endpoint accelerometer quantity (acceleration minus gravity)
// from the last substep's force balance, not part of the state vector.
struct RobotState {
  Eigen::Matrix<Scalar, 3, kNumEndpoints> endpoint_position;
  Eigen::Matrix<Scalar, 3, kNumEndpoints> endpoint_velocity;
  Vec12 motor_position;
  Vec12 motor_velocity;
  Eigen::Matrix<Scalar, 3, kNumEndpoints> endpoint_specific_force;

  VecX to_vector() const;
  static RobotState from_vector(const VecX& x);

  Vec3 com() const { return endpoint_position.rowwise().mean(); }
  Vec3 com_velocity() const { return endpoint_velocity.rowwise().mean(); }
  bool all_finite() const;
};

enum class ObservationKind { kFull, kLimited };

inline constexpr int observation_dim(ObservationKind kind) {
  return kind == ObservationKind::kFull ? 36 : 12;
}

// kFull (36): 12 motor positions, per-rod elevation and rotation angles
// (6+6) and their time derivatives (12).
// kLimited (12): per end cap, the accelerometer reading projected on the
// outward bar axis.
struct Observation {
  ObservationKind kind = ObservationKind::kLimited;
  VecX values;
};

// Instantaneous desired motor positions (rad), one per motor.
struct Action {
  Vec12 motor_target;
};

struct NoiseConfig {
  // Per-channel Gaussian noise variance as a fraction of the channel range.
  Scalar gaussian_fraction = 0.10;
  // Per-step probability of dropping the whole observation (the previous
  // observation is delivered instead).
  Scalar drop_probability = 0.10;
  // Sensor ranges used both for noise scaling and saturation.
  Scalar motor_range = 2.0 * EIGEN_PI;       // rad
  Scalar angle_range = EIGEN_PI;             // rad
  Scalar angle_rate_range = 4.0 * EIGEN_PI;  // rad/s
  Scalar accel_range = 40.0;                 // m/s^2

  VecX channel_ranges(ObservationKind kind) const;
};

enum class RobotVariant { kNormal, kHeavy, kEndcapFailure };

struct EnvConfig {
  Terrain terrain = Terrain::flat();
  Scalar gravity_scale = 1.0;
  NoiseConfig noise;
  RobotVariant variant = RobotVariant::kNormal;
  int failed_endcap = -1;  // kEndcapFailure only
  Scalar control_dt = 0.1;
  int physics_substeps = 100;
  // Heavy variant multipliers.
  Scalar heavy_mass_multiplier = 1.5;
  Scalar heavy_motor_velocity_multiplier = 0.5;
  // Contact model.
  Scalar contact_stiffness = 5.0e4;   // N/m
  Scalar contact_damping = 2.0e3;     // N s/m
  Scalar friction_mu = 0.8;
  Scalar friction_smoothing = 0.02;   // m/s, Coulomb smoothing velocity

  Scalar physics_dt() const { return control_dt / physics_substeps; }
  Vec3 gravity_vector() const {
    return Vec3(0, 0, -kEarthGravity * gravity_scale);
  }
};

struct CostConfig {
  // Target heading in the ground plane (unit vector direction, radians).
  Scalar heading_angle = 0.0;
  // Weight on the squared change of the commanded action between steps.
  Scalar action_reg_weight = 1e-3;

  Vec3 heading() const {
    return Vec3(std::cos(heading_angle), std::sin(heading_angle), 0.0);
  }
};

// One rollout segment: states x_0..x_T, observations/actions/costs for
// t = 0..T-1. Observations are the (noisy) policy inputs as delivered.
struct Episode {
  MatX states;        // (T+1) x state_dim
  MatX observations;  // T x obs_dim
  MatX actions;       // T x action_dim (executed, post-projection)
  VecX costs;         // T
  Vec12 initial_prev_action;  // reference action preceding t = 0
  ObservationKind obs_kind = ObservationKind::kLimited;
  std::uint64_t seed = 0;
  int chain = 0;    // initial-state index i
  int segment = 0;  // position l in the chain
  bool from_global_policy = false;
  bool failed = false;  // simulation diverged before the horizon
  int steps_completed = 0;

  int horizon() const { return static_cast<int>(actions.rows()); }
};

class SimulationDivergedError : public std::runtime_error {
 public:
  SimulationDivergedError(int step, const std::string& what)
      : std::runtime_error(what), step_(step) {}
  int step() const { return step_; }

 private:
  int step_;
};

// Time-steps the rigid-rod/cable dynamics. One instance is single-threaded;
// independent instances may run in parallel.
class Simulator {
 public:
  Simulator(TensegrityModel model, EnvConfig env);

  // Advances one control step (env.control_dt) of physics. The action must
  // already be clamped to motor limits. Throws SimulationDivergedError when
  // the state stops being finite.
  RobotState step(const RobotState& state, const Action& action) const;

  // Settles the robot dropped face-down from a small height until the CoM
  // speed falls below `speed_threshold`; motors held at the model neutral.
  // Throws std::runtime_error if the budget is exhausted.
  RobotState settle_on_face(const GroundFace& face,
                            Scalar speed_threshold = 0.01,
                            Scalar time_budget = 20.0) const;

  // Settles from an arbitrary starting pose (used by face enumeration).
  RobotState settle_from(const RobotState& start, Scalar speed_threshold,
                         Scalar time_budget) const;

  // Pose with the reference geometry rotated so `face` is horizontal and
  // the lowest endpoint clears the terrain by `drop_height`.
  RobotState face_down_state(const GroundFace& face,
                             Scalar drop_height = 0.05) const;

  const TensegrityModel& model() const { return model_; }
  const EnvConfig& env() const { return env_; }

  Scalar rod_mass() const;  // variant-adjusted
  Scalar motor_max_velocity() const;

 private:
  TensegrityModel model_;
  EnvConfig env_;
};

// Noiseless observation of a state. Accelerometer channels read the cached
// specific force in `state`; angle channels derive from rod geometry.
Observation observe(const RobotState& state, const TensegrityModel& model,
                    ObservationKind kind);

// Applies the sensor noise model: with probability drop_probability the
// previous observation is returned unchanged; otherwise zero-mean Gaussian
// noise with per-channel variance = gaussian_fraction * channel range.
Observation apply_noise(const Observation& obs, const NoiseConfig& noise,
                        const Observation& previous_obs, std::mt19937_64& rng);

// Step cost: negative mean endpoint velocity along the heading plus a small
// penalty on the change of the commanded action.
Scalar step_cost(const RobotState& state_next, const Action& action,
                 const Vec12& previous_action, const CostConfig& cfg);

// Fills the cached specific force of a static pose (zero acceleration):
// each endpoint reads minus the gravity vector.
void fill_static_specific_force(RobotState& state, const EnvConfig& env);

// Stateful sensor chain for episode collection: applies end-cap failure
// freezing, sensor saturation, and the noise model, holding the previous
// delivered observation for drops.
class SensorPipeline {
 public:
  SensorPipeline(const TensegrityModel& model, const EnvConfig& env,
                 ObservationKind kind, std::uint64_t noise_seed);

  // Noisy observation as delivered to a policy at this step.
  Observation next(const RobotState& state);

 private:
  const TensegrityModel& model_;
  EnvConfig env_;
  ObservationKind kind_;
  std::mt19937_64 rng_;
  bool have_previous_ = false;
  Observation previous_;
  bool have_frozen_ = false;
  VecX frozen_values_;
  std::vector<int> frozen_channels_;
};

}  // namespace tenseg

#endif  // TENSEG_SIM_HPP_
