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

#include "tenseg/sim.hpp"

#include <cmath>
#include <stdexcept>

namespace tenseg {

namespace {

// Rigid rod with axial spin removed: endpoint forces act on the axis, so
// they never torque the rod about itself and omega stays orthogonal to the
// axis. The rod mass sits in the two end caps, giving I = m (L/2)^2 about
// any axis through the center perpendicular to the rod.
struct Rod {
  Vec3 com, vel, axis, omega;
};

Vec3 rotate_about(const Vec3& v, const Vec3& omega, Scalar dt) {
  const Scalar angle = omega.norm() * dt;
  if (angle < 1e-14) return v;
  const Vec3 k = omega.normalized();
  const Scalar c = std::cos(angle), s = std::sin(angle);
  return v * c + k.cross(v) * s + k * (k.dot(v)) * (1.0 - c);
}

}  // namespace

VecX RobotState::to_vector() const {
  VecX x(kStateDim);
  for (int e = 0; e < kNumEndpoints; ++e) {
    x.segment<3>(3 * e) = endpoint_position.col(e);
    x.segment<3>(36 + 3 * e) = endpoint_velocity.col(e);
  }
  x.segment<12>(72) = motor_position;
  x.segment<12>(84) = motor_velocity;
  return x;
}

RobotState RobotState::from_vector(const VecX& x) {
  if (x.size() != kStateDim) {
    throw std::invalid_argument("RobotState::from_vector: wrong dimension");
  }
  RobotState s;
  for (int e = 0; e < kNumEndpoints; ++e) {
    s.endpoint_position.col(e) = x.segment<3>(3 * e);
    s.endpoint_velocity.col(e) = x.segment<3>(36 + 3 * e);
  }
  s.motor_position = x.segment<12>(72);
  s.motor_velocity = x.segment<12>(84);
  s.endpoint_specific_force.setZero();
  return s;
}

bool RobotState::all_finite() const {
  return endpoint_position.allFinite() && endpoint_velocity.allFinite() &&
         motor_position.allFinite() && motor_velocity.allFinite();
}

VecX NoiseConfig::channel_ranges(ObservationKind kind) const {
  VecX r(observation_dim(kind));
  if (kind == ObservationKind::kLimited) {
    r.setConstant(accel_range);
  } else {
    r.segment(0, 12).setConstant(motor_range);
    r.segment(12, 12).setConstant(angle_range);
    r.segment(24, 12).setConstant(angle_rate_range);
  }
  return r;
}

Simulator::Simulator(TensegrityModel model, EnvConfig env)
    : model_(std::move(model)), env_(std::move(env)) {
  if (env_.physics_substeps <= 0 || env_.control_dt <= 0) {
    throw std::invalid_argument("env config: invalid time discretization");
  }
  if (env_.variant == RobotVariant::kEndcapFailure &&
      (env_.failed_endcap < 0 || env_.failed_endcap >= kNumEndpoints)) {
    throw std::invalid_argument("env config: failed endcap id out of range");
  }
}

Scalar Simulator::rod_mass() const {
  return env_.variant == RobotVariant::kHeavy
             ? model_.rod_mass * env_.heavy_mass_multiplier
             : model_.rod_mass;
}

Scalar Simulator::motor_max_velocity() const {
  return env_.variant == RobotVariant::kHeavy
             ? model_.motor_max_velocity * env_.heavy_motor_velocity_multiplier
             : model_.motor_max_velocity;
}

RobotState Simulator::step(const RobotState& state,
                           const Action& action) const {
  const Scalar dt = env_.physics_dt();
  const Scalar L = model_.rod_length;
  const Scalar mass = rod_mass();
  const Scalar inertia = mass * (L / 2) * (L / 2);
  const Vec3 gravity = env_.gravity_vector();
  const Scalar vmax = motor_max_velocity();
  const int failed = env_.variant == RobotVariant::kEndcapFailure
                         ? env_.failed_endcap
                         : -1;

  // Project onto the rigid representation; this also restores exact rod
  // lengths regardless of rounding in the endpoint view.
  Rod rods[kNumRods];
  for (int r = 0; r < kNumRods; ++r) {
    const Vec3 p0 = state.endpoint_position.col(2 * r);
    const Vec3 p1 = state.endpoint_position.col(2 * r + 1);
    const Vec3 v0 = state.endpoint_velocity.col(2 * r);
    const Vec3 v1 = state.endpoint_velocity.col(2 * r + 1);
    rods[r].com = 0.5 * (p0 + p1);
    rods[r].vel = 0.5 * (v0 + v1);
    rods[r].axis = (p1 - p0).normalized();
    rods[r].omega = rods[r].axis.cross((v1 - v0) / L);
  }
  Vec12 motor_pos = state.motor_position;
  Vec12 motor_vel = state.motor_velocity;

  Eigen::Matrix<Scalar, 3, kNumEndpoints> ep_pos, ep_vel, forces;
  Eigen::Matrix<Scalar, 3, kNumEndpoints> specific_force =
      state.endpoint_specific_force;

  for (int sub = 0; sub < env_.physics_substeps; ++sub) {
    // Velocity-limited servo; a failed end cap ignores commands and holds.
    for (int j = 0; j < kNumMotors; ++j) {
      Scalar rate = model_.servo_gain * (action.motor_target[j] - motor_pos[j]);
      rate = std::clamp(rate, -vmax, vmax);
      if (j == failed) rate = 0.0;
      const Scalar prev = motor_pos[j];
      motor_pos[j] = std::clamp(prev + rate * dt, model_.motor_min,
                                model_.motor_max);
      motor_vel[j] = (motor_pos[j] - prev) / dt;
    }

    for (int r = 0; r < kNumRods; ++r) {
      const Vec3 arm = (L / 2) * rods[r].axis;
      const Vec3 spin = rods[r].omega.cross(arm);
      ep_pos.col(2 * r) = rods[r].com - arm;
      ep_pos.col(2 * r + 1) = rods[r].com + arm;
      ep_vel.col(2 * r) = rods[r].vel - spin;
      ep_vel.col(2 * r + 1) = rods[r].vel + spin;
    }

    forces.setZero();

    // Cable spring forces, damped only while taut.
    for (int c = 0; c < kNumCables; ++c) {
      const int a = model_.cables[c][0];
      const int b = model_.cables[c][1];
      const Vec3 d = ep_pos.col(b) - ep_pos.col(a);
      const Scalar len = d.norm();
      if (len < 1e-9) continue;
      const Scalar rest = model_.cable_rest_length(c, motor_pos);
      const Scalar stretch = len - rest;
      if (stretch <= 0) continue;
      const Vec3 dir = d / len;
      const Scalar closing = (ep_vel.col(b) - ep_vel.col(a)).dot(dir);
      const Scalar tension = std::max(
          Scalar(0),
          model_.spring_constant * stretch + model_.cable_damping * closing);
      const Vec3 f = tension * dir;
      forces.col(a) += f;
      forces.col(b) -= f;
    }

    // End-cap sphere vs terrain: penalty normal plus smoothed Coulomb
    // friction, capped so friction cannot reverse the tangential velocity
    // within one substep.
    for (int e = 0; e < kNumEndpoints; ++e) {
      const Vec3 p = ep_pos.col(e);
      const Vec3 n = env_.terrain.normal(p.x(), p.y());
      const Scalar gap =
          (p.z() - env_.terrain.height(p.x(), p.y())) * n.z() -
          model_.endcap_radius;
      if (gap >= 0) continue;
      const Vec3 v = ep_vel.col(e);
      const Scalar vn = v.dot(n);
      const Scalar normal_force =
          std::max(Scalar(0), -env_.contact_stiffness * gap -
                                  env_.contact_damping * vn);
      const Vec3 vt = v - vn * n;
      const Scalar vt_norm = vt.norm();
      Scalar friction = env_.friction_mu * normal_force * vt_norm /
                        std::sqrt(vt_norm * vt_norm +
                                  env_.friction_smoothing *
                                      env_.friction_smoothing);
      friction = std::min(friction, 0.5 * mass * vt_norm / dt);
      Vec3 f = normal_force * n;
      if (vt_norm > 1e-12) f -= friction * vt / vt_norm;
      forces.col(e) += f;
    }

    // Rigid-body update per rod (symplectic Euler, exact axis rotation).
    for (int r = 0; r < kNumRods; ++r) {
      const Vec3 f0 = forces.col(2 * r);
      const Vec3 f1 = forces.col(2 * r + 1);
      const Vec3 accel = (f0 + f1) / mass + gravity;
      const Vec3 torque = (L / 2) * rods[r].axis.cross(f1 - f0);
      const Vec3 alpha = torque / inertia;

      if (sub == env_.physics_substeps - 1) {
        // Accelerometer quantity from this substep's force balance.
        const Vec3 arm = (L / 2) * rods[r].axis;
        const Vec3 centripetal = rods[r].omega.cross(rods[r].omega.cross(arm));
        const Vec3 tangential = alpha.cross(arm);
        specific_force.col(2 * r) =
            (f0 + f1) / mass - tangential - centripetal;
        specific_force.col(2 * r + 1) =
            (f0 + f1) / mass + tangential + centripetal;
      }

      rods[r].vel += dt * accel;
      rods[r].omega += dt * alpha;
      rods[r].com += dt * rods[r].vel;
      rods[r].axis = rotate_about(rods[r].axis, rods[r].omega, dt).normalized();
      rods[r].omega -= rods[r].omega.dot(rods[r].axis) * rods[r].axis;
    }
  }

  RobotState next;
  for (int r = 0; r < kNumRods; ++r) {
    const Vec3 arm = (L / 2) * rods[r].axis;
    const Vec3 spin = rods[r].omega.cross(arm);
    next.endpoint_position.col(2 * r) = rods[r].com - arm;
    next.endpoint_position.col(2 * r + 1) = rods[r].com + arm;
    next.endpoint_velocity.col(2 * r) = rods[r].vel - spin;
    next.endpoint_velocity.col(2 * r + 1) = rods[r].vel + spin;
  }
  next.motor_position = motor_pos;
  next.motor_velocity = motor_vel;
  next.endpoint_specific_force = specific_force;
  if (!next.all_finite()) {
    throw SimulationDivergedError(0, "simulation diverged: non-finite state");
  }
  return next;
}

RobotState Simulator::face_down_state(const GroundFace& face,
                                      Scalar drop_height) const {
  // Rotate the reference geometry so the face's outward normal points down.
  Vec3 centroid = Vec3::Zero();
  for (int e : face.endpoint_ids) {
    centroid += model_.reference_endpoints.col(e);
  }
  centroid /= 3.0;
  const Vec3 outward = centroid.normalized();
  const Eigen::Quaterniond q =
      Eigen::Quaterniond::FromTwoVectors(outward, Vec3(0, 0, -1));

  RobotState s;
  s.endpoint_position = q.toRotationMatrix() * model_.reference_endpoints;
  s.endpoint_velocity.setZero();
  s.motor_position.setConstant(model_.motor_neutral);
  s.motor_velocity.setZero();

  Scalar shift = -1e30;
  for (int e = 0; e < kNumEndpoints; ++e) {
    const Vec3 p = s.endpoint_position.col(e);
    const Scalar floor = env_.terrain.height(p.x(), p.y()) +
                         model_.endcap_radius + drop_height;
    shift = std::max(shift, floor - p.z());
  }
  s.endpoint_position.row(2).array() += shift;
  fill_static_specific_force(s, env_);
  return s;
}

RobotState Simulator::settle_from(const RobotState& start,
                                  Scalar speed_threshold,
                                  Scalar time_budget) const {
  Action hold;
  hold.motor_target.setConstant(model_.motor_neutral);
  RobotState s = start;
  const int max_steps = static_cast<int>(time_budget / env_.control_dt);
  int calm_steps = 0;
  for (int t = 0; t < max_steps; ++t) {
    s = step(s, hold);
    const Scalar speed = s.com_velocity().norm();
    calm_steps = speed < speed_threshold ? calm_steps + 1 : 0;
    if (calm_steps >= 5 && (t + 1) * env_.control_dt >= 1.0) {
      s.endpoint_velocity.setZero();
      s.motor_velocity.setZero();
      fill_static_specific_force(s, env_);
      return s;
    }
  }
  throw std::runtime_error("settle: CoM speed did not fall below threshold");
}

RobotState Simulator::settle_on_face(const GroundFace& face,
                                     Scalar speed_threshold,
                                     Scalar time_budget) const {
  return settle_from(face_down_state(face), speed_threshold, time_budget);
}

void fill_static_specific_force(RobotState& state, const EnvConfig& env) {
  const Vec3 g = env.gravity_vector();
  for (int e = 0; e < kNumEndpoints; ++e) {
    state.endpoint_specific_force.col(e) = -g;
  }
}

Observation observe(const RobotState& state, const TensegrityModel&,
                    ObservationKind kind) {
  Observation obs;
  obs.kind = kind;
  obs.values.resize(observation_dim(kind));
  if (kind == ObservationKind::kLimited) {
    for (int e = 0; e < kNumEndpoints; ++e) {
      const int partner = TensegrityModel::rod_partner(e);
      const Vec3 outward = (state.endpoint_position.col(e) -
                            state.endpoint_position.col(partner))
                               .normalized();
      obs.values[e] = state.endpoint_specific_force.col(e).dot(outward);
    }
    return obs;
  }
  obs.values.segment<12>(0) = state.motor_position;
  for (int r = 0; r < kNumRods; ++r) {
    const Vec3 p0 = state.endpoint_position.col(2 * r);
    const Vec3 p1 = state.endpoint_position.col(2 * r + 1);
    const Scalar len = (p1 - p0).norm();
    const Vec3 u = (p1 - p0) / len;
    const Vec3 du = (state.endpoint_velocity.col(2 * r + 1) -
                     state.endpoint_velocity.col(2 * r)) /
                    len;
    const Scalar uz = std::clamp(u.z(), Scalar(-1), Scalar(1));
    const Scalar horiz_sq = std::max(1.0 - uz * uz, 1e-9);
    obs.values[12 + r] = std::asin(uz);                 // elevation
    obs.values[18 + r] = std::atan2(u.y(), u.x());      // rotation
    obs.values[24 + r] = du.z() / std::sqrt(horiz_sq);  // elevation rate
    obs.values[30 + r] =
        (u.x() * du.y() - u.y() * du.x()) / horiz_sq;   // rotation rate
  }
  return obs;
}

Observation apply_noise(const Observation& obs, const NoiseConfig& noise,
                        const Observation& previous_obs,
                        std::mt19937_64& rng) {
  if (previous_obs.kind != obs.kind ||
      previous_obs.values.size() != obs.values.size()) {
    throw std::invalid_argument("apply_noise: observation kind mismatch");
  }
  std::uniform_real_distribution<Scalar> uniform(0.0, 1.0);
  if (uniform(rng) < noise.drop_probability) return previous_obs;
  Observation out = obs;
  if (noise.gaussian_fraction > 0) {
    const VecX ranges = noise.channel_ranges(obs.kind);
    std::normal_distribution<Scalar> normal(0.0, 1.0);
    for (int i = 0; i < out.values.size(); ++i) {
      out.values[i] +=
          std::sqrt(noise.gaussian_fraction * ranges[i]) * normal(rng);
    }
  }
  return out;
}

Scalar step_cost(const RobotState& state_next, const Action& action,
                 const Vec12& previous_action, const CostConfig& cfg) {
  const Scalar velocity_term =
      -state_next.com_velocity().dot(cfg.heading());
  const Scalar action_term =
      cfg.action_reg_weight *
      (action.motor_target - previous_action).squaredNorm();
  return velocity_term + action_term;
}

SensorPipeline::SensorPipeline(const TensegrityModel& model,
                               const EnvConfig& env, ObservationKind kind,
                               std::uint64_t noise_seed)
    : model_(model), env_(env), kind_(kind), rng_(noise_seed) {
  if (env_.variant == RobotVariant::kEndcapFailure) {
    const int j = env_.failed_endcap;
    // Channel j is the end cap's accelerometer (limited) or motor (full).
    frozen_channels_.push_back(j);
    if (kind_ == ObservationKind::kFull && j % 2 == 0) {
      // The even end cap of each rod owns the rod's angle channels.
      const int r = j / 2;
      frozen_channels_.push_back(12 + r);
      frozen_channels_.push_back(18 + r);
      frozen_channels_.push_back(24 + r);
      frozen_channels_.push_back(30 + r);
    }
  }
}

Observation SensorPipeline::next(const RobotState& state) {
  Observation obs = observe(state, model_, kind_);
  if (!frozen_channels_.empty()) {
    if (!have_frozen_) {
      frozen_values_.resize(static_cast<int>(frozen_channels_.size()));
      for (std::size_t i = 0; i < frozen_channels_.size(); ++i) {
        frozen_values_[static_cast<int>(i)] = obs.values[frozen_channels_[i]];
      }
      have_frozen_ = true;
    }
    for (std::size_t i = 0; i < frozen_channels_.size(); ++i) {
      obs.values[frozen_channels_[i]] = frozen_values_[static_cast<int>(i)];
    }
  }
  // Sensor saturation on rate and accelerometer channels.
  if (kind_ == ObservationKind::kLimited) {
    obs.values = obs.values.cwiseMax(-env_.noise.accel_range)
                     .cwiseMin(env_.noise.accel_range);
  } else {
    obs.values.segment(24, 12) =
        obs.values.segment(24, 12)
            .cwiseMax(-env_.noise.angle_rate_range)
            .cwiseMin(env_.noise.angle_rate_range);
  }
  if (!have_previous_) {
    previous_ = obs;
    have_previous_ = true;
  }
  Observation delivered = apply_noise(obs, env_.noise, previous_, rng_);
  previous_ = delivered;
  return delivered;
}

}  // namespace tenseg
