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

#ifndef TENSEG_MODEL_HPP_
#define TENSEG_MODEL_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "tenseg/terrain.hpp"
#include "tenseg/types.hpp"

namespace tenseg {

// Physical parameters of the 6-rod/24-cable robot. All values are
// configuration, not constants: they can be overridden from a config file.
struct RobotConfig {
  Scalar rod_length = 1.7;           // m
  Scalar rod_mass = 10.0;            // kg, total per rod
  Scalar endcap_radius = 0.05;       // m
  Scalar spring_constant = 5000.0;   // N/m, per cable
  Scalar cable_damping = 150.0;      // N s/m, taut cables only
  Scalar pretension_force = 150.0;   // N at the unloaded geometry
  Scalar spool_radius = 0.04;        // m
  Scalar motor_min = 0.0;            // rad
  Scalar motor_max = 4.0 * EIGEN_PI; // rad
  Scalar motor_max_velocity = 4.0 * EIGEN_PI;  // rad/s
  Scalar servo_gain = 5.0;           // 1/s
  Scalar motor_neutral = 0.0;        // rad, settled motor position
  // Optional explicit actuation assignment (endpoint id -> cable id). When
  // empty, a greedy matching over the incidence in ascending id order is used.
  std::vector<std::pair<int, int>> actuation_override;
};

// Closed triangle of three endpoints, pairwise connected by cables.
struct GroundFace {
  int face_id = -1;
  std::array<int, 3> endpoint_ids{};
};

// Per-cable tensions in newtons; slack cables carry exactly zero.
struct CableTensions {
  Eigen::Matrix<Scalar, kNumCables, 1> tension;
};

// Rod/cable topology, masses, stiffnesses, actuation assignment and the
// unloaded reference geometry. Immutable after construction.
struct TensegrityModel {
  Scalar rod_length, rod_mass, endcap_radius;
  Scalar spring_constant, cable_damping;
  Scalar spool_radius;
  Scalar motor_min, motor_max, motor_max_velocity, servo_gain, motor_neutral;

  // Unloaded regular-icosahedron geometry, one column per endpoint.
  // Endpoints 2r and 2r+1 belong to rod r.
  Eigen::Matrix<Scalar, 3, kNumEndpoints> reference_endpoints;
  std::array<std::array<int, 2>, kNumCables> cables;  // endpoint pairs, a < b
  Eigen::Matrix<Scalar, kNumCables, 1> pretension_rest_length;  // m

  std::array<int, kNumEndpoints> actuated_cable;  // endpoint -> hosted cable
  std::array<int, kNumCables> cable_host;         // cable -> endpoint or -1

  std::vector<GroundFace> closed_faces;  // all-cable triangles, by face_id

  static constexpr int rod_of(int endpoint) { return endpoint / 2; }
  static constexpr int rod_partner(int endpoint) { return endpoint ^ 1; }

  // Rest length of cable c given the 12 motor positions; winding a motor in
  // shortens its hosted cable by spool_radius per radian, floored at zero.
  Scalar cable_rest_length(int cable, const Vec12& motor_positions) const;

  Vec12 clamp_motors(const Vec12& motors) const;

  // Hash over every physical parameter, the topology and the actuation
  // assignment; used by the safety DB for compatibility checks.
  std::uint64_t content_hash() const;
};

// Builds the icosahedron model: endpoints at the 12 vertices of a regular
// icosahedron scaled so rods (one disjoint edge per rod) have length
// config.rod_length; the 24 cables are the remaining icosahedron edges.
// Throws std::invalid_argument on invalid parameters or actuation assignment.
TensegrityModel build_icosahedron_model(const RobotConfig& config);

// Forward-kinematics tension estimate at the given endpoint geometry.
CableTensions cable_tensions(
    const TensegrityModel& model, const Vec12& motor_positions,
    const Eigen::Matrix<Scalar, 3, kNumEndpoints>& endpoint_positions);

struct RobotState;  // sim.hpp

// Contact tolerance: an endpoint touches the terrain when its center is
// within contact_tolerance_factor * endcap_radius of the surface.
inline constexpr Scalar kContactToleranceFactor = 1.2;

// Closed triangle currently supporting the robot: all three endpoints within
// contact tolerance of the terrain and the CoM ground projection inside the
// triangle. nullopt when airborne or in transition.
std::optional<GroundFace> ground_face(const TensegrityModel& model,
                                      const RobotState& state,
                                      const Terrain& terrain);

// Drops the passive robot face-down from every closed face (plus jittered
// retries), settles each, and returns the distinct resting faces ordered by
// face_id. Throws std::runtime_error when fewer than min_count are found.
// Defined with the simulator (faces.cpp).
std::vector<GroundFace> enumerate_stable_faces(const TensegrityModel& model,
                                               const Terrain& terrain,
                                               int min_count,
                                               std::mt19937_64& rng);

// Human-readable model file embedding the actuation assignment and the
// content hash, so runs are reproducible against a fixed model.
void save_model(const TensegrityModel& model, const std::string& path);
TensegrityModel load_model(const std::string& path);

}  // namespace tenseg

#endif  // TENSEG_MODEL_HPP_
