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

#ifndef TENSEG_TYPES_HPP_
#define TENSEG_TYPES_HPP_

#include <Eigen/Dense>

namespace tenseg {

using Scalar = double;

using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;
using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec12 = Eigen::Matrix<Scalar, 12, 1>;
using Mat3X = Eigen::Matrix<Scalar, 3, Eigen::Dynamic>;

template <class S>
using MatrixT = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using VectorT = Eigen::Matrix<S, Eigen::Dynamic, 1>;

// Structure constants of the 6-strut icosahedron robot.
inline constexpr int kNumRods = 6;
inline constexpr int kNumEndpoints = 12;
inline constexpr int kNumCables = 24;
inline constexpr int kNumMotors = 12;

// Canonical state vector: endpoint positions (36), endpoint velocities (36),
// motor positions (12), motor velocities (12).
inline constexpr int kStateDim = 96;
inline constexpr int kActionDim = 12;

inline constexpr Scalar kEarthGravity = 9.81;

}  // namespace tenseg

#endif  // TENSEG_TYPES_HPP_
