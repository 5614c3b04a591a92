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

#include <algorithm>
#include <set>
#include <stdexcept>
#include <string>

#include "tenseg/model.hpp"
#include "tenseg/sim.hpp"

namespace tenseg {

std::vector<GroundFace> enumerate_stable_faces(const TensegrityModel& model,
                                               const Terrain& terrain,
                                               int min_count,
                                               std::mt19937_64& rng) {
  EnvConfig env;
  env.terrain = terrain;
  Simulator sim(model, env);

  std::set<int> stable_ids;
  auto try_drop = [&](const RobotState& start) {
    RobotState settled;
    try {
      settled = sim.settle_from(start, 0.01, 20.0);
    } catch (const std::exception&) {
      return;  // did not come to rest; not counted as stable
    }
    if (auto face = ground_face(model, settled, terrain)) {
      stable_ids.insert(face->face_id);
    }
  };

  // Drop face-down from every closed face, then from jittered orientations
  // to catch resting faces the axis-aligned drops miss.
  for (const GroundFace& face : model.closed_faces) {
    try_drop(sim.face_down_state(face));
  }
  std::uniform_real_distribution<Scalar> angle(-0.25, 0.25);
  for (const GroundFace& face : model.closed_faces) {
    RobotState s = sim.face_down_state(face);
    const Eigen::AngleAxisd tilt_x(angle(rng), Vec3::UnitX());
    const Eigen::AngleAxisd tilt_y(angle(rng), Vec3::UnitY());
    const Vec3 com = s.com();
    s.endpoint_position =
        (tilt_x * tilt_y).toRotationMatrix() *
            (s.endpoint_position.colwise() - com) +
        com.replicate(1, kNumEndpoints);
    const Scalar min_z = s.endpoint_position.row(2).minCoeff();
    if (min_z < model.endcap_radius) {
      s.endpoint_position.row(2).array() += model.endcap_radius - min_z + 0.05;
    }
    try_drop(s);
  }

  if (static_cast<int>(stable_ids.size()) < min_count) {
    throw std::runtime_error(
        "enumerate_stable_faces: found only " +
        std::to_string(stable_ids.size()) + " stable faces, need " +
        std::to_string(min_count));
  }
  std::vector<GroundFace> out;
  for (int id : stable_ids) out.push_back(model.closed_faces[id]);
  return out;
}

}  // namespace tenseg
