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

#include "tenseg/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "tenseg/sim.hpp"

namespace tenseg {

namespace {

// Six-strut icosahedron tensegrity: three mutually orthogonal pairs of
// parallel rods of length L with pair separation d = L/2, the unique
// separation at which a uniform cable pretension is self-balanced. The 12
// endpoints are the vertices of the (near-regular) icosahedron hull; the 24
// cables are the hull edges except the six gaps between parallel rod tips.
// Rod r occupies columns 2r, 2r+1.
Eigen::Matrix<Scalar, 3, kNumEndpoints> unit_icosahedron_endpoints(Scalar L) {
  const Scalar h = L / 2;       // rod half-length
  const Scalar s = L / 4;      // half of the pair separation d = L/2
  Eigen::Matrix<Scalar, 3, kNumEndpoints> v;
  v.col(0) << 0, s, -h;   // rods 0,1 along z at y = +/- d/2
  v.col(1) << 0, s, h;
  v.col(2) << 0, -s, -h;
  v.col(3) << 0, -s, h;
  v.col(4) << -h, 0, s;   // rods 2,3 along x at z = +/- d/2
  v.col(5) << h, 0, s;
  v.col(6) << -h, 0, -s;
  v.col(7) << h, 0, -s;
  v.col(8) << s, -h, 0;   // rods 4,5 along y at x = +/- d/2
  v.col(9) << s, h, 0;
  v.col(10) << -s, -h, 0;
  v.col(11) << -s, h, 0;
  return v;
}

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t hash_scalar(std::uint64_t h, Scalar v) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof(buf), "%.17g", v);
  return fnv1a(h, buf, static_cast<std::size_t>(n));
}

}  // namespace

Scalar TensegrityModel::cable_rest_length(int cable,
                                          const Vec12& motor_positions) const {
  Scalar rest = pretension_rest_length[cable];
  const int host = cable_host[cable];
  if (host >= 0) rest -= spool_radius * motor_positions[host];
  return std::max(rest, Scalar(0));
}

Vec12 TensegrityModel::clamp_motors(const Vec12& motors) const {
  return motors.cwiseMax(motor_min).cwiseMin(motor_max);
}

std::uint64_t TensegrityModel::content_hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (Scalar v : {rod_length, rod_mass, endcap_radius, spring_constant,
                   cable_damping, spool_radius, motor_min, motor_max,
                   motor_max_velocity, servo_gain, motor_neutral}) {
    h = hash_scalar(h, v);
  }
  for (int e = 0; e < kNumEndpoints; ++e) {
    for (int d = 0; d < 3; ++d) h = hash_scalar(h, reference_endpoints(d, e));
  }
  for (const auto& c : cables) {
    h = fnv1a(h, c.data(), sizeof(int) * 2);
  }
  for (int c = 0; c < kNumCables; ++c) {
    h = hash_scalar(h, pretension_rest_length[c]);
  }
  h = fnv1a(h, actuated_cable.data(), sizeof(int) * actuated_cable.size());
  return h;
}

TensegrityModel build_icosahedron_model(const RobotConfig& config) {
  if (config.rod_length <= 0 || config.rod_mass <= 0 ||
      config.endcap_radius <= 0 || config.spring_constant <= 0 ||
      config.spool_radius <= 0 || config.pretension_force <= 0) {
    throw std::invalid_argument(
        "robot config: masses, lengths and stiffnesses must be positive");
  }
  if (config.motor_max <= config.motor_min || config.motor_max_velocity <= 0 ||
      config.servo_gain <= 0) {
    throw std::invalid_argument("robot config: invalid motor parameters");
  }

  TensegrityModel m;
  m.rod_length = config.rod_length;
  m.rod_mass = config.rod_mass;
  m.endcap_radius = config.endcap_radius;
  m.spring_constant = config.spring_constant;
  m.cable_damping = config.cable_damping;
  m.spool_radius = config.spool_radius;
  m.motor_min = config.motor_min;
  m.motor_max = config.motor_max;
  m.motor_max_velocity = config.motor_max_velocity;
  m.servo_gain = config.servo_gain;
  m.motor_neutral = config.motor_neutral;

  m.reference_endpoints = unit_icosahedron_endpoints(config.rod_length);

  // Cables join endpoints of non-parallel rods at the hull edge length
  // sqrt(3/8) * L. Rods are paired (0,1), (2,3), (4,5); the gap between
  // parallel rod tips carries no cable.
  const Scalar edge = config.rod_length * std::sqrt(3.0 / 8.0);
  int n_cables = 0;
  for (int a = 0; a < kNumEndpoints; ++a) {
    for (int b = a + 1; b < kNumEndpoints; ++b) {
      const int ra = TensegrityModel::rod_of(a);
      const int rb = TensegrityModel::rod_of(b);
      if (ra == rb || ra == (rb ^ 1)) continue;
      const Scalar d =
          (m.reference_endpoints.col(a) - m.reference_endpoints.col(b)).norm();
      if (std::abs(d - edge) < 1e-9 * edge) {
        if (n_cables >= kNumCables) {
          throw std::runtime_error("icosahedron geometry: too many edges");
        }
        m.cables[n_cables++] = {a, b};
      }
    }
  }
  if (n_cables != kNumCables) {
    throw std::runtime_error("icosahedron geometry: expected 24 cable edges");
  }

  m.pretension_rest_length.setConstant(
      edge - config.pretension_force / config.spring_constant);
  if ((m.pretension_rest_length.array() <= 0).any()) {
    throw std::invalid_argument(
        "robot config: pretension force too large for spring constant");
  }

  // Actuation assignment: each endpoint hosts exactly one incident cable.
  m.cable_host.fill(-1);
  m.actuated_cable.fill(-1);
  auto incident = [&](int endpoint) {
    std::vector<int> ids;
    for (int c = 0; c < kNumCables; ++c) {
      if (m.cables[c][0] == endpoint || m.cables[c][1] == endpoint) {
        ids.push_back(c);
      }
    }
    return ids;
  };
  if (!config.actuation_override.empty()) {
    if (config.actuation_override.size() != kNumEndpoints) {
      throw std::invalid_argument(
          "actuation override must assign all 12 endpoints");
    }
    for (const auto& [e, c] : config.actuation_override) {
      if (e < 0 || e >= kNumEndpoints || c < 0 || c >= kNumCables) {
        throw std::invalid_argument("actuation override: id out of range");
      }
      if (m.cables[c][0] != e && m.cables[c][1] != e) {
        throw std::invalid_argument("actuation override: cable " +
                                    std::to_string(c) +
                                    " is not incident to endpoint " +
                                    std::to_string(e));
      }
      if (m.cable_host[c] != -1) {
        throw std::invalid_argument("actuation override: cable " +
                                    std::to_string(c) + " has two hosts");
      }
      if (m.actuated_cable[e] != -1) {
        throw std::invalid_argument("actuation override: endpoint " +
                                    std::to_string(e) + " assigned twice");
      }
      m.actuated_cable[e] = c;
      m.cable_host[c] = e;
    }
  } else {
    // Greedy perfect matching in ascending endpoint id order.
    for (int e = 0; e < kNumEndpoints; ++e) {
      for (int c : incident(e)) {
        if (m.cable_host[c] == -1) {
          m.actuated_cable[e] = c;
          m.cable_host[c] = e;
          break;
        }
      }
      if (m.actuated_cable[e] == -1) {
        throw std::runtime_error(
            "actuation matching failed at endpoint " + std::to_string(e));
      }
    }
  }

  // Closed faces: triangles whose three edges are all cables.
  std::set<std::array<int, 3>> seen;
  auto cable_between = [&](int a, int b) {
    for (int c = 0; c < kNumCables; ++c) {
      if ((m.cables[c][0] == a && m.cables[c][1] == b) ||
          (m.cables[c][0] == b && m.cables[c][1] == a)) {
        return true;
      }
    }
    return false;
  };
  for (int a = 0; a < kNumEndpoints; ++a) {
    for (int b = a + 1; b < kNumEndpoints; ++b) {
      if (!cable_between(a, b)) continue;
      for (int c = b + 1; c < kNumEndpoints; ++c) {
        if (cable_between(a, c) && cable_between(b, c)) {
          seen.insert({a, b, c});
        }
      }
    }
  }
  int face_id = 0;
  for (const auto& tri : seen) {
    GroundFace f;
    f.face_id = face_id++;
    f.endpoint_ids = tri;
    m.closed_faces.push_back(f);
  }
  return m;
}

CableTensions cable_tensions(
    const TensegrityModel& model, const Vec12& motor_positions,
    const Eigen::Matrix<Scalar, 3, kNumEndpoints>& endpoint_positions) {
  if (!motor_positions.allFinite() || !endpoint_positions.allFinite()) {
    throw std::invalid_argument("cable_tensions: non-finite input");
  }
  CableTensions out;
  for (int c = 0; c < kNumCables; ++c) {
    const Scalar len = (endpoint_positions.col(model.cables[c][0]) -
                        endpoint_positions.col(model.cables[c][1]))
                           .norm();
    const Scalar rest = model.cable_rest_length(c, motor_positions);
    out.tension[c] = model.spring_constant * std::max(Scalar(0), len - rest);
  }
  return out;
}

std::optional<GroundFace> ground_face(const TensegrityModel& model,
                                      const RobotState& state,
                                      const Terrain& terrain) {
  const Scalar tol = kContactToleranceFactor * model.endcap_radius;
  const Vec3 com = state.endpoint_position.rowwise().mean();
  for (const GroundFace& face : model.closed_faces) {
    bool touching = true;
    for (int e : face.endpoint_ids) {
      const Vec3 p = state.endpoint_position.col(e);
      if (p.z() - terrain.height(p.x(), p.y()) > tol) {
        touching = false;
        break;
      }
    }
    if (!touching) continue;
    // CoM ground-projection inside the triangle (2D barycentric test).
    const Vec3 pa = state.endpoint_position.col(face.endpoint_ids[0]);
    const Vec3 pb = state.endpoint_position.col(face.endpoint_ids[1]);
    const Vec3 pc = state.endpoint_position.col(face.endpoint_ids[2]);
    const Vec2 a(pa.x(), pa.y()), b(pb.x(), pb.y()), c(pc.x(), pc.y());
    const Vec2 q(com.x(), com.y());
    const Vec2 v0 = b - a, v1 = c - a, v2 = q - a;
    const Scalar den = v0.x() * v1.y() - v1.x() * v0.y();
    if (std::abs(den) < 1e-12) continue;
    const Scalar u = (v2.x() * v1.y() - v1.x() * v2.y()) / den;
    const Scalar v = (v0.x() * v2.y() - v2.x() * v0.y()) / den;
    if (u >= -1e-9 && v >= -1e-9 && u + v <= 1.0 + 1e-9) return face;
  }
  return std::nullopt;
}

void save_model(const TensegrityModel& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open model file " + path);
  out.precision(17);
  out << "tenseg-model v1\n";
  out << "content_hash " << m.content_hash() << "\n";
  out << "rod_length " << m.rod_length << "\n";
  out << "rod_mass " << m.rod_mass << "\n";
  out << "endcap_radius " << m.endcap_radius << "\n";
  out << "spring_constant " << m.spring_constant << "\n";
  out << "cable_damping " << m.cable_damping << "\n";
  out << "spool_radius " << m.spool_radius << "\n";
  out << "motor_min " << m.motor_min << "\n";
  out << "motor_max " << m.motor_max << "\n";
  out << "motor_max_velocity " << m.motor_max_velocity << "\n";
  out << "servo_gain " << m.servo_gain << "\n";
  out << "motor_neutral " << m.motor_neutral << "\n";
  out << "pretension_rest_length";
  for (int c = 0; c < kNumCables; ++c) out << " " << m.pretension_rest_length[c];
  out << "\n";
  out << "endpoints\n";
  for (int e = 0; e < kNumEndpoints; ++e) {
    out << "  " << m.reference_endpoints(0, e) << " "
        << m.reference_endpoints(1, e) << " " << m.reference_endpoints(2, e)
        << "\n";
  }
  out << "cables\n";
  for (int c = 0; c < kNumCables; ++c) {
    out << "  " << m.cables[c][0] << " " << m.cables[c][1] << "\n";
  }
  out << "actuated";
  for (int e = 0; e < kNumEndpoints; ++e) out << " " << m.actuated_cable[e];
  out << "\n";
}

TensegrityModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model file " + path);
  std::string header;
  std::getline(in, header);
  if (header != "tenseg-model v1") {
    throw std::runtime_error("unrecognized model file header: " + header);
  }
  TensegrityModel m;
  std::uint64_t stored_hash = 0;
  std::string key;
  auto expect = [&](const std::string& want) {
    if (key != want) {
      throw std::runtime_error("model file: expected '" + want + "', got '" +
                               key + "'");
    }
  };
  in >> key >> stored_hash;
  expect("content_hash");
  in >> key >> m.rod_length;
  in >> key >> m.rod_mass;
  in >> key >> m.endcap_radius;
  in >> key >> m.spring_constant;
  in >> key >> m.cable_damping;
  in >> key >> m.spool_radius;
  in >> key >> m.motor_min;
  in >> key >> m.motor_max;
  in >> key >> m.motor_max_velocity;
  in >> key >> m.servo_gain;
  in >> key >> m.motor_neutral;
  in >> key;
  expect("pretension_rest_length");
  for (int c = 0; c < kNumCables; ++c) in >> m.pretension_rest_length[c];
  in >> key;
  expect("endpoints");
  for (int e = 0; e < kNumEndpoints; ++e) {
    in >> m.reference_endpoints(0, e) >> m.reference_endpoints(1, e) >>
        m.reference_endpoints(2, e);
  }
  in >> key;
  expect("cables");
  m.cable_host.fill(-1);
  for (int c = 0; c < kNumCables; ++c) in >> m.cables[c][0] >> m.cables[c][1];
  in >> key;
  expect("actuated");
  for (int e = 0; e < kNumEndpoints; ++e) {
    in >> m.actuated_cable[e];
    if (m.actuated_cable[e] >= 0) m.cable_host[m.actuated_cable[e]] = e;
  }
  if (!in) throw std::runtime_error("model file truncated: " + path);

  // Rebuild faces rather than trusting the file.
  std::set<std::array<int, 3>> seen;
  auto cable_between = [&](int a, int b) {
    for (int c = 0; c < kNumCables; ++c) {
      if ((m.cables[c][0] == a && m.cables[c][1] == b) ||
          (m.cables[c][0] == b && m.cables[c][1] == a)) {
        return true;
      }
    }
    return false;
  };
  for (int a = 0; a < kNumEndpoints; ++a) {
    for (int b = a + 1; b < kNumEndpoints; ++b) {
      if (!cable_between(a, b)) continue;
      for (int c = b + 1; c < kNumEndpoints; ++c) {
        if (cable_between(a, c) && cable_between(b, c)) seen.insert({a, b, c});
      }
    }
  }
  int face_id = 0;
  for (const auto& tri : seen) {
    GroundFace f;
    f.face_id = face_id++;
    f.endpoint_ids = tri;
    m.closed_faces.push_back(f);
  }
  if (m.content_hash() != stored_hash) {
    throw std::runtime_error("model file hash mismatch: " + path);
  }
  return m;
}

}  // namespace tenseg
