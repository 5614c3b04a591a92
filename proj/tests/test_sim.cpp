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

#include <cmath>
#include <random>

#include "tenseg/model.hpp"
#include "tenseg/rng.hpp"
#include "tenseg/sim.hpp"

using namespace tenseg;

namespace {

Vec3 total_momentum(const RobotState& s, Scalar rod_mass) {
  Vec3 p = Vec3::Zero();
  for (int r = 0; r < kNumRods; ++r) {
    p += rod_mass * 0.5 *
         (s.endpoint_velocity.col(2 * r) + s.endpoint_velocity.col(2 * r + 1));
  }
  return p;
}

}  // namespace

TEST_CASE("force-free momentum conservation") {
  // Slack every cable by giving the test model generous rest lengths, kill
  // gravity, and fly far above the terrain: no forces act at all.
  TensegrityModel m = build_icosahedron_model(RobotConfig{});
  m.pretension_rest_length.setConstant(10.0);
  EnvConfig env;
  env.gravity_scale = 0.0;
  Simulator sim(m, env);

  RobotState s;
  s.endpoint_position = m.reference_endpoints;
  s.endpoint_position.row(2).array() += 50.0;
  std::mt19937_64 rng = make_stream(401);
  std::normal_distribution<Scalar> normal(0.0, 0.3);
  for (int r = 0; r < kNumRods; ++r) {
    Vec3 v(normal(rng), normal(rng), normal(rng));
    s.endpoint_velocity.col(2 * r) = v;
    s.endpoint_velocity.col(2 * r + 1) = v;
  }
  s.motor_position.setConstant(m.motor_neutral);
  s.motor_velocity.setZero();
  s.endpoint_specific_force.setZero();

  // Confirm the slack premise.
  const CableTensions t0 =
      cable_tensions(m, s.motor_position, s.endpoint_position);
  REQUIRE(t0.tension.maxCoeff() == 0.0);

  Action idle;
  idle.motor_target.setConstant(m.motor_neutral);
  const Vec3 p0 = total_momentum(s, m.rod_mass);
  const Scalar scale = p0.norm();
  REQUIRE(scale > 0.1);
  for (int step = 0; step < 100; ++step) {
    s = sim.step(s, idle);
    CHECK((total_momentum(s, m.rod_mass) - p0).norm() / scale <
          1e-9 * (step + 1));
  }
}

TEST_CASE("passive drop settles quickly") {
  const TensegrityModel m = build_icosahedron_model(RobotConfig{});
  EnvConfig env;
  Simulator sim(m, env);
  RobotState s = sim.face_down_state(m.closed_faces[2], 1.0);  // 1 m drop
  Action idle;
  idle.motor_target.setConstant(m.motor_neutral);
  bool settled = false;
  for (int t = 0; t < 100; ++t) {  // 10 s
    s = sim.step(s, idle);
    if (s.com_velocity().norm() < 0.01) {
      settled = true;
      break;
    }
  }
  CHECK(settled);
}

TEST_CASE("rod rigidity holds over a long random episode") {
  const TensegrityModel m = build_icosahedron_model(RobotConfig{});
  EnvConfig env;
  Simulator sim(m, env);
  RobotState s = sim.settle_on_face(m.closed_faces[0]);
  std::mt19937_64 rng = make_stream(402);
  std::uniform_real_distribution<Scalar> u(m.motor_min, m.motor_max);
  Action a;
  for (int t = 0; t < 600; ++t) {
    if (t % 10 == 0) {
      for (int j = 0; j < 12; ++j) a.motor_target[j] = u(rng);
    }
    s = sim.step(s, a);
    for (int r = 0; r < kNumRods; ++r) {
      const Scalar len = (s.endpoint_position.col(2 * r + 1) -
                          s.endpoint_position.col(2 * r))
                             .norm();
      CHECK(std::abs(len - m.rod_length) / m.rod_length < 1e-3);
    }
  }
}

TEST_CASE("contact penetration stays bounded under double gravity") {
  const TensegrityModel m = build_icosahedron_model(RobotConfig{});
  EnvConfig env;
  env.gravity_scale = 2.0;
  Simulator sim(m, env);
  RobotState s = sim.settle_on_face(m.closed_faces[0]);
  Action idle;
  idle.motor_target.setConstant(m.motor_neutral);
  for (int t = 0; t < 50; ++t) {
    s = sim.step(s, idle);
    for (int e = 0; e < kNumEndpoints; ++e) {
      const Vec3 p = s.endpoint_position.col(e);
      const Scalar penetration =
          env.terrain.height(p.x(), p.y()) + m.endcap_radius - p.z();
      CHECK(penetration < 0.05);
    }
  }
}

TEST_CASE("end cap failure freezes its motor") {
  const TensegrityModel m = build_icosahedron_model(RobotConfig{});
  EnvConfig env;
  env.variant = RobotVariant::kEndcapFailure;
  env.failed_endcap = 5;
  Simulator sim(m, env);
  RobotState s = sim.settle_on_face(m.closed_faces[0]);
  const Scalar frozen = s.motor_position[5];
  std::mt19937_64 rng = make_stream(403);
  std::uniform_real_distribution<Scalar> u(m.motor_min, m.motor_max);
  Action a;
  for (int t = 0; t < 40; ++t) {
    for (int j = 0; j < 12; ++j) a.motor_target[j] = u(rng);
    s = sim.step(s, a);
    CHECK(s.motor_position[5] == frozen);
    CHECK(s.motor_velocity[5] == 0.0);
  }
}

TEST_CASE("heavy variant lowers peak endpoint acceleration") {
  const TensegrityModel m = build_icosahedron_model(RobotConfig{});
  // Fixed recorded command script.
  std::mt19937_64 rng = make_stream(404);
  std::uniform_real_distribution<Scalar> u(m.motor_min, m.motor_max);
  std::vector<Action> script;
  for (int t = 0; t < 40; ++t) {
    Action a;
    for (int j = 0; j < 12; ++j) a.motor_target[j] = u(rng);
    script.push_back(a);
  }
  auto peak_accel = [&](RobotVariant variant) {
    EnvConfig env;
    env.variant = variant;
    Simulator sim(m, env);
    RobotState s = sim.settle_on_face(m.closed_faces[0]);
    Scalar peak = 0;
    const Vec3 g = env.gravity_vector();
    for (const Action& a : script) {
      s = sim.step(s, a);
      for (int e = 0; e < kNumEndpoints; ++e) {
        peak = std::max(peak,
                        (s.endpoint_specific_force.col(e) + g).norm());
      }
    }
    return peak;
  };
  CHECK(peak_accel(RobotVariant::kHeavy) < peak_accel(RobotVariant::kNormal));
}

TEST_CASE("observations") {
  const TensegrityModel m = build_icosahedron_model(RobotConfig{});
  EnvConfig env;
  Simulator sim(m, env);

  SUBCASE("dimensions are 36 and 12") {
    const RobotState s = sim.settle_on_face(m.closed_faces[0]);
    CHECK(observe(s, m, ObservationKind::kFull).values.size() == 36);
    CHECK(observe(s, m, ObservationKind::kLimited).values.size() == 12);
  }
  SUBCASE("limited observation at rest reads the gravity projection") {
    const RobotState s = sim.settle_on_face(m.closed_faces[0]);
    const Observation obs = observe(s, m, ObservationKind::kLimited);
    const Vec3 g = env.gravity_vector();
    for (int e = 0; e < kNumEndpoints; ++e) {
      const Vec3 outward =
          (s.endpoint_position.col(e) -
           s.endpoint_position.col(TensegrityModel::rod_partner(e)))
              .normalized();
      CHECK(obs.values[e] == doctest::Approx((-g).dot(outward)).epsilon(1e-9));
    }
  }
  SUBCASE("elevation channel reports a constructed elevation angle") {
    RobotState s;
    s.endpoint_position = m.reference_endpoints;
    s.endpoint_velocity.setZero();
    s.motor_position.setConstant(m.motor_neutral);
    s.motor_velocity.setZero();
    fill_static_specific_force(s, env);
    const Scalar phi = 0.37;
    const Vec3 axis(std::cos(phi), 0.0, std::sin(phi));
    const Vec3 com(0.0, 0.0, 2.0);
    s.endpoint_position.col(0) = com - (m.rod_length / 2) * axis;
    s.endpoint_position.col(1) = com + (m.rod_length / 2) * axis;
    const Observation obs = observe(s, m, ObservationKind::kFull);
    CHECK(obs.values[12] == doctest::Approx(phi).epsilon(1e-12));
    CHECK(obs.values[18] == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("noise model") {
  NoiseConfig noise;
  Observation obs;
  obs.kind = ObservationKind::kLimited;
  obs.values = VecX::LinSpaced(12, -1.0, 1.0);
  Observation prev = obs;
  prev.values.setConstant(99.0);
  std::mt19937_64 rng = make_stream(405);

  SUBCASE("drop probability 1 always returns the previous observation") {
    noise.drop_probability = 1.0;
    for (int i = 0; i < 10; ++i) {
      const Observation out = apply_noise(obs, noise, prev, rng);
      CHECK((out.values - prev.values).cwiseAbs().maxCoeff() == 0.0);
    }
  }
  SUBCASE("zero noise and zero drops is the identity") {
    noise.drop_probability = 0.0;
    noise.gaussian_fraction = 0.0;
    const Observation out = apply_noise(obs, noise, prev, rng);
    CHECK((out.values - obs.values).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("kind mismatch is rejected") {
    Observation full;
    full.kind = ObservationKind::kFull;
    full.values = VecX::Zero(36);
    CHECK_THROWS_AS(apply_noise(obs, noise, full, rng), std::invalid_argument);
  }
  SUBCASE("empirical drop rate and variance match the configuration") {
    const int steps = 10000;
    int drops = 0;
    MatX noisy(steps, 12);
    int kept = 0;
    for (int i = 0; i < steps; ++i) {
      const Observation out = apply_noise(obs, noise, prev, rng);
      if ((out.values - prev.values).cwiseAbs().maxCoeff() == 0.0) {
        ++drops;
      } else {
        noisy.row(kept++) = (out.values - obs.values).transpose();
      }
    }
    const Scalar drop_rate = static_cast<Scalar>(drops) / steps;
    CHECK(drop_rate > 0.09);
    CHECK(drop_rate < 0.11);
    const VecX ranges = noise.channel_ranges(ObservationKind::kLimited);
    for (int ch = 0; ch < 12; ++ch) {
      const VecX col = noisy.col(ch).head(kept);
      const Scalar mean = col.mean();
      const Scalar var = (col.array() - mean).square().sum() / (kept - 1);
      const Scalar expected = noise.gaussian_fraction * ranges[ch];
      CHECK(std::abs(var - expected) / expected < 0.05);
    }
  }
}

TEST_CASE("step cost") {
  const TensegrityModel m = build_icosahedron_model(RobotConfig{});
  EnvConfig env;
  Simulator sim(m, env);
  CostConfig cost;

  SUBCASE("rest with unchanged action costs zero") {
    RobotState s = sim.settle_on_face(m.closed_faces[0]);
    s.endpoint_velocity.setZero();
    Action a;
    a.motor_target.setConstant(1.0);
    CHECK(step_cost(s, a, a.motor_target, cost) == 0.0);
  }
  SUBCASE("CoM moving at 0.5 m/s along the heading costs -0.5") {
    RobotState s = sim.settle_on_face(m.closed_faces[0]);
    s.endpoint_velocity.setZero();
    s.endpoint_velocity.row(0).setConstant(0.5);
    Action a;
    a.motor_target.setZero();
    CostConfig free = cost;
    free.action_reg_weight = 0.0;
    CHECK(step_cost(s, a, a.motor_target, free) ==
          doctest::Approx(-0.5).epsilon(1e-12));
  }
  SUBCASE("velocity term equals the CoM velocity projection") {
    std::mt19937_64 rng = make_stream(406);
    std::normal_distribution<Scalar> normal(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
      RobotState s = sim.settle_on_face(m.closed_faces[0]);
      for (int e = 0; e < kNumEndpoints; ++e) {
        for (int d = 0; d < 3; ++d) s.endpoint_velocity(d, e) = normal(rng);
      }
      Action a;
      a.motor_target.setZero();
      CostConfig free = cost;
      free.action_reg_weight = 0.0;
      const Scalar expect = -s.com_velocity().dot(free.heading());
      CHECK(step_cost(s, a, a.motor_target, free) ==
            doctest::Approx(expect).epsilon(1e-12));
    }
  }
}

TEST_CASE("episode determinism is bitwise") {
  const TensegrityModel m = build_icosahedron_model(RobotConfig{});
  EnvConfig env;
  Simulator sim(m, env);
  std::mt19937_64 rng = make_stream(407);
  std::uniform_real_distribution<Scalar> u(m.motor_min, m.motor_max);
  std::vector<Action> script;
  for (int t = 0; t < 30; ++t) {
    Action a;
    for (int j = 0; j < 12; ++j) a.motor_target[j] = u(rng);
    script.push_back(a);
  }
  auto run = [&]() {
    RobotState s = sim.settle_on_face(m.closed_faces[1]);
    VecX concat(30 * kStateDim);
    for (int t = 0; t < 30; ++t) {
      s = sim.step(s, script[static_cast<std::size_t>(t)]);
      concat.segment(t * kStateDim, kStateDim) = s.to_vector();
    }
    return concat;
  };
  const VecX a = run();
  const VecX b = run();
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("sensor pipeline freezes failed end cap channels") {
  const TensegrityModel m = build_icosahedron_model(RobotConfig{});
  EnvConfig env;
  env.variant = RobotVariant::kEndcapFailure;
  env.failed_endcap = 2;
  env.noise.drop_probability = 0.0;
  env.noise.gaussian_fraction = 0.0;
  Simulator sim(m, env);
  SensorPipeline pipeline(m, env, ObservationKind::kLimited, 1234);

  RobotState s = sim.settle_on_face(m.closed_faces[0]);
  const Observation first = pipeline.next(s);
  const Scalar frozen = first.values[2];
  Action a;
  a.motor_target.setConstant(m.motor_max / 2);
  bool others_moved = false;
  for (int t = 0; t < 30; ++t) {
    s = sim.step(s, a);
    const Observation obs = pipeline.next(s);
    CHECK(obs.values[2] == frozen);
    if (std::abs(obs.values[3] - first.values[3]) > 1e-3) others_moved = true;
  }
  CHECK(others_moved);
}
