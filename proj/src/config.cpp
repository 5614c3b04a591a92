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

#include "tenseg/config.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

#include <json.hpp>

namespace tenseg::config {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::set<std::string>& allowed,
                const std::string& section) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) {
      throw std::runtime_error("config: unknown key '" + it.key() +
                               "' in section " + section);
    }
  }
}

template <class T>
void get(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void parse_robot(const json& j, RobotConfig& r) {
  check_keys(j,
             {"rod_length", "rod_mass", "endcap_radius", "spring_constant",
              "cable_damping", "pretension_force", "spool_radius", "motor_min",
              "motor_max", "motor_max_velocity", "servo_gain", "motor_neutral",
              "actuation_override"},
             "robot");
  get(j, "rod_length", r.rod_length);
  get(j, "rod_mass", r.rod_mass);
  get(j, "endcap_radius", r.endcap_radius);
  get(j, "spring_constant", r.spring_constant);
  get(j, "cable_damping", r.cable_damping);
  get(j, "pretension_force", r.pretension_force);
  get(j, "spool_radius", r.spool_radius);
  get(j, "motor_min", r.motor_min);
  get(j, "motor_max", r.motor_max);
  get(j, "motor_max_velocity", r.motor_max_velocity);
  get(j, "servo_gain", r.servo_gain);
  get(j, "motor_neutral", r.motor_neutral);
  if (j.contains("actuation_override")) {
    r.actuation_override.clear();
    for (const auto& pair : j.at("actuation_override")) {
      r.actuation_override.emplace_back(pair.at(0).get<int>(),
                                        pair.at(1).get<int>());
    }
  }
}

Terrain parse_terrain(const json& j) {
  const std::string kind = j.value("kind", "flat");
  if (kind == "flat") return Terrain::flat();
  if (kind == "hilly") {
    return Terrain::hilly(j.value("amplitude", 0.1),
                          j.value("seed", std::uint64_t{1234}));
  }
  if (kind == "slope") {
    Vec2 dir(1.0, 0.0);
    if (j.contains("direction")) {
      dir.x() = j.at("direction").at(0).get<Scalar>();
      dir.y() = j.at("direction").at(1).get<Scalar>();
    }
    return Terrain::slope(j.value("slope", 0.1), dir);
  }
  throw std::runtime_error("config: unknown terrain kind '" + kind + "'");
}

void parse_noise(const json& j, NoiseConfig& n) {
  check_keys(j,
             {"gaussian_fraction", "drop_probability", "motor_range",
              "angle_range", "angle_rate_range", "accel_range"},
             "env.noise");
  get(j, "gaussian_fraction", n.gaussian_fraction);
  get(j, "drop_probability", n.drop_probability);
  get(j, "motor_range", n.motor_range);
  get(j, "angle_range", n.angle_range);
  get(j, "angle_rate_range", n.angle_rate_range);
  get(j, "accel_range", n.accel_range);
  if (n.gaussian_fraction < 0 || n.gaussian_fraction > 1 ||
      n.drop_probability < 0 || n.drop_probability > 1) {
    throw std::runtime_error("config: noise fractions must lie in [0, 1]");
  }
}

void parse_env(const json& j, EnvConfig& e) {
  check_keys(j,
             {"terrain", "gravity_scale", "noise", "variant", "failed_endcap",
              "control_dt", "physics_substeps", "heavy_mass_multiplier",
              "heavy_motor_velocity_multiplier", "contact_stiffness",
              "contact_damping", "friction_mu", "friction_smoothing"},
             "env");
  if (j.contains("terrain")) e.terrain = parse_terrain(j.at("terrain"));
  get(j, "gravity_scale", e.gravity_scale);
  if (j.contains("noise")) parse_noise(j.at("noise"), e.noise);
  if (j.contains("variant")) {
    const std::string v = j.at("variant").get<std::string>();
    if (v == "normal") {
      e.variant = RobotVariant::kNormal;
    } else if (v == "heavy") {
      e.variant = RobotVariant::kHeavy;
    } else if (v == "endcap_failure") {
      e.variant = RobotVariant::kEndcapFailure;
    } else {
      throw std::runtime_error("config: unknown robot variant '" + v + "'");
    }
  }
  get(j, "failed_endcap", e.failed_endcap);
  get(j, "control_dt", e.control_dt);
  get(j, "physics_substeps", e.physics_substeps);
  get(j, "heavy_mass_multiplier", e.heavy_mass_multiplier);
  get(j, "heavy_motor_velocity_multiplier", e.heavy_motor_velocity_multiplier);
  get(j, "contact_stiffness", e.contact_stiffness);
  get(j, "contact_damping", e.contact_damping);
  get(j, "friction_mu", e.friction_mu);
  get(j, "friction_smoothing", e.friction_smoothing);
}

void parse_cost(const json& j, CostConfig& c) {
  check_keys(j, {"heading_angle", "action_reg_weight"}, "cost");
  get(j, "heading_angle", c.heading_angle);
  get(j, "action_reg_weight", c.action_reg_weight);
}

void parse_train(const json& j, mdgps::TrainConfig& t) {
  check_keys(
      j,
      {"initial_states", "segments", "segment_horizon", "episodes_per_policy",
       "iterations", "on_policy_switch_iteration", "gate_iterations",
       "gate_improvement_threshold", "epsilon", "eta_min", "eta_max",
       "initial_policy_stddev", "dynamics_pool_factor", "dynamics_ridge",
       "cost_state_reg", "observation", "trajopt_only", "seed", "threads",
       "save_traces", "snapshot_iteration", "learning_rate", "momentum",
       "batch_size", "epochs", "plain_mse"},
      "train");
  get(j, "initial_states", t.initial_states);
  get(j, "segments", t.segments);
  get(j, "segment_horizon", t.segment_horizon);
  get(j, "episodes_per_policy", t.episodes_per_policy);
  get(j, "iterations", t.iterations);
  get(j, "on_policy_switch_iteration", t.on_policy_switch_iteration);
  get(j, "gate_iterations", t.gate_iterations);
  get(j, "gate_improvement_threshold", t.gate_improvement_threshold);
  get(j, "epsilon", t.kl.epsilon);
  get(j, "eta_min", t.kl.eta_min);
  get(j, "eta_max", t.kl.eta_max);
  get(j, "initial_policy_stddev", t.initial_policy_stddev);
  get(j, "dynamics_pool_factor", t.dynamics_pool_factor);
  get(j, "dynamics_ridge", t.dynamics_ridge);
  get(j, "cost_state_reg", t.cost_state_reg);
  if (j.contains("observation")) {
    const std::string o = j.at("observation").get<std::string>();
    if (o == "limited") {
      t.observation = ObservationKind::kLimited;
    } else if (o == "full") {
      t.observation = ObservationKind::kFull;
    } else {
      throw std::runtime_error("config: unknown observation kind '" + o + "'");
    }
  }
  get(j, "trajopt_only", t.trajopt_only);
  get(j, "seed", t.seed);
  get(j, "threads", t.threads);
  get(j, "save_traces", t.save_traces);
  get(j, "snapshot_iteration", t.snapshot_iteration);
  get(j, "learning_rate", t.optimizer.learning_rate);
  get(j, "momentum", t.optimizer.momentum);
  get(j, "batch_size", t.optimizer.batch_size);
  get(j, "epochs", t.optimizer.epochs);
  get(j, "plain_mse", t.optimizer.plain_mse);
}

void parse_safety(const json& j, safety::SafetyConfig& s) {
  check_keys(j,
             {"tension_threshold", "target_entries", "max_candidates", "mode",
              "sampling", "seed", "threads", "settle_iterations", "settle_dt",
              "settle_drag"},
             "safety");
  get(j, "tension_threshold", s.tension_threshold);
  get(j, "target_entries", s.target_entries);
  get(j, "max_candidates", s.max_candidates);
  if (j.contains("mode")) {
    const std::string m = j.at("mode").get<std::string>();
    if (m == "settle") {
      s.mode = safety::ScreenMode::kSettle;
    } else if (m == "kinematic") {
      s.mode = safety::ScreenMode::kKinematic;
    } else {
      throw std::runtime_error("config: unknown screen mode '" + m + "'");
    }
  }
  if (j.contains("sampling")) {
    const std::string m = j.at("sampling").get<std::string>();
    if (m == "uniform") {
      s.sampling = safety::SamplingScheme::kUniform;
    } else if (m == "stratified") {
      s.sampling = safety::SamplingScheme::kStratified;
    } else {
      throw std::runtime_error("config: unknown sampling scheme '" + m + "'");
    }
  }
  get(j, "seed", s.seed);
  get(j, "threads", s.threads);
  get(j, "settle_iterations", s.settle_iterations);
  get(j, "settle_dt", s.settle_dt);
  get(j, "settle_drag", s.settle_drag);
}

}  // namespace

ProjectConfig load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& ex) {
    throw std::runtime_error("config parse error in " + path + ": " +
                             ex.what());
  }
  check_keys(j, {"robot", "env", "cost", "train", "safety", "eval"}, "root");
  ProjectConfig cfg;
  if (j.contains("robot")) parse_robot(j.at("robot"), cfg.robot);
  if (j.contains("env")) parse_env(j.at("env"), cfg.env);
  if (j.contains("cost")) parse_cost(j.at("cost"), cfg.cost);
  if (j.contains("train")) {
    parse_train(j.at("train"), cfg.train);
    cfg.train.cost = cfg.cost;
  }
  if (j.contains("safety")) parse_safety(j.at("safety"), cfg.safety);
  if (j.contains("eval")) {
    check_keys(j.at("eval"), {"trials", "duration"}, "eval");
    get(j.at("eval"), "trials", cfg.eval_trials);
    get(j.at("eval"), "duration", cfg.eval_duration);
  }
  cfg.train.cost = cfg.cost;
  return cfg;
}

void save(const ProjectConfig& cfg, const std::string& path) {
  json j;
  j["robot"] = {{"rod_length", cfg.robot.rod_length},
                {"rod_mass", cfg.robot.rod_mass},
                {"endcap_radius", cfg.robot.endcap_radius},
                {"spring_constant", cfg.robot.spring_constant},
                {"cable_damping", cfg.robot.cable_damping},
                {"pretension_force", cfg.robot.pretension_force},
                {"spool_radius", cfg.robot.spool_radius},
                {"motor_min", cfg.robot.motor_min},
                {"motor_max", cfg.robot.motor_max},
                {"motor_max_velocity", cfg.robot.motor_max_velocity},
                {"servo_gain", cfg.robot.servo_gain},
                {"motor_neutral", cfg.robot.motor_neutral}};
  json terrain;
  switch (cfg.env.terrain.kind()) {
    case TerrainKind::kFlat:
      terrain["kind"] = "flat";
      break;
    case TerrainKind::kHilly:
      terrain["kind"] = "hilly";
      break;
    case TerrainKind::kSlope:
      terrain["kind"] = "slope";
      break;
  }
  j["env"] = {
      {"terrain", terrain},
      {"gravity_scale", cfg.env.gravity_scale},
      {"noise",
       {{"gaussian_fraction", cfg.env.noise.gaussian_fraction},
        {"drop_probability", cfg.env.noise.drop_probability},
        {"motor_range", cfg.env.noise.motor_range},
        {"angle_range", cfg.env.noise.angle_range},
        {"angle_rate_range", cfg.env.noise.angle_rate_range},
        {"accel_range", cfg.env.noise.accel_range}}},
      {"variant", cfg.env.variant == RobotVariant::kNormal   ? "normal"
                  : cfg.env.variant == RobotVariant::kHeavy ? "heavy"
                                                            : "endcap_failure"},
      {"failed_endcap", cfg.env.failed_endcap},
      {"control_dt", cfg.env.control_dt},
      {"physics_substeps", cfg.env.physics_substeps},
      {"contact_stiffness", cfg.env.contact_stiffness},
      {"contact_damping", cfg.env.contact_damping},
      {"friction_mu", cfg.env.friction_mu},
      {"friction_smoothing", cfg.env.friction_smoothing}};
  j["cost"] = {{"heading_angle", cfg.cost.heading_angle},
               {"action_reg_weight", cfg.cost.action_reg_weight}};
  j["train"] = {
      {"initial_states", cfg.train.initial_states},
      {"segments", cfg.train.segments},
      {"segment_horizon", cfg.train.segment_horizon},
      {"episodes_per_policy", cfg.train.episodes_per_policy},
      {"iterations", cfg.train.iterations},
      {"on_policy_switch_iteration", cfg.train.on_policy_switch_iteration},
      {"gate_iterations", cfg.train.gate_iterations},
      {"gate_improvement_threshold", cfg.train.gate_improvement_threshold},
      {"epsilon", cfg.train.kl.epsilon},
      {"initial_policy_stddev", cfg.train.initial_policy_stddev},
      {"dynamics_pool_factor", cfg.train.dynamics_pool_factor},
      {"dynamics_ridge", cfg.train.dynamics_ridge},
      {"cost_state_reg", cfg.train.cost_state_reg},
      {"observation",
       cfg.train.observation == ObservationKind::kFull ? "full" : "limited"},
      {"trajopt_only", cfg.train.trajopt_only},
      {"seed", cfg.train.seed},
      {"threads", cfg.train.threads},
      {"save_traces", cfg.train.save_traces},
      {"snapshot_iteration", cfg.train.snapshot_iteration},
      {"learning_rate", cfg.train.optimizer.learning_rate},
      {"momentum", cfg.train.optimizer.momentum},
      {"batch_size", cfg.train.optimizer.batch_size},
      {"epochs", cfg.train.optimizer.epochs},
      {"plain_mse", cfg.train.optimizer.plain_mse}};
  j["safety"] = {
      {"tension_threshold", cfg.safety.tension_threshold},
      {"target_entries", cfg.safety.target_entries},
      {"max_candidates", cfg.safety.max_candidates},
      {"mode",
       cfg.safety.mode == safety::ScreenMode::kSettle ? "settle" : "kinematic"},
      {"sampling", cfg.safety.sampling == safety::SamplingScheme::kStratified
                       ? "stratified"
                       : "uniform"},
      {"seed", cfg.safety.seed},
      {"settle_iterations", cfg.safety.settle_iterations},
      {"settle_dt", cfg.safety.settle_dt},
      {"settle_drag", cfg.safety.settle_drag}};
  j["eval"] = {{"trials", cfg.eval_trials}, {"duration", cfg.eval_duration}};

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write config file " + path);
  out << j.dump(2) << "\n";
}

}  // namespace tenseg::config
