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

#include "tenseg/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "tenseg/io.hpp"
#include "tenseg/parallel.hpp"
#include "tenseg/rng.hpp"

namespace tenseg::harness {

namespace {

Scalar mean_of(const VecX& v) { return v.size() ? v.mean() : 0.0; }

Scalar std_of(const VecX& v) {
  if (v.size() < 2) return 0.0;
  const Scalar m = v.mean();
  return std::sqrt((v.array() - m).square().sum() / (v.size() - 1));
}

// Swirl of the rods around the vertical through the face centroid; the tip
// direction of a face-edge contraction is the ccw edge traversal times this
// handedness (calibrated against recorded tipping episodes).
Scalar face_chirality(const TensegrityModel& model, const RobotState& state,
                      const GroundFace& face) {
  Vec3 centroid = Vec3::Zero();
  for (int v : face.endpoint_ids) {
    centroid += state.endpoint_position.col(v) / 3.0;
  }
  Scalar swirl = 0;
  for (int v : face.endpoint_ids) {
    const int partner = TensegrityModel::rod_partner(v);
    const Vec3 radial = state.endpoint_position.col(v) - centroid;
    const Vec3 tangent = Vec3::UnitZ().cross(radial);
    swirl += (state.endpoint_position.col(partner) -
              state.endpoint_position.col(v))
                 .dot(tangent);
  }
  (void)model;
  return swirl > 0 ? 1.0 : -1.0;
}

Vec2 ground(const Vec3& v) { return Vec2(v.x(), v.y()); }

}  // namespace

HandEngineeredController::HandEngineeredController(
    const TensegrityModel& model, const Vec3& heading)
    : model_(model), heading_(heading) {
  previous_.motor_target.setConstant(model.motor_neutral);
}

void HandEngineeredController::reset() {
  previous_.motor_target.setConstant(model_.motor_neutral);
  committed_face_ = -1;
  active_motor_ = -1;
  steps_committed_ = 0;
  transitions_ = 0;
  tried_.clear();
}

int HandEngineeredController::pick_cable(const GroundFace& face,
                                         const RobotState& state) const {
  Vec3 centroid = Vec3::Zero();
  for (int v : face.endpoint_ids) {
    centroid += state.endpoint_position.col(v) / 3.0;
  }
  const Scalar chirality = face_chirality(model_, state, face);
  const Vec2 want = ground(heading_).normalized();

  int best = -1;
  Scalar best_score = -2.0;
  for (int motor = 0; motor < kNumMotors; ++motor) {
    const int c = model_.actuated_cable[motor];
    if (std::count(tried_.begin(), tried_.end(), motor)) continue;
    const int a = model_.cables[c][0];
    const int b = model_.cables[c][1];
    const auto& ids = face.endpoint_ids;
    const bool a_on = std::count(ids.begin(), ids.end(), a) > 0;
    const bool b_on = std::count(ids.begin(), ids.end(), b) > 0;
    Scalar score;
    if (a_on && b_on) {
      // Face edge: predicted tip direction is the ccw traversal (seen from
      // above) scaled by the face handedness.
      const Vec3 pa = state.endpoint_position.col(a);
      const Vec3 pb = state.endpoint_position.col(b);
      Vec2 edge = ground(pb - pa);
      const Vec2 out = ground(0.5 * (pa + pb) - centroid);
      if (edge.x() * out.y() - edge.y() * out.x() > 0) edge = -edge;
      score = chirality * edge.normalized().dot(want);
    } else if (a_on || b_on) {
      // Fallback for faces without an actuated edge: shrink toward the far
      // endpoint, weakly scored so edges always win when available.
      const int host = model_.cable_host[c];
      const int other = host == a ? b : a;
      const Vec2 pull = ground(state.endpoint_position.col(other) -
                               state.endpoint_position.col(host));
      score = 0.1 * pull.normalized().dot(want) - 0.5;
    } else {
      continue;
    }
    if (score > best_score) {
      best_score = score;
      best = motor;
    }
  }
  return best;
}

Action HandEngineeredController::step(const RobotState& state,
                                      const Terrain& terrain) {
  const auto face = ground_face(model_, state, terrain);
  if (!face) return previous_;  // airborne or mid-tip: hold

  if (face->face_id != committed_face_) {
    if (committed_face_ != -1) ++transitions_;
    committed_face_ = face->face_id;
    tried_.clear();
    active_motor_ = pick_cable(*face, state);
    steps_committed_ = 0;
  } else if (active_motor_ >= 0 && steps_committed_ > 45) {
    // The contraction has not tipped us; release and try the next option.
    tried_.push_back(active_motor_);
    if (static_cast<int>(tried_.size()) >= kNumMotors) tried_.clear();
    active_motor_ = pick_cable(*face, state);
    steps_committed_ = 0;
  }
  ++steps_committed_;

  Action out;
  out.motor_target.setConstant(model_.motor_neutral);
  if (active_motor_ >= 0) {
    out.motor_target[active_motor_] = model_.motor_max;
  }
  previous_ = out;
  return out;
}

EvalResult evaluate(const EvalSpec& spec, const TensegrityModel& model,
                    const safety::SafeActionDB& db, std::uint64_t seed,
                    std::vector<Episode>* episodes_out) {
  if (spec.trials < 1) throw std::invalid_argument("evaluate: trials < 1");
  const int steps = static_cast<int>(std::llround(
      spec.duration / spec.env.control_dt));
  if (steps < 1) throw std::invalid_argument("evaluate: duration too short");

  nn::NeuralPolicy learned;
  GaitPlayback playback;
  if (spec.controller == ControllerKind::kLearned) {
    learned = nn::load_neural_policy(spec.checkpoint);
  } else if (spec.controller == ControllerKind::kOpenLoopMean) {
    playback = load_playback(spec.playback);
  }

  const Simulator sim(model, spec.env);
  const RobotState initial = sim.settle_on_face(model.closed_faces[0]);

  EvalResult res;
  res.heading_distance.resize(spec.trials);
  res.absolute_distance.resize(spec.trials);
  res.path_length.resize(spec.trials);

  for (int trial = 0; trial < spec.trials; ++trial) {
    SensorPipeline pipeline(model, spec.env,
                            spec.controller == ControllerKind::kLearned
                                ? learned.kind
                                : ObservationKind::kLimited,
                            make_stream(seed, 0xE7A2, trial)());
    HandEngineeredController hand(model, spec.cost.heading());

    Episode trace;
    trace.chain = trial;
    trace.obs_kind = spec.controller == ControllerKind::kLearned
                         ? learned.kind
                         : ObservationKind::kLimited;
    trace.seed = seed;
    trace.states = MatX::Zero(steps + 1, kStateDim);
    trace.observations =
        MatX::Zero(steps, observation_dim(trace.obs_kind));
    trace.actions = MatX::Zero(steps, kActionDim);
    trace.costs = VecX::Zero(steps);
    trace.initial_prev_action = initial.motor_position;

    RobotState s = initial;
    trace.states.row(0) = s.to_vector().transpose();
    Vec12 prev_action = initial.motor_position;
    const Vec2 start = ground(s.com());
    Vec2 last = start;
    Scalar path = 0;

    for (int t = 0; t < steps; ++t) {
      const Observation obs = pipeline.next(s);
      Vec12 u;
      switch (spec.controller) {
        case ControllerKind::kLearned:
          u = learned.forward(obs.values);
          break;
        case ControllerKind::kOpenLoopMean:
          u = playback.at(t);
          break;
        case ControllerKind::kHandEngineered:
          u = hand.step(s, spec.env.terrain).motor_target;
          break;
        case ControllerKind::kZeroAction:
          u.setConstant(model.motor_neutral);
          break;
      }
      const Vec12 projected = db.project(model.clamp_motors(u));
      try {
        const RobotState next = sim.step(s, Action{projected});
        trace.observations.row(t) = obs.values.transpose();
        trace.actions.row(t) = projected.transpose();
        trace.costs[t] =
            step_cost(next, Action{projected}, prev_action, spec.cost);
        trace.states.row(t + 1) = next.to_vector().transpose();
        prev_action = projected;
        s = next;
        trace.steps_completed = t + 1;
        const Vec2 now = ground(s.com());
        path += (now - last).norm();
        last = now;
      } catch (const SimulationDivergedError&) {
        trace.failed = true;
        break;
      }
    }
    const Vec2 end = ground(s.com());
    res.heading_distance[trial] = (end - start).dot(ground(spec.cost.heading()).normalized());
    res.absolute_distance[trial] = (end - start).norm();
    res.path_length[trial] = path;
    if (episodes_out) episodes_out->push_back(std::move(trace));
  }
  res.mean_absolute = mean_of(res.absolute_distance);
  res.std_absolute = std_of(res.absolute_distance);
  res.mean_heading = mean_of(res.heading_distance);
  res.std_heading = std_of(res.heading_distance);
  return res;
}

GaitPlayback extract_gait_playback(const nn::NeuralPolicy& policy,
                                   const TensegrityModel& model,
                                   const safety::SafeActionDB& db,
                                   const EnvConfig& env, std::uint64_t seed,
                                   int record_steps) {
  const Simulator sim(model, env);
  RobotState s = sim.settle_on_face(model.closed_faces[0]);
  SensorPipeline pipeline(model, env, policy.kind,
                          make_stream(seed, 0x61A1)());

  MatX actions(record_steps, kActionDim);
  std::vector<int> transition_at;
  int last_face = -1;
  int completed = 0;
  for (int t = 0; t < record_steps; ++t) {
    const Observation obs = pipeline.next(s);
    const Vec12 u = db.project(model.clamp_motors(policy.forward(obs.values)));
    actions.row(t) = u.transpose();
    try {
      s = sim.step(s, Action{u});
    } catch (const SimulationDivergedError&) {
      break;
    }
    completed = t + 1;
    const auto face = ground_face(model, s, env.terrain);
    if (face && face->face_id != last_face) {
      if (last_face != -1) transition_at.push_back(t);
      last_face = face->face_id;
    }
  }

  // Dominant period of the transition events by autocorrelation.
  int period = 30;  // fallback: 3 s
  if (transition_at.size() >= 3) {
    VecX events = VecX::Zero(completed);
    for (int t : transition_at) events[t] = 1.0;
    Scalar best = -1;
    for (int lag = 8; lag <= completed / 2; ++lag) {
      Scalar r = 0;
      for (int t = 0; t + lag < completed; ++t) {
        r += events[t] * events[t + lag];
      }
      if (r > best) {
        best = r;
        period = lag;
      }
    }
  }

  GaitPlayback out;
  out.period = period;
  out.source_steps = completed;
  out.actions = MatX::Zero(period, kActionDim);
  const int start = transition_at.empty() ? 0 : transition_at.front();
  const int cycles = std::max(1, (completed - start) / period);
  for (int phase = 0; phase < period; ++phase) {
    Vec12 mean = Vec12::Zero();
    int n = 0;
    for (int k = 0; k < cycles; ++k) {
      const int t = start + k * period + phase;
      if (t < completed) {
        mean += actions.row(t).transpose();
        ++n;
      }
    }
    out.actions.row(phase) = (mean / std::max(n, 1)).transpose();
  }
  return out;
}

void save_playback(const GaitPlayback& playback, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open playback file " + path);
  out << "tenseg-playback v1\n";
  out << "period " << playback.period << "\n";
  out << "source_steps " << playback.source_steps << "\n";
  for (int t = 0; t < playback.actions.rows(); ++t) {
    for (int j = 0; j < kActionDim; ++j) {
      out << (j ? " " : "") << io::format_scalar(playback.actions(t, j));
    }
    out << "\n";
  }
}

GaitPlayback load_playback(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open playback file " + path);
  std::string header;
  std::getline(in, header);
  if (header != "tenseg-playback v1") {
    throw std::runtime_error("unrecognized playback file " + path);
  }
  GaitPlayback p;
  std::string key;
  in >> key >> p.period;
  in >> key >> p.source_steps;
  if (!in || p.period < 1) {
    throw std::runtime_error("corrupt playback file " + path);
  }
  p.actions.resize(p.period, kActionDim);
  for (int t = 0; t < p.period; ++t) {
    for (int j = 0; j < kActionDim; ++j) in >> p.actions(t, j);
  }
  if (!in) throw std::runtime_error("corrupt playback file " + path);
  return p;
}

std::vector<GridCondition> default_grid(const EnvConfig& training_env,
                                        std::uint64_t terrain_seed) {
  std::vector<GridCondition> grid;
  auto add = [&](const std::string& name, EnvConfig env,
                 bool noise_row = false) {
    grid.push_back({name, std::move(env), noise_row});
  };
  add("normal", training_env);
  {
    EnvConfig e = training_env;
    e.terrain = Terrain::hilly(0.1, terrain_seed);
    add("hilly 0.1 m", e);
  }
  {
    EnvConfig e = training_env;
    e.terrain = Terrain::slope(0.1, Vec2(1, 0));
    add("uphill 0.1 rad", e);
  }
  {
    EnvConfig e = training_env;
    e.terrain = Terrain::slope(-0.1, Vec2(1, 0));
    add("downhill 0.1 rad", e);
  }
  for (Scalar g : {0.1, 0.5, 2.0}) {
    EnvConfig e = training_env;
    e.gravity_scale = g;
    std::ostringstream name;
    name << "gravity " << g << "x";
    add(name.str(), e);
  }
  {
    EnvConfig e = training_env;
    e.variant = RobotVariant::kHeavy;
    add("heavy robot", e);
  }
  {
    EnvConfig e = training_env;
    e.variant = RobotVariant::kEndcapFailure;
    e.failed_endcap = 0;
    add("endcap failure", e);
  }
  {
    EnvConfig e = training_env;
    e.noise.gaussian_fraction = 0.0;
    e.noise.drop_probability = 0.0;
    add("noise 0%", e, true);
  }
  {
    EnvConfig e = training_env;
    e.noise.gaussian_fraction = 0.20;
    e.noise.drop_probability = 0.20;
    add("noise 20%", e, true);
  }
  return grid;
}

GridResult run_condition_grid(const std::vector<GridControllerSpec>& columns,
                              const std::vector<GridCondition>& grid,
                              const TensegrityModel& model,
                              const safety::SafeActionDB& db,
                              const CostConfig& cost, int trials,
                              Scalar duration, std::uint64_t seed) {
  GridResult result;
  for (const auto& c : columns) result.controller_names.push_back(c.name);
  for (const auto& g : grid) result.condition_names.push_back(g.name);
  result.cells.assign(grid.size(),
                      std::vector<GridCell>(columns.size(), GridCell{}));

  struct Task {
    int row, col;
  };
  std::vector<Task> tasks;
  for (std::size_t r = 0; r < grid.size(); ++r) {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      const bool open_loop =
          columns[c].kind == ControllerKind::kOpenLoopMean ||
          columns[c].kind == ControllerKind::kHandEngineered;
      if (grid[r].noise_condition && open_loop) {
        result.cells[r][c].applicable = false;  // no input to perturb
        continue;
      }
      tasks.push_back({static_cast<int>(r), static_cast<int>(c)});
    }
  }
  parallel_for(static_cast<int>(tasks.size()), hardware_threads(),
               [&](int i) {
                 const Task& task = tasks[static_cast<std::size_t>(i)];
                 const GridControllerSpec& ctrl =
                     columns[static_cast<std::size_t>(task.col)];
                 EvalSpec spec;
                 spec.controller = ctrl.kind;
                 spec.checkpoint = ctrl.checkpoint;
                 spec.playback = ctrl.checkpoint;
                 spec.env = grid[static_cast<std::size_t>(task.row)].env;
                 spec.cost = cost;
                 spec.trials = trials;
                 spec.duration = duration;
                 GridCell& cell = result.cells[static_cast<std::size_t>(
                     task.row)][static_cast<std::size_t>(task.col)];
                 try {
                   cell.result = evaluate(
                       spec, model, db,
                       make_stream(seed, 0x9D1D, task.row, task.col)());
                 } catch (const std::exception& ex) {
                   cell.failed = true;
                   cell.error = ex.what();
                 }
               });
  return result;
}

std::string GridResult::table() const {
  std::ostringstream out;
  std::size_t name_width = 12;
  for (const auto& n : condition_names) {
    name_width = std::max(name_width, n.size());
  }
  out << std::string(name_width, ' ');
  for (const auto& c : controller_names) {
    out << " | " << c;
  }
  out << "\n";
  out << std::string(name_width, '-');
  for (const auto& c : controller_names) {
    out << "-+-" << std::string(c.size(), '-');
  }
  out << "\n";
  for (std::size_t r = 0; r < condition_names.size(); ++r) {
    out << condition_names[r]
        << std::string(name_width - condition_names[r].size(), ' ');
    for (std::size_t c = 0; c < controller_names.size(); ++c) {
      const GridCell& cell = cells[r][c];
      std::ostringstream val;
      if (!cell.applicable) {
        val << "N/A";
      } else if (cell.failed) {
        val << "FAILED";
      } else {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.3f+-%.3f",
                      cell.result.mean_absolute, cell.result.std_absolute);
        val << buf;
      }
      std::string v = val.str();
      const std::size_t w = controller_names[c].size();
      if (v.size() < w) v += std::string(w - v.size(), ' ');
      out << " | " << v;
    }
    out << "\n";
  }
  return out.str();
}

void GridResult::save_json(const std::string& path) const {
  nlohmann::json j;
  j["controllers"] = controller_names;
  j["conditions"] = condition_names;
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t r = 0; r < condition_names.size(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t c = 0; c < controller_names.size(); ++c) {
      const GridCell& cell = cells[r][c];
      nlohmann::json jc;
      jc["applicable"] = cell.applicable;
      jc["failed"] = cell.failed;
      if (cell.failed) jc["error"] = cell.error;
      if (cell.applicable && !cell.failed) {
        jc["mean_absolute"] = cell.result.mean_absolute;
        jc["std_absolute"] = cell.result.std_absolute;
        jc["mean_heading"] = cell.result.mean_heading;
        jc["std_heading"] = cell.result.std_heading;
        jc["trials_absolute"] = std::vector<Scalar>(
            cell.result.absolute_distance.data(),
            cell.result.absolute_distance.data() +
                cell.result.absolute_distance.size());
      }
      row.push_back(jc);
    }
    rows.push_back(row);
  }
  j["cells"] = rows;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open grid result file " + path);
  out << j.dump(2) << "\n";
}

namespace {

// Rolls the trained chain of local policies with exploration noise.
Scalar chained_rollout_distance(const mdgps::TrainState& state,
                                const Simulator& sim,
                                const safety::SafeActionDB& db, int steps,
                                std::mt19937_64& rng) {
  RobotState s = state.initial_states[0];
  const Vec2 start = ground(s.com());
  const int H = state.horizon;
  for (int t = 0; t < steps; ++t) {
    const int segment = std::min(t / H, state.L - 1);
    const int within = std::min(t % H, H - 1);
    const auto& pol = state.locals[static_cast<std::size_t>(segment)];
    const Vec12 u = pol.sample_action(within, s.to_vector(), rng);
    const Vec12 projected = db.project(sim.model().clamp_motors(u));
    try {
      s = sim.step(s, Action{projected});
    } catch (const SimulationDivergedError&) {
      break;
    }
  }
  return (ground(s.com()) - start).norm();
}

int episodes_to_stabilize(const std::vector<mdgps::IterationLog>& logs,
                          int policy_index, int episodes_per_iteration) {
  std::vector<Scalar> history;
  for (const auto& log : logs) {
    const auto& p = log.policies[static_cast<std::size_t>(policy_index)];
    if (p.episodes_used > 0) history.push_back(p.mean_cost);
    std::vector<Scalar> tail = history;
    if (mdgps::stability_gate_check(tail, 3, 0.10)) {
      return static_cast<int>(history.size()) * episodes_per_iteration;
    }
  }
  return static_cast<int>(history.size()) * episodes_per_iteration;
}

}  // namespace

SeqCmpResult sequential_vs_single_experiment(const SeqCmpConfig& cfg,
                                             const TensegrityModel& model,
                                             const EnvConfig& env,
                                             const safety::SafeActionDB& db) {
  if (cfg.seeds.empty()) {
    throw std::invalid_argument("seqcmp: need at least one seed");
  }
  const int n_seeds = static_cast<int>(cfg.seeds.size());
  SeqCmpResult res;
  res.sequential_by_seed.resize(n_seeds);
  res.single_by_seed.resize(n_seeds);
  res.sequential_episodes_to_stabilize.resize(n_seeds);
  res.single_episodes_to_stabilize.resize(n_seeds);

  const Simulator sim(model, env);
  const int eval_steps =
      static_cast<int>(std::llround(cfg.eval_duration / env.control_dt));

  for (int i = 0; i < n_seeds; ++i) {
    const std::uint64_t seed = cfg.seeds[static_cast<std::size_t>(i)];

    mdgps::TrainConfig seq = cfg.base;
    seq.initial_states = 1;
    seq.segments = 2;
    seq.trajopt_only = true;
    seq.seed = seed;
    mdgps::TrainConfig single = cfg.base;
    single.initial_states = 1;
    single.segments = 1;
    single.segment_horizon = 2 * cfg.base.segment_horizon;
    single.trajopt_only = true;
    single.seed = seed;

    const std::string tag = "/seed" + std::to_string(i);
    const mdgps::TrainResult a = mdgps::run_training(
        seq, model, env, db, cfg.out_dir + tag + "_sequential");
    const mdgps::TrainResult b = mdgps::run_training(
        single, model, env, db, cfg.out_dir + tag + "_single");

    VecX da(cfg.trials), db_(cfg.trials);
    for (int trial = 0; trial < cfg.trials; ++trial) {
      std::mt19937_64 rng_a = make_stream(seed, 0x5EC, trial);
      std::mt19937_64 rng_b = make_stream(seed, 0x51C, trial);
      da[trial] = chained_rollout_distance(a.state, sim, db, eval_steps, rng_a);
      db_[trial] =
          chained_rollout_distance(b.state, sim, db, eval_steps, rng_b);
    }
    res.sequential_by_seed[i] = da.mean();
    res.single_by_seed[i] = db_.mean();
    // Stabilization accounting: the last-trained policy's cost history, in
    // chain passes (equal simulated time across the two arms).
    res.sequential_episodes_to_stabilize[static_cast<std::size_t>(i)] =
        episodes_to_stabilize(a.logs, a.state.index(0, 1),
                              seq.episodes_per_policy) *
        seq.segments;
    res.single_episodes_to_stabilize[static_cast<std::size_t>(i)] =
        episodes_to_stabilize(b.logs, 0, single.episodes_per_policy);
  }
  res.sequential_mean = res.sequential_by_seed.mean();
  res.single_mean = res.single_by_seed.mean();
  res.episodes_per_arm =
      cfg.base.iterations * cfg.base.episodes_per_policy;
  return res;
}

std::string SeqCmpResult::table() const {
  std::ostringstream out;
  out << "                      | two 5 s policies, sequential | one 10 s policy\n";
  out << "----------------------+------------------------------+----------------\n";
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "mean distance (m)     | %-28.3f | %.3f\n", sequential_mean,
                single_mean);
  out << buf;
  for (int i = 0; i < sequential_by_seed.size(); ++i) {
    std::snprintf(buf, sizeof(buf),
                  "  seed %-2d distance    | %-28.3f | %.3f\n", i,
                  sequential_by_seed[i], single_by_seed[i]);
    out << buf;
  }
  for (std::size_t i = 0; i < sequential_episodes_to_stabilize.size(); ++i) {
    std::snprintf(buf, sizeof(buf),
                  "  seed %-2zu eps-to-stab | %-28d | %d\n", i,
                  sequential_episodes_to_stabilize[i],
                  single_episodes_to_stabilize[i]);
    out << buf;
  }
  return out.str();
}

void SeqCmpResult::save_json(const std::string& path) const {
  nlohmann::json j;
  j["sequential_mean"] = sequential_mean;
  j["single_mean"] = single_mean;
  j["sequential_by_seed"] = std::vector<Scalar>(
      sequential_by_seed.data(),
      sequential_by_seed.data() + sequential_by_seed.size());
  j["single_by_seed"] = std::vector<Scalar>(
      single_by_seed.data(), single_by_seed.data() + single_by_seed.size());
  j["sequential_episodes_to_stabilize"] = sequential_episodes_to_stabilize;
  j["single_episodes_to_stabilize"] = single_episodes_to_stabilize;
  j["episodes_per_arm"] = episodes_per_arm;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open seqcmp result file " + path);
  out << j.dump(2) << "\n";
}

}  // namespace tenseg::harness
