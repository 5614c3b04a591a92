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

#include <cstdio>
#include <filesystem>

#include "tenseg/harness.hpp"
#include "tenseg/io.hpp"
#include "tenseg/rng.hpp"

using namespace tenseg;
using namespace tenseg::harness;

namespace {

struct Fixture {
  TensegrityModel model;
  EnvConfig env;
  safety::SafeActionDB db;

  Fixture() : model(build_icosahedron_model(RobotConfig{})) {
    env.noise.gaussian_fraction = 0.10;
    env.noise.drop_probability = 0.10;
    safety::SafetyConfig scfg;
    scfg.target_entries = 20000;
    scfg.tension_threshold = 1300;
    scfg.mode = safety::ScreenMode::kSettle;
    scfg.sampling = safety::SamplingScheme::kStratified;
    scfg.seed = 5;
    db = safety::build_db(model, scfg);
  }
};

Fixture& fixture() {
  static Fixture fx;
  return fx;
}

}  // namespace

TEST_CASE("hand-engineered controller") {
  Fixture& fx = fixture();
  Simulator sim(fx.model, fx.env);

  SUBCASE("on a settled state exactly one motor leaves neutral") {
    HandEngineeredController hand(fx.model, Vec3(1, 0, 0));
    const RobotState s = sim.settle_on_face(fx.model.closed_faces[0]);
    const Action a = hand.step(s, fx.env.terrain);
    int off_neutral = 0;
    for (int j = 0; j < kNumMotors; ++j) {
      if (a.motor_target[j] != fx.model.motor_neutral) ++off_neutral;
    }
    CHECK(off_neutral == 1);
  }
  SUBCASE("60 s on flat ground produces at least 5 face transitions") {
    HandEngineeredController hand(fx.model, Vec3(1, 0, 0));
    RobotState s = sim.settle_on_face(fx.model.closed_faces[0]);
    for (int t = 0; t < 600; ++t) {
      const Action a = hand.step(s, fx.env.terrain);
      const Vec12 projected =
          fx.db.project(fx.model.clamp_motors(a.motor_target));
      s = sim.step(s, Action{projected});
    }
    CHECK(hand.transition_count() >= 5);
  }
  SUBCASE("airborne: the previous command is held") {
    HandEngineeredController hand(fx.model, Vec3(1, 0, 0));
    RobotState s = sim.settle_on_face(fx.model.closed_faces[0]);
    const Action ground_cmd = hand.step(s, fx.env.terrain);
    s.endpoint_position.row(2).array() += 1.0;  // lift off
    const Action air_cmd = hand.step(s, fx.env.terrain);
    CHECK((air_cmd.motor_target - ground_cmd.motor_target)
              .cwiseAbs()
              .maxCoeff() == 0.0);
  }
}

TEST_CASE("evaluate") {
  Fixture& fx = fixture();

  SUBCASE("zero-action controller drifts less than 0.1 m") {
    EvalSpec spec;
    spec.controller = ControllerKind::kZeroAction;
    spec.env = fx.env;
    spec.trials = 2;
    spec.duration = 10.0;
    const EvalResult r = evaluate(spec, fx.model, fx.db, 17);
    CHECK(r.mean_absolute < 0.1);
  }
  SUBCASE("identical seed and spec give identical results") {
    EvalSpec spec;
    spec.controller = ControllerKind::kHandEngineered;
    spec.env = fx.env;
    spec.trials = 2;
    spec.duration = 5.0;
    const EvalResult a = evaluate(spec, fx.model, fx.db, 21);
    const EvalResult b = evaluate(spec, fx.model, fx.db, 21);
    CHECK((a.absolute_distance - b.absolute_distance).cwiseAbs().maxCoeff() ==
          0.0);
    CHECK((a.path_length - b.path_length).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("straight-line distance never exceeds path length") {
    EvalSpec spec;
    spec.controller = ControllerKind::kHandEngineered;
    spec.env = fx.env;
    spec.trials = 3;
    spec.duration = 8.0;
    const EvalResult r = evaluate(spec, fx.model, fx.db, 23);
    for (int i = 0; i < r.absolute_distance.size(); ++i) {
      CHECK(r.absolute_distance[i] <= r.path_length[i] + 1e-9);
    }
  }
  SUBCASE("every executed action passes the tension screen (post hoc audit)") {
    EvalSpec spec;
    spec.controller = ControllerKind::kHandEngineered;
    spec.env = fx.env;
    spec.trials = 1;
    spec.duration = 5.0;
    std::vector<Episode> traces;
    evaluate(spec, fx.model, fx.db, 29, &traces);
    REQUIRE(traces.size() == 1);
    for (int t = 0; t < traces[0].steps_completed; ++t) {
      const Vec12 u = traces[0].actions.row(t).transpose();
      CHECK(safety::screen_max_tension(fx.model, u, fx.db.mode(),
                                       fx.db.config()) <=
            fx.db.tension_threshold() * (1 + 1e-12));
    }
  }
}

TEST_CASE("gait playback") {
  Fixture& fx = fixture();

  GaitPlayback p;
  p.period = 7;
  p.source_steps = 70;
  p.actions = MatX::Random(7, kActionDim).cwiseAbs() * 2.0;

  SUBCASE("playback is periodic by construction") {
    for (int t = 0; t < 21; ++t) {
      CHECK((p.at(t) - p.at(t + p.period)).cwiseAbs().maxCoeff() == 0.0);
    }
  }
  SUBCASE("file round-trip") {
    save_playback(p, "/tmp/tenseg_playback_test.txt");
    const GaitPlayback q = load_playback("/tmp/tenseg_playback_test.txt");
    CHECK(q.period == p.period);
    CHECK(q.source_steps == p.source_steps);
    CHECK((q.actions - p.actions).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("extraction from a policy rollout yields a sane period") {
    const nn::NeuralPolicy net = nn::make_policy(ObservationKind::kLimited, 3);
    const GaitPlayback g =
        extract_gait_playback(net, fx.model, fx.db, fx.env, 31, 200);
    CHECK(g.period >= 1);
    CHECK(g.actions.rows() == g.period);
    CHECK(g.actions.allFinite());
  }
}

TEST_CASE("condition grid") {
  Fixture& fx = fixture();
  const auto conditions = default_grid(fx.env, 99);
  REQUIRE(conditions.size() == 11);  // normal + 10 conditions

  // A quick playback column plus the hand-engineered column.
  GaitPlayback p;
  p.period = 5;
  p.source_steps = 50;
  p.actions = MatX::Zero(5, kActionDim);
  save_playback(p, "/tmp/tenseg_grid_playback.txt");
  const std::vector<GridControllerSpec> columns = {
      {"open-loop mean", ControllerKind::kOpenLoopMean,
       "/tmp/tenseg_grid_playback.txt"},
      {"hand-engineered", ControllerKind::kHandEngineered, ""},
  };
  const GridResult result = run_condition_grid(
      columns, conditions, fx.model, fx.db, CostConfig{}, 1, 3.0, 7);

  SUBCASE("noise rows are N/A for open-loop controllers") {
    int na_cells = 0;
    for (std::size_t r = 0; r < conditions.size(); ++r) {
      for (std::size_t c = 0; c < columns.size(); ++c) {
        if (!result.cells[r][c].applicable) {
          ++na_cells;
          CHECK(conditions[r].noise_condition);
        }
      }
    }
    CHECK(na_cells == 4);  // 2 noise rows x 2 open-loop columns
  }
  SUBCASE("all applicable cells completed") {
    for (const auto& row : result.cells) {
      for (const auto& cell : row) {
        if (cell.applicable) CHECK(!cell.failed);
      }
    }
  }
  SUBCASE("the grid is reproducible bit for bit") {
    const GridResult again = run_condition_grid(
        columns, conditions, fx.model, fx.db, CostConfig{}, 1, 3.0, 7);
    for (std::size_t r = 0; r < conditions.size(); ++r) {
      for (std::size_t c = 0; c < columns.size(); ++c) {
        if (!result.cells[r][c].applicable) continue;
        CHECK(again.cells[r][c].result.mean_absolute ==
              result.cells[r][c].result.mean_absolute);
      }
    }
  }
  SUBCASE("table and JSON render without error") {
    const std::string table = result.table();
    CHECK(table.find("N/A") != std::string::npos);
    result.save_json("/tmp/tenseg_grid_test.json");
    CHECK(std::filesystem::exists("/tmp/tenseg_grid_test.json"));
  }
}

TEST_CASE("sequential-vs-single experiment runs end to end") {
  Fixture& fx = fixture();
  SeqCmpConfig cfg;
  cfg.base.segment_horizon = 10;
  cfg.base.episodes_per_policy = 4;
  cfg.base.iterations = 3;
  cfg.base.initial_policy_stddev = 1.0;
  cfg.base.kl.epsilon = 3.0;
  cfg.base.threads = 2;
  cfg.trials = 2;
  cfg.eval_duration = 2.0;
  cfg.seeds = {11};
  cfg.out_dir = "/tmp/tenseg_seqcmp_test";
  const SeqCmpResult r =
      sequential_vs_single_experiment(cfg, fx.model, fx.env, fx.db);
  CHECK(r.sequential_by_seed.size() == 1);
  CHECK(r.single_by_seed.size() == 1);
  CHECK(std::isfinite(r.sequential_mean));
  CHECK(std::isfinite(r.single_mean));
  r.save_json("/tmp/tenseg_seqcmp_test/seqcmp.json");
  CHECK(std::filesystem::exists("/tmp/tenseg_seqcmp_test/seqcmp.json"));
  const std::string table = r.table();
  CHECK(table.find("sequential") != std::string::npos);
}

TEST_CASE("episode traces round-trip through the text format") {
  Fixture& fx = fixture();
  EvalSpec spec;
  spec.controller = ControllerKind::kHandEngineered;
  spec.env = fx.env;
  spec.trials = 1;
  spec.duration = 2.0;
  std::vector<Episode> traces;
  evaluate(spec, fx.model, fx.db, 41, &traces);
  REQUIRE(traces.size() == 1);
  io::save_trace(traces[0], "/tmp/tenseg_trace_test.trace");
  const Episode back = io::load_trace("/tmp/tenseg_trace_test.trace");
  CHECK(back.steps_completed == traces[0].steps_completed);
  CHECK((back.states - traces[0].states).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((back.actions - traces[0].actions).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((back.costs - traces[0].costs).cwiseAbs().maxCoeff() < 1e-12);
}
