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

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>

#include "tenseg/config.hpp"
#include "tenseg/harness.hpp"
#include "tenseg/io.hpp"
#include "tenseg/mdgps.hpp"
#include "tenseg/rng.hpp"

using namespace tenseg;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir = "runs/latest";
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 0;
};

config::ProjectConfig load_config(const CommonArgs& args) {
  config::ProjectConfig cfg;
  if (!args.config_path.empty()) cfg = config::load(args.config_path);
  if (args.seed_set) {
    cfg.train.seed = args.seed;
    cfg.safety.seed = args.seed;
  }
  if (args.threads > 0) {
    cfg.train.threads = args.threads;
    cfg.safety.threads = args.threads;
  }
  return cfg;
}

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "JSON config file");
  cmd->add_option("--out-dir", args.out_dir, "output directory");
  auto* seed = cmd->add_option("--seed", args.seed, "master seed override");
  seed->each([&args](const std::string&) { args.seed_set = true; });
  cmd->add_option("--threads", args.threads, "worker threads (0 = all)");
}

// The safety DB is built once per (model, safety config) and cached.
safety::SafeActionDB obtain_db(const config::ProjectConfig& cfg,
                               const TensegrityModel& model,
                               const std::string& db_path) {
  if (!db_path.empty() && std::filesystem::exists(db_path)) {
    safety::SafeActionDB db = safety::SafeActionDB::load(db_path);
    if (db.model_hash() != model.content_hash()) {
      throw std::runtime_error("safety DB at " + db_path +
                               " was built for a different model");
    }
    std::printf("loaded safety DB: %lld entries (threshold %.0f N)\n",
                static_cast<long long>(db.size()), db.tension_threshold());
    return db;
  }
  std::printf("building safety DB (%d entries)...\n",
              cfg.safety.target_entries);
  safety::SafeActionDB db = safety::build_db(model, cfg.safety);
  std::printf("built %lld entries, acceptance rate %.3f\n",
              static_cast<long long>(db.size()), db.acceptance_rate());
  if (!db_path.empty()) {
    io::ensure_dir(std::filesystem::path(db_path).parent_path().string());
    db.save(db_path);
  }
  return db;
}

harness::ControllerKind parse_controller(const std::string& name) {
  if (name == "learned") return harness::ControllerKind::kLearned;
  if (name == "open-loop") return harness::ControllerKind::kOpenLoopMean;
  if (name == "hand-engineered") {
    return harness::ControllerKind::kHandEngineered;
  }
  if (name == "zero") return harness::ControllerKind::kZeroAction;
  throw CLI::ValidationError("controller must be one of learned, open-loop, "
                             "hand-engineered, zero");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"six-strut tensegrity gait learning and evaluation"};
  app.require_subcommand(1);

  CommonArgs train_args, eval_args, grid_args, sbuild_args, saudit_args,
      seqcmp_args, replay_args;

  // train
  auto* train = app.add_subcommand("train", "run the full training loop");
  add_common(train, train_args);
  std::string train_db;
  train->add_option("--db", train_db, "safety DB file (built if missing)");

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate a controller");
  add_common(eval, eval_args);
  std::string eval_controller = "learned", eval_ckpt, eval_playback,
              eval_db, eval_traces;
  int eval_trials = -1;
  double eval_duration = -1;
  eval->add_option("--controller", eval_controller,
                   "learned | open-loop | hand-engineered | zero");
  eval->add_option("--checkpoint", eval_ckpt, "neural policy checkpoint");
  eval->add_option("--playback", eval_playback, "gait playback file");
  eval->add_option("--db", eval_db, "safety DB file");
  eval->add_option("--trials", eval_trials, "trial count");
  eval->add_option("--duration", eval_duration, "trial duration, seconds");
  eval->add_option("--traces", eval_traces, "directory for episode traces");

  // grid
  auto* grid = app.add_subcommand(
      "grid", "run the condition grid over the standard controllers");
  add_common(grid, grid_args);
  std::vector<std::string> grid_learned;
  std::string grid_playback, grid_db;
  int grid_trials = -1;
  double grid_duration = -1;
  grid->add_option("--learned", grid_learned,
                   "name=checkpoint pairs, repeatable");
  grid->add_option("--playback", grid_playback, "gait playback file");
  grid->add_option("--db", grid_db, "safety DB file");
  grid->add_option("--trials", grid_trials, "trials per cell");
  grid->add_option("--duration", grid_duration, "seconds per trial");

  // safety-build / safety-audit
  auto* sbuild = app.add_subcommand("safety-build", "build the safe-action DB");
  add_common(sbuild, sbuild_args);
  std::string sbuild_out = "safety.db";
  sbuild->add_option("--db", sbuild_out, "output DB file");

  auto* saudit = app.add_subcommand("safety-audit", "re-screen stored entries");
  add_common(saudit, saudit_args);
  std::string saudit_db;
  int saudit_samples = 10000;
  saudit->add_option("--db", saudit_db, "DB file to audit")->required();
  saudit->add_option("--samples", saudit_samples, "entries to re-screen");

  // seqcmp
  auto* seqcmp = app.add_subcommand(
      "seqcmp", "sequential two-segment vs single long local policies");
  add_common(seqcmp, seqcmp_args);
  std::string seqcmp_db;
  int seqcmp_seeds = 3;
  seqcmp->add_option("--db", seqcmp_db, "safety DB file");
  seqcmp->add_option("--num-seeds", seqcmp_seeds, "training seeds per arm");

  // replay
  auto* replay = app.add_subcommand(
      "replay", "re-simulate a trace and emit plot-ready CSV");
  add_common(replay, replay_args);
  std::string replay_trace, replay_out = "replay.csv";
  replay->add_option("trace", replay_trace, "episode trace file")->required();
  replay->add_option("--out", replay_out, "CSV output path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      config::ProjectConfig cfg = load_config(train_args);
      const TensegrityModel model = build_icosahedron_model(cfg.robot);
      io::ensure_dir(train_args.out_dir);
      save_model(model, train_args.out_dir + "/model.txt");
      config::save(cfg, train_args.out_dir + "/config.json");
      const std::string db_path =
          train_db.empty() ? train_args.out_dir + "/safety.db" : train_db;
      const safety::SafeActionDB db = obtain_db(cfg, model, db_path);
      cfg.train.cost = cfg.cost;
      const mdgps::TrainResult res =
          mdgps::run_training(cfg.train, model, cfg.env, db,
                              train_args.out_dir);
      std::printf("trained %d iterations; policy at %s\n",
                  cfg.train.iterations, res.policy_path.c_str());
      const harness::GaitPlayback playback = harness::extract_gait_playback(
          res.policy, model, db, cfg.env, cfg.train.seed + 1);
      harness::save_playback(playback, train_args.out_dir + "/playback.txt");
      std::printf("gait playback (period %d steps) at %s/playback.txt\n",
                  playback.period, train_args.out_dir.c_str());
    } else if (*eval) {
      config::ProjectConfig cfg = load_config(eval_args);
      const TensegrityModel model = build_icosahedron_model(cfg.robot);
      const safety::SafeActionDB db = obtain_db(cfg, model, eval_db);
      harness::EvalSpec spec;
      spec.controller = parse_controller(eval_controller);
      spec.checkpoint = eval_ckpt;
      spec.playback = eval_playback;
      spec.env = cfg.env;
      spec.cost = cfg.cost;
      spec.trials = eval_trials > 0 ? eval_trials : cfg.eval_trials;
      spec.duration = eval_duration > 0 ? eval_duration : cfg.eval_duration;
      std::vector<Episode> traces;
      const harness::EvalResult r =
          harness::evaluate(spec, model, db, cfg.train.seed,
                            eval_traces.empty() ? nullptr : &traces);
      std::printf("absolute distance: %.3f +- %.3f m\n", r.mean_absolute,
                  r.std_absolute);
      std::printf("heading distance:  %.3f +- %.3f m\n", r.mean_heading,
                  r.std_heading);
      for (int i = 0; i < r.absolute_distance.size(); ++i) {
        std::printf("  trial %d: absolute %.3f, heading %.3f, path %.3f\n", i,
                    r.absolute_distance[i], r.heading_distance[i],
                    r.path_length[i]);
      }
      if (!eval_traces.empty()) {
        io::ensure_dir(eval_traces);
        for (std::size_t i = 0; i < traces.size(); ++i) {
          io::save_trace(traces[i], eval_traces + "/trial" +
                                        std::to_string(i) + ".trace");
        }
      }
    } else if (*grid) {
      config::ProjectConfig cfg = load_config(grid_args);
      const TensegrityModel model = build_icosahedron_model(cfg.robot);
      const safety::SafeActionDB db = obtain_db(cfg, model, grid_db);
      std::vector<harness::GridControllerSpec> columns;
      for (const std::string& spec : grid_learned) {
        const auto at = spec.find('=');
        if (at == std::string::npos) {
          throw CLI::ValidationError("--learned expects name=checkpoint");
        }
        columns.push_back({spec.substr(0, at),
                           harness::ControllerKind::kLearned,
                           spec.substr(at + 1)});
      }
      if (!grid_playback.empty()) {
        columns.push_back({"open-loop mean",
                           harness::ControllerKind::kOpenLoopMean,
                           grid_playback});
      }
      columns.push_back(
          {"hand-engineered", harness::ControllerKind::kHandEngineered, ""});
      const auto conditions =
          harness::default_grid(cfg.env, cfg.train.seed + 0x7e44);
      const harness::GridResult result = harness::run_condition_grid(
          columns, conditions, model, db, cfg.cost,
          grid_trials > 0 ? grid_trials : cfg.eval_trials,
          grid_duration > 0 ? grid_duration : cfg.eval_duration,
          cfg.train.seed);
      std::printf("%s", result.table().c_str());
      io::ensure_dir(grid_args.out_dir);
      result.save_json(grid_args.out_dir + "/grid.json");
      std::printf("grid results at %s/grid.json\n", grid_args.out_dir.c_str());
    } else if (*sbuild) {
      config::ProjectConfig cfg = load_config(sbuild_args);
      const TensegrityModel model = build_icosahedron_model(cfg.robot);
      safety::SafeActionDB db = safety::build_db(model, cfg.safety);
      db.save(sbuild_out);
      std::printf(
          "safety DB: %lld entries, acceptance %.3f, threshold %.0f N -> %s\n",
          static_cast<long long>(db.size()), db.acceptance_rate(),
          db.tension_threshold(), sbuild_out.c_str());
    } else if (*saudit) {
      config::ProjectConfig cfg = load_config(saudit_args);
      const TensegrityModel model = build_icosahedron_model(cfg.robot);
      const safety::SafeActionDB db = safety::SafeActionDB::load(saudit_db);
      std::mt19937_64 rng = make_stream(cfg.train.seed, 0xAD17);
      const safety::AuditReport report =
          safety::audit_db(db, model, saudit_samples, rng);
      std::printf("audited %d entries: %s (max tension %.1f N of %.1f N",
                  report.checked, report.passed() ? "PASS" : "FAIL",
                  report.max_tension, db.tension_threshold());
      if (!report.passed()) {
        std::printf(", %d violations, worst entry %d", report.violations,
                    report.worst_entry);
      }
      std::printf(")\n");
      return report.passed() ? 0 : 1;
    } else if (*seqcmp) {
      config::ProjectConfig cfg = load_config(seqcmp_args);
      const TensegrityModel model = build_icosahedron_model(cfg.robot);
      const safety::SafeActionDB db = obtain_db(cfg, model, seqcmp_db);
      harness::SeqCmpConfig sc;
      sc.base = cfg.train;
      sc.base.cost = cfg.cost;
      sc.trials = cfg.eval_trials;
      sc.eval_duration = cfg.eval_duration;
      sc.out_dir = seqcmp_args.out_dir;
      for (int i = 0; i < seqcmp_seeds; ++i) {
        sc.seeds.push_back(cfg.train.seed + 101 * (i + 1));
      }
      io::ensure_dir(sc.out_dir);
      const harness::SeqCmpResult result =
          harness::sequential_vs_single_experiment(sc, model, cfg.env, db);
      std::printf("%s", result.table().c_str());
      result.save_json(seqcmp_args.out_dir + "/seqcmp.json");
    } else if (*replay) {
      config::ProjectConfig cfg = load_config(replay_args);
      const TensegrityModel model = build_icosahedron_model(cfg.robot);
      const Episode trace = io::load_trace(replay_trace);
      Simulator sim(model, cfg.env);
      RobotState s = RobotState::from_vector(trace.states.row(0).transpose());
      fill_static_specific_force(s, cfg.env);
      std::ofstream out(replay_out);
      out << "t";
      for (int j = 0; j < 12; ++j) out << ",cmd" << j;
      for (int j = 0; j < 12; ++j) out << ",motor" << j;
      for (int j = 0; j < 12; ++j) out << ",accel" << j;
      out << "\n";
      for (int t = 0; t < trace.steps_completed; ++t) {
        Action a;
        a.motor_target = trace.actions.row(t).transpose();
        s = sim.step(s, a);
        const Observation accel = observe(s, model, ObservationKind::kLimited);
        out << io::format_scalar(t * cfg.env.control_dt);
        for (int j = 0; j < 12; ++j) {
          out << "," << io::format_scalar(a.motor_target[j]);
        }
        for (int j = 0; j < 12; ++j) {
          out << "," << io::format_scalar(s.motor_position[j]);
        }
        for (int j = 0; j < 12; ++j) {
          out << "," << io::format_scalar(accel.values[j]);
        }
        out << "\n";
      }
      std::printf("replayed %d steps -> %s\n", trace.steps_completed,
                  replay_out.c_str());
    }
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return 1;
  }
  return 0;
}
