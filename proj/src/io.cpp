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

#include "tenseg/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace tenseg::io {

void ensure_dir(const std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) {
    throw std::runtime_error("cannot create directory " + path + ": " +
                             ec.message());
  }
}

std::string format_scalar(Scalar v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void save_trace(const Episode& e, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open trace file " + path);
  out << "# tenseg-trace v1\n";
  out << "# chain " << e.chain << " segment " << e.segment << " seed "
      << e.seed << " obs "
      << (e.obs_kind == ObservationKind::kFull ? "full" : "limited")
      << " source " << (e.from_global_policy ? "global" : "local")
      << " failed " << (e.failed ? 1 : 0) << "\n";
  out << "# prev_action";
  for (int j = 0; j < kActionDim; ++j) {
    out << " " << format_scalar(e.initial_prev_action[j]);
  }
  out << "\n";
  out << "# columns: t x[" << e.states.cols() << "] o[" << e.observations.cols()
      << "] u[" << e.actions.cols() << "] cost\n";
  for (int t = 0; t < e.steps_completed; ++t) {
    out << t;
    for (int j = 0; j < e.states.cols(); ++j) {
      out << " " << format_scalar(e.states(t, j));
    }
    for (int j = 0; j < e.observations.cols(); ++j) {
      out << " " << format_scalar(e.observations(t, j));
    }
    for (int j = 0; j < e.actions.cols(); ++j) {
      out << " " << format_scalar(e.actions(t, j));
    }
    out << " " << format_scalar(e.costs[t]) << "\n";
  }
  out << "# final";
  for (int j = 0; j < e.states.cols(); ++j) {
    out << " " << format_scalar(e.states(e.steps_completed, j));
  }
  out << "\n";
  if (!out) throw std::runtime_error("failed writing trace " + path);
}

Episode load_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trace file " + path);
  std::string line;
  std::getline(in, line);
  if (line != "# tenseg-trace v1") {
    throw std::runtime_error("unrecognized trace file " + path);
  }
  Episode e;
  std::string word;
  {
    std::getline(in, line);
    std::istringstream h(line);
    std::string obs_kind, source;
    int failed = 0;
    h >> word >> word >> e.chain >> word >> e.segment >> word >> e.seed >>
        word >> obs_kind >> word >> source >> word >> failed;
    e.obs_kind =
        obs_kind == "full" ? ObservationKind::kFull : ObservationKind::kLimited;
    e.from_global_policy = source == "global";
    e.failed = failed != 0;
  }
  {
    std::getline(in, line);
    std::istringstream h(line);
    h >> word >> word;  // "# prev_action"
    for (int j = 0; j < kActionDim; ++j) h >> e.initial_prev_action[j];
  }
  int state_dim = 0, obs_dim = 0, action_dim = 0;
  {
    std::getline(in, line);
    if (std::sscanf(line.c_str(), "# columns: t x[%d] o[%d] u[%d] cost",
                    &state_dim, &obs_dim, &action_dim) != 3) {
      throw std::runtime_error("bad trace columns header in " + path);
    }
  }
  std::vector<VecX> states, obs, actions;
  std::vector<Scalar> costs;
  VecX final_state;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    if (line[0] == '#') {
      row >> word >> word;  // "# final"
      final_state.resize(state_dim);
      std::istringstream fin(line.substr(7));
      for (int j = 0; j < state_dim; ++j) fin >> final_state[j];
      break;
    }
    int t;
    row >> t;
    VecX x(state_dim), o(obs_dim), u(action_dim);
    for (int j = 0; j < state_dim; ++j) row >> x[j];
    for (int j = 0; j < obs_dim; ++j) row >> o[j];
    for (int j = 0; j < action_dim; ++j) row >> u[j];
    Scalar c;
    row >> c;
    if (!row) throw std::runtime_error("bad trace row in " + path);
    states.push_back(x);
    obs.push_back(o);
    actions.push_back(u);
    costs.push_back(c);
  }
  if (final_state.size() == 0) {
    throw std::runtime_error("trace missing final state: " + path);
  }
  const int T = static_cast<int>(states.size());
  e.states.resize(T + 1, state_dim);
  e.observations.resize(T, obs_dim);
  e.actions.resize(T, action_dim);
  e.costs.resize(T);
  for (int t = 0; t < T; ++t) {
    e.states.row(t) = states[static_cast<std::size_t>(t)].transpose();
    e.observations.row(t) = obs[static_cast<std::size_t>(t)].transpose();
    e.actions.row(t) = actions[static_cast<std::size_t>(t)].transpose();
    e.costs[t] = costs[static_cast<std::size_t>(t)];
  }
  e.states.row(T) = final_state.transpose();
  e.steps_completed = T;
  return e;
}

}  // namespace tenseg::io
