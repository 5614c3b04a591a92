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

#ifndef TENSEG_CONFIG_HPP_
#define TENSEG_CONFIG_HPP_

#include <string>

#include "tenseg/mdgps.hpp"
#include "tenseg/model.hpp"
#include "tenseg/safety.hpp"
#include "tenseg/sim.hpp"

namespace tenseg::config {

// Everything a run needs, read from one JSON file with sections
// robot / env / cost / train / safety / eval. Missing keys keep their
// defaults; unknown keys are an error.
struct ProjectConfig {
  RobotConfig robot;
  EnvConfig env;
  CostConfig cost;
  mdgps::TrainConfig train;
  safety::SafetyConfig safety;
  int eval_trials = 3;
  Scalar eval_duration = 10.0;  // seconds
};

ProjectConfig load(const std::string& path);
void save(const ProjectConfig& cfg, const std::string& path);

}  // namespace tenseg::config

#endif  // TENSEG_CONFIG_HPP_
