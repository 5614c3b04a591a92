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

#ifndef TENSEG_IO_HPP_
#define TENSEG_IO_HPP_

#include <string>

#include "tenseg/sim.hpp"

namespace tenseg::io {

void ensure_dir(const std::string& path);

// Shortest round-trip-exact decimal form, used everywhere numbers go into
// text logs so identical runs produce identical bytes.
std::string format_scalar(Scalar v);

// Line-delimited episode trace: a '#' header, then one step per line with
// columns t, x (state_dim), o (obs_dim), u (12), cost, and a final-state
// line.
void save_trace(const Episode& episode, const std::string& path);
Episode load_trace(const std::string& path);

}  // namespace tenseg::io

#endif  // TENSEG_IO_HPP_
