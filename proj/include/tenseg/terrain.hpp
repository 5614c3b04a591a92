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

#ifndef TENSEG_TERRAIN_HPP_
#define TENSEG_TERRAIN_HPP_

#include <cstdint>
#include <vector>

#include "tenseg/types.hpp"

namespace tenseg {

enum class TerrainKind { kFlat, kHilly, kSlope };

// Height-field terrain. Hilly terrain is a seeded field of smooth radial
// bumps; sloped terrain rises (or falls) along a fixed direction.
class Terrain {
 public:
  Terrain() = default;

  static Terrain flat();
  // amplitude: bump height in meters; bumps spaced ~1.5 m on a jittered grid.
  static Terrain hilly(Scalar amplitude, std::uint64_t seed);
  // slope in radians; positive rises along `direction` (uphill travel).
  static Terrain slope(Scalar slope_rad, const Vec2& direction);

  Scalar height(Scalar x, Scalar y) const;
  // Unit outward surface normal at (x, y).
  Vec3 normal(Scalar x, Scalar y) const;

  TerrainKind kind() const { return kind_; }

 private:
  struct Bump {
    Scalar cx, cy, amplitude, inv_two_sigma_sq;
  };

  TerrainKind kind_ = TerrainKind::kFlat;
  Scalar slope_tan_ = 0.0;
  Vec2 slope_dir_ = Vec2(1.0, 0.0);
  int grid_cells_ = 0;
  std::vector<Bump> bumps_;  // one per grid cell, row-major

  std::size_t cell_index(int ix, int iy) const;
  template <class Fn>
  void visit_nearby_bumps(Scalar x, Scalar y, Fn&& fn) const;
  void gradient(Scalar x, Scalar y, Scalar& gx, Scalar& gy) const;
};

}  // namespace tenseg

#endif  // TENSEG_TERRAIN_HPP_
