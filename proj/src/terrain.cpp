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

#include "tenseg/terrain.hpp"

#include <cmath>
#include <random>

#include "tenseg/rng.hpp"

namespace tenseg {

namespace {
constexpr Scalar kBumpSpacing = 1.5;  // bump wavelength, meters
constexpr Scalar kBumpSigma = 0.45;
constexpr Scalar kArenaHalfExtent = 60.0;
}  // namespace

Terrain Terrain::flat() { return Terrain(); }

Terrain Terrain::hilly(Scalar amplitude, std::uint64_t seed) {
  Terrain t;
  t.kind_ = TerrainKind::kHilly;
  t.grid_cells_ = static_cast<int>(kArenaHalfExtent / kBumpSpacing);
  const int side = 2 * t.grid_cells_ + 1;
  t.bumps_.resize(static_cast<std::size_t>(side) * side);
  std::mt19937_64 rng = make_stream(seed, 0x7e22);
  std::uniform_real_distribution<Scalar> jitter(-0.4 * kBumpSpacing,
                                                0.4 * kBumpSpacing);
  std::uniform_real_distribution<Scalar> height(0.5 * amplitude, amplitude);
  for (int ix = -t.grid_cells_; ix <= t.grid_cells_; ++ix) {
    for (int iy = -t.grid_cells_; iy <= t.grid_cells_; ++iy) {
      Bump& b = t.bumps_[t.cell_index(ix, iy)];
      b.cx = ix * kBumpSpacing + jitter(rng);
      b.cy = iy * kBumpSpacing + jitter(rng);
      b.amplitude = height(rng);
      b.inv_two_sigma_sq = 1.0 / (2.0 * kBumpSigma * kBumpSigma);
    }
  }
  return t;
}

Terrain Terrain::slope(Scalar slope_rad, const Vec2& direction) {
  Terrain t;
  t.kind_ = TerrainKind::kSlope;
  t.slope_tan_ = std::tan(slope_rad);
  t.slope_dir_ = direction.normalized();
  return t;
}

std::size_t Terrain::cell_index(int ix, int iy) const {
  const int side = 2 * grid_cells_ + 1;
  return static_cast<std::size_t>(ix + grid_cells_) * side +
         static_cast<std::size_t>(iy + grid_cells_);
}

template <class Fn>
void Terrain::visit_nearby_bumps(Scalar x, Scalar y, Fn&& fn) const {
  const int cx = static_cast<int>(std::floor(x / kBumpSpacing + 0.5));
  const int cy = static_cast<int>(std::floor(y / kBumpSpacing + 0.5));
  for (int ix = cx - 2; ix <= cx + 2; ++ix) {
    for (int iy = cy - 2; iy <= cy + 2; ++iy) {
      if (ix < -grid_cells_ || ix > grid_cells_ || iy < -grid_cells_ ||
          iy > grid_cells_) {
        continue;
      }
      const Bump& b = bumps_[cell_index(ix, iy)];
      const Scalar dx = x - b.cx;
      const Scalar dy = y - b.cy;
      const Scalar r2 = dx * dx + dy * dy;
      if (r2 > 9.0 * kBumpSigma * kBumpSigma) continue;
      fn(b, dx, dy, r2);
    }
  }
}

Scalar Terrain::height(Scalar x, Scalar y) const {
  switch (kind_) {
    case TerrainKind::kFlat:
      return 0.0;
    case TerrainKind::kSlope:
      return slope_tan_ * (slope_dir_.x() * x + slope_dir_.y() * y);
    case TerrainKind::kHilly: {
      Scalar h = 0.0;
      visit_nearby_bumps(x, y, [&](const Bump& b, Scalar, Scalar, Scalar r2) {
        h += b.amplitude * std::exp(-r2 * b.inv_two_sigma_sq);
      });
      return h;
    }
  }
  return 0.0;
}

void Terrain::gradient(Scalar x, Scalar y, Scalar& gx, Scalar& gy) const {
  gx = gy = 0.0;
  switch (kind_) {
    case TerrainKind::kFlat:
      return;
    case TerrainKind::kSlope:
      gx = slope_tan_ * slope_dir_.x();
      gy = slope_tan_ * slope_dir_.y();
      return;
    case TerrainKind::kHilly:
      visit_nearby_bumps(
          x, y, [&](const Bump& b, Scalar dx, Scalar dy, Scalar r2) {
            const Scalar e = b.amplitude * std::exp(-r2 * b.inv_two_sigma_sq);
            gx += -2.0 * dx * b.inv_two_sigma_sq * e;
            gy += -2.0 * dy * b.inv_two_sigma_sq * e;
          });
      return;
  }
}

Vec3 Terrain::normal(Scalar x, Scalar y) const {
  Scalar gx, gy;
  gradient(x, y, gx, gy);
  Vec3 n(-gx, -gy, 1.0);
  return n.normalized();
}

}  // namespace tenseg
