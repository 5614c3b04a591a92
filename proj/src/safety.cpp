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

#include "tenseg/safety.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include "tenseg/parallel.hpp"
#include "tenseg/rng.hpp"

namespace tenseg::safety {

namespace {

constexpr int kLeafSize = 24;

struct MiniRod {
  Vec3 com, vel, axis, omega;
};

Vec3 rotate_axis(const Vec3& axis, const Vec3& omega, Scalar dt) {
  const Scalar ang = omega.norm() * dt;
  if (ang < 1e-14) return axis;
  const Vec3 k = omega.normalized();
  const Scalar c = std::cos(ang), s = std::sin(ang);
  return (axis * c + k.cross(axis) * s + k * k.dot(axis) * (1.0 - c))
      .normalized();
}

Scalar resolve_threshold(const TensegrityModel& model,
                         const SafetyConfig& cfg) {
  if (cfg.tension_threshold > 0) return cfg.tension_threshold;
  const Scalar edge = model.rod_length * std::sqrt(3.0 / 8.0);
  const Scalar pretension =
      model.spring_constant * (edge - model.pretension_rest_length[0]);
  return 3.0 * pretension;
}

inline Scalar box_l1_bound(const Vec12& q, const Vec12& lo, const Vec12& hi) {
  return ((q - hi).cwiseMax(0.0) + (lo - q).cwiseMax(0.0)).sum();
}

}  // namespace

Scalar screen_max_tension(const TensegrityModel& model, const Vec12& motors,
                          ScreenMode mode, const SafetyConfig& cfg) {
  if (mode == ScreenMode::kKinematic) {
    return cable_tensions(model, motors, model.reference_endpoints)
        .tension.maxCoeff();
  }
  // Free-floating relaxation under cable forces only: rods rigid, heavy
  // velocity drag, no gravity or contact. Deterministic.
  MiniRod rods[kNumRods];
  for (int r = 0; r < kNumRods; ++r) {
    const Vec3 p0 = model.reference_endpoints.col(2 * r);
    const Vec3 p1 = model.reference_endpoints.col(2 * r + 1);
    rods[r] = {0.5 * (p0 + p1), Vec3::Zero(), (p1 - p0).normalized(),
               Vec3::Zero()};
  }
  const Scalar L = model.rod_length;
  const Scalar mass = model.rod_mass;
  const Scalar inertia = mass * (L / 2) * (L / 2);
  const Scalar dt = cfg.settle_dt;
  Eigen::Matrix<Scalar, 3, kNumEndpoints> ep, forces;
  for (int it = 0; it < cfg.settle_iterations; ++it) {
    for (int r = 0; r < kNumRods; ++r) {
      const Vec3 arm = (L / 2) * rods[r].axis;
      ep.col(2 * r) = rods[r].com - arm;
      ep.col(2 * r + 1) = rods[r].com + arm;
    }
    forces.setZero();
    for (int c = 0; c < kNumCables; ++c) {
      const int a = model.cables[c][0];
      const int b = model.cables[c][1];
      const Vec3 d = ep.col(b) - ep.col(a);
      const Scalar len = d.norm();
      const Scalar rest = model.cable_rest_length(c, motors);
      if (len <= rest || len < 1e-9) continue;
      const Vec3 f = model.spring_constant * (len - rest) / len * d;
      forces.col(a) += f;
      forces.col(b) -= f;
    }
    for (int r = 0; r < kNumRods; ++r) {
      const Vec3 total = forces.col(2 * r) + forces.col(2 * r + 1);
      const Vec3 torque = (L / 2) * rods[r].axis.cross(forces.col(2 * r + 1) -
                                                       forces.col(2 * r));
      rods[r].vel += dt * (total / mass - cfg.settle_drag * rods[r].vel);
      rods[r].omega +=
          dt * (torque / inertia - cfg.settle_drag * rods[r].omega);
      rods[r].com += dt * rods[r].vel;
      rods[r].axis = rotate_axis(rods[r].axis, rods[r].omega, dt);
      rods[r].omega -= rods[r].omega.dot(rods[r].axis) * rods[r].axis;
    }
  }
  for (int r = 0; r < kNumRods; ++r) {
    const Vec3 arm = (L / 2) * rods[r].axis;
    ep.col(2 * r) = rods[r].com - arm;
    ep.col(2 * r + 1) = rods[r].com + arm;
  }
  return cable_tensions(model, motors, ep).tension.maxCoeff();
}

SafeActionDB build_db(const TensegrityModel& model, const SafetyConfig& cfg) {
  if (cfg.target_entries < 1) {
    throw std::invalid_argument("build_db: target_entries must be >= 1");
  }
  const Scalar threshold = resolve_threshold(model, cfg);
  const std::int64_t budget = cfg.max_candidates > 0
                                  ? cfg.max_candidates
                                  : 50LL * cfg.target_entries;
  const int threads = cfg.threads > 0 ? cfg.threads : hardware_threads();

  // Candidates are drawn in fixed-size blocks with per-block RNG streams and
  // processed in waves: the kept set is a deterministic block prefix, so the
  // DB does not depend on the thread count or scheduling.
  const int block = 256;
  const std::int64_t n_blocks = (budget + block - 1) / block;
  const int wave = std::max(threads * 8, 8);
  std::vector<Vec12> all;
  std::int64_t sampled = 0;
  std::int64_t kept_total = 0;
  std::int64_t next_block = 0;
  while (next_block < n_blocks &&
         static_cast<std::int64_t>(all.size()) < cfg.target_entries) {
    const int wave_blocks =
        static_cast<int>(std::min<std::int64_t>(wave, n_blocks - next_block));
    std::vector<std::vector<Vec12>> kept(
        static_cast<std::size_t>(wave_blocks));
    parallel_for(wave_blocks, threads, [&](int wi) {
      std::mt19937_64 rng = make_stream(cfg.seed, 0x5afe, next_block + wi);
      std::uniform_real_distribution<Scalar> uni(model.motor_min,
                                                 model.motor_max);
      std::uniform_int_distribution<int> active_count(1, kNumMotors);
      Vec12 motors;
      int order[kNumMotors];
      auto& out = kept[static_cast<std::size_t>(wi)];
      for (int i = 0; i < block; ++i) {
        if (cfg.sampling == SamplingScheme::kUniform) {
          for (int j = 0; j < kNumMotors; ++j) motors[j] = uni(rng);
        } else {
          motors.setConstant(model.motor_neutral);
          const int k = active_count(rng);
          for (int j = 0; j < kNumMotors; ++j) order[j] = j;
          for (int j = 0; j < k; ++j) {
            std::uniform_int_distribution<int> pick(j, kNumMotors - 1);
            std::swap(order[j], order[pick(rng)]);
            motors[order[j]] = uni(rng);
          }
        }
        if (screen_max_tension(model, motors, cfg.mode, cfg) <= threshold) {
          out.push_back(motors);
        }
      }
    });
    for (int wi = 0; wi < wave_blocks &&
                     static_cast<std::int64_t>(all.size()) < cfg.target_entries;
         ++wi) {
      sampled += block;
      kept_total += static_cast<std::int64_t>(
          kept[static_cast<std::size_t>(wi)].size());
      for (const Vec12& v : kept[static_cast<std::size_t>(wi)]) {
        if (static_cast<std::int64_t>(all.size()) >= cfg.target_entries) break;
        all.push_back(v);
      }
    }
    next_block += wave_blocks;
  }
  if (all.empty()) {
    throw std::runtime_error(
        "build_db: no candidate passed the tension screen; review the "
        "threshold (" +
        std::to_string(threshold) + " N)");
  }

  // The neutral pose is always entry 0 when it passes the screen, so a
  // neutral command projects to itself.
  Vec12 neutral;
  neutral.setConstant(model.motor_neutral);
  if (screen_max_tension(model, neutral, cfg.mode, cfg) <= threshold) {
    all.insert(all.begin(), neutral);
  }

  SafeActionDB db;
  db.entries_.resize(12, static_cast<Eigen::Index>(all.size()));
  for (std::size_t i = 0; i < all.size(); ++i) {
    db.entries_.col(static_cast<Eigen::Index>(i)) = all[i];
  }
  db.threshold_ = threshold;
  db.model_hash_ = model.content_hash();
  db.mode_ = cfg.mode;
  db.acceptance_rate_ =
      sampled > 0 ? static_cast<Scalar>(kept_total) / sampled : 0.0;
  db.config_ = cfg;
  db.build_index();
  return db;
}

void SafeActionDB::build_index() {
  const std::int64_t n = entries_.cols();
  sorted_to_original_.resize(static_cast<std::size_t>(n));
  std::iota(sorted_to_original_.begin(), sorted_to_original_.end(), 0);
  nodes_.clear();
  nodes_.reserve(static_cast<std::size_t>(2 * n / kLeafSize + 16));
  sorted_ = entries_;  // reordered in place during the build
  root_ = build_node(0, static_cast<int>(n));
}

int SafeActionDB::build_node(int begin, int end) {
  Node node;
  node.begin = begin;
  node.end = end;
  node.box_min = sorted_.col(begin);
  node.box_max = sorted_.col(begin);
  for (int i = begin + 1; i < end; ++i) {
    node.box_min = node.box_min.cwiseMin(sorted_.col(i));
    node.box_max = node.box_max.cwiseMax(sorted_.col(i));
  }
  const int idx = static_cast<int>(nodes_.size());
  nodes_.push_back(node);
  if (end - begin <= kLeafSize) return idx;

  int dim = 0;
  (node.box_max - node.box_min).maxCoeff(&dim);
  const int mid = begin + (end - begin) / 2;

  std::vector<int> order(static_cast<std::size_t>(end - begin));
  std::iota(order.begin(), order.end(), begin);
  std::nth_element(order.begin(), order.begin() + (mid - begin), order.end(),
                   [&](int a, int b) {
                     return sorted_(dim, a) < sorted_(dim, b);
                   });
  Eigen::Matrix<Scalar, 12, Eigen::Dynamic> tmp(12, end - begin);
  std::vector<int> tmp_idx(static_cast<std::size_t>(end - begin));
  for (int i = 0; i < end - begin; ++i) {
    tmp.col(i) = sorted_.col(order[static_cast<std::size_t>(i)]);
    tmp_idx[static_cast<std::size_t>(i)] =
        sorted_to_original_[static_cast<std::size_t>(
            order[static_cast<std::size_t>(i)])];
  }
  sorted_.middleCols(begin, end - begin) = tmp;
  std::copy(tmp_idx.begin(), tmp_idx.end(),
            sorted_to_original_.begin() + begin);

  const int left = build_node(begin, mid);
  const int right = build_node(mid, end);
  nodes_[static_cast<std::size_t>(idx)].left = left;
  nodes_[static_cast<std::size_t>(idx)].right = right;
  return idx;
}

void SafeActionDB::search(int node_idx, const Vec12& q, Scalar& best,
                          int& best_idx) const {
  const Node& node = nodes_[static_cast<std::size_t>(node_idx)];
  if (node.leaf()) {
    for (int i = node.begin; i < node.end; ++i) {
      Scalar d = 0;
      for (int k = 0; k < 12; ++k) {  // partial-distance early exit
        d += std::abs(q[k] - sorted_(k, i));
        if (d > best) break;
      }
      const int orig = sorted_to_original_[static_cast<std::size_t>(i)];
      if (d < best || (d == best && orig < best_idx)) {
        best = d;
        best_idx = orig;
      }
    }
    return;
  }
  const Node& l = nodes_[static_cast<std::size_t>(node.left)];
  const Node& r = nodes_[static_cast<std::size_t>(node.right)];
  const Scalar dl = box_l1_bound(q, l.box_min, l.box_max);
  const Scalar dr = box_l1_bound(q, r.box_min, r.box_max);
  const int first = dl <= dr ? node.left : node.right;
  const int second = dl <= dr ? node.right : node.left;
  const Scalar dsecond = std::max(dl, dr);
  if (std::min(dl, dr) <= best) search(first, q, best, best_idx);
  if (dsecond <= best) search(second, q, best, best_idx);
}

int SafeActionDB::nearest_index(const Vec12& action) const {
  if (entries_.cols() == 0) {
    throw std::runtime_error("SafeActionDB: projection on an empty DB");
  }
  Scalar best = std::numeric_limits<Scalar>::infinity();
  int best_idx = std::numeric_limits<int>::max();
  search(root_, action, best, best_idx);
  return best_idx;
}

int SafeActionDB::nearest_index_bruteforce(const Vec12& action) const {
  if (entries_.cols() == 0) {
    throw std::runtime_error("SafeActionDB: projection on an empty DB");
  }
  Scalar best = std::numeric_limits<Scalar>::infinity();
  int best_idx = std::numeric_limits<int>::max();
  for (Eigen::Index i = 0; i < entries_.cols(); ++i) {
    const Scalar d = (action - entries_.col(i)).cwiseAbs().sum();
    if (d < best || (d == best && static_cast<int>(i) < best_idx)) {
      best = d;
      best_idx = static_cast<int>(i);
    }
  }
  return best_idx;
}

Vec12 SafeActionDB::project(const Vec12& action) const {
  return entries_.col(nearest_index(action));
}

AuditReport audit_db(const SafeActionDB& db, const TensegrityModel& model,
                     int n, std::mt19937_64& rng) {
  if (db.model_hash() != model.content_hash()) {
    throw std::runtime_error(
        "audit_db: DB was built for a different model (hash mismatch)");
  }
  AuditReport report;
  if (db.size() == 0 || n <= 0) return report;
  std::uniform_int_distribution<std::int64_t> pick(0, db.size() - 1);
  for (int i = 0; i < n; ++i) {
    const int idx = static_cast<int>(pick(rng));
    const Scalar t =
        screen_max_tension(model, db.entry(idx), db.mode(), db.config());
    ++report.checked;
    if (t > report.max_tension) {
      report.max_tension = t;
      report.worst_entry = idx;
    }
    if (t > db.tension_threshold() * (1 + 1e-12)) ++report.violations;
  }
  return report;
}

void SafeActionDB::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open DB file " + path);
  const char magic[8] = {'T', 'G', 'S', 'D', 'B', '1', '\n', '\0'};
  out.write(magic, 8);
  const std::int64_t n = size();
  const std::int32_t mode = mode_ == ScreenMode::kSettle ? 1 : 0;
  const std::int32_t settle_iters = config_.settle_iterations;
  out.write(reinterpret_cast<const char*>(&model_hash_), 8);
  out.write(reinterpret_cast<const char*>(&threshold_), 8);
  out.write(reinterpret_cast<const char*>(&acceptance_rate_), 8);
  out.write(reinterpret_cast<const char*>(&mode), 4);
  out.write(reinterpret_cast<const char*>(&settle_iters), 4);
  out.write(reinterpret_cast<const char*>(&config_.settle_dt), 8);
  out.write(reinterpret_cast<const char*>(&config_.settle_drag), 8);
  out.write(reinterpret_cast<const char*>(&n), 8);
  out.write(reinterpret_cast<const char*>(entries_.data()),
            static_cast<std::streamsize>(sizeof(Scalar) * 12 * n));
  if (!out) throw std::runtime_error("failed writing DB file " + path);
}

SafeActionDB SafeActionDB::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open DB file " + path);
  char magic[8] = {};
  in.read(magic, 8);
  const char want[8] = {'T', 'G', 'S', 'D', 'B', '1', '\n', '\0'};
  if (!std::equal(magic, magic + 8, want)) {
    throw std::runtime_error("unrecognized DB file " + path);
  }
  SafeActionDB db;
  std::int64_t n = 0;
  std::int32_t mode = 1;
  std::int32_t settle_iters = 0;
  in.read(reinterpret_cast<char*>(&db.model_hash_), 8);
  in.read(reinterpret_cast<char*>(&db.threshold_), 8);
  in.read(reinterpret_cast<char*>(&db.acceptance_rate_), 8);
  in.read(reinterpret_cast<char*>(&mode), 4);
  in.read(reinterpret_cast<char*>(&settle_iters), 4);
  in.read(reinterpret_cast<char*>(&db.config_.settle_dt), 8);
  in.read(reinterpret_cast<char*>(&db.config_.settle_drag), 8);
  in.read(reinterpret_cast<char*>(&n), 8);
  if (!in || n < 0) throw std::runtime_error("corrupt DB file " + path);
  db.config_.settle_iterations = settle_iters;
  db.config_.tension_threshold = db.threshold_;
  db.mode_ = mode == 1 ? ScreenMode::kSettle : ScreenMode::kKinematic;
  db.entries_.resize(12, n);
  in.read(reinterpret_cast<char*>(db.entries_.data()),
          static_cast<std::streamsize>(sizeof(Scalar) * 12 * n));
  if (!in) throw std::runtime_error("corrupt DB file " + path);
  db.build_index();
  return db;
}

}  // namespace tenseg::safety
