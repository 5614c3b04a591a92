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

#ifndef TENSEG_SAFETY_HPP_
#define TENSEG_SAFETY_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "tenseg/model.hpp"
#include "tenseg/types.hpp"

namespace tenseg::safety {

// How candidate motor vectors are screened.
//  kKinematic: tensions evaluated on the unloaded reference geometry.
//  kSettle:    tensions evaluated after briefly relaxing the free-floating
//              structure under the candidate motor vector (default).
enum class ScreenMode { kKinematic, kSettle };

// Candidate generation for the DB.
//  kUniform:    every motor uniform within limits.
//  kStratified: a uniform number of motors is active (uniform within
//               limits), the rest sit at the neutral position, so sparse
//               commands have nearby stored entries.
enum class SamplingScheme { kUniform, kStratified };

struct SafetyConfig {
  Scalar tension_threshold = -1.0;  // <0: 3x the nominal pretension
  int target_entries = 200000;
  std::int64_t max_candidates = -1;  // <0: 50x target_entries
  ScreenMode mode = ScreenMode::kSettle;
  SamplingScheme sampling = SamplingScheme::kUniform;
  std::uint64_t seed = 0;
  int threads = 0;  // 0: hardware concurrency
  // Relaxation parameters for kSettle.
  int settle_iterations = 500;
  Scalar settle_dt = 2e-3;
  Scalar settle_drag = 25.0;
};

// Maximum cable tension of a candidate motor vector under the given screen
// mode. This is the single source of truth for both building and auditing.
Scalar screen_max_tension(const TensegrityModel& model, const Vec12& motors,
                          ScreenMode mode, const SafetyConfig& cfg);

struct AuditReport {
  int checked = 0;
  int violations = 0;
  Scalar max_tension = 0.0;
  int worst_entry = -1;
  bool passed() const { return violations == 0; }
};

// Set of screened-safe motor vectors with an exact L1 nearest-neighbor
// index. Immutable once built; queries are thread-safe.
class SafeActionDB {
 public:
  SafeActionDB() = default;

  // Nearest stored entry under the L1 norm; ties broken by lowest entry
  // index. Throws std::runtime_error when the DB is empty.
  Vec12 project(const Vec12& action) const;
  int nearest_index(const Vec12& action) const;

  // Exhaustive scan with the same tie-break; the oracle for the index.
  int nearest_index_bruteforce(const Vec12& action) const;

  Vec12 entry(int i) const { return entries_.col(i); }
  std::int64_t size() const { return entries_.cols(); }
  Scalar tension_threshold() const { return threshold_; }
  std::uint64_t model_hash() const { return model_hash_; }
  ScreenMode mode() const { return mode_; }
  Scalar acceptance_rate() const { return acceptance_rate_; }
  const SafetyConfig& config() const { return config_; }

  void save(const std::string& path) const;
  static SafeActionDB load(const std::string& path);

  friend SafeActionDB build_db(const TensegrityModel& model,
                               const SafetyConfig& cfg);

 private:
  struct Node {
    // Tight bounding box of the points under this node.
    Vec12 box_min, box_max;
    int left = -1, right = -1;  // internal
    int begin = 0, end = 0;     // leaf range into the permuted storage
    bool leaf() const { return left < 0; }
  };

  void build_index();
  int build_node(int begin, int end);
  void search(int node, const Vec12& q, Scalar& best, int& best_idx) const;

  Eigen::Matrix<Scalar, 12, Eigen::Dynamic> entries_;  // original order
  Eigen::Matrix<Scalar, 12, Eigen::Dynamic> sorted_;   // leaf-contiguous
  std::vector<int> sorted_to_original_;
  std::vector<Node> nodes_;
  int root_ = -1;

  Scalar threshold_ = 0.0;
  std::uint64_t model_hash_ = 0;
  ScreenMode mode_ = ScreenMode::kSettle;
  Scalar acceptance_rate_ = 0.0;
  SafetyConfig config_;
};

// Samples motor vectors uniformly within limits, keeps those whose screened
// max tension is at or below the threshold, and indexes them. Throws
// std::runtime_error when no candidate passes within the sample budget.
SafeActionDB build_db(const TensegrityModel& model, const SafetyConfig& cfg);

// Re-screens n random stored entries against the DB's own threshold.
// Throws std::runtime_error when the DB was built for a different model.
AuditReport audit_db(const SafeActionDB& db, const TensegrityModel& model,
                     int n, std::mt19937_64& rng);

}  // namespace tenseg::safety

#endif  // TENSEG_SAFETY_HPP_
