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
#include <fstream>
#include <random>

#include "tenseg/model.hpp"
#include "tenseg/rng.hpp"
#include "tenseg/safety.hpp"

using namespace tenseg;
using namespace tenseg::safety;

namespace {

TensegrityModel test_model() { return build_icosahedron_model(RobotConfig{}); }

Vec12 random_action(const TensegrityModel& m, std::mt19937_64& rng) {
  std::uniform_real_distribution<Scalar> u(m.motor_min, m.motor_max);
  Vec12 a;
  for (int j = 0; j < 12; ++j) a[j] = u(rng);
  return a;
}

}  // namespace

TEST_CASE("vacuous threshold accepts everything") {
  const TensegrityModel m = test_model();
  SafetyConfig cfg;
  cfg.target_entries = 500;
  cfg.tension_threshold = 1e12;
  cfg.mode = ScreenMode::kKinematic;
  const SafeActionDB db = build_db(m, cfg);
  CHECK(db.size() >= 500);
  CHECK(db.acceptance_rate() == doctest::Approx(1.0));
}

TEST_CASE("impossible threshold fails loudly") {
  const TensegrityModel m = test_model();
  SafetyConfig cfg;
  cfg.target_entries = 10;
  cfg.max_candidates = 4096;
  cfg.tension_threshold = 1e-6;
  cfg.mode = ScreenMode::kKinematic;
  CHECK_THROWS_AS(build_db(m, cfg), std::runtime_error);
}

TEST_CASE("stored entries re-screen clean and audits pass") {
  const TensegrityModel m = test_model();
  SafetyConfig cfg;
  cfg.target_entries = 2000;
  cfg.tension_threshold = 1300;
  cfg.mode = ScreenMode::kSettle;
  cfg.sampling = SamplingScheme::kStratified;
  cfg.seed = 7;
  const SafeActionDB db = build_db(m, cfg);
  REQUIRE(db.size() >= 2000);

  std::mt19937_64 rng = make_stream(501);
  const AuditReport report = audit_db(db, m, 500, rng);
  CHECK(report.passed());
  CHECK(report.checked == 500);
  CHECK(report.max_tension <= db.tension_threshold());

  SUBCASE("audit with n = 0 passes trivially") {
    std::mt19937_64 rng2 = make_stream(502);
    const AuditReport empty = audit_db(db, m, 0, rng2);
    CHECK(empty.passed());
    CHECK(empty.checked == 0);
  }
  SUBCASE("audit rejects a mismatched model") {
    RobotConfig rc;
    rc.spring_constant *= 2.0;
    const TensegrityModel other = build_icosahedron_model(rc);
    std::mt19937_64 rng2 = make_stream(503);
    CHECK_THROWS_AS(audit_db(db, other, 10, rng2), std::runtime_error);
  }
  SUBCASE("a corrupted entry is caught and named") {
    const std::string path = "/tmp/tenseg_test_db_corrupt.bin";
    db.save(path);
    // Overwrite entry 100 with a full-wind vector that the screen rejects.
    Vec12 bad;
    bad.setConstant(m.motor_max);
    REQUIRE(screen_max_tension(m, bad, db.mode(), db.config()) >
            db.tension_threshold());
    std::fstream f(path,
                   std::ios::binary | std::ios::in | std::ios::out);
    const std::streamoff header = 8 + 8 + 8 + 8 + 4 + 4 + 8 + 8 + 8;
    f.seekp(header + 100 * 12 * static_cast<std::streamoff>(sizeof(Scalar)));
    f.write(reinterpret_cast<const char*>(bad.data()), 12 * sizeof(Scalar));
    f.close();
    const SafeActionDB tampered = SafeActionDB::load(path);
    // Exhaustive audit (every entry at least once in expectation).
    std::mt19937_64 rng3 = make_stream(504);
    const AuditReport bad_report =
        audit_db(tampered, m, 20000, rng3);
    CHECK(!bad_report.passed());
    CHECK(bad_report.worst_entry == 100);
  }
}

TEST_CASE("projection properties") {
  const TensegrityModel m = test_model();
  SafetyConfig cfg;
  cfg.target_entries = 10000;
  cfg.tension_threshold = 1e12;  // keep the build fast; geometry irrelevant
  cfg.mode = ScreenMode::kKinematic;
  cfg.seed = 11;
  const SafeActionDB db = build_db(m, cfg);
  std::mt19937_64 rng = make_stream(505);

  SUBCASE("a stored entry projects to itself") {
    for (int trial = 0; trial < 100; ++trial) {
      const int idx =
          static_cast<int>(rng() % static_cast<std::uint64_t>(db.size()));
      CHECK((db.project(db.entry(idx)) - db.entry(idx)).cwiseAbs().maxCoeff() ==
            0.0);
    }
  }
  SUBCASE("projection is idempotent") {
    for (int trial = 0; trial < 1000; ++trial) {
      const Vec12 a = random_action(m, rng);
      const Vec12 once = db.project(a);
      CHECK((db.project(once) - once).cwiseAbs().maxCoeff() == 0.0);
    }
  }
  SUBCASE("indexed search equals the brute-force scan") {
    for (int trial = 0; trial < 1000; ++trial) {
      const Vec12 a = random_action(m, rng);
      CHECK(db.nearest_index(a) == db.nearest_index_bruteforce(a));
    }
  }
  SUBCASE("empty DB projection is an error") {
    SafeActionDB empty;
    Vec12 a = Vec12::Zero();
    CHECK_THROWS_AS(empty.project(a), std::runtime_error);
  }
}

TEST_CASE("neutral command survives projection exactly") {
  const TensegrityModel m = test_model();
  SafetyConfig cfg;
  cfg.target_entries = 3000;
  cfg.tension_threshold = 1300;
  cfg.mode = ScreenMode::kSettle;
  cfg.sampling = SamplingScheme::kStratified;
  const SafeActionDB db = build_db(m, cfg);
  Vec12 neutral;
  neutral.setConstant(m.motor_neutral);
  CHECK((db.project(neutral) - neutral).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("DB build is deterministic and thread-count independent") {
  const TensegrityModel m = test_model();
  SafetyConfig cfg;
  cfg.target_entries = 1500;
  cfg.tension_threshold = 1300;
  cfg.mode = ScreenMode::kSettle;
  cfg.sampling = SamplingScheme::kStratified;
  cfg.seed = 99;
  cfg.threads = 1;
  const SafeActionDB a = build_db(m, cfg);
  cfg.threads = 4;
  const SafeActionDB b = build_db(m, cfg);
  REQUIRE(a.size() == b.size());
  for (int i = 0; i < a.size(); i += 97) {
    CHECK((a.entry(i) - b.entry(i)).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("DB file round-trip preserves entries and metadata") {
  const TensegrityModel m = test_model();
  SafetyConfig cfg;
  cfg.target_entries = 800;
  cfg.tension_threshold = 900;
  cfg.mode = ScreenMode::kSettle;
  cfg.sampling = SamplingScheme::kStratified;
  const SafeActionDB db = build_db(m, cfg);
  const std::string path = "/tmp/tenseg_test_db_roundtrip.bin";
  db.save(path);
  const SafeActionDB loaded = SafeActionDB::load(path);
  REQUIRE(loaded.size() == db.size());
  CHECK(loaded.model_hash() == db.model_hash());
  CHECK(loaded.tension_threshold() == db.tension_threshold());
  CHECK(loaded.mode() == db.mode());
  for (int i = 0; i < db.size(); i += 31) {
    CHECK((loaded.entry(i) - db.entry(i)).cwiseAbs().maxCoeff() == 0.0);
  }
  std::mt19937_64 rng = make_stream(506);
  for (int trial = 0; trial < 50; ++trial) {
    const Vec12 a = random_action(m, rng);
    CHECK(loaded.nearest_index(a) == db.nearest_index(a));
  }
}
