// Copyright (c) 2026 lgm-sv authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "lgm/evaluation.hpp"

#include <catch2/catch_amalgamated.hpp>

#include "lgm/rng.hpp"
#include "test_support.hpp"

using namespace lgm;

namespace {

ScoreSet from_vectors(const std::vector<double>& targets,
                      const std::vector<double>& nontargets) {
  ScoreSet s;
  int i = 0;
  for (double v : targets) s.add(true, "e", "t" + std::to_string(i++), v);
  for (double v : nontargets) s.add(false, "e", "t" + std::to_string(i++), v);
  return s;
}

// The hand-derived reference fixture.
ScoreSet fixture() {
  return from_vectors({0.9, 0.8, 0.7, 0.3}, {0.6, 0.2, 0.1, 0.05});
}

ScoreSet random_set(Rng& rng, std::size_t n) {
  ScoreSet s;
  // Guarantee one of each class, then fill randomly.
  s.add(true, "e", "t0", rng.normal());
  s.add(false, "e", "t1", rng.normal());
  for (std::size_t i = 2; i < n; ++i)
    s.add(rng.uniform() < 0.4, "e", "t" + std::to_string(i),
          rng.uniform() < 0.2 ? std::floor(rng.normal() * 4.0) / 4.0
                              : rng.normal());
  return s;
}

}  // namespace

TEST_CASE("eer on simple fixtures") {
  SECTION("perfect separation") {
    const auto r = eer(from_vectors({0.9, 0.8}, {0.1, 0.2}));
    CHECK(r.eer == 0.0);
    CHECK(r.eer_step == 0.0);
  }
  SECTION("hand-derived fixture crosses at 0.25") {
    const auto r = eer(fixture());
    CHECK(r.eer == Catch::Approx(0.25).margin(1e-12));
    CHECK(r.threshold == Catch::Approx(0.6).margin(1e-12));
    CHECK(r.eer_step == Catch::Approx(0.25).margin(1e-12));
  }
  SECTION("inverted labels give EER 1") {
    const auto r = eer(from_vectors({0.1, 0.2}, {0.9, 0.8}));
    CHECK(r.eer == 1.0);
  }
  SECTION("single-class input is an error") {
    ScoreSet s;
    s.add(true, "e", "t", 0.5);
    CHECK_THROWS_AS(eer(s), DataError);
  }
  SECTION("affine score transforms do not change the EER") {
    Rng rng(61);
    for (int i = 0; i < 50; ++i) {
      ScoreSet s = random_set(rng, 5 + rng.uniform_index(40));
      const auto base = eer(s);
      ScoreSet mapped;
      for (const auto& item : s.items)
        mapped.add(item.trial.target, item.trial.enroll_id, item.trial.test_id,
                   2.5 * item.score - 7.0);
      const auto moved = eer(mapped);
      CHECK(moved.eer == Catch::Approx(base.eer).margin(1e-12));
      CHECK(moved.eer_step == Catch::Approx(base.eer_step).margin(1e-12));
    }
  }
  SECTION("step value agrees with the exhaustive sweep oracle") {
    Rng rng(62);
    for (int i = 0; i < 300; ++i) {
      ScoreSet s = random_set(rng, 5 + rng.uniform_index(60));
      const auto r = eer(s);
      const auto oracle = lgm_test::exhaustive_eer(s);
      CHECK(std::abs(r.eer_step - oracle.eer) <= 1e-9);
    }
  }
}

TEST_CASE("accuracy") {
  SECTION("perfect separation scores 1") {
    const auto r = acc(from_vectors({0.9, 0.8}, {0.1, 0.2}));
    CHECK(r.acc == 1.0);
  }
  SECTION("indistinguishable scores give 0.5 on a balanced set") {
    const auto r = acc(from_vectors({0.4, 0.4}, {0.4, 0.4}));
    CHECK(r.acc == 0.5);
  }
  SECTION("fixture best threshold sits between 0.6 and 0.7") {
    // Exhaustive sweep of the fixture: one error (the 0.3 target) at any
    // boundary in (0.6, 0.7], so best accuracy is 7/8.
    const auto r = acc(fixture());
    CHECK(r.acc == Catch::Approx(lgm_test::exhaustive_acc(fixture())).margin(0.0));
    CHECK(r.acc == Catch::Approx(0.875).margin(1e-15));
    CHECK(r.threshold > 0.6);
    CHECK(r.threshold < 0.7);
  }
  SECTION("never below the majority-class baseline") {
    Rng rng(63);
    for (int i = 0; i < 200; ++i) {
      ScoreSet s = random_set(rng, 4 + rng.uniform_index(40));
      const double targets = static_cast<double>(s.num_targets());
      const double total = static_cast<double>(s.items.size());
      const double majority =
          std::max(targets / total, (total - targets) / total);
      CHECK(acc(s).acc >= majority - 1e-12);
    }
  }
  SECTION("matches the exhaustive accuracy oracle exactly") {
    Rng rng(64);
    for (int i = 0; i < 200; ++i) {
      ScoreSet s = random_set(rng, 4 + rng.uniform_index(30));
      CHECK(acc(s).acc == lgm_test::exhaustive_acc(s));
    }
  }
  SECTION("empty set is an error") {
    CHECK_THROWS_AS(acc(ScoreSet{}), DataError);
  }
}

TEST_CASE("det points") {
  SECTION("endpoints cover accept-all and reject-all") {
    const auto points = det_points(fixture());
    CHECK(points.front().far == 1.0);
    CHECK(points.front().frr == 0.0);
    CHECK(points.back().far == 0.0);
    CHECK(points.back().frr == 1.0);
  }
  SECTION("monotone in the threshold") {
    Rng rng(65);
    for (int i = 0; i < 100; ++i) {
      const auto points = det_points(random_set(rng, 5 + rng.uniform_index(50)));
      for (std::size_t j = 1; j < points.size(); ++j) {
        CHECK(points[j].far <= points[j - 1].far);
        CHECK(points[j].frr >= points[j - 1].frr);
        CHECK(points[j].threshold > points[j - 1].threshold);
      }
    }
  }
  SECTION("fixture contains the FAR == FRR == 0.25 operating point") {
    const auto points = det_points(fixture());
    bool found = false;
    for (const auto& p : points)
      found = found || (p.far == 0.25 && p.frr == 0.25);
    CHECK(found);
  }
}
