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

#include "lgm/triplet_loss.hpp"

#include <catch2/catch_amalgamated.hpp>

#include "lgm/finite_diff.hpp"
#include "lgm/rng.hpp"

using namespace lgm;

TEST_CASE("triplet hinge basics") {
  SECTION("identical positive and distant negative is inactive") {
    const Tensor a({2}, {1.0, 0.0});
    const Tensor n({2}, {-1.0, 0.05});
    const TripletValue v = triplet_loss(a, a, n, 0.1);
    CHECK(v.loss == 0.0);
    CHECK_FALSE(v.active);
  }
  SECTION("positive equal to negative costs exactly the margin") {
    const Tensor a({3}, {1.0, 0.2, -0.5});
    const Tensor p({3}, {0.3, -1.0, 0.8});
    const TripletValue v = triplet_loss(a, p, p, 0.25);
    CHECK(v.loss == Catch::Approx(0.25).margin(1e-15));
  }
  SECTION("loss is nonnegative") {
    Rng rng(21);
    for (int i = 0; i < 100; ++i) {
      const Tensor a = Tensor::randn({4}, rng);
      const Tensor p = Tensor::randn({4}, rng);
      const Tensor n = Tensor::randn({4}, rng);
      CHECK(triplet_loss(a, p, n, 0.2).loss >= 0.0);
    }
  }
  SECTION("zero-norm input is rejected") {
    const Tensor a({2}, {0.0, 0.0});
    const Tensor p({2}, {1.0, 0.0});
    CHECK_THROWS_AS(triplet_loss(a, p, p, 0.1), NumericError);
  }
}

TEST_CASE("triplet gradients match finite differences away from the kink") {
  Rng rng(22);
  int checked = 0;
  while (checked < 30) {
    ParamSet probe;
    probe.add("a", Tensor::randn({5}, rng));
    probe.add("p", Tensor::randn({5}, rng));
    probe.add("n", Tensor::randn({5}, rng));
    const double margin = 0.2;

    const TripletValue v = triplet_loss(probe.value("a"), probe.value("p"),
                                        probe.value("n"), margin);
    // Stay away from the hinge kink where one-sided subgradients differ.
    const double raw = v.active ? v.loss : -1.0;
    if (std::abs(raw) < 1e-3 || !v.active) continue;
    ++checked;

    const auto fd = FiniteDiff::gradient(
        [&](const ParamSet& q) {
          return triplet_loss(q.value("a"), q.value("p"), q.value("n"), margin,
                              false)
              .loss;
        },
        probe);
    CHECK(gradient_rel_error(v.d_anchor, fd.grad("a")) < 1e-4);
    CHECK(gradient_rel_error(v.d_positive, fd.grad("p")) < 1e-4);
    CHECK(gradient_rel_error(v.d_negative, fd.grad("n")) < 1e-4);
  }
}

TEST_CASE("inactive region has zero subgradient") {
  const Tensor a({2}, {1.0, 0.0});
  const Tensor p({2}, {0.9, 0.1});
  const Tensor n({2}, {-1.0, 0.0});
  const TripletValue v = triplet_loss(a, p, n, 0.01);
  REQUIRE_FALSE(v.active);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(v.d_anchor[i] == 0.0);
    CHECK(v.d_positive[i] == 0.0);
    CHECK(v.d_negative[i] == 0.0);
  }
}
