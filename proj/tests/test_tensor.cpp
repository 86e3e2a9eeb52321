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

#include "lgm/tensor.hpp"

#include <catch2/catch_amalgamated.hpp>

#include "lgm/rng.hpp"

using namespace lgm;

TEST_CASE("add is elementwise") {
  const Tensor a({2}, {1.0, 2.0});
  const Tensor b({2}, {3.0, 4.0});
  const Tensor c = add(a, b);
  CHECK(c[0] == 4.0);
  CHECK(c[1] == 6.0);
}

TEST_CASE("shape mismatch is an error") {
  const Tensor a({2}, {1.0, 2.0});
  const Tensor b({3}, {1.0, 2.0, 3.0});
  CHECK_THROWS_AS(add(a, b), ConfigError);
  CHECK_THROWS_AS(mul(a, b), ConfigError);
}

TEST_CASE("non-finite results are rejected") {
  const Tensor a({1}, {1e308});
  CHECK_THROWS_AS(add(a, a), NumericError);
}

TEST_CASE("relu clamps negatives") {
  const Tensor a({3}, {-1.0, 0.0, 2.0});
  const Tensor r = relu(a);
  CHECK(r[0] == 0.0);
  CHECK(r[1] == 0.0);
  CHECK(r[2] == 2.0);
}

TEST_CASE("matmul against hand computation") {
  const Tensor a({2, 3}, {1, 2, 3, 4, 5, 6});
  const Tensor b({3, 2}, {7, 8, 9, 10, 11, 12});
  const Tensor c = matmul(a, b);
  CHECK(c.at(0, 0) == 58.0);
  CHECK(c.at(0, 1) == 64.0);
  CHECK(c.at(1, 0) == 139.0);
  CHECK(c.at(1, 1) == 154.0);
}

TEST_CASE("conv2d with a 1x1 identity filter is the identity") {
  Rng rng(11);
  const Tensor map = Tensor::randn({1, 5, 7}, rng);
  const Tensor w({1, 1, 1, 1}, {1.0});
  const Tensor out = conv2d(map, w, Tensor{}, 1, 1, 0, 0);
  REQUIRE(out.same_shape(map));
  for (std::size_t i = 0; i < out.numel(); ++i) CHECK(out[i] == map[i]);
}

TEST_CASE("conv2d output extent follows the stride formula") {
  Rng rng(3);
  const Tensor map = Tensor::randn({1, 11, 9}, rng);
  const Tensor w = Tensor::randn({2, 1, 5, 5}, rng);
  const Tensor out = conv2d(map, w, Tensor{}, 2, 2, 2, 2);
  CHECK(out.extent(0) == 2);
  CHECK(out.extent(1) == (11 + 4 - 5) / 2 + 1);
  CHECK(out.extent(2) == (9 + 4 - 5) / 2 + 1);
}

TEST_CASE("conv2d hand-checked 2x2 example") {
  // Single channel 2x2 input, 2x2 filter, no padding: one output value.
  const Tensor in({1, 2, 2}, {1, 2, 3, 4});
  const Tensor w({1, 1, 2, 2}, {10, 20, 30, 40});
  const Tensor out = conv2d(in, w, Tensor{}, 1, 1, 0, 0);
  REQUIRE(out.numel() == 1);
  CHECK(out[0] == 1 * 10 + 2 * 20 + 3 * 30 + 4 * 40);
}

TEST_CASE("conv2d is linear in its input") {
  Rng rng(5);
  const Tensor a = Tensor::randn({2, 8, 6}, rng);
  const Tensor b = Tensor::randn({2, 8, 6}, rng);
  const Tensor w = Tensor::randn({3, 2, 3, 3}, rng);
  const Tensor lhs = conv2d(add(a, b), w, Tensor{}, 1, 1, 1, 1);
  const Tensor rhs =
      add(conv2d(a, w, Tensor{}, 1, 1, 1, 1), conv2d(b, w, Tensor{}, 1, 1, 1, 1));
  REQUIRE(lhs.same_shape(rhs));
  for (std::size_t i = 0; i < lhs.numel(); ++i)
    CHECK(std::abs(lhs[i] - rhs[i]) <= 1e-10);
}

TEST_CASE("sum and mean reduce over the named axis") {
  const Tensor t({2, 3}, {1, 2, 3, 4, 5, 6});
  const Tensor s0 = sum(t, 0);
  REQUIRE(s0.shape() == std::vector<std::size_t>{3});
  CHECK(s0[0] == 5.0);
  CHECK(s0[1] == 7.0);
  CHECK(s0[2] == 9.0);
  const Tensor m1 = mean(t, 1);
  REQUIRE(m1.shape() == std::vector<std::size_t>{2});
  CHECK(m1[0] == 2.0);
  CHECK(m1[1] == 5.0);
}

TEST_CASE("rng streams are reproducible") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) {
    CHECK(a.uniform() == b.uniform());
    CHECK(a.normal() == b.normal());
  }
  Rng c(43);
  bool all_equal = true;
  Rng a2(42);
  for (int i = 0; i < 10; ++i) all_equal = all_equal && (a2.normal() == c.normal());
  CHECK_FALSE(all_equal);
}
