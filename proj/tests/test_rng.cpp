// Copyright 2026 The cfao Authors. All Rights Reserved.
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

#include <algorithm>
#include <numeric>
#include <vector>

#include "doctest.h"

#include "cfao/types.hpp"
#include "cfao/rng.hpp"

using cfao::Rng;

TEST_CASE("rng matches the SplitMix64 reference stream") {
  // Published first outputs for seed 1234567.
  Rng rng(1234567);
  CHECK(rng.next_u64() == 6457827717110365317ULL);
  CHECK(rng.next_u64() == 3203168211198807973ULL);
  CHECK(rng.next_u64() == 9817491932198370423ULL);
  CHECK(rng.next_u64() == 4593380528125082431ULL);
  CHECK(rng.next_u64() == 16408922859458223821ULL);
  CHECK(rng.counter() == 5);
  CHECK(Rng(0).next_u64() == 0xE220A8397B1DCDAFULL);
}

TEST_CASE("rng streams repeat under the same seed") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) {
    CHECK(a.uniform() == b.uniform());
    CHECK(a.normal() == b.normal());
  }
  CHECK(Rng(1).next_u64() != Rng(2).next_u64());
  CHECK(Rng(7).derive(1).next_u64() != Rng(7).derive(2).next_u64());
  CHECK(Rng(7).derive(1).next_u64() == Rng(7).derive(1).next_u64());
}

TEST_CASE("rng distributions") {
  Rng rng(99);
  const int n = 200000;
  double sum = 0.0, sq = 0.0, usum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    usum += u;
    const double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  CHECK(usum / n == doctest::Approx(0.5).epsilon(0.01));
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(sq / n == doctest::Approx(1.0).epsilon(0.02));

  std::vector<int> hits(6, 0);
  for (int i = 0; i < 60000; ++i) ++hits[rng.below(6)];
  for (int h : hits) CHECK(std::abs(h - 10000) < 400);
}

TEST_CASE("shuffle is a permutation") {
  Rng rng(5);
  std::vector<int> v(50);
  std::iota(v.begin(), v.end(), 0);
  std::vector<int> w = v;
  rng.shuffle(std::span<int>(w));
  CHECK(w != v);
  std::sort(w.begin(), w.end());
  CHECK(w == v);
}
