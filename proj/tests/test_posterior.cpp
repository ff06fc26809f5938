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

#include <cmath>
#include <cstdlib>
#include <vector>

#include "doctest.h"

#include "cfao/types.hpp"
#include "cfao/posterior.hpp"
#include "cfao/rng.hpp"

using namespace cfao;

namespace {

RowMatrixXd rows(std::initializer_list<std::initializer_list<double>> values) {
  RowMatrixXd out(static_cast<Index>(values.size()), static_cast<Index>(values.begin()->size()));
  Index i = 0;
  for (const auto& r : values) {
    Index j = 0;
    for (double v : r) out(i, j++) = v;
    ++i;
  }
  return out;
}

RowMatrixXd random_probs(Index m, Index k, Rng& rng) {
  RowMatrixXd p(m, k);
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < k; ++j) p(i, j) = std::exp(2.0 * rng.normal());
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

// Aggregate function written out independently of the library.
bool matches(const Task& task, const std::vector<int>& y, const AggregateLabel& z) {
  switch (task.kind) {
    case TaskKind::kPairwise: return (y[0] == y[1]) == (z.flag == 1);
    case TaskKind::kTriplet: return (y[0] == y[1] && y[0] != y[2]) == (z.flag == 1);
    case TaskKind::kRank: return (y[0] < y[1]) == (z.flag == 1);
    case TaskKind::kOrdinalTriplet:
      return (std::abs(y[0] - y[1]) < std::abs(y[0] - y[2])) == (z.flag == 1);
    case TaskKind::kMil: {
      bool any = false;
      for (int v : y) any = any || v == 1;
      return any == (z.flag == 1);
    }
    case TaskKind::kLlp: {
      std::vector<int> counts(static_cast<std::size_t>(task.k), 0);
      for (int v : y) ++counts[static_cast<std::size_t>(v)];
      return counts == z.counts;
    }
  }
  return false;
}

struct Reference {
  double pz = 0.0;
  RowMatrixXd joint;
};

Reference enumerate(const Task& task, const RowMatrixXd& p, const AggregateLabel& z) {
  Reference out{0.0, RowMatrixXd::Zero(task.m, task.k)};
  std::vector<int> y(static_cast<std::size_t>(task.m), 0);
  while (true) {
    if (matches(task, y, z)) {
      double w = 1.0;
      for (int i = 0; i < task.m; ++i) w *= p(i, y[i]);
      out.pz += w;
      for (int i = 0; i < task.m; ++i) out.joint(i, y[i]) += w;
    }
    int i = task.m - 1;
    while (i >= 0 && ++y[i] == task.k) y[i--] = 0;
    if (i < 0) break;
  }
  return out;
}

AggregateLabel random_feasible(const Task& task, const RowMatrixXd& p, Rng& rng) {
  std::vector<int> y(static_cast<std::size_t>(task.m));
  for (int i = 0; i < task.m; ++i) {
    double u = rng.uniform();
    int j = 0;
    while (j + 1 < task.k && u >= p(i, j)) u -= p(i, j++);
    y[i] = j;
  }
  return aggregate_classes(task, y);
}

}  // namespace

TEST_CASE("pairwise closed form") {
  const auto uniform = posterior_pairwise(rows({{0.5, 0.5}, {0.5, 0.5}}), 1);
  CHECK(uniform.pz == doctest::Approx(0.5).epsilon(1e-15));
  CHECK((uniform.joint.array() - 0.25).abs().maxCoeff() < 1e-15);

  const RowMatrixXd p = rows({{0.8, 0.2}, {0.6, 0.4}});
  const auto post = posterior_pairwise(p, 1);
  CHECK(std::abs(post.pz - 0.56) < 1e-12);
  CHECK(std::abs(post.joint(0, 0) - 0.48) < 1e-12);
  CHECK(std::abs(post.joint(0, 1) - 0.08) < 1e-12);
  CHECK(std::abs(posterior_pairwise(p, 0).pz - 0.44) < 1e-12);

  const auto brute = brute_force_posterior(make_task(TaskKind::kPairwise, 2, 2), p,
                                           AggregateLabel::binary(1));
  CHECK(std::abs(brute.pz - 0.56) < 1e-12);
  CHECK((brute.joint - post.joint).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(posterior_pairwise(p, 2), Error);
}

TEST_CASE("triplet closed form") {
  const RowMatrixXd half = RowMatrixXd::Constant(3, 2, 0.5);
  CHECK(std::abs(posterior_triplet(half, 1).pz - 0.25) < 1e-15);
  CHECK(std::abs(posterior_triplet(half, 0).pz - 0.75) < 1e-15);
}

TEST_CASE("label proportion closed form") {
  const RowMatrixXd p = rows({{0.7, 0.3}, {0.4, 0.6}});
  const auto post = posterior_llp(p, {1, 1});
  CHECK(std::abs(post.pz - 0.54) < 1e-12);
  CHECK(std::abs(post.joint(0, 0) - 0.42) < 1e-12);
  CHECK(std::abs(post.joint(0, 1) - 0.12) < 1e-12);

  Rng rng(3);
  const RowMatrixXd q = random_probs(4, 3, rng);
  const auto all_first = posterior_llp(q, {4, 0, 0});
  CHECK(std::abs(all_first.pz - q.col(0).prod()) < 1e-15);
  for (Index i = 0; i < 4; ++i) {
    CHECK(std::abs(all_first.joint(i, 0) - all_first.pz) < 1e-15);
    CHECK(all_first.joint(i, 1) == 0.0);
    CHECK(all_first.joint(i, 2) == 0.0);
  }
  CHECK_THROWS_AS(posterior_llp(p, {1, 0}), Error);
  CHECK_THROWS_AS(posterior_llp(p, {1, 1, 0}), Error);
}

TEST_CASE("label proportions with m = 6, k = 10 against enumeration") {
  Rng rng(61);
  const Task task = make_task(TaskKind::kLlp, 6, 10);
  for (int t = 0; t < 3; ++t) {
    const RowMatrixXd p = random_probs(6, 10, rng);
    const AggregateLabel z = random_feasible(task, p, rng);
    const auto post = group_posterior(task, p, z, false);
    const Reference ref = enumerate(task, p, z);
    CHECK(std::abs(post.pz - ref.pz) < 1e-10);
    CHECK((post.joint - ref.joint).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("multiple-instance closed form") {
  const RowMatrixXd p = rows({{0.1, 0.9}, {0.5, 0.5}});
  CHECK(std::abs(posterior_mil(p, 0).pz - 0.05) < 1e-15);
  const auto pos = posterior_mil(p, 1);
  CHECK(std::abs(pos.pz - 0.95) < 1e-15);
  CHECK(std::abs(pos.joint(0, 1) - 0.9) < 1e-15);

  const RowMatrixXd none = rows({{1.0, 0.0}, {1.0, 0.0}, {1.0, 0.0}});
  CHECK(posterior_mil(none, 0).pz == 1.0);
  CHECK(posterior_mil(none, 1).pz == 0.0);

  Rng rng(4);
  const RowMatrixXd q = random_probs(5, 2, rng);
  const auto neg = posterior_mil(q, 0);
  for (Index i = 0; i < 5; ++i) CHECK(neg.joint(i, 1) == 0.0);
}

TEST_CASE("multiple-instance products in log space for large bags") {
  Rng rng(12);
  const Task task = make_task(TaskKind::kMil, 12, 2);
  const RowMatrixXd p = random_probs(12, 2, rng);
  for (int z = 0; z < 2; ++z) {
    const auto post = posterior_mil(p, z);
    const Reference ref = enumerate(task, p, AggregateLabel::binary(z));
    CHECK(std::abs(post.pz - ref.pz) < 1e-12);
    CHECK((post.joint - ref.joint).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("rank closed form") {
  RowMatrixXd cum(2, 3);
  cum << 0, 0.5, 1, 0, 0.5, 1;
  CHECK(std::abs(posterior_rank(cum, 1).pz - 0.25) < 1e-15);
  CHECK(std::abs(posterior_rank(cum, 0).pz - 0.75) < 1e-15);

  RowMatrixXd single(2, 2);
  single << 0, 1, 0, 1;
  CHECK(posterior_rank(single, 1).pz == 0.0);

  Rng rng(8);
  for (int t = 0; t < 20; ++t) {
    const RowMatrixXd c = cumulative_from_probs(random_probs(2, 4, rng));
    for (int z = 0; z < 2; ++z) {
      const auto post = posterior_rank(c, z);
      CHECK((post.joint.rowwise().sum().array() - post.pz).abs().maxCoeff() < 1e-10);
    }
  }
}

TEST_CASE("ordinal triplet closed form") {
  const Task task = make_task(TaskKind::kOrdinalTriplet, 3, 2);
  const RowMatrixXd half = RowMatrixXd::Constant(3, 2, 0.5);
  const auto post = posterior_ordinal_triplet(cumulative_from_probs(half), 1);
  CHECK(std::abs(post.pz - enumerate(task, half, AggregateLabel::binary(1)).pz) < 1e-15);

  RowMatrixXd cum(1, 4);
  cum << 0, 0.2, 0.7, 1;
  CHECK(detail::prob_closer_than(cum, 0, 2, 0) == 0.0);
  CHECK(std::abs(detail::prob_closer_than(cum, 0, 2, 1) - 0.5) < 1e-15);
  CHECK(std::abs(detail::prob_farther_than(cum, 0, 1, 0) - 0.8) < 1e-15);

  Rng rng(9);
  for (int t = 0; t < 20; ++t) {
    const RowMatrixXd c = cumulative_from_probs(random_probs(3, 5, rng));
    const double total = posterior_ordinal_triplet(c, 0).pz + posterior_ordinal_triplet(c, 1).pz;
    CHECK(std::abs(total - 1.0) < 1e-10);
  }
}

TEST_CASE("cumulative conversions") {
  Rng rng(10);
  const RowMatrixXd p = random_probs(3, 4, rng);
  const RowMatrixXd c = cumulative_from_probs(p);
  CHECK(c.cols() == 5);
  CHECK(c(1, 0) == 0.0);
  CHECK(c(1, 4) == 1.0);
  CHECK((probs_from_cumulative(c) - p).cwiseAbs().maxCoeff() < 1e-15);
  RowMatrixXd bad(1, 4);
  bad << 0, 0.7, 0.5, 1;
  CHECK_THROWS_WITH_AS(probs_from_cumulative(bad), doctest::Contains("non-monotone"), Error);
}

TEST_CASE("every task against independent enumeration") {
  Rng rng(2024);
  const TaskKind kinds[] = {TaskKind::kPairwise, TaskKind::kTriplet, TaskKind::kLlp,
                            TaskKind::kMil, TaskKind::kRank, TaskKind::kOrdinalTriplet};
  for (TaskKind kind : kinds) {
    for (int t = 0; t < 30; ++t) {
      const int k = kind == TaskKind::kMil ? 2 : 2 + static_cast<int>(rng.below(4));
      const int m = kind == TaskKind::kLlp || kind == TaskKind::kMil
                        ? 2 + static_cast<int>(rng.below(4))
                        : default_group_size(kind);
      const Task task = make_task(kind, m, k);
      const RowMatrixXd p = random_probs(m, k, rng);
      double total = 0.0;
      for (const auto& z : enumerate_z(task)) {
        const Reference ref = enumerate(task, p, z);
        const auto post = group_posterior(task, p, z, false);
        CHECK(std::abs(post.pz - ref.pz) < 1e-10);
        CHECK((post.joint - ref.joint).cwiseAbs().maxCoeff() < 1e-10);
        const auto brute = brute_force_posterior(task, p, z);
        CHECK(std::abs(brute.pz - ref.pz) < 1e-12);
        total += post.pz;
      }
      CHECK(std::abs(total - 1.0) < 1e-10);
    }
  }
}

TEST_CASE("one-hot probabilities select the true tuple") {
  const Task task = make_task(TaskKind::kTriplet, 3, 3);
  const std::vector<int> y = {2, 2, 0};
  RowMatrixXd p = RowMatrixXd::Zero(3, 3);
  for (int i = 0; i < 3; ++i) p(i, y[i]) = 1.0;
  CHECK(brute_force_posterior(task, p, AggregateLabel::binary(1)).pz == 1.0);
  CHECK(brute_force_posterior(task, p, AggregateLabel::binary(0)).pz == 0.0);
}

TEST_CASE("group posterior guards") {
  const Task task = make_task(TaskKind::kPairwise, 2, 3);
  CHECK_THROWS_AS(group_posterior(task, RowMatrixXd::Constant(3, 3, 1.0 / 3), AggregateLabel::binary(1)),
                  Error);
  CHECK_THROWS_AS(group_posterior(task, RowMatrixXd::Constant(2, 3, 1.0 / 3), AggregateLabel::binary(3)),
                  Error);
  // Clamping keeps p(z | x) away from zero.
  RowMatrixXd hard(2, 3);
  hard << 1, 0, 0, 0, 1, 0;
  const auto clamped = group_posterior(task, hard, AggregateLabel::binary(1));
  CHECK(clamped.pz > 0.0);
  CHECK(group_posterior(task, hard, AggregateLabel::binary(1), false).pz == 0.0);
}
