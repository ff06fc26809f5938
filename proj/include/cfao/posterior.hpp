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

#ifndef CFAO_POSTERIOR_HPP_
#define CFAO_POSTERIOR_HPP_

// Group posteriors p(z | x_1:m) and p(z, y_i = j | x_1:m) computed from
// per-instance class probabilities.
//
// Every posterior here is a sum over label tuples of products with exactly
// one factor per instance, so it is multilinear in the rows of the class
// probability matrix P. Each routine returns the partial derivatives
// partial(i, j) = d p(z | x) / d P(i, j) of that multilinear form; the joint
// probabilities are then joint(i, j) = P(i, j) * partial(i, j), which for
// every task reproduces the closed forms entry by entry. The partials are
// also what the log-likelihood loss back-propagates through.
//
// For the binary tasks the z = 0 quantities are complements of the z = 1
// ones on the simplex: p(z=0) = 1 - p(z=1) and partial_0 = 1 - partial_1.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "cfao/aggregate.hpp"
#include "cfao/types.hpp"

namespace cfao {

template <typename Scalar>
struct GroupPosterior {
  Scalar pz = 0;
  RowMatrix<Scalar> joint;    // m x k, p(z, y_i = j | x)
  RowMatrix<Scalar> partial;  // m x k, d p(z | x) / d P(i, j)
};
using GroupPosteriord = GroupPosterior<double>;

// MIL products over more instances than this are accumulated in log space.
inline constexpr int kLogSpaceMinInstances = 9;

// Largest k^m brute_force_posterior will enumerate.
inline constexpr std::uint64_t kMaxBruteForceTuples = 10'000'000;

// Largest (m + 1) * prod_j (z_j + 1) table the label-proportion DP allocates.
inline constexpr std::uint64_t kMaxLlpTableSize = 50'000'000;

namespace detail {

template <typename Scalar>
GroupPosterior<Scalar> finish(const RowMatrix<Scalar>& probs,
                              RowMatrix<Scalar> partial_one, Scalar pz_one,
                              int z) {
  GroupPosterior<Scalar> out;
  if (z == 1) {
    out.pz = pz_one;
    out.partial = std::move(partial_one);
  } else {
    out.pz = Scalar(1) - pz_one;
    out.partial = (Scalar(1) - partial_one.array()).matrix();
  }
  out.joint = probs.cwiseProduct(out.partial);
  return out;
}

inline void require_binary(int z) {
  if (z != 0 && z != 1) throw Error("binary aggregate label must be 0 or 1");
}

// Index into a cumulative row, clamped to the sentinels cum[0] = 0 and
// cum[k] = 1.
template <typename Scalar>
Scalar cum_at(const RowMatrix<Scalar>& cum, Index row, Index idx) {
  const Index k = cum.cols() - 1;
  return cum(row, std::clamp<Index>(idx, 0, k));
}

// p(|y - v| < r) for the instance stored in cum row `row`, labels 1..k.
template <typename Scalar>
Scalar prob_closer_than(const RowMatrix<Scalar>& cum, Index row, Index v,
                        Index r) {
  const Scalar p = cum_at(cum, row, v + r - 1) - cum_at(cum, row, v - r);
  return std::max(p, Scalar(0));
}

// p(|y - v| > r).
template <typename Scalar>
Scalar prob_farther_than(const RowMatrix<Scalar>& cum, Index row, Index v,
                         Index r) {
  return Scalar(1) - (cum_at(cum, row, v + r) - cum_at(cum, row, v - r - 1));
}

}  // namespace detail

// Class probabilities -> cumulative rows [0, P1, P1+P2, ..., 1].
template <typename Derived>
RowMatrix<typename Derived::Scalar> cumulative_from_probs(
    const Eigen::MatrixBase<Derived>& probs) {
  using Scalar = typename Derived::Scalar;
  RowMatrix<Scalar> cum(probs.rows(), probs.cols() + 1);
  for (Index i = 0; i < probs.rows(); ++i) {
    cum(i, 0) = 0;
    for (Index j = 0; j < probs.cols(); ++j) cum(i, j + 1) = cum(i, j) + probs(i, j);
    cum(i, probs.cols()) = 1;
  }
  return cum;
}

// Cumulative rows -> class probabilities. Throws on invalid input.
template <typename Derived>
RowMatrix<typename Derived::Scalar> probs_from_cumulative(
    const Eigen::MatrixBase<Derived>& cum) {
  using Scalar = typename Derived::Scalar;
  const Index k = cum.cols() - 1;
  if (k < 1) throw Error("cumulative probabilities need at least 2 entries");
  RowMatrix<Scalar> probs(cum.rows(), k);
  for (Index i = 0; i < cum.rows(); ++i) {
    if (std::abs(cum(i, 0)) > Scalar(1e-12) ||
        std::abs(cum(i, k) - Scalar(1)) > Scalar(1e-9)) {
      throw Error("cumulative probabilities must start at 0 and end at 1");
    }
    for (Index j = 1; j <= k; ++j) {
      const Scalar step = cum(i, j) - cum(i, j - 1);
      if (step < Scalar(-1e-12)) {
        throw Error("cumulative probabilities are non-monotone");
      }
      probs(i, j - 1) = std::max(step, Scalar(0));
    }
  }
  return probs;
}

// Pairwise similarity, m = 2: z = [y1 == y2].
template <typename Derived>
GroupPosterior<typename Derived::Scalar> posterior_pairwise(
    const Eigen::MatrixBase<Derived>& probs, int z) {
  using Scalar = typename Derived::Scalar;
  detail::require_binary(z);
  if (probs.rows() != 2) throw Error("pairwise posterior needs 2 instances");
  if (probs.cols() < 2) throw Error("pairwise posterior needs k >= 2");
  const RowMatrix<Scalar> p = probs;
  RowMatrix<Scalar> partial(2, p.cols());
  partial.row(0) = p.row(1);
  partial.row(1) = p.row(0);
  const Scalar pz_one = p.row(0).dot(p.row(1));
  return detail::finish(p, std::move(partial), pz_one, z);
}

// Triplet comparison, m = 3: z = [y1 == y2 and y1 != y3].
template <typename Derived>
GroupPosterior<typename Derived::Scalar> posterior_triplet(
    const Eigen::MatrixBase<Derived>& probs, int z) {
  using Scalar = typename Derived::Scalar;
  detail::require_binary(z);
  if (probs.rows() != 3) throw Error("triplet posterior needs 3 instances");
  if (probs.cols() < 2) throw Error("triplet posterior needs k >= 2");
  const RowMatrix<Scalar> p = probs;
  const auto not3 = (Scalar(1) - p.row(2).array()).matrix();
  RowMatrix<Scalar> partial(3, p.cols());
  partial.row(0) = p.row(1).cwiseProduct(not3);
  partial.row(1) = p.row(0).cwiseProduct(not3);
  // sum over v != j of P1(v) P2(v)
  const RowMatrix<Scalar> same12 = p.row(0).cwiseProduct(p.row(1));
  partial.row(2) = (same12.sum() - same12.array()).matrix();
  const Scalar pz_one = same12.row(0).dot(not3);
  return detail::finish(p, std::move(partial), pz_one, z);
}

// Multiple-instance learning, k = 2 with columns (eta_0, eta_1):
// z = max(y_1:m).
template <typename Derived>
GroupPosterior<typename Derived::Scalar> posterior_mil(
    const Eigen::MatrixBase<Derived>& probs, int z) {
  using Scalar = typename Derived::Scalar;
  detail::require_binary(z);
  if (probs.cols() != 2) throw Error("mil posterior requires k = 2");
  const Index m = probs.rows();
  if (m < 1) throw Error("mil posterior needs at least one instance");
  const RowMatrix<Scalar> p = probs;

  // all_neg = prod_i eta_0(x_i); others_neg(i) = prod_{j != i} eta_0(x_j).
  Scalar all_neg;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> others_neg(m);
  if (m >= kLogSpaceMinInstances) {
    const auto logs = p.col(0).array().log().eval();
    const Scalar total = logs.sum();
    all_neg = std::exp(total);
    others_neg = (total - logs).exp().matrix();
  } else {
    all_neg = p.col(0).prod();
    for (Index i = 0; i < m; ++i) {
      Scalar prod = 1;
      for (Index j = 0; j < m; ++j) {
        if (j != i) prod *= p(j, 0);
      }
      others_neg(i) = prod;
    }
  }

  RowMatrix<Scalar> partial(m, 2);
  partial.col(0) = (Scalar(1) - others_neg.array()).matrix();
  partial.col(1).setOnes();
  return detail::finish(p, std::move(partial), Scalar(1) - all_neg, z);
}

// Ordinal ranks, m = 2: z = [y1 < y2]. Rows of `cum` hold
// [eta_0 = 0, eta_1, ..., eta_k = 1] with eta_j = p(y <= j | x).
template <typename Derived>
GroupPosterior<typename Derived::Scalar> posterior_rank(
    const Eigen::MatrixBase<Derived>& cum, int z) {
  using Scalar = typename Derived::Scalar;
  detail::require_binary(z);
  if (cum.rows() != 2) throw Error("rank posterior needs 2 instances");
  const RowMatrix<Scalar> c = cum;
  const RowMatrix<Scalar> p = probs_from_cumulative(c);
  const Index k = p.cols();
  RowMatrix<Scalar> partial(2, k);
  for (Index j = 1; j <= k; ++j) {
    partial(0, j - 1) = Scalar(1) - c(1, j);  // y2 > j
    partial(1, j - 1) = c(0, j - 1);          // y1 < j
  }
  const Scalar pz_one = partial.row(1).dot(p.row(1));
  return detail::finish(p, std::move(partial), pz_one, z);
}

// Ordinal triplet comparison, m = 3: z = [|y1 - y2| < |y1 - y3|].
template <typename Derived>
GroupPosterior<typename Derived::Scalar> posterior_ordinal_triplet(
    const Eigen::MatrixBase<Derived>& cum, int z) {
  using Scalar = typename Derived::Scalar;
  detail::require_binary(z);
  if (cum.rows() != 3) throw Error("ordinal triplet posterior needs 3 instances");
  const RowMatrix<Scalar> c = cum;
  const RowMatrix<Scalar> p = probs_from_cumulative(c);
  const Index k = p.cols();
  RowMatrix<Scalar> partial = RowMatrix<Scalar>::Zero(3, k);
  for (Index j = 1; j <= k; ++j) {
    for (Index v = 1; v <= k; ++v) {
      const Index r = std::abs(j - v);
      // y1 = j, y3 = v: need |y2 - j| < |v - j|.
      partial(0, j - 1) += p(2, v - 1) * detail::prob_closer_than(c, 1, j, r);
      // y1 = v, y2 = j: need |y3 - v| > |j - v|.
      partial(1, j - 1) += p(0, v - 1) * detail::prob_farther_than(c, 2, v, r);
      // y1 = v, y3 = j: need |y2 - v| < |j - v|.
      partial(2, j - 1) += p(0, v - 1) * detail::prob_closer_than(c, 1, v, r);
    }
  }
  const Scalar pz_one = partial.row(0).dot(p.row(0));
  return detail::finish(p, std::move(partial), pz_one, z);
}

// Label proportions, m >= 2, z = per-class counts. Forward/backward dynamic
// program over the running count vector, confined to the box
// prod_j [0, z_j]. forward[i][c] is the probability that instances 0..i-1
// produce counts c; backward[i][c] the same for instances i..m-1. Then
// partial(i, j) = sum_c forward[i][c] * backward[i+1][z - c - e_j].
template <typename Derived>
GroupPosterior<typename Derived::Scalar> posterior_llp(
    const Eigen::MatrixBase<Derived>& probs, const std::vector<int>& z) {
  using Scalar = typename Derived::Scalar;
  const Index m = probs.rows();
  const Index k = probs.cols();
  if (static_cast<Index>(z.size()) != k) {
    throw Error("llp count vector length must equal k");
  }
  Index total = 0;
  for (int c : z) {
    if (c < 0) throw Error("llp counts must be nonnegative");
    total += c;
  }
  if (total != m) {
    throw Error("llp counts sum to " + std::to_string(total) +
                " but the group has " + std::to_string(m) + " instances");
  }
  const RowMatrix<Scalar> p = probs;

  std::vector<std::uint64_t> stride(static_cast<std::size_t>(k));
  std::uint64_t states = 1;
  for (Index j = 0; j < k; ++j) {
    stride[j] = states;
    states *= static_cast<std::uint64_t>(z[j] + 1);
    if (states * static_cast<std::uint64_t>(m + 1) > kMaxLlpTableSize) {
      throw Error("llp dynamic program table too large");
    }
  }
  const std::uint64_t full = states - 1;  // index of the count vector z
  auto digit = [&](std::uint64_t s, Index j) {
    return static_cast<int>((s / stride[j]) % static_cast<std::uint64_t>(z[j] + 1));
  };

  const std::size_t width = static_cast<std::size_t>(states);
  std::vector<Scalar> forward((m + 1) * width, Scalar(0));
  std::vector<Scalar> backward((m + 1) * width, Scalar(0));
  forward[0] = 1;
  for (Index i = 0; i < m; ++i) {
    const Scalar* prev = &forward[i * width];
    Scalar* next = &forward[(i + 1) * width];
    for (std::uint64_t s = 0; s < states; ++s) {
      if (prev[s] == Scalar(0)) continue;
      for (Index j = 0; j < k; ++j) {
        if (digit(s, j) < z[j]) next[s + stride[j]] += prev[s] * p(i, j);
      }
    }
  }
  backward[m * width] = 1;
  for (Index i = m - 1; i >= 0; --i) {
    const Scalar* after = &backward[(i + 1) * width];
    Scalar* here = &backward[i * width];
    for (std::uint64_t s = 0; s < states; ++s) {
      if (after[s] == Scalar(0)) continue;
      for (Index j = 0; j < k; ++j) {
        if (digit(s, j) < z[j]) here[s + stride[j]] += after[s] * p(i, j);
      }
    }
  }

  GroupPosterior<Scalar> out;
  out.pz = forward[m * width + full];
  out.partial = RowMatrix<Scalar>::Zero(m, k);
  for (Index i = 0; i < m; ++i) {
    const Scalar* before = &forward[i * width];
    const Scalar* after = &backward[(i + 1) * width];
    for (std::uint64_t s = 0; s < states; ++s) {
      if (before[s] == Scalar(0)) continue;
      for (Index j = 0; j < k; ++j) {
        if (digit(s, j) >= z[j]) continue;
        // z - s - e_j is componentwise >= 0 here, so plain index
        // arithmetic stays inside the box.
        out.partial(i, j) += before[s] * after[full - s - stride[j]];
      }
    }
  }
  out.joint = p.cwiseProduct(out.partial);
  return out;
}

// Exhaustive sums over all k^m label tuples y with g(y) = z. `probs` holds
// class probabilities (for ordinal tasks, differences of the cumulative
// form). Reference for every closed form above.
template <typename Derived>
GroupPosterior<typename Derived::Scalar> brute_force_posterior(
    const Task& task, const Eigen::MatrixBase<Derived>& probs,
    const AggregateLabel& z) {
  using Scalar = typename Derived::Scalar;
  task.validate();
  const Index m = probs.rows();
  const Index k = probs.cols();
  if (m != task.m || k != task.k) {
    throw Error("probability matrix shape does not match the task");
  }
  std::uint64_t tuples = 1;
  for (Index i = 0; i < m; ++i) {
    tuples *= static_cast<std::uint64_t>(k);
    if (tuples > kMaxBruteForceTuples) {
      throw Error("brute-force enumeration bound exceeded (k^m > 1e7)");
    }
  }
  const RowMatrix<Scalar> p = probs;
  GroupPosterior<Scalar> out;
  out.joint = RowMatrix<Scalar>::Zero(m, k);
  out.partial = RowMatrix<Scalar>::Zero(m, k);
  std::vector<int> y(static_cast<std::size_t>(m), 0);
  for (std::uint64_t t = 0; t < tuples; ++t) {
    if (aggregate_classes(task, y) == z) {
      Scalar prod = 1;
      for (Index i = 0; i < m; ++i) prod *= p(i, y[i]);
      out.pz += prod;
      for (Index i = 0; i < m; ++i) {
        out.joint(i, y[i]) += prod;
        Scalar rest = 1;
        for (Index v = 0; v < m; ++v) {
          if (v != i) rest *= p(v, y[v]);
        }
        out.partial(i, y[i]) += rest;
      }
    }
    for (Index i = m - 1; i >= 0; --i) {  // odometer increment
      if (++y[i] < k) break;
      y[i] = 0;
    }
  }
  return out;
}

// Clamps entries of a class-probability matrix into [floor, 1 - floor].
template <typename Derived>
RowMatrix<typename Derived::Scalar> clamp_probs(
    const Eigen::MatrixBase<Derived>& probs) {
  using Scalar = typename Derived::Scalar;
  return probs.cwiseMax(Scalar(kProbFloor)).cwiseMin(Scalar(1 - kProbFloor));
}

// Dispatches to the task's closed form. `probs` holds per-instance class
// probabilities (m x k); for ordinal tasks the cumulative form is built from
// them. Entries are clamped by kProbFloor first unless `clamp` is false.
GroupPosteriord group_posterior(const Task& task, const RowMatrixXd& probs,
                                const AggregateLabel& z, bool clamp = true);

}  // namespace cfao

#endif  // CFAO_POSTERIOR_HPP_
