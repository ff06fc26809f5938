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

#include "cfao/eval.hpp"

#include <limits>

#include "cfao/posterior.hpp"

namespace cfao {

double accuracy(std::span<const int> preds, std::span<const int> labels) {
  if (preds.size() != labels.size()) {
    throw Error("prediction and label vectors differ in length");
  }
  if (preds.empty()) throw Error("accuracy of an empty prediction set");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) hits += preds[i] == labels[i];
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

ConfusionCounts confusion_counts(std::span<const int> preds,
                                 std::span<const int> labels, int k) {
  if (preds.size() != labels.size()) {
    throw Error("prediction and label vectors differ in length");
  }
  ConfusionCounts counts = ConfusionCounts::Zero(k, k);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] < 0 || preds[i] >= k || labels[i] < 0 || labels[i] >= k) {
      throw Error("class index outside 0..k-1 in confusion counts");
    }
    ++counts(preds[i], labels[i]);
  }
  return counts;
}

std::pair<std::int64_t, std::vector<int>> min_cost_assignment(
    const ConfusionCounts& cost) {
  const Index n = cost.rows();
  if (cost.cols() != n) throw Error("assignment needs a square matrix");
  if (n == 0) return {0, {}};
  constexpr std::int64_t kInf = std::numeric_limits<std::int64_t>::max() / 4;
  // 1-based potentials; column 0 is a virtual start.
  std::vector<std::int64_t> u(n + 1, 0), v(n + 1, 0);
  std::vector<Index> match(n + 1, 0), way(n + 1, 0);
  for (Index row = 1; row <= n; ++row) {
    match[0] = row;
    Index col0 = 0;
    std::vector<std::int64_t> minv(n + 1, kInf);
    std::vector<bool> used(n + 1, false);
    do {
      used[col0] = true;
      const Index row0 = match[col0];
      std::int64_t delta = kInf;
      Index col1 = 0;
      for (Index col = 1; col <= n; ++col) {
        if (used[col]) continue;
        const std::int64_t cur = cost(row0 - 1, col - 1) - u[row0] - v[col];
        if (cur < minv[col]) {
          minv[col] = cur;
          way[col] = col0;
        }
        if (minv[col] < delta) {
          delta = minv[col];
          col1 = col;
        }
      }
      for (Index col = 0; col <= n; ++col) {
        if (used[col]) {
          u[match[col]] += delta;
          v[col] -= delta;
        } else {
          minv[col] -= delta;
        }
      }
      col0 = col1;
    } while (match[col0] != 0);
    do {
      const Index col1 = way[col0];
      match[col0] = match[col1];
      col0 = col1;
    } while (col0 != 0);
  }
  std::vector<int> assignment(static_cast<std::size_t>(n), 0);
  std::int64_t total = 0;
  for (Index col = 1; col <= n; ++col) {
    assignment[match[col] - 1] = static_cast<int>(col - 1);
    total += cost(match[col] - 1, col - 1);
  }
  return {total, assignment};
}

namespace {

// Optimal cost of the subproblem on the given rows and columns.
std::int64_t sub_cost(const ConfusionCounts& cost, const std::vector<Index>& rows,
                      const std::vector<Index>& cols) {
  ConfusionCounts sub(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      sub(static_cast<Index>(r), static_cast<Index>(c)) = cost(rows[r], cols[c]);
    }
  }
  return min_cost_assignment(sub).first;
}

}  // namespace

ModifiedAccuracy modified_accuracy(const ConfusionCounts& confusion) {
  const Index k = confusion.rows();
  if (confusion.cols() != k) throw Error("confusion matrix must be square");
  if (k > kMaxAssignmentClasses) {
    throw Error("modified accuracy supports at most 64 classes");
  }
  if ((confusion.array() < 0).any()) throw Error("confusion counts must be nonnegative");
  const std::int64_t total = confusion.sum();
  if (total == 0) throw Error("modified accuracy of an empty confusion matrix");

  const ConfusionCounts cost = -confusion;
  const std::int64_t best = min_cost_assignment(cost).first;

  // Fix rows in order, taking the smallest column that still admits an
  // optimal completion.
  ModifiedAccuracy out;
  out.permutation.assign(static_cast<std::size_t>(k), -1);
  std::vector<Index> free_cols(static_cast<std::size_t>(k));
  for (Index c = 0; c < k; ++c) free_cols[c] = c;
  std::int64_t fixed = 0;
  for (Index row = 0; row < k; ++row) {
    std::vector<Index> rest_rows;
    for (Index r = row + 1; r < k; ++r) rest_rows.push_back(r);
    for (std::size_t idx = 0; idx < free_cols.size(); ++idx) {
      const Index col = free_cols[idx];
      std::vector<Index> rest_cols = free_cols;
      rest_cols.erase(rest_cols.begin() + static_cast<std::ptrdiff_t>(idx));
      const std::int64_t candidate =
          fixed + cost(row, col) + sub_cost(cost, rest_rows, rest_cols);
      if (candidate == best) {
        out.permutation[row] = static_cast<int>(col);
        fixed += cost(row, col);
        free_cols = std::move(rest_cols);
        break;
      }
    }
  }
  out.matched = -best;
  out.accuracy = static_cast<double>(out.matched) / static_cast<double>(total);
  return out;
}

std::vector<int> apply_permutation(std::span<const int> preds,
                                   std::span<const int> permutation) {
  std::vector<int> out(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const int p = preds[i];
    if (p < 0 || static_cast<std::size_t>(p) >= permutation.size()) {
      throw Error("prediction outside the permutation's range");
    }
    out[i] = permutation[static_cast<std::size_t>(p)];
  }
  return out;
}

std::vector<int> predict_groups_mil(const Model& model,
                                    std::span<const AggregateObservation> obs,
                                    MilGroupRule rule) {
  if (model.num_classes() != 2) throw Error("MIL evaluation needs a binary model");
  std::vector<int> out;
  out.reserve(obs.size());
  for (const auto& o : obs) {
    const RowMatrixXd probs =
        clamp_probs(class_probabilities(model.head(), model.forward(o.xs)));
    if (rule == MilGroupRule::kProbability) {
      out.push_back(posterior_mil(probs, 1).pz >= 0.5 ? 1 : 0);
    } else {
      out.push_back((probs.col(1).array() >= 0.5).any() ? 1 : 0);
    }
  }
  return out;
}

double group_accuracy_mil(const Model& model,
                          std::span<const AggregateObservation> obs,
                          MilGroupRule rule) {
  const std::vector<int> preds = predict_groups_mil(model, obs, rule);
  std::vector<int> truth;
  truth.reserve(obs.size());
  for (const auto& o : obs) truth.push_back(o.z.flag);
  return accuracy(preds, truth);
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  if (accuracy) j["accuracy"] = *accuracy;
  if (modified_accuracy) {
    j["modified_accuracy"] = *modified_accuracy;
    j["permutation"] = permutation;
  }
  if (group_accuracy) j["group_accuracy"] = *group_accuracy;
  return j;
}

}  // namespace cfao
