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

#ifndef CFAO_EVAL_HPP_
#define CFAO_EVAL_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"

#include "cfao/data.hpp"
#include "cfao/model.hpp"

namespace cfao {

// Fraction of exact matches. Throws on empty or mismatched input.
double accuracy(std::span<const int> preds, std::span<const int> labels);

// counts(a, b) = number of instances predicted a with true class b
// (0-based classes).
using ConfusionCounts =
    Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

ConfusionCounts confusion_counts(std::span<const int> preds,
                                 std::span<const int> labels, int k);

// Minimum-cost perfect assignment (Kuhn-Munkres with potentials, O(n^3)).
// Returns the cost and assignment[row] = column.
std::pair<std::int64_t, std::vector<int>> min_cost_assignment(
    const ConfusionCounts& cost);

struct ModifiedAccuracy {
  double accuracy = 0.0;
  std::int64_t matched = 0;
  // permutation[a] = true class matched to predicted class a.
  std::vector<int> permutation;
};

inline constexpr int kMaxAssignmentClasses = 64;

// Accuracy maximized over relabelings of the predicted classes. Among
// optimal permutations the lexicographically smallest is returned.
ModifiedAccuracy modified_accuracy(const ConfusionCounts& confusion);

std::vector<int> apply_permutation(std::span<const int> preds,
                                   std::span<const int> permutation);

enum class MilGroupRule {
  kProbability,  // p(z = 1 | x) >= 0.5
  kAnyInstance,  // some instance has eta_1 >= 0.5
};

// Predicted bag label for each observation.
std::vector<int> predict_groups_mil(const Model& model,
                                    std::span<const AggregateObservation> obs,
                                    MilGroupRule rule = MilGroupRule::kProbability);

double group_accuracy_mil(const Model& model,
                          std::span<const AggregateObservation> obs,
                          MilGroupRule rule = MilGroupRule::kProbability);

struct EvalReport {
  std::optional<double> accuracy;
  std::optional<double> modified_accuracy;
  std::vector<int> permutation;
  std::optional<double> group_accuracy;

  nlohmann::json to_json() const;
};

}  // namespace cfao

#endif  // CFAO_EVAL_HPP_
