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

#ifndef CFAO_AGGREGATE_HPP_
#define CFAO_AGGREGATE_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cfao {

enum class TaskKind { kPairwise, kTriplet, kLlp, kMil, kRank, kOrdinalTriplet };

std::string_view to_string(TaskKind kind);
TaskKind parse_task_kind(std::string_view name);

// Supervision regime plus its group size m and class count k.
//
// Labels follow the per-task convention: 1..k for every task except MIL,
// whose labels are {0, 1} with 1 = positive. Internally every routine works
// with 0-based class indices; for MIL the class index equals the label.
struct Task {
  TaskKind kind = TaskKind::kPairwise;
  int m = 2;
  int k = 2;

  // Throws cfao::Error when m or k violate the task's constraints.
  void validate() const;

  bool binary_z() const { return kind != TaskKind::kLlp; }
  bool ordinal() const {
    return kind == TaskKind::kRank || kind == TaskKind::kOrdinalTriplet;
  }
  int class_of_label(int label) const;
  int label_of_class(int cls) const;

  friend bool operator==(const Task&, const Task&) = default;
};

// Group size used when a configuration does not name one.
int default_group_size(TaskKind kind);

// False when the aggregate labels only pin classes down up to a relabeling
// (similarity and comparison tasks; ordinal triplets up to reversal), so
// predictions are scored with modified accuracy.
bool classes_identifiable(TaskKind kind);

// Builds and validates a task.
Task make_task(TaskKind kind, int m, int k);

// z for one group: a 0/1 flag for the binary tasks, a per-class count vector
// (summing to m) for label proportions.
struct AggregateLabel {
  int flag = 0;
  std::vector<int> counts;

  static AggregateLabel binary(int value) { return {value, {}}; }
  static AggregateLabel proportions(std::vector<int> c) {
    return {0, std::move(c)};
  }
  bool is_counts() const { return !counts.empty(); }

  friend bool operator==(const AggregateLabel&,
                         const AggregateLabel&) = default;
};

std::string to_string(const AggregateLabel& z);

// g(y_1:m) on task-convention labels.
AggregateLabel aggregate_label(const Task& task, std::span<const int> labels);

// g(y_1:m) on 0-based class indices. No range checks.
AggregateLabel aggregate_classes(const Task& task, std::span<const int> classes);

// True when z is a member of the task's aggregate label space.
bool is_feasible(const Task& task, const AggregateLabel& z);

// Upper bound on the number of label-proportion vectors enumerate_z returns.
inline constexpr std::uint64_t kMaxCompositions = 1'000'000;

// Number of count vectors of length k summing to m, C(m+k-1, k-1).
std::uint64_t composition_count(int m, int k);

// Every feasible z. Label-proportion vectors come in descending
// lexicographic order, e.g. (2,0), (1,1), (0,2).
std::vector<AggregateLabel> enumerate_z(const Task& task);

}  // namespace cfao

#endif  // CFAO_AGGREGATE_HPP_
