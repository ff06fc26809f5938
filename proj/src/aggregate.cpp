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

#include "cfao/aggregate.hpp"

#include <algorithm>
#include <cstdlib>
#include <limits>

#include "cfao/types.hpp"

namespace cfao {

std::string_view to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::kPairwise: return "pairwise";
    case TaskKind::kTriplet: return "triplet";
    case TaskKind::kLlp: return "llp";
    case TaskKind::kMil: return "mil";
    case TaskKind::kRank: return "rank";
    case TaskKind::kOrdinalTriplet: return "ordinal_triplet";
  }
  return "unknown";
}

TaskKind parse_task_kind(std::string_view name) {
  for (TaskKind kind :
       {TaskKind::kPairwise, TaskKind::kTriplet, TaskKind::kLlp,
        TaskKind::kMil, TaskKind::kRank, TaskKind::kOrdinalTriplet}) {
    if (to_string(kind) == name) return kind;
  }
  throw Error("unknown task kind '" + std::string(name) + "'");
}

bool classes_identifiable(TaskKind kind) {
  return kind != TaskKind::kPairwise && kind != TaskKind::kTriplet &&
         kind != TaskKind::kOrdinalTriplet;
}

int default_group_size(TaskKind kind) {
  switch (kind) {
    case TaskKind::kPairwise:
    case TaskKind::kRank: return 2;
    case TaskKind::kTriplet:
    case TaskKind::kOrdinalTriplet: return 3;
    case TaskKind::kLlp: return 6;
    case TaskKind::kMil: return 4;
  }
  return 2;
}

void Task::validate() const {
  const std::string name(to_string(kind));
  if (k < 1) throw Error(name + ": k must be >= 1");
  switch (kind) {
    case TaskKind::kPairwise:
    case TaskKind::kRank:
      if (m != 2) throw Error(name + " requires m = 2, got " + std::to_string(m));
      break;
    case TaskKind::kTriplet:
    case TaskKind::kOrdinalTriplet:
      if (m != 3) throw Error(name + " requires m = 3, got " + std::to_string(m));
      break;
    case TaskKind::kMil:
      if (k != 2) throw Error("mil requires k = 2, got " + std::to_string(k));
      [[fallthrough]];
    case TaskKind::kLlp:
      if (m < 2) throw Error(name + " requires m >= 2, got " + std::to_string(m));
      break;
  }
}

Task make_task(TaskKind kind, int m, int k) {
  Task task{kind, m, k};
  task.validate();
  return task;
}

int Task::class_of_label(int label) const {
  return kind == TaskKind::kMil ? label : label - 1;
}

int Task::label_of_class(int cls) const {
  return kind == TaskKind::kMil ? cls : cls + 1;
}

std::string to_string(const AggregateLabel& z) {
  if (!z.is_counts()) return std::to_string(z.flag);
  std::string out = "(";
  for (std::size_t j = 0; j < z.counts.size(); ++j) {
    if (j) out += ",";
    out += std::to_string(z.counts[j]);
  }
  return out + ")";
}

AggregateLabel aggregate_classes(const Task& task,
                                 std::span<const int> y) {
  switch (task.kind) {
    case TaskKind::kPairwise:
      return AggregateLabel::binary(y[0] == y[1]);
    case TaskKind::kTriplet:
      // d(y, y') = [y != y'], so z = 1 iff y1 == y2 and y1 != y3.
      return AggregateLabel::binary(y[0] == y[1] && y[0] != y[2]);
    case TaskKind::kLlp: {
      std::vector<int> counts(static_cast<std::size_t>(task.k), 0);
      for (int c : y) ++counts[static_cast<std::size_t>(c)];
      return AggregateLabel::proportions(std::move(counts));
    }
    case TaskKind::kMil:
      return AggregateLabel::binary(*std::max_element(y.begin(), y.end()));
    case TaskKind::kRank:
      return AggregateLabel::binary(y[0] < y[1]);
    case TaskKind::kOrdinalTriplet:
      return AggregateLabel::binary(std::abs(y[0] - y[1]) <
                                    std::abs(y[0] - y[2]));
  }
  return {};
}

AggregateLabel aggregate_label(const Task& task, std::span<const int> labels) {
  if (static_cast<int>(labels.size()) != task.m) {
    throw Error("expected " + std::to_string(task.m) + " labels, got " +
                std::to_string(labels.size()));
  }
  std::vector<int> classes(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int c = task.class_of_label(labels[i]);
    if (c < 0 || c >= task.k) {
      throw Error("label " + std::to_string(labels[i]) + " out of range for " +
                  std::string(to_string(task.kind)) + " with k = " +
                  std::to_string(task.k));
    }
    classes[i] = c;
  }
  return aggregate_classes(task, classes);
}

bool is_feasible(const Task& task, const AggregateLabel& z) {
  if (task.binary_z()) return !z.is_counts() && (z.flag == 0 || z.flag == 1);
  if (static_cast<int>(z.counts.size()) != task.k) return false;
  int total = 0;
  for (int c : z.counts) {
    if (c < 0) return false;
    total += c;
  }
  return total == task.m;
}

std::uint64_t composition_count(int m, int k) {
  // C(m+k-1, k-1), saturating at uint64 max.
  const std::uint64_t n = static_cast<std::uint64_t>(m + k - 1);
  std::uint64_t r = static_cast<std::uint64_t>(std::min(k - 1, m));
  std::uint64_t result = 1;
  for (std::uint64_t i = 1; i <= r; ++i) {
    const std::uint64_t num = n - r + i;
    if (result > std::numeric_limits<std::uint64_t>::max() / num) {
      return std::numeric_limits<std::uint64_t>::max();
    }
    result = result * num / i;
  }
  return result;
}

namespace {

void compositions(int remaining, std::size_t pos, std::vector<int>& current,
                  std::vector<AggregateLabel>& out) {
  if (pos + 1 == current.size()) {
    current[pos] = remaining;
    out.push_back(AggregateLabel::proportions(current));
    return;
  }
  for (int c = remaining; c >= 0; --c) {
    current[pos] = c;
    compositions(remaining - c, pos + 1, current, out);
  }
}

}  // namespace

std::vector<AggregateLabel> enumerate_z(const Task& task) {
  task.validate();
  if (task.binary_z()) {
    return {AggregateLabel::binary(0), AggregateLabel::binary(1)};
  }
  const std::uint64_t count = composition_count(task.m, task.k);
  if (count > kMaxCompositions) {
    throw Error("llp label space too large: " + std::to_string(count) +
                " compositions exceed the bound of " +
                std::to_string(kMaxCompositions));
  }
  std::vector<AggregateLabel> out;
  out.reserve(count);
  std::vector<int> current(static_cast<std::size_t>(task.k), 0);
  compositions(task.m, 0, current, out);
  return out;
}

}  // namespace cfao
