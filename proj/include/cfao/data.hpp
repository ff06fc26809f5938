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

#ifndef CFAO_DATA_HPP_
#define CFAO_DATA_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "cfao/aggregate.hpp"
#include "cfao/types.hpp"

namespace cfao {

struct LabeledExample {
  VectorXd features;
  int label = 1;  // 1..k
};

// Instances stored row-wise with labels re-indexed to 1..k.
struct Dataset {
  RowMatrixXd features;                  // n x d
  std::vector<int> labels;               // 1..k
  std::vector<std::string> label_names;  // label j is label_names[j - 1]
  std::vector<std::string> feature_names;

  Index size() const { return features.rows(); }
  Index dim() const { return features.cols(); }
  int num_classes() const { return static_cast<int>(label_names.size()); }
  LabeledExample example(Index i) const {
    return {features.row(i).transpose(), labels[static_cast<std::size_t>(i)]};
  }
  // Throws if shapes or labels are inconsistent.
  void validate() const;
};

// Isotropic Gaussian mixture: class j has mean means.row(j), standard
// deviation spreads(j) and probability prior(j).
struct SyntheticSpec {
  int k = 2;
  int d = 2;
  RowMatrixXd means;
  VectorXd spreads;
  VectorXd prior;
  std::uint64_t seed = 0;

  void validate() const;

  // k means evenly spaced on a circle of the given radius in the first two
  // coordinates, equal spreads and a uniform prior.
  static SyntheticSpec ring(int k, int d, double radius, double spread,
                            std::uint64_t seed);
};

Dataset generate_synthetic(const SyntheticSpec& spec, Index n);

// Reads a CSV with a header row. Every column except `label_column` must be
// numeric and finite; labels are re-indexed 1..k in order of first
// appearance. A non-empty `known_labels` fixes the mapping instead (label
// j is known_labels[j - 1]) and rejects labels outside it.
Dataset load_csv(const std::filesystem::path& path,
                 const std::string& label_column,
                 const std::vector<std::string>& known_labels = {});

// Writes features with shortest round-trip formatting; the label column
// holds the original label names.
void save_csv(const Dataset& dataset, const std::filesystem::path& path,
              const std::string& label_column = "label");

// Label mapping and shape summary stored next to a dataset file.
nlohmann::json dataset_metadata(const Dataset& dataset);

// Unstratified random split into consecutive blocks of a seeded permutation.
// Fractions are normalized; the last split takes the remainder.
std::vector<Dataset> split_dataset(const Dataset& dataset,
                                   const std::vector<double>& fractions,
                                   std::uint64_t seed);

Dataset subset(const Dataset& dataset, const std::vector<Index>& rows);

// One group of instances with its aggregate label. `labels` keeps the
// hidden per-instance labels (task convention) when they are known; the
// learners never read them.
struct AggregateObservation {
  RowMatrixXd xs;  // m x d
  AggregateLabel z;
  std::vector<int> labels;
};

struct SampleOptions {
  // Dataset label treated as the positive MIL class; 0 selects the largest
  // label k.
  int positive_label = 0;
};

// Draws n_groups groups of task.m members uniformly with replacement and
// labels each with g(true labels). For MIL, instance labels become
// [label == positive_label]; otherwise dataset labels must lie in 1..task.k.
std::vector<AggregateObservation> sample_groups(const Dataset& dataset,
                                                const Task& task,
                                                Index n_groups,
                                                std::uint64_t seed,
                                                const SampleOptions& options = {});

// JSON-lines, one object per group:
// {"task": "<name>", "xs": [[...], ...], "z": <int|[int, ...]>, "ys": [...]}.
// "ys" is written only when hidden labels are known. Binary z is written as
// 0/1 and read from either an integer or a boolean.
void write_observations(const std::filesystem::path& path, const Task& task,
                        const std::vector<AggregateObservation>& obs);
std::vector<AggregateObservation> read_observations(
    const std::filesystem::path& path, const Task& task);

// Peeks at the first record's task name.
TaskKind observation_file_task(const std::filesystem::path& path);

nlohmann::json observation_to_json(const Task& task,
                                   const AggregateObservation& obs);
AggregateObservation observation_from_json(const Task& task,
                                           const nlohmann::json& j);

}  // namespace cfao

#endif  // CFAO_DATA_HPP_
