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

#ifndef CFAO_CONFIG_HPP_
#define CFAO_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"

#include "cfao/aggregate.hpp"
#include "cfao/data.hpp"
#include "cfao/model.hpp"
#include "cfao/train.hpp"

namespace cfao {

// FNV-1a 64 over the compact dump of `j` (object keys are sorted by
// nlohmann::json), as 16 hex digits.
std::string config_hash(const nlohmann::json& j);

// Head a task's model must use: sigmoid for MIL, cumulative for the ordinal
// tasks, softmax otherwise.
Head head_for_task(TaskKind kind);

struct SyntheticSource {
  int k = 3;
  int d = 2;
  Index n = 1000;
  double radius = 4.0;
  double spread = 1.0;
  std::uint64_t seed = 0;

  SyntheticSpec spec() const { return SyntheticSpec::ring(k, d, radius, spread, seed); }
};

enum class TrainMethod { kUum, kLoglik };

struct ExperimentConfig {
  TaskKind task = TaskKind::kPairwise;
  std::optional<int> m;  // defaults per task
  Index n_groups = 1000;
  std::uint64_t seed = 0;
  std::optional<SyntheticSource> synthetic;
  std::optional<std::string> csv_path;
  std::string label_column = "label";
  int positive_label = 0;
  Architecture architecture = Architecture::kMlp;
  int hidden = kDefaultHiddenUnits;
  TrainMethod method = TrainMethod::kUum;
  ScaleProfile profile = ScaleProfile::kSmall;
  // Flags not set explicitly fall back to default_flags(task).
  std::optional<bool> warmup;
  std::optional<int> warmup_epochs;
  std::optional<bool> confidence_matrix;
  std::optional<double> learning_rate;
  TrainConfig train;
  std::string output_dir = ".";

  int group_size() const { return m.value_or(default_group_size(task)); }
  Task make_task(int k) const;
  // Fully resolved training settings for this experiment.
  TrainConfig resolved_train() const;
  void validate() const;

  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig load(const std::filesystem::path& path);
};

// Reads a JSON file.
nlohmann::json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace cfao

#endif  // CFAO_CONFIG_HPP_
