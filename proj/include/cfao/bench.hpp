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

#ifndef CFAO_BENCH_HPP_
#define CFAO_BENCH_HPP_

// Desk-scale end-to-end comparison: a weakly supervised run on aggregate
// observations against a fully supervised model trained on the same points.

#include <cstdint>
#include <optional>
#include <string>

#include "json.hpp"

#include "cfao/aggregate.hpp"
#include "cfao/model.hpp"
#include "cfao/train.hpp"

namespace cfao {

struct BenchSpec {
  TaskKind task = TaskKind::kPairwise;
  std::optional<int> m;
  // Synthetic source; ignored when csv_path is set.
  int k = 3;
  int d = 2;
  double radius = 4.0;
  double spread = 1.0;
  Index n_train = 1500;
  Index n_val = 500;
  Index n_test = 1500;
  // CSV source, split 60/20/20 and standardized with training statistics.
  std::optional<std::string> csv_path;
  std::string label_column = "label";
  int positive_label = 0;  // MIL; 0 selects the largest label

  Index n_groups = 3000;
  Index n_val_groups = 500;
  int epochs = 50;
  int batch_size = 128;
  Architecture architecture = Architecture::kMlp;
  int hidden = kDefaultHiddenUnits;
  std::optional<double> learning_rate;
  bool loglik = false;  // train the log-likelihood baseline instead of UUM
  // Warm-up defaults; the large profile's shorter warm-up leaves most of a
  // 50-epoch budget to the weighted objective.
  ScaleProfile profile = ScaleProfile::kLarge;
  std::optional<int> warmup_epochs;
  std::uint64_t seed = 1;

  nlohmann::json to_json() const;
};

struct BenchResult {
  std::string task;
  // "modified_accuracy" when classes are not identifiable, else "accuracy".
  std::string metric;
  double weak = 0.0;
  double supervised = 0.0;
  std::optional<double> group_accuracy;  // MIL test bags
  int best_epoch = 0;
  double weak_seconds = 0.0;
  double supervised_seconds = 0.0;

  double gap() const { return supervised - weak; }
  nlohmann::json to_json() const;
};

BenchResult run_bench(const BenchSpec& spec);

}  // namespace cfao

#endif  // CFAO_BENCH_HPP_
