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

#ifndef CFAO_TRAIN_HPP_
#define CFAO_TRAIN_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "cfao/data.hpp"
#include "cfao/loss.hpp"
#include "cfao/model.hpp"

namespace cfao {

struct TrainConfig {
  int epochs = 100;                  // T_max
  bool warmup = false;               // flag_init
  int warmup_epochs = 0;             // T_init
  bool confidence_matrix = false;    // flag_mat
  int batch_size = 128;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  // Share of the training groups held out for model selection when no
  // explicit validation data is given.
  double validation_fraction = 0.0;

  void validate() const;
  nlohmann::json to_json() const;
  // Missing fields keep the values already in `base`.
  static TrainConfig from_json(const nlohmann::json& j, TrainConfig base);
  static TrainConfig from_json(const nlohmann::json& j);
};

// Warm-up epochs recommended per task. The small-scale profile (tabular data)
// uses 100 warm-up epochs for pairwise/triplet, the large-scale profile 20.
enum class ScaleProfile { kSmall, kLarge };

struct DefaultFlags {
  bool warmup = false;
  int warmup_epochs = 0;
  bool confidence_matrix = false;
};

DefaultFlags default_flags(TaskKind kind, ScaleProfile profile = ScaleProfile::kSmall);

// Applies default_flags to a config, capping T_init at the epoch budget.
TrainConfig with_default_flags(TrainConfig config, TaskKind kind,
                               ScaleProfile profile = ScaleProfile::kSmall);

// Cached per-instance class probabilities, one m x k block per group stored
// in rows [g*m, (g+1)*m). Starts uniform at 1/k.
struct ConfidenceTensor {
  RowMatrixXd eta;
  int m = 0;

  ConfidenceTensor() = default;
  ConfidenceTensor(Index groups, int m, int k);
  auto group(Index g) { return eta.middleRows(g * m, m); }
  auto group(Index g) const { return eta.middleRows(g * m, m); }
};

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;
  double val_metric = 0.0;
  double likelihood = 0.0;
  Index degenerate_groups = 0;
  bool warmup = false;

  nlohmann::json to_json() const;
};

// What one minibatch update saw; handed to TrainHooks::on_batch.
struct BatchTrace {
  int epoch = 0;
  int iteration = 0;
  bool warmup = false;
  std::vector<Index> groups;          // indices into the training set
  RowMatrixXd eta;                    // eta the weights were built from
  std::vector<WeightMatrix> weights;  // empty in warm-up batches
  const Model* model = nullptr;       // parameters before this batch's update
};

struct TrainHooks {
  std::function<void(const BatchTrace&)> on_batch;
};

// Data used for model selection. With labeled instances the metric is
// accuracy (modified accuracy when classes_identifiable is false); for MIL it is group accuracy on `groups`; otherwise
// the mean log p(z | x) over `groups`. Higher is better in every case.
struct Validation {
  std::vector<AggregateObservation> groups;
  std::optional<Dataset> labeled;
};

struct TrainResult {
  Model model;  // parameters from the best validation epoch
  std::vector<EpochMetrics> log;
  int best_epoch = 0;
  ConfidenceTensor confidence;  // final state when flag_mat is on
};

// The RC training loop: per epoch shuffle, then per minibatch either a
// log-likelihood update (warm-up) or an update on the weighted unbiased
// risk with weights from the confidence tensor or the detached model.
TrainResult train(const std::vector<AggregateObservation>& observations,
                  const Task& task, Model model, const TrainConfig& config,
                  const Validation& validation = {},
                  const TrainHooks& hooks = {});

// Log-likelihood baseline: every epoch minimizes -log p(z | x).
TrainResult train_loglik(const std::vector<AggregateObservation>& observations,
                         const Task& task, Model model, const TrainConfig& config,
                         const Validation& validation = {});

// Fully supervised cross-entropy training on labeled instances, used as the
// reference a weakly supervised run is compared with. Model selection uses
// accuracy on `validation` when given, else the final epoch.
TrainResult train_supervised(const Dataset& data, Model model,
                             const TrainConfig& config,
                             const std::optional<Dataset>& validation = {});

// sum_v log p(z_v | x_v; theta), with p floored at kProbFloor.
double observed_likelihood(std::span<const AggregateObservation> observations,
                           const Task& task, const Model& model);

// The validation metric described on Validation.
double validation_metric(const Validation& validation, const Task& task,
                         const Model& model);

}  // namespace cfao

#endif  // CFAO_TRAIN_HPP_
