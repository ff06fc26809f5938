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

#include "cfao/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "cfao/eval.hpp"
#include "cfao/posterior.hpp"
#include "cfao/rng.hpp"

namespace cfao {

void TrainConfig::validate() const {
  if (epochs < 0) throw Error("epochs must be >= 0");
  if (warmup_epochs < 0 || warmup_epochs > epochs) {
    throw Error("warmup_epochs must lie in [0, epochs]");
  }
  if (batch_size < 1) throw Error("batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw Error("learning_rate must be positive");
  if (validation_fraction < 0.0 || validation_fraction >= 1.0) {
    throw Error("validation_fraction must lie in [0, 1)");
  }
}

nlohmann::json TrainConfig::to_json() const {
  return {{"epochs", epochs},
          {"warmup", warmup},
          {"warmup_epochs", warmup_epochs},
          {"confidence_matrix", confidence_matrix},
          {"batch_size", batch_size},
          {"learning_rate", learning_rate},
          {"seed", seed},
          {"validation_fraction", validation_fraction}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  return from_json(j, TrainConfig{});
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j, TrainConfig base) {
  base.epochs = j.value("epochs", base.epochs);
  base.warmup = j.value("warmup", base.warmup);
  base.warmup_epochs = j.value("warmup_epochs", base.warmup_epochs);
  base.confidence_matrix = j.value("confidence_matrix", base.confidence_matrix);
  base.batch_size = j.value("batch_size", base.batch_size);
  base.learning_rate = j.value("learning_rate", base.learning_rate);
  base.seed = j.value("seed", base.seed);
  base.validation_fraction = j.value("validation_fraction", base.validation_fraction);
  return base;
}

DefaultFlags default_flags(TaskKind kind, ScaleProfile profile) {
  const int warmup = profile == ScaleProfile::kLarge ? 20 : 100;
  switch (kind) {
    case TaskKind::kPairwise:
    case TaskKind::kTriplet:
      return {true, warmup, true};
    case TaskKind::kLlp:
      return {false, 0, true};
    case TaskKind::kMil:
      return {false, 0, false};
    case TaskKind::kRank:
    case TaskKind::kOrdinalTriplet:
      return {true, warmup, true};
  }
  return {};
}

TrainConfig with_default_flags(TrainConfig config, TaskKind kind,
                               ScaleProfile profile) {
  const DefaultFlags flags = default_flags(kind, profile);
  config.warmup = flags.warmup;
  config.warmup_epochs = std::min(flags.warmup_epochs, config.epochs);
  config.confidence_matrix = flags.confidence_matrix;
  return config;
}

ConfidenceTensor::ConfidenceTensor(Index groups, int m_in, int k)
    : eta(RowMatrixXd::Constant(groups * m_in, k, 1.0 / k)), m(m_in) {}

nlohmann::json EpochMetrics::to_json() const {
  return {{"epoch", epoch},
          {"train_loss", train_loss},
          {"val_metric", val_metric},
          {"likelihood", likelihood},
          {"degenerate_groups", degenerate_groups},
          {"phase", warmup ? "loglik" : "uum"}};
}

double observed_likelihood(std::span<const AggregateObservation> observations,
                           const Task& task, const Model& model) {
  double total = 0.0;
  for (const auto& obs : observations) {
    const RowMatrixXd probs = class_probabilities(model.head(), model.forward(obs.xs));
    const double pz = group_posterior(task, probs, obs.z).pz;
    total += std::log(std::max(pz, kProbFloor));
  }
  return total;
}

namespace {

std::vector<int> zero_based(const std::vector<int>& labels) {
  std::vector<int> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) out[i] = labels[i] - 1;
  return out;
}

double labeled_metric(const Dataset& data, const Model& model, bool permute) {
  const std::vector<int> preds = predict_classes(model, data.features);
  const std::vector<int> truth = zero_based(data.labels);
  if (!permute) return accuracy(preds, truth);
  return modified_accuracy(confusion_counts(preds, truth, model.num_classes())).accuracy;
}

// Rows of every group in `ids`, stacked.
RowMatrixXd stack_groups(const std::vector<AggregateObservation>& obs,
                         std::span<const Index> ids, int m, Index d) {
  RowMatrixXd x(static_cast<Index>(ids.size()) * m, d);
  for (std::size_t b = 0; b < ids.size(); ++b) {
    x.middleRows(static_cast<Index>(b) * m, m) = obs[static_cast<std::size_t>(ids[b])].xs;
  }
  return x;
}

struct PreparedData {
  std::vector<AggregateObservation> train;
  Validation validation;
};

PreparedData prepare(const std::vector<AggregateObservation>& observations,
                     const Task& task, const Model& model,
                     const TrainConfig& config, const Validation& validation) {
  config.validate();
  task.validate();
  if (observations.empty()) throw Error("no training observations");
  if (model.num_classes() != task.k) {
    throw Error("model has k = " + std::to_string(model.num_classes()) +
                " but the task has k = " + std::to_string(task.k));
  }
  const bool want_sigmoid = task.kind == TaskKind::kMil;
  if ((model.head() == Head::kSigmoid) != want_sigmoid) {
    throw Error("model head '" + std::string(to_string(model.head())) +
                "' does not suit task '" + std::string(to_string(task.kind)) + "'");
  }
  for (const auto& obs : observations) {
    if (obs.xs.rows() != task.m || obs.xs.cols() != model.input_dim()) {
      throw Error("observation shape does not match the task and model");
    }
    if (!is_feasible(task, obs.z)) throw Error("observation has an invalid aggregate label");
  }
  PreparedData out;
  out.validation = validation;
  if (validation.groups.empty() && !validation.labeled &&
      config.validation_fraction > 0.0) {
    std::vector<Index> order(observations.size());
    std::iota(order.begin(), order.end(), Index{0});
    Rng rng(mix64(config.seed ^ 0x76616c6964ULL));
    rng.shuffle(std::span<Index>(order));
    const auto held = static_cast<std::size_t>(
        std::ceil(config.validation_fraction * static_cast<double>(order.size())));
    if (held >= order.size()) throw Error("validation split leaves no training groups");
    for (std::size_t i = 0; i < order.size(); ++i) {
      const auto& obs = observations[static_cast<std::size_t>(order[i])];
      (i < held ? out.validation.groups : out.train).push_back(obs);
    }
  } else {
    out.train = observations;
  }
  return out;
}

// Per-epoch bookkeeping shared by the trainers.
class Selector {
 public:
  Selector(const Task& task, const Validation& validation,
           const std::vector<AggregateObservation>& train)
      : task_(task), validation_(validation), train_(train) {}

  void finish_epoch(TrainResult& result, EpochMetrics metrics, const Model& model) {
    metrics.likelihood = observed_likelihood(train_, task_, model);
    if (validation_.groups.empty() && !validation_.labeled) {
      metrics.val_metric = metrics.likelihood / static_cast<double>(train_.size());
    } else {
      metrics.val_metric = validation_metric(validation_, task_, model);
    }
    if (result.log.empty() || metrics.val_metric > best_) {
      best_ = metrics.val_metric;
      result.best_epoch = metrics.epoch;
      result.model = model;
    }
    result.log.push_back(metrics);
  }

 private:
  const Task& task_;
  const Validation& validation_;
  const std::vector<AggregateObservation>& train_;
  double best_ = -std::numeric_limits<double>::infinity();
};

std::vector<AggregateLabel> labels_of(const std::vector<AggregateObservation>& obs,
                                      std::span<const Index> ids) {
  std::vector<AggregateLabel> out;
  for (Index id : ids) out.push_back(obs[static_cast<std::size_t>(id)].z);
  return out;
}

std::vector<RowMatrixXd> groups_of(const std::vector<AggregateObservation>& obs,
                                   std::span<const Index> ids) {
  std::vector<RowMatrixXd> out;
  for (Index id : ids) out.push_back(obs[static_cast<std::size_t>(id)].xs);
  return out;
}

Rng order_rng(const TrainConfig& config) { return Rng(mix64(config.seed ^ 0x6f72646572ULL)); }

}  // namespace

double validation_metric(const Validation& validation, const Task& task,
                         const Model& model) {
  if (task.kind == TaskKind::kMil && !validation.groups.empty()) {
    return group_accuracy_mil(model, validation.groups);
  }
  if (validation.labeled) {
    return labeled_metric(*validation.labeled, model, !classes_identifiable(task.kind));
  }
  if (validation.groups.empty()) throw Error("validation data is empty");
  return observed_likelihood(validation.groups, task, model) /
         static_cast<double>(validation.groups.size());
}

TrainResult train(const std::vector<AggregateObservation>& observations,
                  const Task& task, Model model, const TrainConfig& config,
                  const Validation& validation, const TrainHooks& hooks) {
  const PreparedData data = prepare(observations, task, model, config, validation);
  const std::vector<AggregateObservation>& obs = data.train;
  const Index n = static_cast<Index>(obs.size());
  const int m = task.m;
  const Head head = model.head();

  TrainResult result;
  result.model = model;
  if (config.confidence_matrix) result.confidence = ConfidenceTensor(n, m, task.k);
  ConfidenceTensor& conf = result.confidence;

  AdamState adam = AdamState::for_model(model);
  const AdamConfig adam_config{.learning_rate = config.learning_rate};
  Selector selector(task, data.validation, obs);
  Rng rng = order_rng(config);
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(std::span<Index>(order));
    const bool warm = config.warmup && epoch <= config.warmup_epochs;
    EpochMetrics metrics{.epoch = epoch, .warmup = warm};
    double loss_sum = 0.0;
    Index loss_groups = 0;
    int iteration = 0;
    for (Index start = 0; start < n; start += config.batch_size, ++iteration) {
      const Index size = std::min<Index>(config.batch_size, n - start);
      const std::span<const Index> ids(order.data() + start, static_cast<std::size_t>(size));
      const RowMatrixXd x = stack_groups(obs, ids, m, model.input_dim());
      BatchTrace trace;
      trace.epoch = epoch;
      trace.iteration = iteration;
      trace.warmup = warm;
      trace.groups.assign(ids.begin(), ids.end());
      std::optional<Model> before;
      if (hooks.on_batch) {
        before = model;
        trace.model = &*before;
      }

      if (warm) {
        const auto groups = groups_of(obs, ids);
        const auto zs = labels_of(obs, ids);
        const LossResult loss = loglik_loss(model, task, groups, zs);
        adam_step(model, loss.grads, adam, adam_config);
        loss_sum += loss.value * static_cast<double>(size);
        loss_groups += size;
      } else {
        if (config.confidence_matrix) {
          trace.eta.resize(size * m, task.k);
          for (Index b = 0; b < size; ++b) trace.eta.middleRows(b * m, m) = conf.group(ids[b]);
        } else {
          trace.eta = class_probabilities(head, model.forward(x));
        }
        RowMatrixXd weights = RowMatrixXd::Zero(size * m, task.k);
        Index used = 0;
        for (Index b = 0; b < size; ++b) {
          const auto& o = obs[static_cast<std::size_t>(ids[b])];
          WeightMatrix w =
              compute_weights(group_posterior(task, trace.eta.middleRows(b * m, m), o.z));
          if (w.degenerate) {
            ++metrics.degenerate_groups;
          } else {
            weights.middleRows(b * m, m) = w.w;
            ++used;
          }
          trace.weights.push_back(std::move(w));
        }
        if (used > 0) {
          const LossResult loss = weighted_loss(
              model, x, weights, 1.0 / static_cast<double>(used * m));
          adam_step(model, loss.grads, adam, adam_config);
          loss_sum += loss.value * static_cast<double>(used);
          loss_groups += used;
        }
      }
      if (config.confidence_matrix) {
        const RowMatrixXd fresh = class_probabilities(head, model.forward(x));
        for (Index b = 0; b < size; ++b) conf.group(ids[b]) = fresh.middleRows(b * m, m);
      }
      if (hooks.on_batch) hooks.on_batch(trace);
    }
    if (loss_groups == 0) {
      throw Error("every group in epoch " + std::to_string(epoch) +
                  " was degenerate (p(z|x) at the floor); aborting");
    }
    metrics.train_loss = loss_sum / static_cast<double>(loss_groups);
    selector.finish_epoch(result, metrics, model);
  }
  if (result.log.empty()) result.model = model;
  return result;
}

TrainResult train_loglik(const std::vector<AggregateObservation>& observations,
                         const Task& task, Model model, const TrainConfig& config,
                         const Validation& validation) {
  const PreparedData data = prepare(observations, task, model, config, validation);
  const std::vector<AggregateObservation>& obs = data.train;
  const Index n = static_cast<Index>(obs.size());

  TrainResult result;
  result.model = model;
  AdamState adam = AdamState::for_model(model);
  const AdamConfig adam_config{.learning_rate = config.learning_rate};
  Selector selector(task, data.validation, obs);
  Rng rng = order_rng(config);
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(std::span<Index>(order));
    double loss_sum = 0.0;
    for (Index start = 0; start < n; start += config.batch_size) {
      const Index size = std::min<Index>(config.batch_size, n - start);
      const std::span<const Index> ids(order.data() + start, static_cast<std::size_t>(size));
      const LossResult loss =
          loglik_loss(model, task, groups_of(obs, ids), labels_of(obs, ids));
      adam_step(model, loss.grads, adam, adam_config);
      loss_sum += loss.value * static_cast<double>(size);
    }
    EpochMetrics metrics{.epoch = epoch,
                         .train_loss = loss_sum / static_cast<double>(n),
                         .warmup = true};
    selector.finish_epoch(result, metrics, model);
  }
  return result;
}

TrainResult train_supervised(const Dataset& data, Model model,
                             const TrainConfig& config,
                             const std::optional<Dataset>& validation) {
  config.validate();
  data.validate();
  if (data.size() == 0) throw Error("no labeled training data");
  const Index n = data.size();
  const int k = model.num_classes();
  const Head head = model.head();
  const int classes = head == Head::kSigmoid ? 2 : k;

  TrainResult result;
  result.model = model;
  AdamState adam = AdamState::for_model(model);
  const AdamConfig adam_config{.learning_rate = config.learning_rate};
  Rng rng = order_rng(config);
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  double best = -std::numeric_limits<double>::infinity();

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(std::span<Index>(order));
    double loss_sum = 0.0;
    for (Index start = 0; start < n; start += config.batch_size) {
      const Index size = std::min<Index>(config.batch_size, n - start);
      RowMatrixXd x(size, data.dim());
      RowMatrixXd onehot = RowMatrixXd::Zero(size, classes);
      for (Index b = 0; b < size; ++b) {
        const Index row = order[static_cast<std::size_t>(start + b)];
        x.row(b) = data.features.row(row);
        onehot(b, data.labels[static_cast<std::size_t>(row)] - 1) = 1.0;
      }
      const LossResult loss =
          weighted_loss(model, x, onehot, 1.0 / static_cast<double>(size));
      adam_step(model, loss.grads, adam, adam_config);
      loss_sum += loss.value * static_cast<double>(size);
    }
    EpochMetrics metrics{.epoch = epoch, .train_loss = loss_sum / static_cast<double>(n)};
    metrics.val_metric = labeled_metric(validation ? *validation : data, model, false);
    if (!validation || metrics.val_metric > best || result.log.empty()) {
      best = metrics.val_metric;
      result.best_epoch = epoch;
      result.model = model;
    }
    result.log.push_back(metrics);
  }
  return result;
}

}  // namespace cfao
