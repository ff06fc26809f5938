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

#include "cfao/bench.hpp"

#include <algorithm>
#include <chrono>

#include "cfao/config.hpp"
#include "cfao/data.hpp"
#include "cfao/eval.hpp"
#include "cfao/rng.hpp"

namespace cfao {

nlohmann::json BenchSpec::to_json() const {
  nlohmann::json j = {{"task", to_string(task)},
                      {"m", m.value_or(default_group_size(task))},
                      {"n_groups", n_groups},
                      {"n_val_groups", n_val_groups},
                      {"epochs", epochs},
                      {"batch_size", batch_size},
                      {"architecture", to_string(architecture)},
                      {"hidden", hidden},
                      {"method", loglik ? "loglik" : "uum"},
                      {"profile", profile == ScaleProfile::kSmall ? "small" : "large"},
                      {"seed", seed}};
  if (learning_rate) j["learning_rate"] = *learning_rate;
  if (warmup_epochs) j["warmup_epochs"] = *warmup_epochs;
  if (csv_path) {
    j["csv"] = *csv_path;
    j["label_column"] = label_column;
  } else {
    j["synthetic"] = {{"k", k}, {"d", d}, {"radius", radius}, {"spread", spread},
                      {"n_train", n_train}, {"n_val", n_val}, {"n_test", n_test}};
  }
  if (task == TaskKind::kMil) j["positive_label"] = positive_label;
  return j;
}

nlohmann::json BenchResult::to_json() const {
  nlohmann::json j = {{"task", task},
                      {"metric", metric},
                      {"weak", weak},
                      {"supervised", supervised},
                      {"gap", gap()},
                      {"best_epoch", best_epoch},
                      {"weak_seconds", weak_seconds},
                      {"supervised_seconds", supervised_seconds}};
  if (group_accuracy) j["group_accuracy"] = *group_accuracy;
  return j;
}

namespace {

using Clock = std::chrono::steady_clock;

struct Splits {
  Dataset train, val, test;
};

void standardize(Splits& s) {
  const Eigen::RowVectorXd mean = s.train.features.colwise().mean();
  Eigen::RowVectorXd sd =
      ((s.train.features.rowwise() - mean).array().square().colwise().mean()).sqrt();
  for (Index j = 0; j < sd.size(); ++j) {
    if (!(sd(j) > 0.0)) sd(j) = 1.0;
  }
  for (Dataset* d : {&s.train, &s.val, &s.test}) {
    d->features = ((d->features.rowwise() - mean).array().rowwise() / sd.array()).matrix();
  }
}

Splits load_splits(const BenchSpec& spec) {
  if (spec.csv_path) {
    const Dataset all = load_csv(*spec.csv_path, spec.label_column);
    auto parts = split_dataset(all, {0.6, 0.2, 0.2}, spec.seed);
    Splits s{parts[0], parts[1], parts[2]};
    standardize(s);
    return s;
  }
  const SyntheticSpec source =
      SyntheticSpec::ring(spec.k, spec.d, spec.radius, spec.spread, spec.seed);
  const Dataset all = generate_synthetic(source, spec.n_train + spec.n_val + spec.n_test);
  auto rows = [](Index from, Index count) {
    std::vector<Index> out(static_cast<std::size_t>(count));
    for (Index i = 0; i < count; ++i) out[i] = from + i;
    return out;
  };
  return {subset(all, rows(0, spec.n_train)),
          subset(all, rows(spec.n_train, spec.n_val)),
          subset(all, rows(spec.n_train + spec.n_val, spec.n_test))};
}

// Positive class becomes label 2, everything else label 1.
Dataset binarize(const Dataset& data, int positive) {
  Dataset out = data;
  for (int& y : out.labels) y = y == positive ? 2 : 1;
  out.label_names = {"negative", "positive"};
  return out;
}

std::vector<int> zero_based(const std::vector<int>& labels) {
  std::vector<int> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) out[i] = labels[i] - 1;
  return out;
}

}  // namespace

BenchResult run_bench(const BenchSpec& spec) {
  Splits s = load_splits(spec);
  const int k_data = s.train.num_classes();
  if (spec.task == TaskKind::kMil) {
    const int positive = spec.positive_label > 0 ? spec.positive_label : k_data;
    if (positive > k_data) throw Error("positive label out of range");
    s.train = binarize(s.train, positive);
    s.val = binarize(s.val, positive);
    s.test = binarize(s.test, positive);
  }
  const int k = s.train.num_classes();
  const Task task = make_task(spec.task, spec.m.value_or(default_group_size(spec.task)), k);
  const Head head = head_for_task(spec.task);
  const Index d = s.train.dim();

  TrainConfig config;
  config.epochs = spec.epochs;
  config.batch_size = spec.batch_size;
  config.learning_rate = spec.learning_rate.value_or(default_learning_rate(spec.architecture));
  config.seed = spec.seed;

  auto fresh_model = [&] {
    return Model::create(spec.architecture, static_cast<int>(d), k, head,
                         mix64(spec.seed ^ 0x6d6f64656cULL), spec.hidden);
  };

  BenchResult result;
  result.task = std::string(to_string(spec.task));
  const bool permute = !classes_identifiable(spec.task);
  result.metric = permute ? "modified_accuracy" : "accuracy";
  const std::vector<int> truth = zero_based(s.test.labels);

  auto start = Clock::now();
  const TrainResult sup = train_supervised(s.train, fresh_model(), config, s.val);
  result.supervised = accuracy(predict_classes(sup.model, s.test.features), truth);
  result.supervised_seconds = std::chrono::duration<double>(Clock::now() - start).count();

  const auto train_obs = sample_groups(s.train, task, spec.n_groups, mix64(spec.seed + 1));
  Validation validation;
  validation.groups = sample_groups(s.val, task, spec.n_val_groups, mix64(spec.seed + 2));

  start = Clock::now();
  TrainConfig weak_config = with_default_flags(config, spec.task, spec.profile);
  if (spec.warmup_epochs) {
    weak_config.warmup = *spec.warmup_epochs > 0;
    weak_config.warmup_epochs = std::min(*spec.warmup_epochs, spec.epochs);
  }
  TrainResult weak;
  if (spec.loglik) {
    weak = train_loglik(train_obs, task, fresh_model(), weak_config, validation);
  } else {
    weak = train(train_obs, task, fresh_model(), weak_config, validation);
  }
  result.weak_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  result.best_epoch = weak.best_epoch;

  std::vector<int> preds = predict_classes(weak.model, s.test.features);
  if (permute) {
    // The relabeling is fitted on the labeled validation points and applied
    // unchanged to the test points.
    const ModifiedAccuracy fit = modified_accuracy(confusion_counts(
        predict_classes(weak.model, s.val.features), zero_based(s.val.labels), k));
    preds = apply_permutation(preds, fit.permutation);
  }
  result.weak = accuracy(preds, truth);
  if (spec.task == TaskKind::kMil) {
    const auto test_bags = sample_groups(s.test, task, spec.n_val_groups, mix64(spec.seed + 3));
    result.group_accuracy = group_accuracy_mil(weak.model, test_bags);
  }
  return result;
}

}  // namespace cfao
