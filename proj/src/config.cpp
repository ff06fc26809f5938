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

#include "cfao/config.hpp"

#include <cstdio>
#include <fstream>

namespace cfao {

std::string config_hash(const nlohmann::json& j) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : j.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Head head_for_task(TaskKind kind) {
  if (kind == TaskKind::kMil) return Head::kSigmoid;
  if (kind == TaskKind::kRank || kind == TaskKind::kOrdinalTriplet) {
    return Head::kCumulative;
  }
  return Head::kSoftmax;
}

Task ExperimentConfig::make_task(int k) const {
  return cfao::make_task(task, group_size(), task == TaskKind::kMil ? 2 : k);
}

TrainConfig ExperimentConfig::resolved_train() const {
  TrainConfig out = with_default_flags(train, task, profile);
  if (warmup) out.warmup = *warmup;
  if (warmup_epochs) out.warmup_epochs = *warmup_epochs;
  if (confidence_matrix) out.confidence_matrix = *confidence_matrix;
  out.learning_rate = learning_rate.value_or(default_learning_rate(architecture));
  if (method == TrainMethod::kLoglik) {
    out.warmup = true;
    out.warmup_epochs = out.epochs;
  }
  out.validate();
  return out;
}

void ExperimentConfig::validate() const {
  // k is not known until data is loaded; 2 satisfies every task's k rule.
  make_task(2);
  if (n_groups < 1) throw Error("n_groups must be >= 1");
  if (synthetic && csv_path) throw Error("config names both synthetic and CSV data");
  if (hidden < 1) throw Error("hidden width must be >= 1");
  resolved_train();
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j = {{"task", to_string(task)},
                      {"m", group_size()},
                      {"n_groups", n_groups},
                      {"seed", seed},
                      {"label_column", label_column},
                      {"positive_label", positive_label},
                      {"architecture", to_string(architecture)},
                      {"hidden", hidden},
                      {"method", method == TrainMethod::kUum ? "uum" : "loglik"},
                      {"profile", profile == ScaleProfile::kSmall ? "small" : "large"},
                      {"train", resolved_train().to_json()},
                      {"output_dir", output_dir}};
  if (synthetic) {
    j["synthetic"] = {{"k", synthetic->k}, {"d", synthetic->d}, {"n", synthetic->n},
                      {"radius", synthetic->radius}, {"spread", synthetic->spread},
                      {"seed", synthetic->seed}};
  }
  if (csv_path) j["csv"] = *csv_path;
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  try {
    if (j.contains("task")) c.task = parse_task_kind(j["task"].get<std::string>());
    if (j.contains("m")) c.m = j["m"].get<int>();
    c.n_groups = j.value("n_groups", c.n_groups);
    c.seed = j.value("seed", c.seed);
    c.label_column = j.value("label_column", c.label_column);
    c.positive_label = j.value("positive_label", c.positive_label);
    if (j.contains("architecture")) {
      c.architecture = parse_architecture(j["architecture"].get<std::string>());
    }
    c.hidden = j.value("hidden", c.hidden);
    if (j.contains("method")) {
      const std::string m = j["method"].get<std::string>();
      if (m == "uum") c.method = TrainMethod::kUum;
      else if (m == "loglik") c.method = TrainMethod::kLoglik;
      else throw Error("unknown method '" + m + "'");
    }
    if (j.contains("profile")) {
      const std::string p = j["profile"].get<std::string>();
      if (p == "small") c.profile = ScaleProfile::kSmall;
      else if (p == "large") c.profile = ScaleProfile::kLarge;
      else throw Error("unknown profile '" + p + "'");
    }
    if (j.contains("synthetic")) {
      const auto& s = j["synthetic"];
      SyntheticSource src;
      src.k = s.value("k", src.k);
      src.d = s.value("d", src.d);
      src.n = s.value("n", src.n);
      src.radius = s.value("radius", src.radius);
      src.spread = s.value("spread", src.spread);
      src.seed = s.value("seed", c.seed);
      c.synthetic = src;
    }
    if (j.contains("csv")) c.csv_path = j["csv"].get<std::string>();
    if (j.contains("train")) {
      const auto& t = j["train"];
      c.train = TrainConfig::from_json(t, c.train);
      if (t.contains("warmup")) c.warmup = t["warmup"].get<bool>();
      if (t.contains("warmup_epochs")) c.warmup_epochs = t["warmup_epochs"].get<int>();
      if (t.contains("confidence_matrix")) {
        c.confidence_matrix = t["confidence_matrix"].get<bool>();
      }
      if (t.contains("learning_rate")) c.learning_rate = t["learning_rate"].get<double>();
    }
    if (!j.contains("train") || !j["train"].contains("seed")) c.train.seed = c.seed;
    c.output_dir = j.value("output_dir", c.output_dir);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed config: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  return from_json(read_json(path));
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error("malformed JSON in '" + path.string() + "': " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

}  // namespace cfao
