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

// cfao command-line entry point.
//
//   cfao synth      Gaussian-mixture dataset as CSV
//   cfao aggregate  groups with aggregate labels as JSON lines
//   cfao train      UUM or log-likelihood training, checkpoint + metrics
//   cfao eval       accuracy / modified accuracy / MIL group accuracy
//   cfao verify     exact self-checks (oracle, unbiased, em, grad, all)
//   cfao bench      desk-scale weak vs supervised comparison
//
// Exit codes: 0 ok, 1 usage or config error, 2 runtime abort, 3 failed
// verification.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "cfao/bench.hpp"
#include "cfao/config.hpp"
#include "cfao/data.hpp"
#include "cfao/eval.hpp"
#include "cfao/model.hpp"
#include "cfao/rng.hpp"
#include "cfao/train.hpp"
#include "cfao/verify.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitVerify = 3;
constexpr int kCheckpointSchema = 1;
constexpr const char* kOutputDirEnv = "CFAO_OUTPUT_DIR";

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Config file plus flag overrides; flags are applied last.
struct Settings {
  std::optional<std::string> config_path;
  std::vector<std::pair<json::json_pointer, json>> overrides;

  template <typename T>
  CLI::Option* flag(CLI::App* cmd, const std::string& name, const std::string& pointer,
                    const std::string& help) {
    return cmd->add_option_function<T>(
        name, [this, pointer](const T& v) { overrides.emplace_back(json::json_pointer(pointer), v); },
        help);
  }

  json raw() const {
    json j = json::object();
    if (config_path) {
      if (!fs::exists(*config_path)) throw UsageError("config file not found: '" + *config_path + "'");
      try {
        j = cfao::read_json(*config_path);
      } catch (const cfao::Error& e) {
        throw UsageError(e.what());
      }
      if (!j.is_object()) throw UsageError("config file must hold a JSON object");
    }
    for (const auto& [ptr, v] : overrides) j[ptr] = v;
    if (!j.contains("output_dir")) {
      const char* env = std::getenv(kOutputDirEnv);
      j["output_dir"] = env && *env ? env : ".";
    }
    return j;
  }
};

cfao::ExperimentConfig parse_config(const json& j) {
  try {
    return cfao::ExperimentConfig::from_json(j);
  } catch (const cfao::Error& e) {
    throw UsageError(std::string("invalid config: ") + e.what());
  }
}

// Hash over everything that determines an artifact, minus where it is stored.
std::string hash_of(json effective) {
  effective.erase("output_dir");
  return cfao::config_hash(effective);
}

fs::path meta_path(const fs::path& artifact) {
  return fs::path(artifact.string() + ".meta.json");
}

std::optional<json> read_meta(const fs::path& artifact) {
  const fs::path p = meta_path(artifact);
  if (!fs::exists(p)) return std::nullopt;
  return cfao::read_json(p);
}

std::string upstream_hash(const fs::path& artifact) {
  const auto meta = read_meta(artifact);
  return meta ? meta->value("config_hash", "") : "";
}

void require_file(const std::string& what, const fs::path& path) {
  if (!fs::exists(path)) throw UsageError(what + " not found: '" + path.string() + "'");
}

fs::path output_path(const cfao::ExperimentConfig& config, const std::string& name) {
  const fs::path dir(config.output_dir);
  fs::create_directories(dir);
  return dir / name;
}

// Label names recorded next to a CSV, if any.
std::vector<std::string> recorded_labels(const fs::path& csv) {
  const auto meta = read_meta(csv);
  if (!meta) return {};
  const json& ds = meta->contains("dataset") ? (*meta)["dataset"] : *meta;
  return ds.value("label_names", std::vector<std::string>{});
}

cfao::Dataset load_dataset(const fs::path& csv, const std::string& label_column,
                           const std::vector<std::string>& labels = {}) {
  require_file("data file", csv);
  return cfao::load_csv(csv, label_column, labels.empty() ? recorded_labels(csv) : labels);
}

// MIL view of a labeled dataset: label 2 for the positive class, else 1.
cfao::Dataset binarize(cfao::Dataset data, const std::string& positive) {
  for (int& y : data.labels) y = data.label_names[y - 1] == positive ? 2 : 1;
  data.label_names = {"negative", "positive"};
  return data;
}

std::vector<int> zero_based(const std::vector<int>& labels) {
  std::vector<int> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) out[i] = labels[i] - 1;
  return out;
}

void print_json(const json& j) { std::cout << j.dump(2) << '\n'; }

// ---------------------------------------------------------------- synth

struct SynthArgs {
  std::string out = "synth.csv";
};

int run_synth(const Settings& settings, const SynthArgs& args) {
  const json raw = settings.raw();
  const cfao::ExperimentConfig config = parse_config(raw);
  cfao::SyntheticSource source;
  source.seed = config.seed;
  if (config.synthetic) source = *config.synthetic;
  if (source.n < 1) throw UsageError("empty dataset requested");
  json effective = config.to_json();
  if (!config.synthetic) {
    effective["synthetic"] = {{"k", source.k}, {"d", source.d}, {"n", source.n},
                              {"radius", source.radius}, {"spread", source.spread},
                              {"seed", source.seed}};
  }
  cfao::SyntheticSpec spec;
  try {
    spec = source.spec();
    spec.validate();
  } catch (const cfao::Error& e) {
    throw UsageError(e.what());
  }
  const cfao::Dataset data = cfao::generate_synthetic(spec, source.n);
  const fs::path path = output_path(config, args.out);
  cfao::save_csv(data, path, config.label_column);
  const std::string hash = hash_of(effective);
  cfao::write_json(meta_path(path), {{"config_hash", hash},
                                     {"command", "synth"},
                                     {"config", effective},
                                     {"dataset", cfao::dataset_metadata(data)}});
  std::cout << "wrote " << path.string() << " (" << data.size() << " rows, k = "
            << data.num_classes() << ", config " << hash << ")\n";
  return kExitOk;
}

// ------------------------------------------------------------ aggregate

struct AggregateArgs {
  std::optional<std::string> data;
  std::string out = "observations.jsonl";
};

int run_aggregate(const Settings& settings, const AggregateArgs& args) {
  json raw = settings.raw();
  if (args.data) raw["csv"] = *args.data;
  const cfao::ExperimentConfig config = parse_config(raw);
  cfao::Dataset data;
  if (config.csv_path) {
    data = load_dataset(*config.csv_path, config.label_column);
  } else if (config.synthetic) {
    data = cfao::generate_synthetic(config.synthetic->spec(), config.synthetic->n);
  } else {
    throw UsageError("aggregate needs --data or a data source in the config");
  }
  const cfao::Task task = config.make_task(data.num_classes());
  cfao::SampleOptions options;
  options.positive_label = config.positive_label;
  if (options.positive_label < 0 || options.positive_label > data.num_classes()) {
    throw UsageError("positive_label out of range");
  }
  const auto obs = cfao::sample_groups(data, task, config.n_groups, config.seed, options);
  const fs::path path = output_path(config, args.out);
  cfao::write_observations(path, task, obs);

  const json effective = config.to_json();
  const std::string hash = hash_of(effective);
  json meta = {{"config_hash", hash},
               {"command", "aggregate"},
               {"config", effective},
               {"task", cfao::to_string(task.kind)},
               {"m", task.m},
               {"k", task.k},
               {"d", data.dim()},
               {"n_groups", config.n_groups},
               {"label_names", data.label_names}};
  if (config.csv_path) meta["inputs"] = {{"data", upstream_hash(*config.csv_path)}};
  if (task.kind == cfao::TaskKind::kMil) {
    const int positive = config.positive_label > 0 ? config.positive_label : data.num_classes();
    meta["positive_label"] = data.label_names[static_cast<std::size_t>(positive - 1)];
  }
  cfao::write_json(meta_path(path), meta);
  std::cout << "wrote " << path.string() << " (" << obs.size() << " " << cfao::to_string(task.kind)
            << " groups, m = " << task.m << ", config " << hash << ")\n";
  return kExitOk;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string observations;
  std::optional<std::string> val_observations;
  std::optional<std::string> val_data;
  std::optional<int> k;
  std::string out = "checkpoint.json";
  std::string metrics = "metrics.jsonl";
};

int run_train(const Settings& settings, const TrainArgs& args) {
  require_file("observation file", args.observations);
  json raw = settings.raw();
  const cfao::TaskKind file_task = cfao::observation_file_task(args.observations);
  if (raw.contains("task")) {
    const cfao::TaskKind wanted = [&] {
      try {
        return cfao::parse_task_kind(raw["task"].get<std::string>());
      } catch (const std::exception& e) {
        throw UsageError(e.what());
      }
    }();
    if (wanted != file_task) {
      throw UsageError("observation file '" + args.observations + "' holds " +
                       std::string(cfao::to_string(file_task)) + " groups, config asks for " +
                       std::string(cfao::to_string(wanted)));
    }
  }
  raw["task"] = cfao::to_string(file_task);
  const auto meta = read_meta(args.observations);
  if (!raw.contains("m") && meta && meta->contains("m")) raw["m"] = (*meta)["m"];
  const cfao::ExperimentConfig config = parse_config(raw);

  int k = 2;
  if (args.k) {
    k = *args.k;
  } else if (meta && meta->contains("k")) {
    k = (*meta)["k"].get<int>();
  } else if (file_task != cfao::TaskKind::kMil) {
    throw UsageError("cannot tell the number of classes; pass --k");
  }
  cfao::Task task;
  try {
    task = config.make_task(k);
  } catch (const cfao::Error& e) {
    throw UsageError(e.what());
  }
  const auto obs = cfao::read_observations(args.observations, task);
  if (obs.empty()) throw UsageError("observation file '" + args.observations + "' is empty");
  const int d = static_cast<int>(obs.front().xs.cols());

  const cfao::TrainConfig train_config = config.resolved_train();
  const cfao::Model model =
      cfao::Model::create(config.architecture, d, task.k, cfao::head_for_task(task.kind),
                          cfao::mix64(config.seed ^ 0x6d6f64656cULL), config.hidden);

  std::vector<std::string> label_names;
  if (meta) label_names = meta->value("label_names", std::vector<std::string>{});
  const std::string positive = meta ? meta->value("positive_label", "") : "";

  cfao::Validation validation;
  json inputs = {{"observations", upstream_hash(args.observations)}};
  if (args.val_observations) {
    require_file("validation observation file", *args.val_observations);
    validation.groups = cfao::read_observations(*args.val_observations, task);
    inputs["val_observations"] = upstream_hash(*args.val_observations);
  }
  if (args.val_data) {
    cfao::Dataset labeled = load_dataset(*args.val_data, config.label_column, label_names);
    if (task.kind == cfao::TaskKind::kMil) {
      if (positive.empty()) throw UsageError("MIL validation data needs the positive label recorded with the observations");
      labeled = binarize(labeled, positive);
    }
    validation.labeled = labeled;
    inputs["val_data"] = upstream_hash(*args.val_data);
  }

  const cfao::TrainResult result =
      config.method == cfao::TrainMethod::kLoglik
          ? cfao::train_loglik(obs, task, model, train_config, validation)
          : cfao::train(obs, task, model, train_config, validation);

  json effective = config.to_json();
  effective["k"] = task.k;
  effective["inputs"] = inputs;
  const std::string hash = hash_of(effective);

  const fs::path metrics_path = output_path(config, args.metrics);
  {
    std::ofstream out(metrics_path);
    if (!out) throw cfao::Error("cannot write '" + metrics_path.string() + "'");
    for (const auto& m : result.log) out << m.to_json().dump() << '\n';
  }
  cfao::write_json(meta_path(metrics_path), {{"config_hash", hash}, {"command", "train"}});

  json checkpoint = {{"schema_version", kCheckpointSchema},
                     {"config_hash", hash},
                     {"task", cfao::to_string(task.kind)},
                     {"m", task.m},
                     {"k", task.k},
                     {"best_epoch", result.best_epoch},
                     {"config", effective},
                     {"model", result.model.to_json()}};
  if (!label_names.empty()) checkpoint["label_names"] = label_names;
  if (!positive.empty()) checkpoint["positive_label"] = positive;
  const fs::path ckpt_path = output_path(config, args.out);
  cfao::write_json(ckpt_path, checkpoint);

  const auto& best = result.log[static_cast<std::size_t>(result.best_epoch - 1)];
  std::cout << "trained " << result.log.size() << " epochs; best epoch " << result.best_epoch
            << " (validation metric " << best.val_metric << ")\nwrote " << ckpt_path.string()
            << " and " << metrics_path.string() << " (config " << hash << ")\n";
  return kExitOk;
}

// ----------------------------------------------------------------- eval

struct EvalArgs {
  std::string checkpoint;
  std::optional<std::string> data;
  std::optional<std::string> val_data;
  std::optional<std::string> groups;
  std::string fit_on = "val";
  std::string out = "eval.json";
};

int run_eval(const Settings& settings, const EvalArgs& args) {
  require_file("checkpoint", args.checkpoint);
  if (!args.data && !args.groups) throw UsageError("eval needs --data and/or --groups");
  json raw = settings.raw();
  const json ckpt = cfao::read_json(args.checkpoint);
  const int schema = ckpt.value("schema_version", -1);
  if (schema != kCheckpointSchema) {
    throw cfao::Error("unsupported checkpoint schema_version " + std::to_string(schema) +
                      " (expected " + std::to_string(kCheckpointSchema) + ")");
  }
  const cfao::Model model = cfao::Model::from_json(ckpt.at("model"));
  const cfao::Task task = cfao::make_task(cfao::parse_task_kind(ckpt.at("task").get<std::string>()),
                                          ckpt.at("m").get<int>(), ckpt.at("k").get<int>());
  const std::string label_column = raw.value("label_column", "label");
  const auto label_names = ckpt.value("label_names", std::vector<std::string>{});
  const std::string positive = ckpt.value("positive_label", "");

  auto labeled = [&](const std::string& path) {
    cfao::Dataset ds = load_dataset(path, label_column,
                                    task.kind == cfao::TaskKind::kMil ? std::vector<std::string>{}
                                                                      : label_names);
    if (task.kind == cfao::TaskKind::kMil) {
      if (positive.empty()) throw UsageError("checkpoint does not record the MIL positive label");
      ds = binarize(ds, positive);
    }
    if (ds.dim() != model.input_dim()) throw cfao::Error("data dimension does not match the model");
    return ds;
  };

  cfao::EvalReport report;
  json inputs = {{"checkpoint", ckpt.value("config_hash", "")}};
  std::string fitted_on;
  if (args.data) {
    const cfao::Dataset test = labeled(*args.data);
    const std::vector<int> truth = zero_based(test.labels);
    const std::vector<int> preds = cfao::predict_classes(model, test.features);
    report.accuracy = cfao::accuracy(preds, truth);
    if (args.fit_on == "val" && args.val_data) {
      const cfao::Dataset val = labeled(*args.val_data);
      const auto fit = cfao::modified_accuracy(cfao::confusion_counts(
          cfao::predict_classes(model, val.features), zero_based(val.labels), task.k));
      report.permutation = fit.permutation;
      report.modified_accuracy = cfao::accuracy(cfao::apply_permutation(preds, fit.permutation), truth);
      fitted_on = "val";
      inputs["val_data"] = upstream_hash(*args.val_data);
    } else {
      const auto fit = cfao::modified_accuracy(cfao::confusion_counts(preds, truth, task.k));
      report.permutation = fit.permutation;
      report.modified_accuracy = fit.accuracy;
      fitted_on = "test";
    }
    inputs["data"] = upstream_hash(*args.data);
  }
  if (args.groups) {
    if (task.kind != cfao::TaskKind::kMil) throw UsageError("--groups is scored for MIL checkpoints only");
    require_file("group file", *args.groups);
    const auto bags = cfao::read_observations(*args.groups, task);
    report.group_accuracy = cfao::group_accuracy_mil(model, bags);
    inputs["groups"] = upstream_hash(*args.groups);
  }

  json effective = {{"command", "eval"}, {"fit_on", fitted_on}, {"inputs", inputs}};
  json out = report.to_json();
  if (!fitted_on.empty()) out["permutation_fitted_on"] = fitted_on;
  out["config_hash"] = hash_of(effective);
  const fs::path dir = raw["output_dir"].get<std::string>();
  fs::create_directories(dir);
  cfao::write_json(dir / args.out, out);
  print_json(out);
  return kExitOk;
}

// --------------------------------------------------------------- verify

struct VerifyArgs {
  std::string suite = "all";
  std::string out = "verify.json";
};

int run_verify(const Settings& settings, const VerifyArgs& args) {
  if (!cfao::is_verify_suite(args.suite)) {
    throw UsageError("unknown suite '" + args.suite + "' (expected oracle, unbiased, em, grad or all)");
  }
  const json raw = settings.raw();
  cfao::VerifyOptions options;
  options.seed = raw.value("seed", options.seed);
  const auto reports = cfao::run_verify(args.suite, options);
  bool passed = true;
  json suites = json::array();
  for (const auto& r : reports) {
    passed = passed && r.passed();
    suites.push_back(r.to_json());
    for (const auto& c : r.checks) {
      std::cerr << (c.passed() ? "PASS " : "FAIL ") << c.name << "  max deviation "
                << c.max_deviation << " (tolerance " << c.tolerance << ", " << c.trials
                << " trials)\n";
    }
  }
  const json effective = {{"command", "verify"}, {"suite", args.suite}, {"seed", options.seed}};
  const json out = {{"passed", passed}, {"suites", suites}, {"config_hash", hash_of(effective)}};
  const fs::path dir = raw["output_dir"].get<std::string>();
  fs::create_directories(dir);
  cfao::write_json(dir / args.out, out);
  print_json(out);
  return passed ? kExitOk : kExitVerify;
}

// ---------------------------------------------------------------- bench

cfao::BenchSpec bench_spec(const json& j) {
  cfao::BenchSpec s;
  try {
    if (j.contains("task")) s.task = cfao::parse_task_kind(j["task"].get<std::string>());
    if (j.contains("m")) s.m = j["m"].get<int>();
    s.n_groups = j.value("n_groups", s.n_groups);
    s.n_val_groups = j.value("n_val_groups", s.n_val_groups);
    s.seed = j.value("seed", s.seed);
    if (j.contains("architecture")) {
      s.architecture = cfao::parse_architecture(j["architecture"].get<std::string>());
    }
    s.hidden = j.value("hidden", s.hidden);
    if (j.contains("method")) {
      const std::string m = j["method"].get<std::string>();
      if (m != "uum" && m != "loglik") throw cfao::Error("unknown method '" + m + "'");
      s.loglik = m == "loglik";
    }
    if (j.contains("profile")) {
      const std::string p = j["profile"].get<std::string>();
      if (p != "small" && p != "large") throw cfao::Error("unknown profile '" + p + "'");
      s.profile = p == "small" ? cfao::ScaleProfile::kSmall : cfao::ScaleProfile::kLarge;
    }
    if (j.contains("csv")) s.csv_path = j["csv"].get<std::string>();
    s.label_column = j.value("label_column", s.label_column);
    s.positive_label = j.value("positive_label", s.positive_label);
    if (j.contains("synthetic")) {
      const json& syn = j["synthetic"];
      s.k = syn.value("k", s.k);
      s.d = syn.value("d", s.d);
      s.radius = syn.value("radius", s.radius);
      s.spread = syn.value("spread", s.spread);
      s.n_train = syn.value("n_train", s.n_train);
      s.n_val = syn.value("n_val", s.n_val);
      s.n_test = syn.value("n_test", s.n_test);
    }
    if (j.contains("train")) {
      const json& t = j["train"];
      s.epochs = t.value("epochs", s.epochs);
      s.batch_size = t.value("batch_size", s.batch_size);
      if (t.contains("learning_rate")) s.learning_rate = t["learning_rate"].get<double>();
      if (t.contains("warmup_epochs")) s.warmup_epochs = t["warmup_epochs"].get<int>();
    }
  } catch (const std::exception& e) {
    throw UsageError(std::string("invalid bench config: ") + e.what());
  }
  if (s.epochs < 1 || s.n_groups < 1 || s.n_val_groups < 1 || s.hidden < 1 || s.batch_size < 1) {
    throw UsageError("bench sizes must be positive");
  }
  if (s.csv_path) require_file("data file", *s.csv_path);
  return s;
}

int run_bench(const Settings& settings) {
  const json raw = settings.raw();
  const cfao::BenchSpec spec = bench_spec(raw);
  const cfao::BenchResult result = cfao::run_bench(spec);
  const json effective = spec.to_json();
  json out = {{"config_hash", hash_of(effective)}, {"spec", effective}, {"result", result.to_json()}};
  const fs::path dir = raw["output_dir"].get<std::string>();
  fs::create_directories(dir);
  cfao::write_json(dir / "bench.json", out);
  print_json(out);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Classification from aggregate observations"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  Settings settings;
  auto common = [&](CLI::App* cmd) {
    cmd->add_option_function<std::string>(
        "--config", [&](const std::string& v) { settings.config_path = v; }, "JSON config file");
    settings.flag<std::string>(cmd, "--output-dir", "/output_dir",
                               std::string("Output directory (default $") + kOutputDirEnv + " or .)");
    settings.flag<std::uint64_t>(cmd, "--seed", "/seed", "Seed");
  };

  SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth", "Sample a Gaussian-mixture dataset");
  common(synth);
  settings.flag<int>(synth, "--k", "/synthetic/k", "Classes");
  settings.flag<int>(synth, "--d", "/synthetic/d", "Feature dimension");
  settings.flag<long long>(synth, "--n", "/synthetic/n", "Rows");
  settings.flag<double>(synth, "--radius", "/synthetic/radius", "Distance of the means from the origin");
  settings.flag<double>(synth, "--spread", "/synthetic/spread", "Per-class standard deviation");
  synth->add_option("--out", synth_args.out, "Output file name")->capture_default_str();

  AggregateArgs agg_args;
  auto* agg = app.add_subcommand("aggregate", "Form groups and label them with g(y)");
  common(agg);
  agg->add_option("--data", agg_args.data, "Labeled CSV");
  settings.flag<std::string>(agg, "--task", "/task", "pairwise|triplet|llp|mil|rank|ordinal_triplet");
  settings.flag<int>(agg, "--m", "/m", "Group size");
  settings.flag<long long>(agg, "--n-groups", "/n_groups", "Number of groups");
  settings.flag<int>(agg, "--positive-label", "/positive_label", "MIL positive label index (0 = largest)");
  settings.flag<std::string>(agg, "--label-column", "/label_column", "Label column name");
  agg->add_option("--out", agg_args.out, "Output file name")->capture_default_str();

  TrainArgs train_args;
  auto* tr = app.add_subcommand("train", "Train on aggregate observations");
  common(tr);
  tr->add_option("--observations", train_args.observations, "Observation JSONL")->required();
  tr->add_option("--val-observations", train_args.val_observations, "Validation groups JSONL");
  tr->add_option("--val-data", train_args.val_data, "Labeled validation CSV");
  tr->add_option("--k", train_args.k, "Number of classes (default from the observation metadata)");
  settings.flag<std::string>(tr, "--task", "/task", "Expected task");
  settings.flag<std::string>(tr, "--arch", "/architecture", "linear|mlp");
  settings.flag<int>(tr, "--hidden", "/hidden", "MLP hidden units");
  settings.flag<std::string>(tr, "--method", "/method", "uum|loglik");
  settings.flag<std::string>(tr, "--profile", "/profile", "small|large warm-up defaults");
  settings.flag<int>(tr, "--epochs", "/train/epochs", "T_max");
  settings.flag<int>(tr, "--batch-size", "/train/batch_size", "Groups per minibatch");
  settings.flag<double>(tr, "--lr", "/train/learning_rate", "Adam learning rate");
  settings.flag<bool>(tr, "--warmup", "/train/warmup", "flag_init");
  settings.flag<int>(tr, "--warmup-epochs", "/train/warmup_epochs", "T_init");
  settings.flag<bool>(tr, "--confidence-matrix", "/train/confidence_matrix", "flag_mat");
  settings.flag<double>(tr, "--validation-fraction", "/train/validation_fraction",
                        "Share of groups held out when no validation data is given");
  tr->add_option("--out", train_args.out, "Checkpoint file name")->capture_default_str();
  tr->add_option("--metrics", train_args.metrics, "Metrics JSONL file name")->capture_default_str();

  EvalArgs eval_args;
  auto* ev = app.add_subcommand("eval", "Score a checkpoint");
  common(ev);
  ev->add_option("--checkpoint", eval_args.checkpoint, "Checkpoint JSON")->required();
  ev->add_option("--data", eval_args.data, "Labeled test CSV");
  ev->add_option("--val-data", eval_args.val_data, "Labeled CSV the permutation is fitted on");
  ev->add_option("--groups", eval_args.groups, "MIL bags JSONL for group accuracy");
  ev->add_option("--fit-on", eval_args.fit_on, "Split the permutation is fitted on")
      ->check(CLI::IsMember({"val", "test"}))
      ->capture_default_str();
  settings.flag<std::string>(ev, "--label-column", "/label_column", "Label column name");
  ev->add_option("--out", eval_args.out, "Report file name")->capture_default_str();

  VerifyArgs verify_args;
  auto* ver = app.add_subcommand("verify", "Run exact self-checks");
  common(ver);
  ver->add_option("suite", verify_args.suite, "oracle|unbiased|em|grad|all")->capture_default_str();
  ver->add_option("--out", verify_args.out, "Report file name")->capture_default_str();

  auto* bench = app.add_subcommand("bench", "Weak vs supervised at desk scale");
  common(bench);
  settings.flag<std::string>(bench, "--task", "/task", "Task");
  settings.flag<int>(bench, "--m", "/m", "Group size");
  settings.flag<long long>(bench, "--n-groups", "/n_groups", "Training groups");
  settings.flag<int>(bench, "--epochs", "/train/epochs", "Epochs");
  settings.flag<double>(bench, "--lr", "/train/learning_rate", "Adam learning rate");
  settings.flag<std::string>(bench, "--arch", "/architecture", "linear|mlp");
  settings.flag<int>(bench, "--hidden", "/hidden", "MLP hidden units");
  settings.flag<std::string>(bench, "--method", "/method", "uum|loglik");
  settings.flag<std::string>(bench, "--profile", "/profile", "small|large warm-up defaults (default large)");
  settings.flag<int>(bench, "--warmup-epochs", "/train/warmup_epochs", "T_init override");
  settings.flag<std::string>(bench, "--csv", "/csv", "Labeled CSV instead of synthetic data");
  settings.flag<std::string>(bench, "--label-column", "/label_column", "Label column name");
  settings.flag<int>(bench, "--positive-label", "/positive_label", "MIL positive label index");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*synth) return run_synth(settings, synth_args);
    if (*agg) return run_aggregate(settings, agg_args);
    if (*tr) return run_train(settings, train_args);
    if (*ev) return run_eval(settings, eval_args);
    if (*ver) return run_verify(settings, verify_args);
    if (*bench) return run_bench(settings);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
