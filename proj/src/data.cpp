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

#include "cfao/data.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>

#include "cfao/rng.hpp"

namespace cfao {

void Dataset::validate() const {
  if (static_cast<Index>(labels.size()) != features.rows()) {
    throw Error("dataset has " + std::to_string(features.rows()) +
                " feature rows but " + std::to_string(labels.size()) + " labels");
  }
  for (int y : labels) {
    if (y < 1 || y > num_classes()) {
      throw Error("dataset label " + std::to_string(y) + " outside 1.." +
                  std::to_string(num_classes()));
    }
  }
}

void SyntheticSpec::validate() const {
  if (k < 1 || d < 1) throw Error("synthetic spec needs k >= 1 and d >= 1");
  if (means.rows() != k || means.cols() != d) {
    throw Error("synthetic spec means must be k x d");
  }
  if (spreads.size() != k || prior.size() != k) {
    throw Error("synthetic spec spreads and prior must have length k");
  }
  if ((spreads.array() <= 0.0).any() || !spreads.allFinite()) {
    throw Error("synthetic spec spreads must be positive");
  }
  if ((prior.array() < 0.0).any() || std::abs(prior.sum() - 1.0) > 1e-9) {
    throw Error("synthetic spec prior must lie on the simplex");
  }
}

SyntheticSpec SyntheticSpec::ring(int k, int d, double radius, double spread,
                                  std::uint64_t seed) {
  SyntheticSpec spec;
  spec.k = k;
  spec.d = d;
  spec.seed = seed;
  spec.means = RowMatrixXd::Zero(k, d);
  for (int j = 0; j < k; ++j) {
    const double angle = 2.0 * std::numbers::pi * j / k;
    spec.means(j, 0) = radius * std::cos(angle);
    if (d > 1) spec.means(j, 1) = radius * std::sin(angle);
  }
  spec.spreads = VectorXd::Constant(k, spread);
  spec.prior = VectorXd::Constant(k, 1.0 / k);
  return spec;
}

Dataset generate_synthetic(const SyntheticSpec& spec, Index n) {
  if (n < 1) throw Error("empty dataset requested");
  spec.validate();
  Rng rng(spec.seed);
  Dataset out;
  out.features.resize(n, spec.d);
  out.labels.resize(static_cast<std::size_t>(n));
  for (int j = 1; j <= spec.k; ++j) out.label_names.push_back(std::to_string(j));
  for (int c = 0; c < spec.d; ++c) out.feature_names.push_back("x" + std::to_string(c));
  for (Index i = 0; i < n; ++i) {
    const double u = rng.uniform();
    int cls = spec.k - 1;
    double acc = 0.0;
    for (int j = 0; j < spec.k; ++j) {
      acc += spec.prior(j);
      if (u < acc) {
        cls = j;
        break;
      }
    }
    out.labels[static_cast<std::size_t>(i)] = cls + 1;
    for (int c = 0; c < spec.d; ++c) {
      out.features(i, c) = spec.means(cls, c) + spec.spreads(cls) * rng.normal();
    }
  }
  return out;
}

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(
        start, comma == std::string::npos ? std::string::npos : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

Dataset load_csv(const std::filesystem::path& path,
                 const std::string& label_column,
                 const std::vector<std::string>& known_labels) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open CSV file '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw Error("empty dataset: '" + path.string() + "' has no header");
  const std::vector<std::string> header = split_csv_line(line);
  std::ptrdiff_t label_idx = -1;
  Dataset out;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == label_column) {
      label_idx = static_cast<std::ptrdiff_t>(c);
    } else {
      out.feature_names.push_back(header[c]);
    }
  }
  if (label_idx < 0) {
    throw Error("label column '" + label_column + "' not found in '" +
                path.string() + "'");
  }
  std::vector<double> values;
  std::map<std::string, int> label_ids;
  for (const auto& name : known_labels) {
    if (!label_ids.try_emplace(name, static_cast<int>(out.label_names.size()) + 1).second) {
      throw Error("duplicate label '" + name + "' in the label mapping");
    }
    out.label_names.push_back(name);
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw Error("line " + std::to_string(line_no) + " of '" + path.string() +
                  "' has " + std::to_string(cells.size()) + " fields, expected " +
                  std::to_string(header.size()));
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (static_cast<std::ptrdiff_t>(c) == label_idx) continue;
      double v = 0.0;
      const std::string& cell = cells[c];
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (res.ec != std::errc() || res.ptr != cell.data() + cell.size() ||
          !std::isfinite(v)) {
        throw Error("non-numeric feature '" + cell + "' in column '" +
                    header[c] + "' at line " + std::to_string(line_no));
      }
      values.push_back(v);
    }
    const std::string& name = cells[static_cast<std::size_t>(label_idx)];
    if (!known_labels.empty() && !label_ids.contains(name)) {
      throw Error("label '" + name + "' at line " + std::to_string(line_no) +
                  " is not in the label mapping");
    }
    auto [it, inserted] =
        label_ids.try_emplace(name, static_cast<int>(out.label_names.size()) + 1);
    if (inserted) out.label_names.push_back(name);
    out.labels.push_back(it->second);
  }
  if (out.labels.empty()) throw Error("empty dataset: '" + path.string() + "' has no rows");
  const Index n = static_cast<Index>(out.labels.size());
  const Index d = static_cast<Index>(out.feature_names.size());
  out.features = Eigen::Map<RowMatrixXd>(values.data(), n, d);
  return out;
}

void save_csv(const Dataset& dataset, const std::filesystem::path& path,
              const std::string& label_column) {
  dataset.validate();
  std::ofstream out(path);
  if (!out) throw Error("cannot write CSV file '" + path.string() + "'");
  for (Index c = 0; c < dataset.dim(); ++c) {
    out << (static_cast<std::size_t>(c) < dataset.feature_names.size()
                ? dataset.feature_names[c]
                : "x" + std::to_string(c))
        << ',';
  }
  out << label_column << '\n';
  for (Index i = 0; i < dataset.size(); ++i) {
    for (Index c = 0; c < dataset.dim(); ++c) {
      out << format_double(dataset.features(i, c)) << ',';
    }
    out << dataset.label_names[dataset.labels[i] - 1] << '\n';
  }
}

nlohmann::json dataset_metadata(const Dataset& dataset) {
  nlohmann::json mapping = nlohmann::json::object();
  for (std::size_t j = 0; j < dataset.label_names.size(); ++j) {
    mapping[dataset.label_names[j]] = j + 1;
  }
  return {{"n", dataset.size()},
          {"d", dataset.dim()},
          {"k", dataset.num_classes()},
          {"label_mapping", mapping},
          {"label_names", dataset.label_names},
          {"feature_names", dataset.feature_names}};
}

Dataset subset(const Dataset& dataset, const std::vector<Index>& rows) {
  Dataset out;
  out.label_names = dataset.label_names;
  out.feature_names = dataset.feature_names;
  out.features.resize(static_cast<Index>(rows.size()), dataset.dim());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.features.row(static_cast<Index>(r)) = dataset.features.row(rows[r]);
    out.labels.push_back(dataset.labels[static_cast<std::size_t>(rows[r])]);
  }
  return out;
}

std::vector<Dataset> split_dataset(const Dataset& dataset,
                                   const std::vector<double>& fractions,
                                   std::uint64_t seed) {
  if (fractions.empty()) throw Error("split needs at least one fraction");
  const double total = std::accumulate(fractions.begin(), fractions.end(), 0.0);
  if (!(total > 0.0)) throw Error("split fractions must be positive");
  std::vector<Index> order(static_cast<std::size_t>(dataset.size()));
  std::iota(order.begin(), order.end(), Index{0});
  Rng rng(seed);
  rng.shuffle(std::span<Index>(order));
  std::vector<Dataset> out;
  std::size_t start = 0;
  double acc = 0.0;
  for (std::size_t s = 0; s < fractions.size(); ++s) {
    acc += fractions[s];
    const std::size_t end =
        s + 1 == fractions.size()
            ? order.size()
            : static_cast<std::size_t>(std::llround(acc / total * order.size()));
    out.push_back(subset(dataset, std::vector<Index>(order.begin() + start,
                                                     order.begin() + end)));
    start = end;
  }
  return out;
}

std::vector<AggregateObservation> sample_groups(const Dataset& dataset,
                                                const Task& task,
                                                Index n_groups,
                                                std::uint64_t seed,
                                                const SampleOptions& options) {
  task.validate();
  dataset.validate();
  if (dataset.size() == 0) throw Error("cannot sample groups from an empty dataset");
  if (n_groups < 0) throw Error("n_groups must be nonnegative");
  const int positive =
      options.positive_label > 0 ? options.positive_label : dataset.num_classes();
  if (task.kind != TaskKind::kMil && dataset.num_classes() > task.k) {
    throw Error("dataset has " + std::to_string(dataset.num_classes()) +
                " classes but the task has k = " + std::to_string(task.k));
  }
  Rng rng(seed);
  std::vector<AggregateObservation> out;
  out.reserve(static_cast<std::size_t>(n_groups));
  const auto n = static_cast<std::uint64_t>(dataset.size());
  for (Index g = 0; g < n_groups; ++g) {
    AggregateObservation obs;
    obs.xs.resize(task.m, dataset.dim());
    obs.labels.resize(static_cast<std::size_t>(task.m));
    for (int i = 0; i < task.m; ++i) {
      const auto row = static_cast<Index>(rng.below(n));
      obs.xs.row(i) = dataset.features.row(row);
      const int label = dataset.labels[static_cast<std::size_t>(row)];
      obs.labels[i] = task.kind == TaskKind::kMil ? (label == positive ? 1 : 0) : label;
    }
    obs.z = aggregate_label(task, obs.labels);
    out.push_back(std::move(obs));
  }
  return out;
}

nlohmann::json observation_to_json(const Task& task,
                                   const AggregateObservation& obs) {
  nlohmann::json xs = nlohmann::json::array();
  for (Index i = 0; i < obs.xs.rows(); ++i) {
    xs.push_back(std::vector<double>(obs.xs.row(i).data(),
                                     obs.xs.row(i).data() + obs.xs.cols()));
  }
  nlohmann::json j = {{"task", to_string(task.kind)}, {"xs", xs}};
  if (obs.z.is_counts()) {
    j["z"] = obs.z.counts;
  } else {
    j["z"] = obs.z.flag;
  }
  if (!obs.labels.empty()) j["ys"] = obs.labels;
  return j;
}

AggregateObservation observation_from_json(const Task& task,
                                           const nlohmann::json& j) {
  const std::string name = j.at("task").get<std::string>();
  if (parse_task_kind(name) != task.kind) {
    throw Error("observation is for task '" + name + "', expected '" +
                std::string(to_string(task.kind)) + "'");
  }
  AggregateObservation obs;
  const auto& xs = j.at("xs");
  if (static_cast<int>(xs.size()) != task.m) {
    throw Error("observation has " + std::to_string(xs.size()) +
                " instances, task requires m = " + std::to_string(task.m));
  }
  const std::size_t d = xs.at(0).size();
  obs.xs.resize(task.m, static_cast<Index>(d));
  for (int i = 0; i < task.m; ++i) {
    const auto row = xs[static_cast<std::size_t>(i)].get<std::vector<double>>();
    if (row.size() != d) throw Error("observation rows differ in dimension");
    for (std::size_t c = 0; c < d; ++c) obs.xs(i, static_cast<Index>(c)) = row[c];
  }
  const auto& z = j.at("z");
  if (z.is_array()) {
    obs.z = AggregateLabel::proportions(z.get<std::vector<int>>());
  } else if (z.is_boolean()) {
    obs.z = AggregateLabel::binary(z.get<bool>() ? 1 : 0);
  } else {
    obs.z = AggregateLabel::binary(z.get<int>());
  }
  if (!is_feasible(task, obs.z)) {
    throw Error("aggregate label " + to_string(obs.z) + " is not valid for " + name);
  }
  if (j.contains("ys")) obs.labels = j["ys"].get<std::vector<int>>();
  return obs;
}

void write_observations(const std::filesystem::path& path, const Task& task,
                        const std::vector<AggregateObservation>& obs) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write observation file '" + path.string() + "'");
  for (const auto& o : obs) out << observation_to_json(task, o).dump() << '\n';
}

std::vector<AggregateObservation> read_observations(
    const std::filesystem::path& path, const Task& task) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open observation file '" + path.string() + "'");
  std::vector<AggregateObservation> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      out.push_back(observation_from_json(task, nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw Error("malformed observation at " + path.string() + ":" +
                  std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!out.empty()) {
    for (const auto& o : out) {
      if (o.xs.cols() != out.front().xs.cols()) {
        throw Error("observations in '" + path.string() + "' differ in dimension");
      }
    }
  }
  return out;
}

TaskKind observation_file_task(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open observation file '" + path.string() + "'");
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    return parse_task_kind(nlohmann::json::parse(line).at("task").get<std::string>());
  }
  throw Error("observation file '" + path.string() + "' is empty");
}

}  // namespace cfao
