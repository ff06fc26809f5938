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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include "doctest.h"

#include "cfao/types.hpp"
#include "cfao/data.hpp"

using namespace cfao;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "cfao_unit";
  fs::create_directories(dir);
  return dir / name;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

SyntheticSpec two_blobs(std::uint64_t seed) {
  SyntheticSpec s;
  s.k = 2;
  s.d = 2;
  s.means.resize(2, 2);
  s.means << -3, 0, 3, 0;
  s.spreads = VectorXd::Constant(2, 0.5);
  s.prior = VectorXd::Constant(2, 0.5);
  s.seed = seed;
  return s;
}

Dataset labels_only(std::vector<int> labels, int k) {
  Dataset d;
  d.features = RowMatrixXd::Zero(static_cast<Index>(labels.size()), 1);
  for (Index i = 0; i < d.features.rows(); ++i) d.features(i, 0) = static_cast<double>(i);
  d.labels = std::move(labels);
  for (int j = 1; j <= k; ++j) d.label_names.push_back(std::to_string(j));
  d.feature_names = {"x"};
  return d;
}

}  // namespace

TEST_CASE("single-class synthetic data") {
  const Dataset d = generate_synthetic(SyntheticSpec::ring(1, 3, 2.0, 1.0, 3), 5);
  CHECK(d.size() == 5);
  CHECK(d.dim() == 3);
  for (int y : d.labels) CHECK(y == 1);
}

TEST_CASE("synthetic data is deterministic") {
  const auto spec = SyntheticSpec::ring(3, 2, 4.0, 1.0, 7);
  const Dataset a = generate_synthetic(spec, 100);
  const Dataset b = generate_synthetic(spec, 100);
  CHECK(a.features == b.features);
  CHECK(a.labels == b.labels);
  for (int y : a.labels) CHECK((y >= 1 && y <= 3));
  const Dataset c = generate_synthetic(SyntheticSpec::ring(3, 2, 4.0, 1.0, 8), 100);
  CHECK(a.features != c.features);
}

TEST_CASE("separated blobs are almost perfectly linearly separable") {
  // Bayes rule for equal priors and spreads is sign(x_0); its accuracy is
  // Phi(3 / 0.5), estimated here by Monte Carlo with 1e5 draws.
  auto bayes_accuracy = [](const Dataset& d) {
    Index hit = 0;
    for (Index i = 0; i < d.size(); ++i) {
      hit += (d.features(i, 0) > 0 ? 2 : 1) == d.labels[i];
    }
    return static_cast<double>(hit) / static_cast<double>(d.size());
  };
  CHECK(bayes_accuracy(generate_synthetic(two_blobs(11), 100000)) > 0.999);
  CHECK(bayes_accuracy(generate_synthetic(two_blobs(12), 1000)) > 0.99);
  CHECK(0.5 * std::erfc(-6.0 / std::sqrt(2.0)) > 0.999);
}

TEST_CASE("synthetic spec validation") {
  CHECK_THROWS_WITH_AS(generate_synthetic(SyntheticSpec::ring(2, 2, 1, 1, 0), 0),
                       "empty dataset requested", Error);
  SyntheticSpec bad = two_blobs(1);
  bad.prior << 0.5, -0.5;
  CHECK_THROWS_AS(generate_synthetic(bad, 10), Error);
}

TEST_CASE("csv labels are re-indexed by first appearance") {
  const fs::path p = scratch("abc.csv");
  write_text(p, "x,y,label\n1,2,a\n3,4,b\n5,6,a\n");
  const Dataset d = load_csv(p, "label");
  CHECK(d.num_classes() == 2);
  CHECK(d.labels == std::vector<int>{1, 2, 1});
  CHECK(d.label_names == std::vector<std::string>{"a", "b"});
  CHECK(d.features(2, 1) == 6.0);
  const auto meta = dataset_metadata(d);
  CHECK(meta["label_mapping"]["b"] == 2);

  const Dataset fixed = load_csv(p, "label", {"b", "a"});
  CHECK(fixed.labels == std::vector<int>{2, 1, 2});
  CHECK_THROWS_AS(load_csv(p, "label", {"a"}), Error);
}

TEST_CASE("csv errors") {
  const fs::path p = scratch("nan.csv");
  write_text(p, "x,label\n1,a\nnan,b\n");
  CHECK_THROWS_WITH_AS(load_csv(p, "label"), doctest::Contains("non-numeric feature"), Error);
  write_text(p, "x,label\n1,a\nfoo,b\n");
  CHECK_THROWS_WITH_AS(load_csv(p, "label"), doctest::Contains("non-numeric feature"), Error);
  write_text(p, "x,label\n");
  CHECK_THROWS_AS(load_csv(p, "label"), Error);
  CHECK_THROWS_AS(load_csv(scratch("missing.csv"), "label"), Error);
  write_text(p, "x,label\n1,a\n");
  CHECK_THROWS_AS(load_csv(p, "class"), Error);
}

TEST_CASE("csv round trip") {
  const Dataset d = generate_synthetic(SyntheticSpec::ring(3, 4, 4.0, 1.0, 5), 200);
  const fs::path p = scratch("round.csv");
  save_csv(d, p);
  const Dataset back = load_csv(p, "label", d.label_names);
  CHECK(back.features == d.features);
  CHECK(back.labels == d.labels);
  CHECK(back.label_names == d.label_names);
}

TEST_CASE("split and subset") {
  const Dataset d = generate_synthetic(SyntheticSpec::ring(3, 2, 4.0, 1.0, 5), 100);
  const auto parts = split_dataset(d, {0.6, 0.2, 0.2}, 1);
  REQUIRE(parts.size() == 3);
  CHECK(parts[0].size() == 60);
  CHECK(parts[1].size() == 20);
  CHECK(parts[2].size() == 20);
  const auto again = split_dataset(d, {0.6, 0.2, 0.2}, 1);
  CHECK(again[1].features == parts[1].features);
  const Dataset s = subset(d, {3, 1});
  CHECK(s.features.row(0) == d.features.row(3));
  CHECK(s.labels[1] == d.labels[1]);
}

TEST_CASE("sampling groups from a single-class dataset") {
  const Dataset d = labels_only(std::vector<int>(10, 1), 1);
  for (const auto& obs : sample_groups(d, make_task(TaskKind::kPairwise, 2, 1), 50, 3)) {
    CHECK(obs.z.flag == 1);
  }
  // MIL: the only class is the positive one.
  for (const auto& obs : sample_groups(d, make_task(TaskKind::kMil, 4, 2), 50, 3)) {
    CHECK(obs.z.flag == 1);
    CHECK(obs.labels == std::vector<int>{1, 1, 1, 1});
  }
}

TEST_CASE("label proportions of a balanced two-label dataset") {
  // Each member is label 1 or 2 with probability 1/2, so z = (1, 1) has
  // probability 2 * (1/2) * (1/2) = 0.5.
  const Dataset d = labels_only({1, 2}, 2);
  const auto obs = sample_groups(d, make_task(TaskKind::kLlp, 2, 2), 10000, 17);
  int mixed = 0;
  for (const auto& o : obs) {
    REQUIRE(o.z.counts.size() == 2);
    CHECK(o.z.counts[0] + o.z.counts[1] == 2);
    mixed += o.z.counts[0] == 1;
  }
  CHECK(std::abs(mixed / 10000.0 - 0.5) < 0.02);
}

TEST_CASE("sampled groups are consistent and reproducible") {
  const Dataset d = generate_synthetic(SyntheticSpec::ring(3, 2, 4.0, 1.0, 5), 100);
  const Task task = make_task(TaskKind::kTriplet, 3, 3);
  const auto a = sample_groups(d, task, 20, 9);
  const auto b = sample_groups(d, task, 20, 9);
  for (std::size_t g = 0; g < a.size(); ++g) {
    CHECK(a[g].xs == b[g].xs);
    CHECK(a[g].z == aggregate_label(task, a[g].labels));
  }
  CHECK_THROWS_AS(sample_groups(d, make_task(TaskKind::kPairwise, 2, 2), 5, 1), Error);
}

TEST_CASE("observation files round trip") {
  const Dataset d = generate_synthetic(SyntheticSpec::ring(3, 2, 4.0, 1.0, 5), 50);
  for (TaskKind kind : {TaskKind::kLlp, TaskKind::kMil, TaskKind::kRank}) {
    const Task task = make_task(kind, default_group_size(kind), kind == TaskKind::kMil ? 2 : 3);
    const auto obs = sample_groups(d, task, 10, 2);
    const fs::path p = scratch("obs.jsonl");
    write_observations(p, task, obs);
    CHECK(observation_file_task(p) == kind);
    const auto back = read_observations(p, task);
    REQUIRE(back.size() == obs.size());
    for (std::size_t g = 0; g < obs.size(); ++g) {
      CHECK(back[g].xs == obs[g].xs);
      CHECK(back[g].z == obs[g].z);
      CHECK(back[g].labels == obs[g].labels);
    }
  }
  const Task mil = make_task(TaskKind::kMil, 2, 2);
  const auto from_bool = observation_from_json(
      mil, nlohmann::json::parse(R"({"task":"mil","xs":[[1,2],[3,4]],"z":true})"));
  CHECK(from_bool.z.flag == 1);
  CHECK_THROWS_AS(observation_from_json(
                      mil, nlohmann::json::parse(R"({"task":"pairwise","xs":[[1],[2]],"z":1})")),
                  Error);
}
