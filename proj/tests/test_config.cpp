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

#include "doctest.h"

#include "cfao/types.hpp"
#include "cfao/bench.hpp"
#include "cfao/config.hpp"
#include "cfao/verify.hpp"

using namespace cfao;
using nlohmann::json;

TEST_CASE("config defaults and resolution") {
  const ExperimentConfig c = ExperimentConfig::from_json(json::object());
  CHECK(c.task == TaskKind::kPairwise);
  CHECK(c.group_size() == 2);
  const TrainConfig t = c.resolved_train();
  CHECK(t.warmup);
  CHECK(t.warmup_epochs == std::min(100, t.epochs));
  CHECK(t.confidence_matrix);
  CHECK(t.learning_rate == 1e-3);

  const ExperimentConfig mil = ExperimentConfig::from_json({{"task", "mil"}, {"architecture", "linear"}});
  CHECK(mil.group_size() == 4);
  CHECK_FALSE(mil.resolved_train().warmup);
  CHECK(mil.resolved_train().learning_rate == 2e-1);
  CHECK(mil.make_task(7).k == 2);

  const ExperimentConfig explicit_flags = ExperimentConfig::from_json(
      {{"task", "llp"}, {"m", 5}, {"train", {{"epochs", 30}, {"warmup", true}, {"warmup_epochs", 4}}}});
  CHECK(explicit_flags.resolved_train().warmup);
  CHECK(explicit_flags.resolved_train().warmup_epochs == 4);
  CHECK(explicit_flags.resolved_train().confidence_matrix);

  const ExperimentConfig loglik = ExperimentConfig::from_json(
      {{"task", "triplet"}, {"method", "loglik"}, {"train", {{"epochs", 12}}}});
  CHECK(loglik.resolved_train().warmup);
  CHECK(loglik.resolved_train().warmup_epochs == 12);
}

TEST_CASE("config cross-field checks") {
  CHECK_THROWS_AS(ExperimentConfig::from_json({{"task", "pairwise"}, {"m", 3}}), Error);
  CHECK_THROWS_AS(ExperimentConfig::from_json({{"task", "nope"}}), Error);
  CHECK_THROWS_AS(ExperimentConfig::from_json({{"method", "em"}}), Error);
  CHECK_THROWS_AS(ExperimentConfig::from_json({{"train", {{"epochs", 3}, {"warmup_epochs", 5}}}}), Error);
  CHECK_THROWS_AS(ExperimentConfig::from_json({{"n_groups", "many"}}), Error);
  CHECK_THROWS_AS(ExperimentConfig::from_json({{"synthetic", json::object()}, {"csv", "a.csv"}}), Error);
}

TEST_CASE("config hash") {
  const ExperimentConfig a = ExperimentConfig::from_json({{"seed", 3}});
  const ExperimentConfig b = ExperimentConfig::from_json({{"seed", 3}});
  const ExperimentConfig c = ExperimentConfig::from_json({{"seed", 4}});
  CHECK(config_hash(a.to_json()) == config_hash(b.to_json()));
  CHECK(config_hash(a.to_json()) != config_hash(c.to_json()));
  CHECK(config_hash(a.to_json()).size() == 16);
  CHECK(config_hash(json::parse("{}")) != config_hash(json::parse("[]")));
  CHECK(ExperimentConfig::from_json(a.to_json()).to_json() == a.to_json());
}

TEST_CASE("heads per task") {
  CHECK(head_for_task(TaskKind::kMil) == Head::kSigmoid);
  CHECK(head_for_task(TaskKind::kRank) == Head::kCumulative);
  CHECK(head_for_task(TaskKind::kOrdinalTriplet) == Head::kCumulative);
  CHECK(head_for_task(TaskKind::kLlp) == Head::kSoftmax);
}

TEST_CASE("verify suites") {
  CHECK(is_verify_suite("all"));
  CHECK_FALSE(is_verify_suite("fast"));
  CHECK_THROWS_AS(run_verify("fast"), Error);
  VerifyOptions small;
  small.oracle_trials = 20;
  const auto reports = run_verify("oracle", small);
  REQUIRE(reports.size() == 1);
  CHECK(reports[0].passed());
  CHECK(reports[0].to_json()["checks"].size() == 18);
}

TEST_CASE("bench spec serializes its inputs") {
  BenchSpec s;
  s.task = TaskKind::kLlp;
  s.m = 6;
  const json j = s.to_json();
  CHECK(j["m"] == 6);
  CHECK(j["task"] == "llp");
  CHECK(j.contains("synthetic"));
}
