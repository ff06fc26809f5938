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
#include <fstream>

#include "doctest.h"

#include "cfao/types.hpp"
#include "cfao/loss.hpp"
#include "cfao/model.hpp"
#include "cfao/rng.hpp"

using namespace cfao;

namespace {

Model zeroed(Model model) {
  for (auto& layer : model.mutable_layers()) {
    layer.weight.setZero();
    layer.bias.setZero();
  }
  return model;
}

}  // namespace

TEST_CASE("zero linear model gives uniform probabilities") {
  const Model model = zeroed(Model::linear(4, 3, Head::kSoftmax, 1));
  RowMatrixXd x(2, 4);
  x << 1, 2, 3, 4, -1, 0, 5, 2;
  const RowMatrixXd logits = model.forward(x);
  CHECK(logits.cwiseAbs().maxCoeff() == 0.0);
  const RowMatrixXd p = class_probabilities(Head::kSoftmax, logits);
  CHECK((p.array() - 1.0 / 3.0).abs().maxCoeff() < 1e-15);
}

TEST_CASE("linear model on a one-hot input selects a weight column") {
  Model model = zeroed(Model::linear(3, 2, Head::kSoftmax, 1));
  model.mutable_layers()[0].weight << 1, 2, 3, 4, 5, 6;
  RowMatrixXd x = RowMatrixXd::Zero(1, 3);
  x(0, 1) = 1.0;
  const RowMatrixXd logits = model.forward(x);
  CHECK(logits(0, 0) == 2.0);
  CHECK(logits(0, 1) == 5.0);
}

TEST_CASE("mlp golden logits") {
  const Model model = Model::mlp(3, 4, Head::kSoftmax, 2026, 5);
  std::ifstream in(std::string(CFAO_TEST_DATA_DIR) + "/mlp_golden_model.json");
  REQUIRE(in);
  const Model recorded = Model::from_json(nlohmann::json::parse(in));
  for (std::size_t l = 0; l < model.layers().size(); ++l) {
    CHECK(model.layers()[l].weight == recorded.layers()[l].weight);
    CHECK(model.layers()[l].bias == recorded.layers()[l].bias);
  }
  RowMatrixXd x(2, 3);
  x << 0.5, -1.0, 2.0, -0.25, 0.75, 0.0;
  const RowMatrixXd logits = model.forward(x);
  // Values from data/check_mlp_golden.py.
  const double golden[] = {0.001163052859983409, -0.05592178689219032, 0.16026337611302377,
                           0.5537329117397903,   -0.17908266465322042, 0.022135327507444277,
                           0.07571645034414189,  0.29082919218137415};
  for (int i = 0; i < 8; ++i) CHECK(std::abs(logits.data()[i] - golden[i]) < 1e-14);

  // Glorot-uniform bounds.
  CHECK(model.layers()[0].weight.cwiseAbs().maxCoeff() <= std::sqrt(6.0 / 8.0));
  CHECK(model.layers()[1].weight.cwiseAbs().maxCoeff() <= std::sqrt(6.0 / 9.0));
}

TEST_CASE("probability heads") {
  RowMatrixXd zero = RowMatrixXd::Zero(1, 3);
  CHECK((class_probabilities(Head::kSoftmax, zero).array() - 1.0 / 3.0).abs().maxCoeff() < 1e-15);

  RowMatrixXd f = RowMatrixXd::Zero(1, 1);
  const RowMatrixXd mil = class_probabilities(Head::kSigmoid, f);
  CHECK(mil(0, 1) == 0.5);
  f(0, 0) = 2.0;
  CHECK(class_probabilities(Head::kSigmoid, f)(0, 1) ==
        doctest::Approx(1.0 / (1.0 + std::exp(-2.0))).epsilon(1e-15));

  RowMatrixXd big(1, 2);
  big << 1000.0, 0.0;
  const RowMatrixXd p = class_probabilities(Head::kSoftmax, big);
  CHECK(p.allFinite());
  CHECK(p(0, 0) == 1.0);
  CHECK(p(0, 1) < 1e-300);

  RowMatrixXd logits(1, 3);
  logits << 0.1, 0.5, -0.2;
  const RowMatrixXd cum = cumulative_probabilities(logits);
  CHECK(cum.cols() == 4);
  CHECK(cum(0, 0) == 0.0);
  CHECK(cum(0, 3) == 1.0);
  CHECK(cum(0, 2) == doctest::Approx(class_probabilities(Head::kCumulative, logits).leftCols(2).sum()));
}

TEST_CASE("backward") {
  const Model model = Model::mlp(3, 3, Head::kSoftmax, 4, 6);
  RowMatrixXd x(2, 3);
  x << 1, -2, 0.5, 0.3, 0.2, -1;
  ForwardCache cache;
  model.forward(x, cache);
  const Gradients zero = model.backward(cache, RowMatrixXd::Zero(2, 3));
  for (const auto& g : zero) {
    CHECK(g.weight.cwiseAbs().maxCoeff() == 0.0);
    CHECK(g.bias.cwiseAbs().maxCoeff() == 0.0);
  }

  Model copy = model;
  ForwardCache stale;
  copy.forward(x, stale);
  copy.mutable_layers();
  CHECK_THROWS_AS(copy.backward(stale, RowMatrixXd::Zero(2, 3)), Error);
}

TEST_CASE("softmax cross-entropy gradient of a linear model") {
  // dL/dW = (eta - onehot) x^T, dL/db = eta - onehot.
  const Model model = Model::linear(3, 4, Head::kSoftmax, 9);
  RowMatrixXd x(1, 3);
  x << 0.4, -1.1, 2.0;
  const int label = 2;
  WeightMatrix onehot{RowMatrixXd::Zero(1, 4), false};
  onehot.w(0, label) = 1.0;
  const LossResult loss = aggregate_loss(model, x, onehot);
  Eigen::VectorXd residual = class_probabilities(Head::kSoftmax, model.forward(x)).row(0).transpose();
  residual(label) -= 1.0;
  const MatrixXd expected = residual * x.row(0);
  CHECK((loss.grads[0].weight - expected).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((loss.grads[0].bias - residual).cwiseAbs().maxCoeff() < 1e-14);

  // Central differences on one weight.
  const double h = 1e-5;
  Model up = model, down = model;
  up.mutable_layers()[0].weight(1, 2) += h;
  down.mutable_layers()[0].weight(1, 2) -= h;
  const double fd = (aggregate_loss(up, x, onehot).value - aggregate_loss(down, x, onehot).value) / (2 * h);
  CHECK(fd == doctest::Approx(expected(1, 2)).epsilon(1e-8));
}

TEST_CASE("adam") {
  Model model = Model::linear(2, 2, Head::kSoftmax, 3);
  const Model start = model;
  AdamState state = AdamState::for_model(model);
  const AdamConfig config{.learning_rate = 0.01};

  adam_step(model, model.zero_gradients(), state, config);
  CHECK(state.step == 1);
  CHECK(model.layers()[0].weight == start.layers()[0].weight);

  // First step from a zero state: m = (1 - b1) g, v = (1 - b2) g^2, the
  // bias-corrected ratio is g / (|g| + eps'), so the move is
  // -lr * sign(g) * |g| / (|g| + eps).
  Model fresh = start;
  AdamState s = AdamState::for_model(fresh);
  Gradients g = fresh.zero_gradients();
  g[0].weight << 0.5, -2.0, 1e-3, 0.0;
  g[0].bias << -0.25, 4.0;
  adam_step(fresh, g, s, config);
  for (Index i = 0; i < 4; ++i) {
    const double gi = g[0].weight.data()[i];
    const double expected = -0.01 * gi / (std::abs(gi) + 1e-8);
    CHECK(fresh.layers()[0].weight.data()[i] - start.layers()[0].weight.data()[i] ==
          doctest::Approx(expected).epsilon(1e-9));
  }
  CHECK(fresh.layers()[0].bias(1) - start.layers()[0].bias(1) == doctest::Approx(-0.01).epsilon(1e-6));

  Model twin = start;
  AdamState t = AdamState::for_model(twin);
  adam_step(twin, g, t, config);
  CHECK(twin.layers()[0].weight == fresh.layers()[0].weight);

  Gradients bad = g;
  bad[0].weight(0, 0) = std::nan("");
  const Model before = fresh;
  CHECK_THROWS_AS(adam_step(fresh, bad, s, config), Error);
  CHECK(fresh.layers()[0].weight == before.layers()[0].weight);
}

TEST_CASE("checkpoint round trip") {
  const Model model = Model::mlp(4, 3, Head::kCumulative, 12, 7);
  const Model back = Model::from_json(model.to_json());
  CHECK(back.architecture() == Architecture::kMlp);
  CHECK(back.head() == Head::kCumulative);
  CHECK(back.hidden_units() == 7);
  RowMatrixXd x = RowMatrixXd::Ones(2, 4);
  CHECK(back.forward(x) == model.forward(x));

  nlohmann::json j = model.to_json();
  j["schema_version"] = 2;
  CHECK_THROWS_AS(Model::from_json(j), Error);
  j = model.to_json();
  j["layers"][0]["weight"].erase(0);
  CHECK_THROWS_AS(Model::from_json(j), Error);
}

TEST_CASE("predictions break ties towards the lowest class") {
  const Model model = zeroed(Model::linear(2, 3, Head::kSoftmax, 1));
  CHECK(predict_classes(model, RowMatrixXd::Ones(2, 2)) == std::vector<int>{0, 0});
  Model mil = zeroed(Model::linear(2, 2, Head::kSigmoid, 1));
  mil.mutable_layers()[0].bias << 0.5;
  CHECK(predict_classes(mil, RowMatrixXd::Ones(1, 2)) == std::vector<int>{1});
}
