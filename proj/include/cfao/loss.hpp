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

#ifndef CFAO_LOSS_HPP_
#define CFAO_LOSS_HPP_

#include <functional>
#include <span>
#include <vector>

#include "cfao/aggregate.hpp"
#include "cfao/model.hpp"
#include "cfao/posterior.hpp"

namespace cfao {

// Per-instance importance weights w(i, j) = p(z, y_i = j | x) / p(z | x).
// A group whose p(z | x) sits at the probability floor is flagged
// degenerate; its weights are left at zero and training skips it.
struct WeightMatrix {
  RowMatrixXd w;
  bool degenerate = false;
};

WeightMatrix compute_weights(const GroupPosteriord& posterior);

struct LossResult {
  double value = 0.0;
  Gradients grads;
};

// Ordinary per-example classification loss L(x, j; f) evaluated on one
// row of class logits; writes dL/dlogits into `grad`.
using ClassLoss = std::function<double(const Eigen::RowVectorXd& class_logits,
                                       int cls, Eigen::RowVectorXd& grad)>;

// Softmax cross entropy; on a sigmoid head's (0, f) logits this is the
// logistic loss.
double cross_entropy(const Eigen::RowVectorXd& class_logits, int cls,
                     Eigen::RowVectorXd& grad);

// scale * sum_i sum_j weights(i, j) * L(x_i, j; f) with the weights held
// constant. `x` stacks instances row-wise (any number of groups), `weights`
// has one row per instance. A null loss selects the cross-entropy fast path.
LossResult weighted_loss(const Model& model, const RowMatrixXd& x,
                         const RowMatrixXd& weights, double scale,
                         const ClassLoss& loss = nullptr);

// L_agg for one group: (1/m) sum_i sum_j w(i, j) L(x_i, j; f).
LossResult aggregate_loss(const Model& model, const RowMatrixXd& group,
                          const WeightMatrix& weights,
                          const ClassLoss& loss = nullptr);

// -log p(z | x_1:m; theta) with p(z | x) floored at kProbFloor; gradients flow
// through p(z | x).
LossResult loglik_loss(const Model& model, const Task& task,
                       const RowMatrixXd& group, const AggregateLabel& z);

// Mean of loglik_loss over several groups of the same task.
LossResult loglik_loss(const Model& model, const Task& task,
                       std::span<const RowMatrixXd> groups,
                       std::span<const AggregateLabel> zs);

// Explicit distribution over label tuples (0-based classes).
struct TupleDistribution {
  std::vector<std::vector<int>> tuples;
  std::vector<double> weights;
};

// Largest S(z) the EM helpers will enumerate, as k^m.
inline constexpr std::uint64_t kMaxLowerBoundTuples = 100'000;

// Every tuple y with g(y) = z.
std::vector<std::vector<int>> enumerate_support(const Task& task,
                                                const AggregateLabel& z);

// E-step weights p(y | x) / p(z | x) over S(z).
TupleDistribution estep_weights(const Task& task, const RowMatrixXd& probs,
                                const AggregateLabel& z);

// sum_{y in S(z)} omega_y log(p(y, x; theta) / omega_y) with log p(x) taken
// as 0, so the bound is comparable to log p(z | x). Throws if omega is not a
// distribution over S(z).
double em_lower_bound(const Task& task, const RowMatrixXd& probs,
                      const AggregateLabel& z, const TupleDistribution& omega);
double em_lower_bound(const Task& task, const Model& model,
                      const RowMatrixXd& group, const AggregateLabel& z,
                      const TupleDistribution& omega);

}  // namespace cfao

#endif  // CFAO_LOSS_HPP_
