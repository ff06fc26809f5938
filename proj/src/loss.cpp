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

#include "cfao/loss.hpp"

#include <cmath>

namespace cfao {

WeightMatrix compute_weights(const GroupPosteriord& posterior) {
  WeightMatrix out;
  out.w = RowMatrixXd::Zero(posterior.joint.rows(), posterior.joint.cols());
  if (!(posterior.pz > kProbFloor)) {
    out.degenerate = true;
    return out;
  }
  out.w = (posterior.joint / posterior.pz).cwiseMax(0.0).cwiseMin(1.0);
  for (Index i = 0; i < out.w.rows(); ++i) {
    const double row = out.w.row(i).sum();
    if (std::abs(row - 1.0) > 1e-9 && row > 0.0) out.w.row(i) /= row;
  }
  return out;
}

double cross_entropy(const Eigen::RowVectorXd& logits, int cls,
                     Eigen::RowVectorXd& grad) {
  const double top = logits.maxCoeff();
  grad = (logits.array() - top).exp().matrix();
  const double sum = grad.sum();
  grad /= sum;
  const double value = std::log(sum) + top - logits(cls);
  grad(cls) -= 1.0;
  return value;
}

LossResult weighted_loss(const Model& model, const RowMatrixXd& x,
                         const RowMatrixXd& weights, double scale,
                         const ClassLoss& loss) {
  ForwardCache cache;
  const Head head = model.head();
  const RowMatrixXd logits = class_logits(head, model.forward(x, cache));
  if (weights.rows() != logits.rows() || weights.cols() != logits.cols()) {
    throw Error("weight matrix shape does not match the batch");
  }
  LossResult out;
  RowMatrixXd grad(logits.rows(), logits.cols());
  if (!loss) {
    // sum_j w_j (lse - f_j); gradient (sum_j w_j) softmax - w.
    const VectorXd top = logits.rowwise().maxCoeff();
    RowMatrixXd shifted = logits;
    shifted.colwise() -= top;
    const RowMatrixXd e = shifted.array().exp().matrix();
    const VectorXd sums = e.rowwise().sum();
    const VectorXd lse = sums.array().log().matrix() + top;
    const VectorXd mass = weights.rowwise().sum();
    out.value = scale * (mass.dot(lse) - weights.cwiseProduct(logits).sum());
    RowMatrixXd soft = e;
    soft.array().colwise() /= sums.array();
    soft.array().colwise() *= mass.array();
    grad = scale * (soft - weights);
  } else {
    Eigen::RowVectorXd row_grad;
    grad.setZero();
    for (Index i = 0; i < logits.rows(); ++i) {
      const Eigen::RowVectorXd row = logits.row(i);
      for (Index j = 0; j < logits.cols(); ++j) {
        const double w = weights(i, j);
        if (w == 0.0) continue;
        out.value += scale * w * loss(row, static_cast<int>(j), row_grad);
        grad.row(i) += scale * w * row_grad;
      }
    }
  }
  out.grads = model.backward(cache, fold_class_logit_grad(head, grad));
  return out;
}

LossResult aggregate_loss(const Model& model, const RowMatrixXd& group,
                          const WeightMatrix& weights, const ClassLoss& loss) {
  if (group.rows() == 0) throw Error("empty group");
  return weighted_loss(model, group, weights.w,
                       1.0 / static_cast<double>(group.rows()), loss);
}

LossResult loglik_loss(const Model& model, const Task& task,
                       const RowMatrixXd& group, const AggregateLabel& z) {
  const RowMatrixXd g[] = {group};
  const AggregateLabel zs[] = {z};
  return loglik_loss(model, task, g, zs);
}

LossResult loglik_loss(const Model& model, const Task& task,
                       std::span<const RowMatrixXd> groups,
                       std::span<const AggregateLabel> zs) {
  if (groups.size() != zs.size() || groups.empty()) {
    throw Error("loglik_loss needs one aggregate label per group");
  }
  const Index m = task.m;
  RowMatrixXd x(static_cast<Index>(groups.size()) * m, model.input_dim());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].rows() != m) throw Error("group size does not match the task");
    x.middleRows(static_cast<Index>(g) * m, m) = groups[g];
  }
  ForwardCache cache;
  const Head head = model.head();
  const RowMatrixXd logits = model.forward(x, cache);
  const RowMatrixXd probs = class_probabilities(head, logits);
  RowMatrixXd grad_probs = RowMatrixXd::Zero(probs.rows(), probs.cols());
  const double scale = 1.0 / static_cast<double>(groups.size());
  LossResult out;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const Index row = static_cast<Index>(g) * m;
    const GroupPosteriord post =
        group_posterior(task, probs.middleRows(row, m), zs[g]);
    if (post.pz > kProbFloor) {
      out.value -= scale * std::log(post.pz);
      grad_probs.middleRows(row, m) = -(scale / post.pz) * post.partial;
    } else {
      out.value -= scale * std::log(kProbFloor);
    }
  }
  out.grads =
      model.backward(cache, prob_grad_to_logit_grad(head, probs, grad_probs));
  return out;
}

std::vector<std::vector<int>> enumerate_support(const Task& task,
                                                const AggregateLabel& z) {
  task.validate();
  std::uint64_t total = 1;
  for (int i = 0; i < task.m; ++i) {
    total *= static_cast<std::uint64_t>(task.k);
    if (total > kMaxLowerBoundTuples) {
      throw Error("label tuple space too large for explicit enumeration");
    }
  }
  std::vector<std::vector<int>> out;
  std::vector<int> y(static_cast<std::size_t>(task.m), 0);
  for (std::uint64_t t = 0; t < total; ++t) {
    if (aggregate_classes(task, y) == z) out.push_back(y);
    for (int i = task.m - 1; i >= 0; --i) {
      if (++y[i] < task.k) break;
      y[i] = 0;
    }
  }
  return out;
}

namespace {

double tuple_probability(const RowMatrixXd& probs, const std::vector<int>& y) {
  double prod = 1.0;
  for (std::size_t i = 0; i < y.size(); ++i) prod *= probs(static_cast<Index>(i), y[i]);
  return prod;
}

}  // namespace

TupleDistribution estep_weights(const Task& task, const RowMatrixXd& probs,
                                const AggregateLabel& z) {
  TupleDistribution out;
  out.tuples = enumerate_support(task, z);
  double pz = 0.0;
  for (const auto& y : out.tuples) {
    out.weights.push_back(tuple_probability(probs, y));
    pz += out.weights.back();
  }
  if (!(pz > 0.0)) throw Error("p(z | x) is zero; E-step weights undefined");
  for (double& w : out.weights) w /= pz;
  return out;
}

double em_lower_bound(const Task& task, const RowMatrixXd& probs,
                      const AggregateLabel& z, const TupleDistribution& omega) {
  if (omega.tuples.size() != omega.weights.size()) {
    throw Error("omega tuples and weights differ in length");
  }
  double total = 0.0;
  for (double w : omega.weights) {
    if (w < 0.0 || w > 1.0) throw Error("omega weights must lie in [0, 1]");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw Error("omega is not normalized");
  double bound = 0.0;
  for (std::size_t t = 0; t < omega.tuples.size(); ++t) {
    const auto& y = omega.tuples[t];
    if (static_cast<int>(y.size()) != task.m) {
      throw Error("omega tuple has the wrong length");
    }
    for (int c : y) {
      if (c < 0 || c >= task.k) throw Error("omega tuple has an invalid class");
    }
    if (!(aggregate_classes(task, y) == z)) {
      throw Error("omega puts mass on a tuple outside S(z)");
    }
    const double w = omega.weights[t];
    if (w == 0.0) continue;
    bound += w * (std::log(tuple_probability(probs, y)) - std::log(w));
  }
  return bound;
}

double em_lower_bound(const Task& task, const Model& model,
                      const RowMatrixXd& group, const AggregateLabel& z,
                      const TupleDistribution& omega) {
  const RowMatrixXd probs = class_probabilities(model.head(), model.forward(group));
  return em_lower_bound(task, probs, z, omega);
}

}  // namespace cfao
