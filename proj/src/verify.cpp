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

#include "cfao/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "cfao/aggregate.hpp"
#include "cfao/config.hpp"
#include "cfao/loss.hpp"
#include "cfao/model.hpp"
#include "cfao/posterior.hpp"
#include "cfao/rng.hpp"

namespace cfao {

nlohmann::json CheckResult::to_json() const {
  return {{"name", name},
          {"passed", passed()},
          {"max_deviation", max_deviation},
          {"tolerance", tolerance},
          {"trials", trials},
          {"seconds", seconds}};
}

bool SuiteReport::passed() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const CheckResult& c) { return c.passed(); });
}

nlohmann::json SuiteReport::to_json() const {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& c : checks) list.push_back(c.to_json());
  return {{"suite", suite}, {"passed", passed()}, {"checks", list}};
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

constexpr TaskKind kAllTasks[] = {TaskKind::kPairwise, TaskKind::kTriplet,
                                  TaskKind::kLlp,      TaskKind::kMil,
                                  TaskKind::kRank,     TaskKind::kOrdinalTriplet};

RowMatrixXd random_simplex_rows(Index rows, Index cols, Rng& rng,
                                double scale = 1.5) {
  RowMatrixXd p(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) p(i, j) = std::exp(scale * rng.normal());
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

int sample_class(const RowMatrixXd& probs, Index row, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (Index j = 0; j < probs.cols(); ++j) {
    acc += probs(row, j);
    if (u < acc) return static_cast<int>(j);
  }
  return static_cast<int>(probs.cols() - 1);
}

// z drawn from the label distribution the probabilities describe.
AggregateLabel sample_z(const Task& task, const RowMatrixXd& probs, Rng& rng) {
  std::vector<int> y(static_cast<std::size_t>(task.m));
  for (int i = 0; i < task.m; ++i) y[i] = sample_class(probs, i, rng);
  return aggregate_classes(task, y);
}

int uniform_int(Rng& rng, int lo, int hi) {
  return lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
}

Task random_task(TaskKind kind, Rng& rng, int max_k, int max_m) {
  int k = kind == TaskKind::kMil ? 2 : uniform_int(rng, 2, max_k);
  int m = default_group_size(kind);
  if (kind == TaskKind::kLlp || kind == TaskKind::kMil) m = uniform_int(rng, 2, max_m);
  return make_task(kind, m, k);
}

double max_abs(const RowMatrixXd& a, const RowMatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace

SuiteReport verify_oracle(const VerifyOptions& options) {
  SuiteReport report{"oracle", {}};
  Rng root(options.seed);
  for (TaskKind kind : kAllTasks) {
    const auto start = Clock::now();
    Rng rng = root.derive(static_cast<std::uint64_t>(kind));
    const std::string name(to_string(kind));
    CheckResult oracle{"oracle/" + name, 0.0, 1e-9, 0, 0.0};
    CheckResult marginal{"marginalization/" + name, 0.0, 1e-9, 0, 0.0};
    CheckResult normal{"normalization/" + name, 0.0, 1e-9, 0, 0.0};
    for (int t = 0; t < options.oracle_trials; ++t) {
      const Task task = random_task(kind, rng, 5, 6);
      const RowMatrixXd probs = random_simplex_rows(task.m, task.k, rng);
      const std::vector<AggregateLabel> zs = enumerate_z(task);
      const AggregateLabel& z = zs[rng.below(zs.size())];
      const GroupPosteriord closed = group_posterior(task, probs, z, false);
      const GroupPosteriord brute = brute_force_posterior(task, probs, z);
      oracle.max_deviation = std::max(
          {oracle.max_deviation, std::abs(closed.pz - brute.pz),
           max_abs(closed.joint, brute.joint), max_abs(closed.partial, brute.partial)});
      const VectorXd rows = closed.joint.rowwise().sum();
      marginal.max_deviation = std::max(
          marginal.max_deviation, (rows.array() - closed.pz).abs().maxCoeff());
      double total = 0.0;
      for (const auto& each : zs) total += group_posterior(task, probs, each, false).pz;
      normal.max_deviation = std::max(normal.max_deviation, std::abs(total - 1.0));
      ++oracle.trials;
      ++marginal.trials;
      ++normal.trials;
    }
    oracle.seconds = marginal.seconds = normal.seconds = seconds_since(start);
    report.checks.push_back(oracle);
    report.checks.push_back(marginal);
    report.checks.push_back(normal);
  }
  return report;
}

namespace {

// Loss table L(x, j; f) for every domain point and class.
RowMatrixXd loss_table(Head head, const RowMatrixXd& raw_logits) {
  const RowMatrixXd logits = class_logits(head, raw_logits);
  RowMatrixXd table(logits.rows(), logits.cols());
  Eigen::RowVectorXd grad;
  for (Index x = 0; x < logits.rows(); ++x) {
    for (Index j = 0; j < logits.cols(); ++j) {
      table(x, j) = cross_entropy(logits.row(x), static_cast<int>(j), grad);
    }
  }
  return table;
}

}  // namespace

SuiteReport verify_unbiased(const VerifyOptions& options) {
  SuiteReport report{"unbiased", {}};
  Rng root(options.seed ^ 0x756e6269ULL);
  constexpr Index kDomain = 5;
  for (TaskKind kind : kAllTasks) {
    const auto start = Clock::now();
    Rng rng = root.derive(static_cast<std::uint64_t>(kind));
    const int k = kind == TaskKind::kMil ? 2 : 3;
    const int m = kind == TaskKind::kLlp || kind == TaskKind::kMil
                      ? 3
                      : default_group_size(kind);
    const Task task = make_task(kind, m, k);
    const Head head = head_for_task(kind);
    const std::vector<AggregateLabel> zs = enumerate_z(task);
    CheckResult check{"unbiased/" + std::string(to_string(kind)), 0.0, 1e-9, 0, 0.0};

    for (int c = 0; c < options.unbiased_classifiers; ++c) {
      const VectorXd px = random_simplex_rows(1, kDomain, rng).row(0).transpose();
      const RowMatrixXd pyx = random_simplex_rows(kDomain, k, rng);
      RowMatrixXd logits(kDomain, head == Head::kSigmoid ? 1 : k);
      for (Index i = 0; i < logits.size(); ++i) logits.data()[i] = 2.0 * rng.normal();
      const RowMatrixXd table = loss_table(head, logits);

      const double risk = px.dot(pyx.cwiseProduct(table).rowwise().sum());

      double expectation = 0.0;
      std::vector<Index> tuple(static_cast<std::size_t>(m), 0);
      Index tuples = 1;
      for (int i = 0; i < m; ++i) tuples *= kDomain;
      for (Index t = 0; t < tuples; ++t) {
        double weight = 1.0;
        RowMatrixXd probs(m, k);
        for (int i = 0; i < m; ++i) {
          weight *= px(tuple[i]);
          probs.row(i) = pyx.row(tuple[i]);
        }
        for (const auto& z : zs) {
          const GroupPosteriord post = group_posterior(task, probs, z, false);
          if (!(post.pz > 0.0)) continue;
          double l_agg = 0.0;
          for (int i = 0; i < m; ++i) {
            l_agg += post.joint.row(i).dot(table.row(tuple[i]));
          }
          l_agg /= static_cast<double>(m) * post.pz;
          expectation += weight * post.pz * l_agg;
        }
        for (int i = m - 1; i >= 0; --i) {
          if (++tuple[i] < kDomain) break;
          tuple[i] = 0;
        }
      }
      check.max_deviation = std::max(check.max_deviation, std::abs(expectation - risk));
      ++check.trials;
    }
    check.seconds = seconds_since(start);
    report.checks.push_back(check);
  }
  return report;
}

SuiteReport verify_em(const VerifyOptions& options) {
  SuiteReport report{"em", {}};
  Rng root(options.seed ^ 0x656dULL);
  for (TaskKind kind : kAllTasks) {
    const auto start = Clock::now();
    Rng rng = root.derive(static_cast<std::uint64_t>(kind));
    const std::string name(to_string(kind));
    CheckResult equality{"em_equality/" + name, 0.0, 1e-9, 0, 0.0};
    CheckResult jensen{"em_jensen/" + name, 0.0, 1e-12, 0, 0.0};
    for (int g = 0; g < options.em_groups; ++g) {
      Task task = random_task(kind, rng, kind == TaskKind::kLlp ? 3 : 5,
                              kind == TaskKind::kMil ? 8 : 6);
      const RowMatrixXd probs = random_simplex_rows(task.m, task.k, rng);
      const AggregateLabel z = sample_z(task, probs, rng);
      const double log_pz = std::log(group_posterior(task, probs, z, false).pz);
      const TupleDistribution estep = estep_weights(task, probs, z);
      const double tight = em_lower_bound(task, probs, z, estep);
      equality.max_deviation = std::max(equality.max_deviation, std::abs(tight - log_pz));
      ++equality.trials;

      for (int p = 0; p < options.em_perturbations; ++p) {
        TupleDistribution other = estep;
        const double noise = 0.01 * std::pow(10.0, (p % 4));  // 0.01 .. 10
        double total = 0.0;
        for (double& w : other.weights) {
          w *= std::exp(noise * rng.normal());
          total += w;
        }
        for (double& w : other.weights) w /= total;
        const double bound = em_lower_bound(task, probs, z, other);
        jensen.max_deviation = std::max(jensen.max_deviation, bound - tight);
        ++jensen.trials;
      }
    }
    equality.seconds = jensen.seconds = seconds_since(start);
    report.checks.push_back(equality);
    report.checks.push_back(jensen);
  }
  return report;
}

namespace {

// Central finite differences of `value` over every parameter of `model`.
template <typename ValueFn>
Gradients numeric_gradients(const Model& model, ValueFn value, double h) {
  Gradients out = model.zero_gradients();
  Model probe = model;
  for (std::size_t l = 0; l < out.size(); ++l) {
    auto perturb = [&](auto param_of, auto& slot) {
      for (Index i = 0; i < slot.size(); ++i) {
        double& p = param_of(probe.mutable_layers()[l]).data()[i];
        const double saved = p;
        p = saved + h;
        const double up = value(probe);
        p = saved - h;
        const double down = value(probe);
        p = saved;
        slot.data()[i] = (up - down) / (2.0 * h);
      }
    };
    perturb([](Layer& layer) -> MatrixXd& { return layer.weight; }, out[l].weight);
    perturb([](Layer& layer) -> VectorXd& { return layer.bias; }, out[l].bias);
  }
  return out;
}

double relative_error(const Gradients& a, const Gradients& b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t l = 0; l < a.size(); ++l) {
    diff += (a[l].weight - b[l].weight).squaredNorm() + (a[l].bias - b[l].bias).squaredNorm();
    na += a[l].weight.squaredNorm() + a[l].bias.squaredNorm();
    nb += b[l].weight.squaredNorm() + b[l].bias.squaredNorm();
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nb), 1e-12});
}

}  // namespace

SuiteReport verify_grad(const VerifyOptions& options) {
  SuiteReport report{"grad", {}};
  Rng root(options.seed ^ 0x67726164ULL);
  constexpr int kDim = 3;
  constexpr double kStep = 1e-5;
  for (TaskKind kind : kAllTasks) {
    for (Architecture arch : {Architecture::kLinear, Architecture::kMlp}) {
      const auto start = Clock::now();
      Rng rng = root.derive(static_cast<std::uint64_t>(kind) * 2 +
                            (arch == Architecture::kMlp ? 1 : 0));
      const std::string suffix =
          std::string(to_string(kind)) + "/" + std::string(to_string(arch));
      CheckResult agg{"grad_agg/" + suffix, 0.0, 1e-5, 0, 0.0};
      CheckResult loglik{"grad_loglik/" + suffix, 0.0, 1e-5, 0, 0.0};
      for (int t = 0; t < options.grad_trials; ++t) {
        const Task task = random_task(kind, rng, 4, 4);
        const Model model = Model::create(arch, kDim, task.k, head_for_task(kind),
                                          rng.next_u64(), 8);
        RowMatrixXd x(task.m, kDim);
        for (Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
        const RowMatrixXd probs = class_probabilities(model.head(), model.forward(x));
        const AggregateLabel z = sample_z(task, probs, rng);
        const WeightMatrix w = compute_weights(group_posterior(task, probs, z));

        const LossResult a = aggregate_loss(model, x, w);
        const Gradients a_fd = numeric_gradients(
            model, [&](const Model& mdl) { return aggregate_loss(mdl, x, w).value; }, kStep);
        agg.max_deviation = std::max(agg.max_deviation, relative_error(a.grads, a_fd));
        ++agg.trials;

        const LossResult b = loglik_loss(model, task, x, z);
        const Gradients b_fd = numeric_gradients(
            model, [&](const Model& mdl) { return loglik_loss(mdl, task, x, z).value; },
            kStep);
        loglik.max_deviation = std::max(loglik.max_deviation, relative_error(b.grads, b_fd));
        ++loglik.trials;
      }
      agg.seconds = loglik.seconds = seconds_since(start);
      report.checks.push_back(agg);
      report.checks.push_back(loglik);
    }
  }
  return report;
}

bool is_verify_suite(std::string_view suite) {
  return suite == "oracle" || suite == "unbiased" || suite == "em" ||
         suite == "grad" || suite == "all";
}

std::vector<SuiteReport> run_verify(std::string_view suite,
                                    const VerifyOptions& options) {
  if (!is_verify_suite(suite)) {
    throw Error("unknown verify suite '" + std::string(suite) +
                "' (expected oracle, unbiased, em, grad or all)");
  }
  std::vector<SuiteReport> out;
  const bool all = suite == "all";
  if (all || suite == "oracle") out.push_back(verify_oracle(options));
  if (all || suite == "unbiased") out.push_back(verify_unbiased(options));
  if (all || suite == "em") out.push_back(verify_em(options));
  if (all || suite == "grad") out.push_back(verify_grad(options));
  return out;
}

}  // namespace cfao
