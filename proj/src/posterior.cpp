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

#include "cfao/posterior.hpp"

namespace cfao {

GroupPosteriord group_posterior(const Task& task, const RowMatrixXd& probs,
                                const AggregateLabel& z, bool clamp) {
  if (probs.rows() != task.m || probs.cols() != task.k) {
    throw Error("probability matrix is " + std::to_string(probs.rows()) + "x" +
                std::to_string(probs.cols()) + ", task expects " +
                std::to_string(task.m) + "x" + std::to_string(task.k));
  }
  if (!is_feasible(task, z)) {
    throw Error("aggregate label " + to_string(z) + " is not valid for " +
                std::string(to_string(task.kind)));
  }
  RowMatrixXd p = clamp ? clamp_probs(probs) : probs;
  if (clamp && task.ordinal()) {
    // The cumulative form needs rows that sum to exactly 1.
    p.array().colwise() /= p.rowwise().sum().array();
  }
  switch (task.kind) {
    case TaskKind::kPairwise: return posterior_pairwise(p, z.flag);
    case TaskKind::kTriplet: return posterior_triplet(p, z.flag);
    case TaskKind::kLlp: return posterior_llp(p, z.counts);
    case TaskKind::kMil: return posterior_mil(p, z.flag);
    case TaskKind::kRank:
      return posterior_rank(cumulative_from_probs(p), z.flag);
    case TaskKind::kOrdinalTriplet:
      return posterior_ordinal_triplet(cumulative_from_probs(p), z.flag);
  }
  throw Error("unhandled task kind");
}

}  // namespace cfao
