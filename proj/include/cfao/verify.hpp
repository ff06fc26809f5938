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

#ifndef CFAO_VERIFY_HPP_
#define CFAO_VERIFY_HPP_

// Self-checks that exercise the library against exact references:
//   oracle    closed-form posteriors vs brute-force enumeration, plus
//             marginalization and normalization over the z space
//   unbiased  exact expectation of L_agg on a finite domain vs the
//             supervised risk
//   em        Jensen lower bound tightness at the E-step weights
//   grad      loss gradients vs central finite differences

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace cfao {

struct CheckResult {
  std::string name;
  double max_deviation = 0.0;
  double tolerance = 0.0;
  std::int64_t trials = 0;
  double seconds = 0.0;
  bool passed() const { return max_deviation <= tolerance; }
  nlohmann::json to_json() const;
};

struct SuiteReport {
  std::string suite;
  std::vector<CheckResult> checks;
  bool passed() const;
  nlohmann::json to_json() const;
};

struct VerifyOptions {
  std::uint64_t seed = 20240917;
  int oracle_trials = 200;       // per task
  int unbiased_classifiers = 20; // per task
  int em_groups = 20;            // per task
  int em_perturbations = 100;    // per group
  int grad_trials = 3;           // per task and architecture
};

SuiteReport verify_oracle(const VerifyOptions& options = {});
SuiteReport verify_unbiased(const VerifyOptions& options = {});
SuiteReport verify_em(const VerifyOptions& options = {});
SuiteReport verify_grad(const VerifyOptions& options = {});

// suite is one of oracle, unbiased, em, grad, all.
std::vector<SuiteReport> run_verify(std::string_view suite,
                                    const VerifyOptions& options = {});
bool is_verify_suite(std::string_view suite);

}  // namespace cfao

#endif  // CFAO_VERIFY_HPP_
