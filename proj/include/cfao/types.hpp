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

#ifndef CFAO_TYPES_HPP_
#define CFAO_TYPES_HPP_

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace cfao {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// Row-major so that row i of a group matrix is the i-th instance.
template <typename Scalar>
using RowMatrix =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMatrixXd = RowMatrix<double>;

// Probability floor applied to eta entries before they enter products, and
// to p(z|x) when it is used as a divisor.
inline constexpr double kProbFloor = 1e-12;

// Thrown for malformed inputs and violated preconditions.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cfao

#endif  // CFAO_TYPES_HPP_
