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

#ifndef CFAO_MODEL_HPP_
#define CFAO_MODEL_HPP_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "cfao/types.hpp"

namespace cfao {

enum class Architecture { kLinear, kMlp };
// softmax: k logits -> simplex.
// sigmoid: one logit f, eta_1 = 1 / (1 + exp(-f)), used for MIL.
// cumulative: k logits -> softmax -> running sums (ordinal tasks).
enum class Head { kSoftmax, kSigmoid, kCumulative };

std::string_view to_string(Architecture arch);
std::string_view to_string(Head head);
Architecture parse_architecture(std::string_view name);
Head parse_head(std::string_view name);

inline constexpr int kDefaultHiddenUnits = 300;

// Dense layer computing x * weight^T + bias for a row-major batch x.
struct Layer {
  MatrixXd weight;  // out x in
  VectorXd bias;    // out
};

using Gradients = std::vector<Layer>;

class Model;

// Activations saved by Model::forward for the matching backward call.
struct ForwardCache {
  std::vector<RowMatrixXd> inputs;  // input to each layer
  std::vector<RowMatrixXd> pre;     // pre-activation of each hidden layer
  const Model* owner = nullptr;
  std::uint64_t version = 0;
};

class Model {
 public:
  Model() = default;

  static Model linear(int d, int k, Head head, std::uint64_t seed);
  static Model mlp(int d, int k, Head head, std::uint64_t seed,
                   int hidden = kDefaultHiddenUnits);
  static Model create(Architecture arch, int d, int k, Head head,
                      std::uint64_t seed, int hidden = kDefaultHiddenUnits);

  Architecture architecture() const { return arch_; }
  Head head() const { return head_; }
  int input_dim() const { return d_; }
  int num_classes() const { return k_; }
  int output_dim() const { return head_ == Head::kSigmoid ? 1 : k_; }
  int hidden_units() const { return hidden_; }

  const std::vector<Layer>& layers() const { return layers_; }
  // Mutable access; bumps the version so outstanding caches go stale.
  std::vector<Layer>& mutable_layers() {
    ++version_;
    return layers_;
  }
  std::uint64_t version() const { return version_; }

  // Logits for a batch (n x d) -> (n x output_dim). Hidden layers use ReLU.
  RowMatrixXd forward(const RowMatrixXd& x) const;
  RowMatrixXd forward(const RowMatrixXd& x, ForwardCache& cache) const;

  // Parameter gradients of a scalar loss given dLoss/dLogits.
  Gradients backward(const ForwardCache& cache,
                     const RowMatrixXd& grad_logits) const;

  Gradients zero_gradients() const;
  Index parameter_count() const;

  nlohmann::json to_json() const;
  static Model from_json(const nlohmann::json& j);

 private:
  Model(Architecture arch, Head head, int d, int k, int hidden);

  Architecture arch_ = Architecture::kLinear;
  Head head_ = Head::kSoftmax;
  int d_ = 0;
  int k_ = 0;
  int hidden_ = 0;
  std::vector<Layer> layers_;
  std::uint64_t version_ = 0;
};

inline constexpr int kCheckpointSchemaVersion = 1;

// Per-instance class probabilities (n x k) from logits. The sigmoid head
// yields columns (eta_0, eta_1).
RowMatrixXd class_probabilities(Head head, const RowMatrixXd& logits);

// Cumulative form (n x (k+1)) of the cumulative head:
// [0, p_1, p_1 + p_2, ..., 1].
RowMatrixXd cumulative_probabilities(const RowMatrixXd& logits);

// Two-class logits (0, f) for a sigmoid head, so that softmax reproduces
// eta_1 = sigmoid(f); other heads pass through unchanged.
RowMatrixXd class_logits(Head head, const RowMatrixXd& logits);

// Maps a gradient w.r.t. class_logits back to the head's raw logits.
RowMatrixXd fold_class_logit_grad(Head head, const RowMatrixXd& grad);

// Back-propagates dLoss/dP through the head's probability map to the raw
// logits. `probs` must be class_probabilities(head, logits).
RowMatrixXd prob_grad_to_logit_grad(Head head, const RowMatrixXd& probs,
                                    const RowMatrixXd& grad_probs);

// Index of the largest logit per row, ties to the lowest index.
std::vector<int> predict_classes(const Model& model, const RowMatrixXd& x);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Learning-rate defaults: 1e-3 for the MLP, 2e-1 for the linear model.
double default_learning_rate(Architecture arch);

struct AdamState {
  Gradients first;
  Gradients second;
  std::int64_t step = 0;

  static AdamState for_model(const Model& model);
};

// One bias-corrected Adam update with zero weight decay. Throws on a
// non-finite gradient without touching the parameters.
void adam_step(Model& model, const Gradients& grads, AdamState& state,
               const AdamConfig& config);

}  // namespace cfao

#endif  // CFAO_MODEL_HPP_
