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

#include "cfao/model.hpp"

#include <cmath>

#include "cfao/rng.hpp"

namespace cfao {

std::string_view to_string(Architecture arch) {
  return arch == Architecture::kLinear ? "linear" : "mlp";
}

std::string_view to_string(Head head) {
  switch (head) {
    case Head::kSoftmax: return "softmax";
    case Head::kSigmoid: return "sigmoid";
    case Head::kCumulative: return "cumulative";
  }
  return "unknown";
}

Architecture parse_architecture(std::string_view name) {
  if (name == "linear") return Architecture::kLinear;
  if (name == "mlp" || name == "mlp-300") return Architecture::kMlp;
  throw Error("unknown architecture '" + std::string(name) + "'");
}

Head parse_head(std::string_view name) {
  if (name == "softmax") return Head::kSoftmax;
  if (name == "sigmoid") return Head::kSigmoid;
  if (name == "cumulative") return Head::kCumulative;
  throw Error("unknown head '" + std::string(name) + "'");
}

namespace {

Layer init_layer(int in, int out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  Layer layer{MatrixXd(out, in), VectorXd::Zero(out)};
  // Column-major fill order is part of the reproducibility contract.
  for (Index c = 0; c < layer.weight.cols(); ++c) {
    for (Index r = 0; r < layer.weight.rows(); ++r) {
      layer.weight(r, c) = (2.0 * rng.uniform() - 1.0) * limit;
    }
  }
  return layer;
}

}  // namespace

Model::Model(Architecture arch, Head head, int d, int k, int hidden)
    : arch_(arch), head_(head), d_(d), k_(k), hidden_(hidden) {
  if (d < 1) throw Error("model input dimension must be >= 1");
  if (k < 1) throw Error("model class count must be >= 1");
  if (head == Head::kSigmoid && k != 2) {
    throw Error("sigmoid head requires k = 2");
  }
  if (arch == Architecture::kMlp && hidden < 1) {
    throw Error("mlp hidden width must be >= 1");
  }
}

Model Model::linear(int d, int k, Head head, std::uint64_t seed) {
  Model model(Architecture::kLinear, head, d, k, 0);
  Rng rng(seed);
  model.layers_.push_back(init_layer(d, model.output_dim(), rng));
  return model;
}

Model Model::mlp(int d, int k, Head head, std::uint64_t seed, int hidden) {
  Model model(Architecture::kMlp, head, d, k, hidden);
  Rng rng(seed);
  model.layers_.push_back(init_layer(d, hidden, rng));
  model.layers_.push_back(init_layer(hidden, model.output_dim(), rng));
  return model;
}

Model Model::create(Architecture arch, int d, int k, Head head,
                    std::uint64_t seed, int hidden) {
  return arch == Architecture::kLinear ? linear(d, k, head, seed)
                                       : mlp(d, k, head, seed, hidden);
}

RowMatrixXd Model::forward(const RowMatrixXd& x) const {
  ForwardCache unused;
  return forward(x, unused);
}

RowMatrixXd Model::forward(const RowMatrixXd& x, ForwardCache& cache) const {
  if (x.cols() != d_) {
    throw Error("input dimension " + std::to_string(x.cols()) +
                " does not match model dimension " + std::to_string(d_));
  }
  cache.inputs.clear();
  cache.pre.clear();
  cache.owner = this;
  cache.version = version_;
  RowMatrixXd h = x;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    cache.inputs.push_back(h);
    RowMatrixXd a = h * layers_[l].weight.transpose();
    a.rowwise() += layers_[l].bias.transpose();
    if (l + 1 < layers_.size()) {
      cache.pre.push_back(a);
      h = a.cwiseMax(0.0);
    } else {
      h = std::move(a);
    }
  }
  return h;
}

Gradients Model::backward(const ForwardCache& cache,
                          const RowMatrixXd& grad_logits) const {
  if (cache.owner != this || cache.version != version_ ||
      cache.inputs.size() != layers_.size()) {
    throw Error("stale forward cache: run forward again before backward");
  }
  const Index n = cache.inputs.front().rows();
  if (grad_logits.rows() != n || grad_logits.cols() != output_dim()) {
    throw Error("upstream gradient shape does not match the cached batch");
  }
  Gradients grads(layers_.size());
  RowMatrixXd delta = grad_logits;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    grads[l].weight = delta.transpose() * cache.inputs[l];
    grads[l].bias = delta.colwise().sum().transpose();
    if (l > 0) {
      RowMatrixXd back = delta * layers_[l].weight;
      const RowMatrixXd& pre = cache.pre[l - 1];
      delta = (pre.array() > 0.0).select(back, 0.0);
    }
  }
  return grads;
}

Gradients Model::zero_gradients() const {
  Gradients grads;
  for (const Layer& layer : layers_) {
    grads.push_back({MatrixXd::Zero(layer.weight.rows(), layer.weight.cols()),
                     VectorXd::Zero(layer.bias.size())});
  }
  return grads;
}

Index Model::parameter_count() const {
  Index total = 0;
  for (const Layer& layer : layers_) total += layer.weight.size() + layer.bias.size();
  return total;
}

nlohmann::json Model::to_json() const {
  nlohmann::json layers = nlohmann::json::array();
  for (const Layer& layer : layers_) {
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(layer.weight.size()));
    for (Index r = 0; r < layer.weight.rows(); ++r) {
      for (Index c = 0; c < layer.weight.cols(); ++c) w.push_back(layer.weight(r, c));
    }
    layers.push_back({{"rows", layer.weight.rows()},
                      {"cols", layer.weight.cols()},
                      {"weight", w},
                      {"bias", std::vector<double>(layer.bias.data(),
                                                   layer.bias.data() + layer.bias.size())}});
  }
  return {{"schema_version", kCheckpointSchemaVersion},
          {"architecture", to_string(arch_)},
          {"head", to_string(head_)},
          {"d", d_},
          {"k", k_},
          {"hidden", hidden_},
          {"layers", layers}};
}

Model Model::from_json(const nlohmann::json& j) {
  const int version = j.at("schema_version").get<int>();
  if (version != kCheckpointSchemaVersion) {
    throw Error("unsupported checkpoint schema version " +
                std::to_string(version) + " (expected " +
                std::to_string(kCheckpointSchemaVersion) + ")");
  }
  Model model(parse_architecture(j.at("architecture").get<std::string>()),
              parse_head(j.at("head").get<std::string>()), j.at("d").get<int>(),
              j.at("k").get<int>(), j.at("hidden").get<int>());
  const std::size_t expected = model.arch_ == Architecture::kLinear ? 1 : 2;
  const auto& layers = j.at("layers");
  if (layers.size() != expected) throw Error("checkpoint has wrong layer count");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& lj = layers[l];
    const Index rows = lj.at("rows").get<Index>();
    const Index cols = lj.at("cols").get<Index>();
    const Index want_in = l == 0 ? model.d_ : model.hidden_;
    const Index want_out = l + 1 == expected ? model.output_dim() : model.hidden_;
    const auto w = lj.at("weight").get<std::vector<double>>();
    const auto b = lj.at("bias").get<std::vector<double>>();
    if (rows != want_out || cols != want_in ||
        w.size() != static_cast<std::size_t>(rows * cols) ||
        b.size() != static_cast<std::size_t>(rows)) {
      throw Error("checkpoint layer " + std::to_string(l) + " has inconsistent shape");
    }
    Layer layer{MatrixXd(rows, cols), VectorXd(rows)};
    for (Index r = 0; r < rows; ++r) {
      for (Index c = 0; c < cols; ++c) layer.weight(r, c) = w[r * cols + c];
      layer.bias(r) = b[r];
    }
    if (!layer.weight.allFinite() || !layer.bias.allFinite()) {
      throw Error("checkpoint contains non-finite parameters");
    }
    model.layers_.push_back(std::move(layer));
  }
  return model;
}

RowMatrixXd class_logits(Head head, const RowMatrixXd& logits) {
  if (head != Head::kSigmoid) return logits;
  RowMatrixXd out(logits.rows(), 2);
  out.col(0).setZero();
  out.col(1) = logits.col(0);
  return out;
}

RowMatrixXd fold_class_logit_grad(Head head, const RowMatrixXd& grad) {
  if (head != Head::kSigmoid) return grad;
  return grad.col(1);
}

namespace {

RowMatrixXd softmax_rows(const RowMatrixXd& logits) {
  RowMatrixXd out = logits;
  out.colwise() -= logits.rowwise().maxCoeff();
  out = out.array().exp().matrix();
  out.array().colwise() /= out.rowwise().sum().array();
  return out;
}

}  // namespace

RowMatrixXd class_probabilities(Head head, const RowMatrixXd& logits) {
  return softmax_rows(class_logits(head, logits));
}

RowMatrixXd cumulative_probabilities(const RowMatrixXd& logits) {
  const RowMatrixXd p = softmax_rows(logits);
  RowMatrixXd cum(p.rows(), p.cols() + 1);
  for (Index i = 0; i < p.rows(); ++i) {
    cum(i, 0) = 0.0;
    for (Index j = 0; j < p.cols(); ++j) cum(i, j + 1) = cum(i, j) + p(i, j);
    cum(i, p.cols()) = 1.0;
  }
  return cum;
}

RowMatrixXd prob_grad_to_logit_grad(Head head, const RowMatrixXd& probs,
                                    const RowMatrixXd& grad_probs) {
  // Softmax Jacobian-vector product: P * (g - <g, P>).
  const VectorXd inner = probs.cwiseProduct(grad_probs).rowwise().sum();
  RowMatrixXd g = grad_probs;
  g.colwise() -= inner;
  return fold_class_logit_grad(head, probs.cwiseProduct(g));
}

std::vector<int> predict_classes(const Model& model, const RowMatrixXd& x) {
  const RowMatrixXd logits = class_logits(model.head(), model.forward(x));
  std::vector<int> out(static_cast<std::size_t>(logits.rows()));
  for (Index i = 0; i < logits.rows(); ++i) {
    Index best = 0;
    for (Index j = 1; j < logits.cols(); ++j) {
      if (logits(i, j) > logits(i, best)) best = j;
    }
    out[i] = static_cast<int>(best);
  }
  return out;
}

double default_learning_rate(Architecture arch) {
  return arch == Architecture::kMlp ? 1e-3 : 2e-1;
}

AdamState AdamState::for_model(const Model& model) {
  return {model.zero_gradients(), model.zero_gradients(), 0};
}

void adam_step(Model& model, const Gradients& grads, AdamState& state,
               const AdamConfig& config) {
  if (grads.size() != model.layers().size() ||
      state.first.size() != grads.size() || state.second.size() != grads.size()) {
    throw Error("gradient or optimizer state does not match the model");
  }
  for (std::size_t l = 0; l < grads.size(); ++l) {
    const Layer& layer = model.layers()[l];
    if (grads[l].weight.rows() != layer.weight.rows() ||
        grads[l].weight.cols() != layer.weight.cols() ||
        grads[l].bias.size() != layer.bias.size()) {
      throw Error("gradient shape mismatch in layer " + std::to_string(l));
    }
    if (!grads[l].weight.allFinite() || !grads[l].bias.allFinite()) {
      throw Error("non-finite gradient in layer " + std::to_string(l) +
                  " at optimizer step " + std::to_string(state.step + 1));
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  auto update = [&](auto& param, const auto& g, auto& m, auto& v) {
    m = config.beta1 * m + (1.0 - config.beta1) * g;
    v = config.beta2 * v + (1.0 - config.beta2) * g.cwiseProduct(g);
    param.array() -= config.learning_rate * (m.array() / c1) /
                     ((v.array() / c2).sqrt() + config.epsilon);
  };
  std::vector<Layer>& layers = model.mutable_layers();
  for (std::size_t l = 0; l < grads.size(); ++l) {
    update(layers[l].weight, grads[l].weight, state.first[l].weight,
           state.second[l].weight);
    update(layers[l].bias, grads[l].bias, state.first[l].bias,
           state.second[l].bias);
  }
}

}  // namespace cfao
