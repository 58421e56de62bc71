// Copyright 2026 The TurnLens Authors.
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

// Minimal dense layers with manual backprop and a full-batch Adam optimizer.
// Inputs to the first layer are sparse TF-IDF vectors.

#ifndef TURNLENS_NN_H_
#define TURNLENS_NN_H_

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "turnlens/term_weights.h"

namespace turnlens::nn {

enum class Activation { kIdentity, kTanh };

struct Dense {
  int in = 0;
  int out = 0;
  Activation activation = Activation::kIdentity;
  std::vector<double> w;  // out x in, row-major
  std::vector<double> b;

  // Glorot-uniform weights, zero bias.
  static Dense Init(int in, int out, Activation activation, std::mt19937_64& rng);

  std::vector<double> Forward(const SparseVector& x) const;
  std::vector<double> Forward(std::span<const double> x) const;
  std::size_t num_params() const { return w.size() + b.size(); }
};

struct DenseGrad {
  std::vector<double> w;
  std::vector<double> b;
  explicit DenseGrad(const Dense& layer)
      : w(layer.w.size(), 0.0), b(layer.b.size(), 0.0) {}
  void Zero();
};

// A chain of dense layers. Layer 0 consumes sparse input.
class Stack {
 public:
  Stack() = default;
  explicit Stack(std::vector<Dense> layers) : layers_(std::move(layers)) {}

  // Activations of every layer (index l = output of layer l).
  using Cache = std::vector<std::vector<double>>;

  std::vector<double> Forward(const SparseVector& x, Cache* cache = nullptr) const;

  // d_out is dL/d(output of last layer). Accumulates parameter gradients into
  // grads when non-null and writes dL/dx (dense) into d_input when non-null.
  void Backward(const SparseVector& x, const Cache& cache, std::vector<double> d_out,
                std::vector<DenseGrad>* grads, std::vector<double>* d_input) const;

  std::vector<DenseGrad> MakeGrads() const;

  bool empty() const { return layers_.empty(); }
  int input_dimension() const { return layers_.empty() ? 0 : layers_.front().in; }
  int output_dimension() const { return layers_.empty() ? 0 : layers_.back().out; }
  const std::vector<Dense>& layers() const { return layers_; }
  std::vector<Dense>& mutable_layers() { return layers_; }

  nlohmann::json ToJson() const;
  static Stack FromJson(const nlohmann::json& j);

 private:
  std::vector<Dense> layers_;
};

// Adam over an ordered list of parameter buffers.
class Adam {
 public:
  struct Options {
    double learning_rate = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
  };

  Adam(std::vector<std::span<double>> params, Options options);
  // grads must list buffers in the same order and sizes as params.
  void Step(const std::vector<std::span<const double>>& grads);

 private:
  std::vector<std::span<double>> params_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  Options options_;
  std::int64_t t_ = 0;
};

void AppendParams(Stack& stack, std::vector<std::span<double>>* params);
void AppendGrads(const std::vector<DenseGrad>& grads,
                 std::vector<std::span<const double>>* out);
double SquaredWeightNorm(const Stack& stack);
void AddWeightDecay(const Stack& stack, double l2, std::vector<DenseGrad>* grads);

double Sigmoid(double z);
// log(1 + exp(z)) without overflow.
double Softplus(double z);

}  // namespace turnlens::nn

#endif  // TURNLENS_NN_H_
