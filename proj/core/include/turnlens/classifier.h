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

// Binary classifier interface and the native MLP / logistic implementation.

#ifndef TURNLENS_CLASSIFIER_H_
#define TURNLENS_CLASSIFIER_H_

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "turnlens/corpus.h"
#include "turnlens/nn.h"
#include "turnlens/term_weights.h"

namespace turnlens {

struct ProbPair {
  double human = 0.5;
  double ai = 0.5;

  double Of(Authorship c) const { return c == Authorship::kAI ? ai : human; }
  // Ties resolve to AI.
  Authorship Argmax() const { return ai >= human ? Authorship::kAI : Authorship::kHuman; }
  bool operator==(const ProbPair&) const = default;
};

ProbPair ProbFromLogit(double logit);

// Implementations must keep Predict/Gradient free of observable state so they
// can be called concurrently.
class Classifier {
 public:
  virtual ~Classifier() = default;

  virtual int input_dimension() const = 0;
  virtual bool differentiable() const { return false; }
  virtual ProbPair Predict(const SparseVector& x) const = 0;

  // log(p_ai / p_human).
  virtual double Logit(const SparseVector& x) const;
  // Dense gradients with respect to x. Both throw CapabilityError unless the
  // classifier is differentiable.
  virtual std::vector<double> Gradient(const SparseVector& x) const;
  virtual std::vector<double> LogitGradient(const SparseVector& x) const;
};

struct NativeModelConfig {
  std::vector<int> hidden_sizes = {32};  // empty = logistic regression
  int epochs = 200;
  double learning_rate = 0.01;
  double l2 = 1e-4;
  std::uint64_t seed = 2025;

  bool operator==(const NativeModelConfig&) const = default;
};

nlohmann::json NativeModelConfigToJson(const NativeModelConfig& config);
NativeModelConfig NativeModelConfigFromJson(const nlohmann::json& j);

struct LabeledVector {
  SparseVector x;
  Authorship label = Authorship::kHuman;
};

struct TrainingReport {
  double final_loss = 0.0;
  int epochs = 0;
};

// tanh hidden layers followed by a single logit unit.
class NativeModel : public Classifier {
 public:
  NativeModel() = default;
  NativeModel(nn::Stack hidden, nn::Dense output, NativeModelConfig config);

  // Full-batch Adam on mean binary cross-entropy plus l2/2 * |W|^2.
  // Deterministic for a fixed config.seed. Throws InvalidArgument unless both
  // classes are present.
  static NativeModel Train(const std::vector<LabeledVector>& samples, int input_dimension,
                           const NativeModelConfig& config, TrainingReport* report = nullptr);

  int input_dimension() const override;
  bool differentiable() const override { return true; }
  ProbPair Predict(const SparseVector& x) const override;
  double Logit(const SparseVector& x) const override;
  std::vector<double> Gradient(const SparseVector& x) const override;
  std::vector<double> LogitGradient(const SparseVector& x) const override;

  // Penultimate representation (the input itself for logistic models).
  std::vector<double> Encode(const SparseVector& x) const;
  int encoding_dimension() const;

  const nn::Stack& hidden() const { return hidden_; }
  const nn::Dense& output() const { return output_; }
  const NativeModelConfig& config() const { return config_; }

  nlohmann::json ToJson() const;
  static NativeModel FromJson(const nlohmann::json& j);

 private:
  nn::Stack hidden_;
  nn::Dense output_;
  NativeModelConfig config_;
};

// Builds the hidden stack for a config (exposed for composite models).
nn::Stack InitHiddenStack(int input_dimension, const std::vector<int>& sizes,
                          std::mt19937_64& rng);

}  // namespace turnlens

#endif  // TURNLENS_CLASSIFIER_H_
