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

#include "turnlens/classifier.h"

#include <cmath>

#include "turnlens/errors.h"

namespace turnlens {

using nlohmann::json;

ProbPair ProbFromLogit(double logit) {
  ProbPair p;
  p.ai = nn::Sigmoid(logit);
  p.human = nn::Sigmoid(-logit);
  return p;
}

double Classifier::Logit(const SparseVector& x) const {
  const ProbPair p = Predict(x);
  constexpr double kFloor = 1e-300;
  return std::log(std::max(p.ai, kFloor)) - std::log(std::max(p.human, kFloor));
}

std::vector<double> Classifier::Gradient(const SparseVector&) const {
  throw CapabilityError("classifier is not differentiable");
}

std::vector<double> Classifier::LogitGradient(const SparseVector&) const {
  throw CapabilityError("classifier is not differentiable");
}

json NativeModelConfigToJson(const NativeModelConfig& c) {
  return {{"hidden_sizes", c.hidden_sizes},
          {"epochs", c.epochs},
          {"learning_rate", c.learning_rate},
          {"l2", c.l2},
          {"seed", c.seed}};
}

NativeModelConfig NativeModelConfigFromJson(const json& j) {
  NativeModelConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "hidden_sizes") {
      c.hidden_sizes = value.get<std::vector<int>>();
    } else if (key == "epochs") {
      c.epochs = value.get<int>();
    } else if (key == "learning_rate") {
      c.learning_rate = value.get<double>();
    } else if (key == "l2") {
      c.l2 = value.get<double>();
    } else if (key == "seed") {
      c.seed = value.get<std::uint64_t>();
    } else {
      throw SchemaError(key, "unknown model config key");
    }
  }
  for (int h : c.hidden_sizes) {
    if (h < 1) throw SchemaError("hidden_sizes", "sizes must be positive");
  }
  if (c.epochs < 1) throw SchemaError("epochs", "must be positive");
  return c;
}

nn::Stack InitHiddenStack(int input_dimension, const std::vector<int>& sizes,
                          std::mt19937_64& rng) {
  std::vector<nn::Dense> layers;
  int in = input_dimension;
  for (int h : sizes) {
    layers.push_back(nn::Dense::Init(in, h, nn::Activation::kTanh, rng));
    in = h;
  }
  return nn::Stack(std::move(layers));
}

NativeModel::NativeModel(nn::Stack hidden, nn::Dense output, NativeModelConfig config)
    : hidden_(std::move(hidden)), output_(std::move(output)), config_(std::move(config)) {}

int NativeModel::input_dimension() const {
  return hidden_.empty() ? output_.in : hidden_.input_dimension();
}

int NativeModel::encoding_dimension() const { return output_.in; }

std::vector<double> NativeModel::Encode(const SparseVector& x) const {
  if (x.dimension != input_dimension()) {
    throw InvalidArgument("input dimension mismatch: got " + std::to_string(x.dimension) +
                          ", expected " + std::to_string(input_dimension()));
  }
  return hidden_.Forward(x);
}

double NativeModel::Logit(const SparseVector& x) const {
  if (hidden_.empty()) {
    if (x.dimension != output_.in) throw InvalidArgument("input dimension mismatch");
    return output_.Forward(x)[0];
  }
  return output_.Forward(std::span<const double>(Encode(x)))[0];
}

ProbPair NativeModel::Predict(const SparseVector& x) const { return ProbFromLogit(Logit(x)); }

std::vector<double> NativeModel::LogitGradient(const SparseVector& x) const {
  if (hidden_.empty()) {
    if (x.dimension != output_.in) throw InvalidArgument("input dimension mismatch");
    return output_.w;
  }
  nn::Stack::Cache cache;
  hidden_.Forward(x, &cache);
  std::vector<double> d_input;
  hidden_.Backward(x, cache, output_.w, nullptr, &d_input);
  return d_input;
}

std::vector<double> NativeModel::Gradient(const SparseVector& x) const {
  const double p = nn::Sigmoid(Logit(x));
  std::vector<double> g = LogitGradient(x);
  for (double& v : g) v *= p * (1.0 - p);
  return g;
}

NativeModel NativeModel::Train(const std::vector<LabeledVector>& samples, int input_dimension,
                               const NativeModelConfig& config, TrainingReport* report) {
  bool has_ai = false, has_human = false;
  for (const auto& s : samples) {
    if (s.x.dimension != input_dimension) throw InvalidArgument("sample dimension mismatch");
    (s.label == Authorship::kAI ? has_ai : has_human) = true;
  }
  if (!has_ai || !has_human) {
    throw InvalidArgument("training set must contain both human and AI samples");
  }

  std::mt19937_64 rng(config.seed);
  nn::Stack hidden = InitHiddenStack(input_dimension, config.hidden_sizes, rng);
  const int enc_dim = config.hidden_sizes.empty() ? input_dimension : config.hidden_sizes.back();
  nn::Stack head({nn::Dense::Init(enc_dim, 1, nn::Activation::kIdentity, rng)});

  std::vector<std::span<double>> params;
  nn::AppendParams(hidden, &params);
  nn::AppendParams(head, &params);
  nn::Adam adam(params, {.learning_rate = config.learning_rate});

  auto hidden_grads = hidden.MakeGrads();
  auto head_grads = head.MakeGrads();
  const double inv_n = 1.0 / static_cast<double>(samples.size());
  double loss = 0.0;
  nn::Stack::Cache hcache, ocache;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (auto& g : hidden_grads) g.Zero();
    for (auto& g : head_grads) g.Zero();
    loss = 0.0;
    for (const auto& s : samples) {
      const double y = s.label == Authorship::kAI ? 1.0 : 0.0;
      double z;
      if (hidden.empty()) {
        z = head.Forward(s.x, &ocache)[0];
      } else {
        std::vector<double> h = hidden.Forward(s.x, &hcache);
        SparseVector hv{enc_dim, {}};
        hv.entries.reserve(h.size());
        for (int i = 0; i < enc_dim; ++i) hv.entries.emplace_back(i, h[i]);
        z = head.Forward(hv, &ocache)[0];
        std::vector<double> d_h;
        head.Backward(hv, ocache, {(nn::Sigmoid(z) - y) * inv_n}, &head_grads, &d_h);
        hidden.Backward(s.x, hcache, std::move(d_h), &hidden_grads, nullptr);
      }
      if (hidden.empty()) {
        head.Backward(s.x, ocache, {(nn::Sigmoid(z) - y) * inv_n}, &head_grads, nullptr);
      }
      loss += (nn::Softplus(z) - y * z) * inv_n;
    }
    loss += 0.5 * config.l2 * (nn::SquaredWeightNorm(hidden) + nn::SquaredWeightNorm(head));
    nn::AddWeightDecay(hidden, config.l2, &hidden_grads);
    nn::AddWeightDecay(head, config.l2, &head_grads);
    std::vector<std::span<const double>> grads;
    nn::AppendGrads(hidden_grads, &grads);
    nn::AppendGrads(head_grads, &grads);
    adam.Step(grads);
  }
  if (report) {
    report->final_loss = loss;
    report->epochs = config.epochs;
  }
  return NativeModel(std::move(hidden), head.layers()[0], config);
}

json NativeModel::ToJson() const {
  return {{"format", "native_model"},
          {"version", 1},
          {"config", NativeModelConfigToJson(config_)},
          {"hidden", hidden_.ToJson()},
          {"output", nn::Stack({output_}).ToJson()}};
}

NativeModel NativeModel::FromJson(const json& j) {
  if (j.value("format", "") != "native_model" || j.value("version", 0) != 1) {
    throw SchemaError("format", "expected native_model version 1");
  }
  nn::Stack out = nn::Stack::FromJson(j.at("output"));
  if (out.layers().size() != 1 || out.layers()[0].out != 1) {
    throw SchemaError("output", "expected a single logit unit");
  }
  return NativeModel(nn::Stack::FromJson(j.at("hidden")), out.layers()[0],
                     NativeModelConfigFromJson(j.at("config")));
}

}  // namespace turnlens
