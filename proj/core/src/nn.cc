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

#include "turnlens/nn.h"

#include <cmath>

#include "turnlens/errors.h"

namespace turnlens::nn {

using nlohmann::json;

namespace {

double Activate(Activation a, double v) {
  return a == Activation::kTanh ? std::tanh(v) : v;
}

// Derivative expressed through the activation output.
double ActivationSlope(Activation a, double post) {
  return a == Activation::kTanh ? 1.0 - post * post : 1.0;
}

}  // namespace

double Sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double Softplus(double z) {
  return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

Dense Dense::Init(int in, int out, Activation activation, std::mt19937_64& rng) {
  Dense d;
  d.in = in;
  d.out = out;
  d.activation = activation;
  const double limit = std::sqrt(6.0 / (in + out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  d.w.resize(static_cast<std::size_t>(in) * out);
  for (double& v : d.w) v = dist(rng);
  d.b.assign(static_cast<std::size_t>(out), 0.0);
  return d;
}

std::vector<double> Dense::Forward(const SparseVector& x) const {
  if (x.dimension != in) throw InvalidArgument("input dimension mismatch");
  std::vector<double> y(b);
  for (int r = 0; r < out; ++r) {
    const double* row = &w[static_cast<std::size_t>(r) * in];
    double acc = y[r];
    for (const auto& [i, v] : x.entries) acc += row[i] * v;
    y[r] = Activate(activation, acc);
  }
  return y;
}

std::vector<double> Dense::Forward(std::span<const double> x) const {
  std::vector<double> y(b);
  for (int r = 0; r < out; ++r) {
    const double* row = &w[static_cast<std::size_t>(r) * in];
    double acc = y[r];
    for (int i = 0; i < in; ++i) acc += row[i] * x[i];
    y[r] = Activate(activation, acc);
  }
  return y;
}

void DenseGrad::Zero() {
  std::fill(w.begin(), w.end(), 0.0);
  std::fill(b.begin(), b.end(), 0.0);
}

std::vector<double> Stack::Forward(const SparseVector& x, Cache* cache) const {
  if (layers_.empty()) return x.ToDense();
  std::vector<double> h = layers_[0].Forward(x);
  if (cache) {
    cache->assign(layers_.size(), {});
    (*cache)[0] = h;
  }
  for (std::size_t l = 1; l < layers_.size(); ++l) {
    h = layers_[l].Forward(h);
    if (cache) (*cache)[l] = h;
  }
  return h;
}

void Stack::Backward(const SparseVector& x, const Cache& cache, std::vector<double> d_out,
                     std::vector<DenseGrad>* grads, std::vector<double>* d_input) const {
  if (layers_.empty()) {
    if (d_input) *d_input = std::move(d_out);
    return;
  }
  for (std::size_t li = layers_.size(); li-- > 0;) {
    const Dense& layer = layers_[li];
    const std::vector<double>& post = cache[li];
    std::vector<double> delta(static_cast<std::size_t>(layer.out));
    for (int r = 0; r < layer.out; ++r) {
      delta[r] = d_out[r] * ActivationSlope(layer.activation, post[r]);
    }
    if (li > 0) {
      const std::vector<double>& input = cache[li - 1];
      if (grads) {
        DenseGrad& g = (*grads)[li];
        for (int r = 0; r < layer.out; ++r) {
          if (delta[r] == 0.0) continue;
          double* grow = &g.w[static_cast<std::size_t>(r) * layer.in];
          for (int i = 0; i < layer.in; ++i) grow[i] += delta[r] * input[i];
          g.b[r] += delta[r];
        }
      }
      std::vector<double> d_prev(static_cast<std::size_t>(layer.in), 0.0);
      for (int r = 0; r < layer.out; ++r) {
        const double* row = &layer.w[static_cast<std::size_t>(r) * layer.in];
        for (int i = 0; i < layer.in; ++i) d_prev[i] += row[i] * delta[r];
      }
      d_out = std::move(d_prev);
      continue;
    }
    if (grads) {
      DenseGrad& g = (*grads)[0];
      for (int r = 0; r < layer.out; ++r) {
        double* grow = &g.w[static_cast<std::size_t>(r) * layer.in];
        for (const auto& [i, v] : x.entries) grow[i] += delta[r] * v;
        g.b[r] += delta[r];
      }
    }
    if (d_input) {
      d_input->assign(static_cast<std::size_t>(layer.in), 0.0);
      for (int r = 0; r < layer.out; ++r) {
        const double* row = &layer.w[static_cast<std::size_t>(r) * layer.in];
        for (int i = 0; i < layer.in; ++i) (*d_input)[i] += row[i] * delta[r];
      }
    }
  }
}

std::vector<DenseGrad> Stack::MakeGrads() const {
  std::vector<DenseGrad> grads;
  grads.reserve(layers_.size());
  for (const auto& l : layers_) grads.emplace_back(l);
  return grads;
}

json Stack::ToJson() const {
  json layers = json::array();
  for (const auto& l : layers_) {
    layers.push_back({{"in", l.in},
                      {"out", l.out},
                      {"activation", l.activation == Activation::kTanh ? "tanh" : "identity"},
                      {"w", l.w},
                      {"b", l.b}});
  }
  return layers;
}

Stack Stack::FromJson(const json& j) {
  std::vector<Dense> layers;
  for (const auto& lj : j) {
    Dense d;
    d.in = lj.at("in").get<int>();
    d.out = lj.at("out").get<int>();
    const std::string act = lj.at("activation").get<std::string>();
    if (act == "tanh") {
      d.activation = Activation::kTanh;
    } else if (act == "identity") {
      d.activation = Activation::kIdentity;
    } else {
      throw SchemaError("activation", "unknown activation \"" + act + "\"");
    }
    d.w = lj.at("w").get<std::vector<double>>();
    d.b = lj.at("b").get<std::vector<double>>();
    if (d.w.size() != static_cast<std::size_t>(d.in) * d.out ||
        d.b.size() != static_cast<std::size_t>(d.out)) {
      throw SchemaError("layers", "weight shape does not match in/out");
    }
    if (!layers.empty() && layers.back().out != d.in) {
      throw SchemaError("layers", "consecutive layer widths do not chain");
    }
    layers.push_back(std::move(d));
  }
  return Stack(std::move(layers));
}

Adam::Adam(std::vector<std::span<double>> params, Options options)
    : params_(std::move(params)), options_(options) {
  for (const auto& p : params_) {
    m_.emplace_back(p.size(), 0.0);
    v_.emplace_back(p.size(), 0.0);
  }
}

void Adam::Step(const std::vector<std::span<const double>>& grads) {
  ++t_;
  const double bc1 = 1.0 - std::pow(options_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(options_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    auto p = params_[k];
    auto g = grads[k];
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = options_.beta1 * m[i] + (1 - options_.beta1) * g[i];
      v[i] = options_.beta2 * v[i] + (1 - options_.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      p[i] -= options_.learning_rate * m_hat / (std::sqrt(v_hat) + options_.epsilon);
    }
  }
}

void AppendParams(Stack& stack, std::vector<std::span<double>>* params) {
  for (auto& l : stack.mutable_layers()) {
    params->emplace_back(l.w);
    params->emplace_back(l.b);
  }
}

void AppendGrads(const std::vector<DenseGrad>& grads,
                 std::vector<std::span<const double>>* out) {
  for (const auto& g : grads) {
    out->emplace_back(g.w);
    out->emplace_back(g.b);
  }
}

double SquaredWeightNorm(const Stack& stack) {
  double s = 0.0;
  for (const auto& l : stack.layers()) {
    for (double v : l.w) s += v * v;
  }
  return s;
}

void AddWeightDecay(const Stack& stack, double l2, std::vector<DenseGrad>* grads) {
  if (l2 == 0.0) return;
  for (std::size_t li = 0; li < stack.layers().size(); ++li) {
    const auto& w = stack.layers()[li].w;
    auto& gw = (*grads)[li].w;
    for (std::size_t i = 0; i < w.size(); ++i) gw[i] += l2 * w[i];
  }
}

}  // namespace turnlens::nn
