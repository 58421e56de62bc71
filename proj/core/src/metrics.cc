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

#include "turnlens/metrics.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "turnlens/errors.h"

namespace turnlens {

double MacroF1(std::span<const int> predictions, std::span<const int> labels,
               std::span<const int> label_space) {
  if (predictions.size() != labels.size()) {
    throw InvalidArgument("predictions and labels differ in length");
  }
  if (predictions.empty()) throw InvalidArgument("macro F1 of an empty sample");
  std::set<int> classes(label_space.begin(), label_space.end());
  if (classes.empty()) {
    classes.insert(predictions.begin(), predictions.end());
    classes.insert(labels.begin(), labels.end());
  }
  double sum = 0.0;
  for (int c : classes) {
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const bool pred = predictions[i] == c;
      const bool gold = labels[i] == c;
      tp += pred && gold;
      fp += pred && !gold;
      fn += !pred && gold;
    }
    const double denom = 2 * tp + fp + fn;
    sum += denom > 0 ? 2 * tp / denom : 0.0;
  }
  return sum / static_cast<double>(classes.size());
}

double MacroF1(std::span<const Authorship> predictions, std::span<const Authorship> labels) {
  std::vector<int> p, l;
  for (auto a : predictions) p.push_back(static_cast<int>(a));
  for (auto a : labels) l.push_back(static_cast<int>(a));
  const int space[] = {0, 1};
  return MacroF1(p, l, space);
}

std::vector<double> AverageRanks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

double SpearmanCorrelation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) {
    throw InvalidArgument("spearman inputs must be non-empty and equally long");
  }
  const auto ra = AverageRanks(a);
  const auto rb = AverageRanks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double cov = 0, va = 0, vb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    cov += (ra[i] - ma) * (rb[i] - mb);
    va += (ra[i] - ma) * (ra[i] - ma);
    vb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (va == 0 && vb == 0) return 1.0;
  if (va == 0 || vb == 0) return 0.0;
  return cov / std::sqrt(va * vb);
}

}  // namespace turnlens
