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

#include "turnlens/wilcoxon.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "turnlens/errors.h"

namespace turnlens {

std::vector<double> SignedRankNullPmf(std::span<const double> ranks) {
  std::vector<int> doubled;
  int total = 0;
  for (double r : ranks) {
    const double d = 2.0 * r;
    const int di = static_cast<int>(std::lround(d));
    if (std::abs(d - di) > 1e-9 || di < 0) throw InvalidArgument("ranks must be multiples of 0.5");
    doubled.push_back(di);
    total += di;
  }
  std::vector<double> pmf(static_cast<std::size_t>(total) + 1, 0.0);
  pmf[0] = 1.0;
  int reach = 0;
  for (int d : doubled) {
    for (int s = reach; s >= 0; --s) {
      pmf[static_cast<std::size_t>(s + d)] += 0.5 * pmf[static_cast<std::size_t>(s)];
      pmf[static_cast<std::size_t>(s)] *= 0.5;
    }
    reach += d;
  }
  return pmf;
}

WilcoxonResult WilcoxonSignedRankGreater(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidArgument("Wilcoxon needs paired samples of equal length");
  std::vector<double> diffs;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    if (!std::isfinite(d)) throw InvalidArgument("non-finite paired difference");
    if (d != 0.0) diffs.push_back(d);
  }
  const int n = static_cast<int>(diffs.size());
  if (n < kWilcoxonMinPairs) {
    throw InvalidArgument("Wilcoxon needs at least 5 non-zero differences, got " +
                          std::to_string(n));
  }
  std::vector<int> order(diffs.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int x, int y) { return std::abs(diffs[x]) < std::abs(diffs[y]); });
  std::vector<double> ranks(diffs.size());
  double tie_term = 0.0;
  for (int i = 0; i < n;) {
    int j = i;
    while (j + 1 < n && std::abs(diffs[order[j + 1]]) == std::abs(diffs[order[i]])) ++j;
    const double avg = (i + j + 2) / 2.0;
    for (int t = i; t <= j; ++t) ranks[order[t]] = avg;
    const double size = j - i + 1;
    tie_term += size * size * size - size;
    i = j + 1;
  }

  WilcoxonResult result;
  result.n = n;
  for (int i = 0; i < n; ++i) {
    if (diffs[i] > 0) result.statistic += ranks[i];
  }
  if (n <= kWilcoxonExactLimit) {
    result.exact = true;
    const auto pmf = SignedRankNullPmf(ranks);
    const auto observed = static_cast<std::size_t>(std::lround(2.0 * result.statistic));
    double p = 0.0;
    for (std::size_t s = observed; s < pmf.size(); ++s) p += pmf[s];
    result.p_value = std::min(1.0, p);
  } else {
    const double mean = n * (n + 1) / 4.0;
    const double variance = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    if (variance <= 0) throw NumericalError("degenerate Wilcoxon variance");
    const double z = (result.statistic - mean - 0.5) / std::sqrt(variance);
    result.p_value = 0.5 * std::erfc(z / std::sqrt(2.0));
  }
  return result;
}

}  // namespace turnlens
