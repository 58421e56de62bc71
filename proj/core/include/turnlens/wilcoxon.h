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

// One-sided Wilcoxon signed-rank test for paired samples.

#ifndef TURNLENS_WILCOXON_H_
#define TURNLENS_WILCOXON_H_

#include <span>
#include <vector>

namespace turnlens {

struct WilcoxonResult {
  double statistic = 0.0;  // W+, sum of ranks of positive differences
  double p_value = 1.0;    // alternative: a > b
  int n = 0;               // non-zero differences
  bool exact = false;
};

inline constexpr int kWilcoxonExactLimit = 25;
inline constexpr int kWilcoxonMinPairs = 5;

// Zero differences are dropped; tied |differences| share average ranks.
// Throws InvalidArgument on length mismatch or fewer than 5 non-zero
// differences.
WilcoxonResult WilcoxonSignedRankGreater(std::span<const double> a, std::span<const double> b);

// Null distribution of 2*W+ for the given ranks (each a multiple of 0.5):
// entry s is P(2*W+ = s) with every sign assignment equally likely.
std::vector<double> SignedRankNullPmf(std::span<const double> ranks);

}  // namespace turnlens

#endif  // TURNLENS_WILCOXON_H_
