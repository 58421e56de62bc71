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

// Classification and ranking metrics.

#ifndef TURNLENS_METRICS_H_
#define TURNLENS_METRICS_H_

#include <span>
#include <vector>

#include "turnlens/corpus.h"

namespace turnlens {

// Unweighted mean of per-class F1 over label_space. A class in the label space
// that never occurs in predictions or labels contributes F1 = 0. With an empty
// label_space the classes seen in either input are used. Throws
// InvalidArgument on a length mismatch or empty input.
double MacroF1(std::span<const int> predictions, std::span<const int> labels,
               std::span<const int> label_space = {});

// Binary Human/AI convenience; both classes are always in the label space.
double MacroF1(std::span<const Authorship> predictions, std::span<const Authorship> labels);

// 1-based ranks, ties receive the average rank.
std::vector<double> AverageRanks(std::span<const double> values);

// Pearson correlation of average ranks. Returns 1 when both inputs are
// constant and 0 when exactly one is.
double SpearmanCorrelation(std::span<const double> a, std::span<const double> b);

}  // namespace turnlens

#endif  // TURNLENS_METRICS_H_
