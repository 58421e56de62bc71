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

// Evaluation: detection Macro-F1, AOPC_k curves for an aggregation ranking,
// paired semi-global vs global comparison, and per-step timing.

#ifndef TURNLENS_EVALUATION_H_
#define TURNLENS_EVALUATION_H_

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "turnlens/pipeline.h"
#include "turnlens/wilcoxon.h"

namespace turnlens {

struct DetectionEval {
  double dialogue_macro_f1 = 0.0;  // final online verdict per dialogue
  double token_turn_macro_f1 = 0.0;
  double da_turn_macro_f1 = 0.0;
  int dialogues = 0;
  int turns = 0;

  nlohmann::json ToJson() const;
};

DetectionEval EvaluateDetection(std::span<const Dialogue* const> dialogues,
                                const PipelineModels& models, const PipelineConfig& config,
                                const NarrativeTemplate& tmpl, const DaProvider& provider);

struct AopcSample {
  std::string id;  // "<dialogue id>#<turn index>"
  FeatureSet features;
};
std::vector<AopcSample> AopcSamples(std::span<const Dialogue* const> dialogues);

// Class probabilities with only the flagged tokens of fs kept.
using MaskedScorer = std::function<ProbPair(const FeatureSet&, std::span<const char>)>;
MaskedScorer TokenScorer(const TurnDetector& detector);

// Features ranked for class c in the context of one sample.
using RankingFn = std::function<RankedList(const FeatureSet&, Authorship)>;
RankingFn SemiGlobalRanking(const AggregationIndex& index);
RankingFn GlobalRankingOf(const AggregationIndex& index);

// Token positions covered by case-insensitive occurrences of the phrase.
std::vector<int> PhraseOccurrences(const FeatureSet& fs, std::string_view phrase);

struct AopcOptions {
  int k_max = 20;
  // Absent features are skipped instead of taking a rank slot.
  bool skip_absent = false;
};

struct AopcCurve {
  Authorship target = Authorship::kAI;
  int k_max = 0;
  std::vector<std::string> sample_ids;
  std::vector<std::vector<double>> drops;  // [sample][j - 1], j = 1..k_max
  std::vector<double> aopc;                // [k - 1]

  // Per-sample mean of the first k drops.
  std::vector<double> SampleAopc(int k) const;
  nlohmann::json ToJson() const;
};

// Masks the top-j features cumulatively for j = 1..k_max on every sample
// predicted as c. Throws InvalidArgument when no sample is predicted as c.
AopcCurve ComputeAopc(const MaskedScorer& scorer, std::span<const AopcSample> samples,
                      const RankingFn& ranking, Authorship c, const AopcOptions& options);

struct AopcComparison {
  AopcCurve semi_global;
  AopcCurve global;
  // One-sided (semi-global > global) per k; empty when fewer than 5
  // non-zero differences.
  std::vector<std::optional<WilcoxonResult>> tests;

  nlohmann::json ToJson() const;
};

AopcComparison CompareAggregations(const MaskedScorer& scorer, std::span<const AopcSample> samples,
                                   const AggregationIndex& semi_global,
                                   const AggregationIndex& global, Authorship c,
                                   const AopcOptions& options);

struct TimingBreakdown {
  int utterances = 0;
  StepTimes mean;
  double explanation = 0.0;  // attribution + report
  double framework = 0.0;    // all steps

  nlohmann::json ToJson() const;
};

// Streams randomly ordered dialogues (seeded) through online sessions until
// n user turns were timed. Throws InvalidArgument when the pool has fewer.
TimingBreakdown TimeBreakdown(std::span<const Dialogue* const> pool, const PipelineModels& models,
                              const PipelineConfig& config, const NarrativeTemplate& tmpl,
                              const DaProvider& provider, int n);

}  // namespace turnlens

#endif  // TURNLENS_EVALUATION_H_
