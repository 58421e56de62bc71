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

// Semi-global aggregation of local token attributions grouped by dialogue
// act (offline index build and online lookup), the global baseline, and the
// AGG / LOR aggregation metrics.

#ifndef TURNLENS_AGGREGATION_H_
#define TURNLENS_AGGREGATION_H_

#include <array>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "turnlens/alignment.h"
#include "turnlens/corpus.h"
#include "turnlens/embedding.h"
#include "turnlens/features.h"

namespace turnlens {

enum class AggregationMetric { kAgg, kLor };
std::string_view MetricName(AggregationMetric m);
AggregationMetric ParseMetric(std::string_view name);

// Group key of the DA-independent (global) index.
inline constexpr std::string_view kGlobalGroup = "*";

using FeatureCounts = std::map<std::string, int, std::less<>>;

struct ClassCorpus {
  Authorship label = Authorship::kHuman;
  FeatureCounts counts;

  long long Total() const;
  bool empty() const { return counts.empty(); }
};

// A feature occurrence with its (phrase-averaged) attribution score.
struct FeatureObservation {
  std::string feature;
  double score = 0.0;
};

// Positive scores count toward the AI corpus, negative toward Human; zero is
// dropped. Returns {AI, Human}.
std::pair<ClassCorpus, ClassCorpus> BuildClassCorpora(
    std::span<const FeatureObservation> observations);

// Mean of the token scores the phrase covers.
double PhraseScore(const Phrase& phrase, std::span<const double> token_scores);

// Log-odds ratio with an informative Dirichlet prior, z-scored, for A vs B.
// The prior is the pooled A+B counts scaled to total mass alpha0. Throws
// InvalidArgument if either corpus is empty.
std::map<std::string, double> LorDirichlet(const ClassCorpus& a, const ClassCorpus& b,
                                           double alpha0 = 500.0);
// Same estimate with an explicit background prior; empty corpora allowed.
// Every feature of a and b must occur in prior.
std::map<std::string, double> LorDirichletWithPrior(const FeatureCounts& a, const FeatureCounts& b,
                                                    const FeatureCounts& prior, double alpha0);

// Anchor frequency: count / corpus total, per class. Returns {AI, Human}.
// Throws InvalidArgument if either corpus is empty.
std::array<std::map<std::string, double>, 2> AnchorScores(const ClassCorpus& ai,
                                                          const ClassCorpus& human);

struct ScoredFeature {
  std::string feature;
  double score = 0.0;  // ranking score under the index metric
  int count = 0;       // occurrences in the class corpus

  bool operator==(const ScoredFeature&) const = default;
};

// Per group (DA key, or kGlobalGroup), per class: top-K features sorted by
// descending score.
class AggregationIndex {
 public:
  AggregationMetric metric = AggregationMetric::kLor;
  int k = 20;
  double alpha0 = 500.0;
  std::map<std::string, std::array<std::vector<ScoredFeature>, 2>, std::less<>> groups;

  // nullptr when the group is absent.
  const std::vector<ScoredFeature>* Find(std::string_view group, Authorship c) const;

  nlohmann::json ToJson() const;
  static AggregationIndex FromJson(const nlohmann::json& j);
  bool operator==(const AggregationIndex&) const = default;
};

struct UtteranceRecord {
  std::string text;
  std::vector<DialogueAct> das;
};

// Token scores aligned with Tokenize(record.text).
using TokenAttributionFn = std::function<std::vector<double>(const UtteranceRecord&)>;

struct AggregationConfig {
  AggregationMetric metric = AggregationMetric::kLor;
  int k = 20;
  int max_n = 4;
  double alpha0 = 500.0;
  MatchConfig match;
};

// Feature observations grouped by DA key: phrases matched to each DA, scored
// by averaging token attributions. Utterances without DAs contribute nothing.
using GroupedObservations = std::map<std::string, std::vector<FeatureObservation>, std::less<>>;
GroupedObservations CollectObservations(std::span<const UtteranceRecord> records,
                                        const TokenAttributionFn& attribute,
                                        const EmbeddingProvider& provider, const Lexicon& lexicon,
                                        const AggregationConfig& config);

// Scores each group's class corpora with the metric and keeps the top K.
// Groups with no non-zero observation are omitted. For LOR the prior is the
// pooled counts over all groups.
AggregationIndex BuildIndex(const GroupedObservations& groups, const AggregationConfig& config);
// All observations pooled into the single kGlobalGroup.
AggregationIndex BuildGlobalIndex(const GroupedObservations& groups,
                                  const AggregationConfig& config);

// Throws InvalidArgument on an empty dataset.
AggregationIndex OfflineAggregate(std::span<const UtteranceRecord> records,
                                  const TokenAttributionFn& attribute,
                                  const EmbeddingProvider& provider, const Lexicon& lexicon,
                                  const AggregationConfig& config);
AggregationIndex GlobalAggregate(std::span<const UtteranceRecord> records,
                                 const TokenAttributionFn& attribute,
                                 const EmbeddingProvider& provider, const Lexicon& lexicon,
                                 const AggregationConfig& config);

using SemiGlobalResult = std::map<std::string, double>;

// S[f] += s for every (f, s) in index[DA][c], over the target DA keys.
SemiGlobalResult OnlineSemiGlobal(std::span<const std::string> target_da_keys, Authorship c,
                                  const AggregationIndex& index);

// Descending score, ties by feature.
std::vector<std::pair<std::string, double>> RankFeatures(const SemiGlobalResult& result);
// The class list of a single-group index as a ranking (global baseline).
std::vector<std::pair<std::string, double>> GlobalRanking(const AggregationIndex& index,
                                                          Authorship c);

}  // namespace turnlens

#endif  // TURNLENS_AGGREGATION_H_
