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

// Local feature attribution over a FeatureSet: Faith-SHAP (order 1), STII
// (order 1), integrated gradients, an exact Shapley oracle, and top-k
// selection of the features kept for dialogue-level detection.

#ifndef TURNLENS_ATTRIBUTION_H_
#define TURNLENS_ATTRIBUTION_H_

#include <cstdint>
#include <functional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "turnlens/classifier.h"
#include "turnlens/detector.h"
#include "turnlens/features.h"

namespace turnlens {

// A cooperative game over n players. Value() receives one flag per player
// (non-zero = kept) and must be callable concurrently.
class CoalitionGame {
 public:
  virtual ~CoalitionGame() = default;
  virtual int size() const = 0;
  virtual double Value(std::span<const char> kept) const = 0;
};

class FunctionGame : public CoalitionGame {
 public:
  using Fn = std::function<double(std::span<const char>)>;
  FunctionGame(int n, Fn fn) : n_(n), fn_(std::move(fn)) {}
  int size() const override { return n_; }
  double Value(std::span<const char> kept) const override { return fn_(kept); }

 private:
  int n_;
  Fn fn_;
};

// p_ai of a turn detector as features of its own dimension are masked.
// Player i maps to feature id FeatureId(i) of the FeatureSet.
class DetectorGame : public CoalitionGame {
 public:
  DetectorGame(const TurnDetector& detector, const FeatureSet& fs)
      : detector_(detector), fs_(fs) {}
  int size() const override { return detector_.NumFeatures(fs_); }
  double Value(std::span<const char> kept) const override;
  int FeatureId(int player) const;

 private:
  const TurnDetector& detector_;
  const FeatureSet& fs_;
};

enum class Estimator { kFaithShap, kStii, kIntegratedGradients, kExactShapley };
std::string_view EstimatorName(Estimator e);
Estimator ParseEstimator(std::string_view name);

struct Attribution {
  int feature_id = 0;
  FeatureKind kind = FeatureKind::kToken;
  double score = 0.0;  // signed contribution toward the AI class
  Estimator estimator = Estimator::kFaithShap;

  bool operator==(const Attribution&) const = default;
};

// Player-indexed estimates plus diagnostics.
struct GameAttribution {
  std::vector<double> scores;
  // |sum(scores) - (v(N) - v(empty))|. For integrated gradients this is the
  // completeness residual on the logit scale.
  double residual = 0.0;
  // Integrated gradients only: the same residual in probability space.
  double probability_residual = 0.0;
  int evaluations = 0;
};

// Enumerates all 2^n coalitions. Throws InvalidArgument for n > 12.
GameAttribution ExactShapleyValues(const CoalitionGame& game);

// Shapley-kernel weighted least squares with the empty and full coalitions as
// hard constraints. Coalition sizes are enumerated completely, smallest/largest
// first, while the budget allows; the rest is sampled (with complements)
// without replacement. Requires budget >= n + 2. Throws NumericalError when
// the sampled design is rank deficient.
GameAttribution FaithShapValues(const CoalitionGame& game, int budget = 200,
                                std::uint64_t seed = 2025);

// Perturbations per feature: max(1, ceil(budget / n)).
int StiiAllocation(int num_features, int budget);

// Mean discrete derivative v(S + i) - v(S) over the allocated coalitions
// S of the other players, with coalition sizes stratified over 0..n-1.
// Requires 1 <= n <= budget.
GameAttribution StiiValues(const CoalitionGame& game, int budget = 50,
                           std::uint64_t seed = 2025);

// Per-input-dimension integrated gradients of the logit along the straight
// path from baseline to input (midpoint Riemann sum). Throws CapabilityError
// for non-differentiable models.
struct VectorAttribution {
  std::vector<double> per_dimension;  // dense
  double logit_residual = 0.0;
  double probability_residual = 0.0;
};
VectorAttribution IntegratedGradients(const Classifier& model, const SparseVector& input,
                                      const SparseVector& baseline, int steps = 100);

struct AttributionResult {
  std::vector<Attribution> attributions;  // one per feature of the dimension
  double residual = 0.0;
  double probability_residual = 0.0;
  int evaluations = 0;
};

AttributionResult ExplainFaithShap(const TurnDetector& detector, const FeatureSet& fs,
                                   int budget = 200, std::uint64_t seed = 2025);
AttributionResult ExplainStii(const TurnDetector& detector, const FeatureSet& fs,
                              int budget = 50, std::uint64_t seed = 2025);
// Baseline is the fully masked input. Each input dimension's attribution is
// shared among the features whose n-gram occurrences (in the input or the
// baseline) produce it, so per-feature scores keep the completeness sum.
AttributionResult ExplainIntegratedGradients(const TurnDetector& detector,
                                             const FeatureSet& fs, int steps = 100);
AttributionResult ExactShapley(const TurnDetector& detector, const FeatureSet& fs);

// Dispatch on estimator with the default budgets used by the pipeline.
struct AttributionConfig {
  Estimator estimator = Estimator::kFaithShap;
  int faithshap_budget = 200;
  int stii_budget = 50;
  int ig_steps = 100;
  std::uint64_t seed = 2025;
};
AttributionResult Explain(const TurnDetector& detector, const FeatureSet& fs,
                          const AttributionConfig& config);

// Per kind, the min(k, available) features with the largest |score|; ties go
// to the earlier position, then the lexicographically smaller key.
std::set<int> SelectTop(const FeatureSet& fs, std::span<const Attribution> attributions,
                        int k_tokens = 3, int k_das = 3);

nlohmann::json AttributionsToJson(const FeatureSet& fs,
                                  std::span<const Attribution> attributions);

}  // namespace turnlens

#endif  // TURNLENS_ATTRIBUTION_H_
