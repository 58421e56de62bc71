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

// Turn-level detectors (token and dialogue-act dimensions) and the fused
// dialogue-level detector of the selector-predictor pipeline.

#ifndef TURNLENS_DETECTOR_H_
#define TURNLENS_DETECTOR_H_

#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "turnlens/classifier.h"
#include "turnlens/corpus.h"
#include "turnlens/features.h"
#include "turnlens/nn.h"
#include "turnlens/term_weights.h"

namespace turnlens {

enum class Dimension { kTokens, kDas };
std::string_view DimensionName(Dimension d);
Dimension ParseDimension(std::string_view name);

// One training utterance. Only the field matching the detector dimension is
// read.
struct TurnSample {
  std::string text;
  std::vector<std::string> da_keys;
  Authorship label = Authorship::kHuman;
};

struct TurnDetectorConfig {
  TermWeightConfig terms;
  NativeModelConfig model;
};

// Token detectors default to lowercased uni+bigrams; DA detectors to
// unigrams over canonical DA keys.
TurnDetectorConfig DefaultTurnDetectorConfig(Dimension d);

struct TurnTrainingReport {
  double final_loss = 0.0;
  double val_macro_f1 = 0.0;  // NaN when no validation samples were given
};

class TurnDetector {
 public:
  TurnDetector() = default;
  TurnDetector(Dimension dimension, TermWeightModel terms, NativeModel model);

  // Throws InvalidArgument when train lacks one of the classes.
  static TurnDetector Train(const std::vector<TurnSample>& train,
                            const std::vector<TurnSample>& val, Dimension dimension,
                            const TurnDetectorConfig& config,
                            TurnTrainingReport* report = nullptr);

  Dimension dimension() const { return dimension_; }
  const TermWeightModel& terms() const { return terms_; }
  const NativeModel& model() const { return model_; }

  // Number of players in this detector's attribution game for fs.
  int NumFeatures(const FeatureSet& fs) const;
  // Terms seen by the model when only the flagged features of this dimension
  // are kept (masked tokens become "<mask>", masked DAs are dropped).
  std::vector<std::string> Terms(const FeatureSet& fs, std::span<const char> kept) const;
  SparseVector Vectorize(const FeatureSet& fs, std::span<const char> kept) const;
  // Honors fs.mask_state().
  SparseVector Vectorize(const FeatureSet& fs) const;

  ProbPair Predict(const FeatureSet& fs) const;
  // Throws InvalidArgument when x does not match the vocabulary dimension.
  ProbPair PredictVector(const SparseVector& x) const;
  ProbPair PredictSample(const TurnSample& sample) const;

  nlohmann::json ToJson() const;
  static TurnDetector FromJson(const nlohmann::json& j);

 private:
  Dimension dimension_ = Dimension::kTokens;
  TermWeightModel terms_;
  NativeModel model_;
};

enum class Fusion { kAverage, kConcatenate, kMax };
std::string_view FusionName(Fusion f);
Fusion ParseFusion(std::string_view name);

// Fusion of two branch encodings. Average and Max require equal widths.
std::vector<double> Fuse(Fusion fusion, std::span<const double> a, std::span<const double> b);

// Kept features of one user turn after selection.
struct TurnSelection {
  std::string masked_text;
  std::vector<std::string> kept_da_keys;

  bool operator==(const TurnSelection&) const = default;
};

struct DialogueSample {
  std::vector<TurnSelection> turns;
  Authorship label = Authorship::kHuman;
};

struct DialogueDetectorConfig {
  Fusion fusion = Fusion::kAverage;
  int fused_width = 32;  // projection width for Average / Max
  TermWeightConfig token_terms;
  TermWeightConfig da_terms{.ngram_min = 1, .ngram_max = 1, .lowercase = false,
                            .l2_normalize = true};
  NativeModelConfig model;  // hidden_sizes define each branch encoder
};

struct DialoguePrediction {
  ProbPair probs;
  Authorship label = Authorship::kAI;
};

// Token branch reads the concatenated masked texts, DA branch the
// concatenated kept DA keys; both are encoded, fused, and passed to a logit
// head. Branch term models include "<mask>" as an ordinary term.
class DialogueDetector {
 public:
  DialogueDetector() = default;

  static DialogueDetector Train(const std::vector<DialogueSample>& samples,
                                const DialogueDetectorConfig& config,
                                TrainingReport* report = nullptr);

  // Throws InvalidArgument on an empty turn list or when both branches are
  // empty.
  DialoguePrediction Detect(std::span<const TurnSelection> turns) const;

  static std::string ConcatText(std::span<const TurnSelection> turns);
  static std::vector<std::string> ConcatDaKeys(std::span<const TurnSelection> turns);

  Fusion fusion() const { return config_.fusion; }
  const DialogueDetectorConfig& config() const { return config_; }

  nlohmann::json ToJson() const;
  static DialogueDetector FromJson(const nlohmann::json& j);

 private:
  struct Branch {
    TermWeightModel terms;
    nn::Stack encoder;     // tanh hidden layers
    nn::Stack projection;  // empty for Concatenate
  };

  std::vector<double> EncodeBranch(const Branch& branch, const SparseVector& x) const;

  DialogueDetectorConfig config_;
  Branch token_;
  Branch da_;
  nn::Dense head_;
};

}  // namespace turnlens

#endif  // TURNLENS_DETECTOR_H_
