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

// Offline training of the detectors and aggregation indices, and the online
// selector-predictor session that runs per arriving user turn: DA provision,
// turn detection, attribution, selection, dialogue detection and report.

#ifndef TURNLENS_PIPELINE_H_
#define TURNLENS_PIPELINE_H_

#include <filesystem>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "turnlens/aggregation.h"
#include "turnlens/attribution.h"
#include "turnlens/config.h"
#include "turnlens/corpus.h"
#include "turnlens/detector.h"
#include "turnlens/embedding.h"
#include "turnlens/features.h"
#include "turnlens/report.h"

namespace turnlens {

// Step 2: dialogue acts for an arriving user turn.
class DaProvider {
 public:
  virtual ~DaProvider() = default;
  virtual std::vector<DialogueAct> Extract(const Turn& turn) const = 0;
};

// Uses the turn's own annotations.
class AnnotationDaProvider : public DaProvider {
 public:
  std::vector<DialogueAct> Extract(const Turn& turn) const override { return turn.das; }
};

// Emits an act (without value) for every rule whose keyword occurs as a
// token of the turn, case-insensitively; each act at most once.
class KeywordDaProvider : public DaProvider {
 public:
  struct Rule {
    std::string keyword;
    DialogueAct act;
  };
  explicit KeywordDaProvider(std::vector<Rule> rules) : rules_(std::move(rules)) {}
  // {"rules": [{"keyword": str, "intent": str, "domain": str, "slot": str}]}
  static KeywordDaProvider FromJson(const nlohmann::json& j);
  std::vector<DialogueAct> Extract(const Turn& turn) const override;

 private:
  std::vector<Rule> rules_;
};

// A user turn as the pipeline sees it: text with DA values masked.
Turn PrepareUserTurn(const Turn& turn);
// All user turns of a dialogue, prepared.
std::vector<Turn> PreparedUserTurns(const Dialogue& dialogue);

std::vector<TurnSample> TurnSamples(std::span<const Dialogue* const> dialogues);

// Turn-level attributions of one training user turn under both detectors.
struct TeacherTurn {
  FeatureSet features;
  std::vector<Attribution> token_attributions;
  std::vector<Attribution> da_attributions;
};
struct TeacherDialogue {
  std::string id;
  Authorship label = Authorship::kHuman;
  std::vector<TeacherTurn> turns;
};

std::vector<TeacherDialogue> ComputeTeacher(std::span<const Dialogue* const> dialogues,
                                            const TurnDetector& token_detector,
                                            const TurnDetector& da_detector,
                                            const AttributionConfig& attribution);

// Step 5 on precomputed attributions.
TurnSelection SelectFeatures(const FeatureSet& fs, std::span<const Attribution> token_attributions,
                             std::span<const Attribution> da_attributions, int k_tokens, int k_das,
                             std::set<int>* kept = nullptr);

// Every non-empty prefix of each dialogue, labeled with the dialogue label.
std::vector<DialogueSample> DialogueSamplesFromTeacher(std::span<const TeacherDialogue> teacher,
                                                       int k_tokens, int k_das);

// Training utterances with per-token scores from the teacher's token game.
struct AggregationInputs {
  std::vector<UtteranceRecord> records;
  std::vector<std::vector<double>> token_scores;
};
AggregationInputs AggregationInputsFromTeacher(std::span<const TeacherDialogue> teacher);

struct AggregationPair {
  AggregationIndex semi_global;
  AggregationIndex global;
};
AggregationPair BuildAggregation(const AggregationInputs& inputs, const EmbeddingProvider& provider,
                                 const Lexicon& lexicon, const AggregationConfig& config);

struct PipelineModels {
  TurnDetector token;
  TurnDetector da;
  DialogueDetector dialogue;
  AggregationIndex semi_global;
  AggregationIndex global;

  // token_detector.json, da_detector.json, dialogue_detector.json,
  // aggregation_index.json, global_index.json.
  void Save(const std::filesystem::path& dir) const;
  static PipelineModels Load(const std::filesystem::path& dir);
};

struct TrainingSummary {
  TurnTrainingReport token;
  TurnTrainingReport da;
  TrainingReport dialogue;
  int train_dialogues = 0;
  int val_dialogues = 0;
};

// Dialogues of one split part, in corpus order.
std::vector<const Dialogue*> SplitDialogues(const Corpus& corpus, const SplitAssignment& split,
                                            SplitPart part);

PipelineModels TrainPipeline(const Corpus& corpus, const SplitAssignment& split,
                             const PipelineConfig& config, const EmbeddingProvider& provider,
                             const Lexicon& lexicon, TrainingSummary* summary = nullptr);

struct StepTimes {
  double da_provider = 0.0;
  double turn_detection = 0.0;
  double attribution = 0.0;
  double dialogue_detection = 0.0;  // includes masking the selection
  double report = 0.0;
};

struct TurnTrace {
  int turn_index = 0;
  FeatureSet features;
  ProbPair token_probs;
  ProbPair da_probs;
  std::vector<Attribution> token_attributions;
  std::vector<Attribution> da_attributions;
  std::set<int> kept;
  TurnSelection selection;
  DialoguePrediction dialogue;
  ReportBundle report;
  StepTimes times;
};

struct OnlineTrace {
  std::string dialogue_id;
  std::vector<TurnTrace> turns;
  int token_attribution_calls = 0;
  int da_attribution_calls = 0;
  int dialogue_predictions = 0;
};

// Step 7 inputs that are already computed; touches no model.
struct ReportInputs {
  std::string dialogue_id;
  int turn_number = 1;
  const FeatureSet* features = nullptr;
  ProbPair token_probs;
  ProbPair da_probs;
  DialoguePrediction dialogue;
  std::span<const Attribution> token_attributions;
  std::span<const Attribution> da_attributions;
  const std::set<int>* kept = nullptr;
};
ReportBundle BuildReport(const ReportInputs& inputs, const AggregationIndex& index,
                         const NarrativeTemplate& tmpl, const PipelineConfig& config);

// Feeds user turns one at a time; earlier turns are never re-explained.
class OnlineSession {
 public:
  OnlineSession(const PipelineModels& models, const PipelineConfig& config,
                const NarrativeTemplate& tmpl, const DaProvider& provider,
                std::string dialogue_id);

  // Throws InvalidArgument for a system turn.
  const TurnTrace& Push(const Turn& user_turn);
  const OnlineTrace& trace() const { return trace_; }

 private:
  const PipelineModels& models_;
  const PipelineConfig& config_;
  const NarrativeTemplate& template_;
  const DaProvider& provider_;
  OnlineTrace trace_;
  std::vector<TurnSelection> selections_;
};

OnlineTrace RunSelectorPredictor(const Dialogue& dialogue, const PipelineModels& models,
                                 const PipelineConfig& config, const NarrativeTemplate& tmpl,
                                 const DaProvider& provider);

// Built-in or configured template / lexicon / provider.
NarrativeTemplate TemplateFor(const PipelineConfig& config);
Lexicon LexiconFor(const PipelineConfig& config);
std::unique_ptr<DaProvider> DaProviderFor(const PipelineConfig& config);

}  // namespace turnlens

#endif  // TURNLENS_PIPELINE_H_
