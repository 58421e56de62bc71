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

#include <gtest/gtest.h>

#include <filesystem>
#include <string>
#include <vector>

#include "turnlens/errors.h"
#include "turnlens/evaluation.h"
#include "turnlens/pipeline.h"
#include "turnlens/synthetic.h"

namespace turnlens {
namespace {

struct Trained {
  Corpus corpus;
  SplitAssignment split;
  PipelineConfig config;
  PipelineModels models;
  TrainingSummary summary;
};

const Trained& Shared() {
  static const Trained* t = [] {
    auto* r = new Trained;
    r->corpus = GenerateSyntheticCorpus({.dialogues = 60, .seed = r->config.seed});
    r->split = SplitByDialogue(r->corpus, r->config.split, r->config.seed);
    const TrigramEmbeddingProvider provider({.dimension = r->config.embedding_dimension});
    r->models =
        TrainPipeline(r->corpus, r->split, r->config, provider, Lexicon::Default(), &r->summary);
    return r;
  }();
  return *t;
}

std::vector<const Dialogue*> TestDialogues() {
  const auto& t = Shared();
  return SplitDialogues(t.corpus, t.split, SplitPart::kTest);
}

TEST(Pipeline, TrainingSummary) {
  const auto& t = Shared();
  EXPECT_EQ(t.summary.train_dialogues + t.summary.val_dialogues + 9, 60);
  EXPECT_FALSE(t.models.semi_global.groups.empty());
  EXPECT_EQ(t.models.global.groups.size(), 1u);
}

TEST(Pipeline, OneAttributionCallPerTurnAndDimension) {
  const auto& t = Shared();
  const AnnotationDaProvider provider;
  const auto tmpl = NarrativeTemplate::Default();
  for (const Dialogue* d : TestDialogues()) {
    const auto trace = RunSelectorPredictor(*d, t.models, t.config, tmpl, provider);
    const int n = static_cast<int>(UserSide(*d).size());
    EXPECT_EQ(trace.token_attribution_calls, n);
    EXPECT_EQ(trace.da_attribution_calls, n);
    EXPECT_EQ(trace.dialogue_predictions, n);
    ASSERT_EQ(static_cast<int>(trace.turns.size()), n);
  }
}

TEST(Pipeline, SingleTurnSession) {
  const auto& t = Shared();
  const AnnotationDaProvider provider;
  const auto tmpl = NarrativeTemplate::Default();
  const Dialogue* d = TestDialogues().front();
  OnlineSession session(t.models, t.config, tmpl, provider, d->id);
  const auto& turn = session.Push(UserSide(*d).front());
  EXPECT_EQ(session.trace().token_attribution_calls, 1);
  EXPECT_EQ(session.trace().da_attribution_calls, 1);
  EXPECT_EQ(session.trace().dialogue_predictions, 1);
  const std::vector<TurnSelection> one = {turn.selection};
  EXPECT_EQ(t.models.dialogue.Detect(one).probs, turn.dialogue.probs);
}

TEST(Pipeline, EarlierSelectionsAreNotRecomputed) {
  const auto& t = Shared();
  const AnnotationDaProvider provider;
  const auto tmpl = NarrativeTemplate::Default();
  const Dialogue* d = TestDialogues().front();
  OnlineSession session(t.models, t.config, tmpl, provider, d->id);
  std::vector<TurnSelection> seen;
  std::vector<std::vector<Attribution>> attributions;
  for (const auto& turn : UserSide(*d)) {
    session.Push(turn);
    const auto& turns = session.trace().turns;
    for (std::size_t i = 0; i < seen.size(); ++i) {
      EXPECT_EQ(turns[i].selection, seen[i]);
      EXPECT_EQ(turns[i].token_attributions.size(), attributions[i].size());
    }
    seen.push_back(turns.back().selection);
    attributions.push_back(turns.back().token_attributions);
  }
}

TEST(Pipeline, SystemTurnRejected) {
  const auto& t = Shared();
  const AnnotationDaProvider provider;
  const auto tmpl = NarrativeTemplate::Default();
  OnlineSession session(t.models, t.config, tmpl, provider, "x");
  Turn sys;
  sys.speaker = Speaker::kSystem;
  sys.text = "how can I help ?";
  EXPECT_THROW(session.Push(sys), InvalidArgument);
}

TEST(Pipeline, DialogueVerdictSeesOnlyKeptTokens) {
  const auto& t = Shared();
  const AnnotationDaProvider provider;
  const auto tmpl = NarrativeTemplate::Default();
  int checked = 0;
  for (const Dialogue* d : TestDialogues()) {
    const auto trace = RunSelectorPredictor(*d, t.models, t.config, tmpl, provider);
    for (const auto& turn : trace.turns) {
      const FeatureSet& fs = turn.features;
      for (int i = 0; i < fs.num_tokens(); ++i) {
        if (turn.kept.count(fs.TokenId(i))) continue;
        const Token& tok = fs.tokens()[static_cast<std::size_t>(i)];
        std::string text = fs.text();
        text.replace(tok.start, tok.end - tok.start, "zzzq");
        const FeatureSet perturbed(fs.utterance_index(), text, fs.das());
        ASSERT_EQ(perturbed.num_tokens(), fs.num_tokens());
        const auto a = ApplyMask(fs, turn.kept), b = ApplyMask(perturbed, turn.kept);
        EXPECT_EQ(a, b);
        EXPECT_EQ(a.text, turn.selection.masked_text);
        ++checked;
        break;
      }
    }
  }
  EXPECT_GT(checked, 0);
}

TEST(Pipeline, BuildReportIsDeterministic) {
  const auto& t = Shared();
  const AnnotationDaProvider provider;
  const auto tmpl = NarrativeTemplate::Default();
  const Dialogue* d = TestDialogues().back();
  const auto trace = RunSelectorPredictor(*d, t.models, t.config, tmpl, provider);
  const auto& turn = trace.turns.back();
  ReportInputs in;
  in.dialogue_id = d->id;
  in.turn_number = static_cast<int>(trace.turns.size());
  in.features = &turn.features;
  in.token_probs = turn.token_probs;
  in.da_probs = turn.da_probs;
  in.dialogue = turn.dialogue;
  in.token_attributions = turn.token_attributions;
  in.da_attributions = turn.da_attributions;
  in.kept = &turn.kept;
  const auto a = BuildReport(in, t.models.semi_global, tmpl, t.config);
  const auto b = BuildReport(in, t.models.semi_global, tmpl, t.config);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, turn.report);
  EXPECT_EQ(ReportToJson(a), ReportToJson(b));
}

TEST(Pipeline, SaveLoadRoundTrip) {
  const auto& t = Shared();
  const auto dir = std::filesystem::temp_directory_path() / "turnlens_models_test";
  std::filesystem::remove_all(dir);
  t.models.Save(dir);
  const auto loaded = PipelineModels::Load(dir);
  EXPECT_EQ(loaded.token.ToJson(), t.models.token.ToJson());
  EXPECT_EQ(loaded.da.ToJson(), t.models.da.ToJson());
  EXPECT_EQ(loaded.dialogue.ToJson(), t.models.dialogue.ToJson());
  EXPECT_EQ(loaded.semi_global.ToJson(), t.models.semi_global.ToJson());
  const AnnotationDaProvider provider;
  const auto tmpl = NarrativeTemplate::Default();
  const Dialogue* d = TestDialogues().front();
  const auto a = RunSelectorPredictor(*d, t.models, t.config, tmpl, provider);
  const auto b = RunSelectorPredictor(*d, loaded, t.config, tmpl, provider);
  EXPECT_EQ(a.turns.back().dialogue.probs, b.turns.back().dialogue.probs);
  std::filesystem::remove_all(dir);
  EXPECT_THROW(PipelineModels::Load(dir), Error);
}

TEST(Pipeline, TrainingIsDeterministic) {
  const auto& t = Shared();
  const TrigramEmbeddingProvider provider({.dimension = t.config.embedding_dimension});
  const auto again = TrainPipeline(t.corpus, t.split, t.config, provider, Lexicon::Default());
  EXPECT_EQ(again.dialogue.ToJson(), t.models.dialogue.ToJson());
  EXPECT_EQ(again.semi_global.ToJson(), t.models.semi_global.ToJson());
}

TEST(Pipeline, TeacherSamplesArePrefixes) {
  const auto& t = Shared();
  const auto train = SplitDialogues(t.corpus, t.split, SplitPart::kTrain);
  const std::vector<const Dialogue*> two(train.begin(), train.begin() + 2);
  const auto teacher = ComputeTeacher(two, t.models.token, t.models.da, t.config.attribution);
  const auto samples = DialogueSamplesFromTeacher(teacher, 3, 3);
  std::size_t expected = 0;
  for (const auto& d : teacher) expected += d.turns.size();
  ASSERT_EQ(samples.size(), expected);
  std::size_t i = 0;
  for (const auto& d : teacher) {
    for (std::size_t len = 1; len <= d.turns.size(); ++len, ++i) {
      EXPECT_EQ(samples[i].turns.size(), len);
      EXPECT_EQ(samples[i].label, d.label);
    }
  }
}

TEST(Pipeline, PrepareUserTurnMasksValues) {
  Turn turn;
  turn.speaker = Speaker::kUser;
  turn.text = "a table in the centre for 4";
  turn.das = {{"inform", "restaurant", "area", "centre"}, {"inform", "restaurant", "people", "4"}};
  EXPECT_EQ(PrepareUserTurn(turn).text, "a table in the <area> for <people>");
}

TEST(Pipeline, KeywordProvider) {
  const auto provider = KeywordDaProvider::FromJson(nlohmann::json::parse(R"({"rules": [
    {"keyword": "taxi", "intent": "inform", "domain": "taxi", "slot": "none"},
    {"keyword": "cab", "intent": "inform", "domain": "taxi", "slot": "none"},
    {"keyword": "hotel", "intent": "inform", "domain": "hotel", "slot": "none"}]})"));
  Turn turn;
  turn.speaker = Speaker::kUser;
  turn.text = "I need a Taxi , a cab really";
  const auto das = provider.Extract(turn);
  ASSERT_EQ(das.size(), 1u);
  EXPECT_EQ(DaKey(das[0]), "inform-taxi-none");
  EXPECT_THROW(KeywordDaProvider::FromJson(nlohmann::json::parse(R"({"rules": [{"keyword": ""}]})")),
               SchemaError);
  PipelineConfig config;
  config.da_provider = "keyword";
  EXPECT_THROW(DaProviderFor(config), SchemaError);
}

TEST(Pipeline, TimeBreakdown) {
  const auto& t = Shared();
  const AnnotationDaProvider provider;
  const auto tmpl = NarrativeTemplate::Default();
  const auto pool = TestDialogues();
  const auto b = TimeBreakdown(pool, t.models, t.config, tmpl, provider, 10);
  EXPECT_EQ(b.utterances, 10);
  EXPECT_DOUBLE_EQ(b.explanation, b.mean.attribution + b.mean.report);
  EXPECT_GE(b.framework, b.explanation);
  EXPECT_THROW(TimeBreakdown(pool, t.models, t.config, tmpl, provider, 100000), InvalidArgument);
}

}  // namespace
}  // namespace turnlens
