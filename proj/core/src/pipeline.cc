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

#include "turnlens/pipeline.h"

#include <chrono>
#include <fstream>
#include <map>

#include "turnlens/errors.h"
#include "turnlens/text_util.h"
#include "turnlens/wordcloud.h"

namespace turnlens {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double Seconds(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double>(b - a).count();
}

std::vector<std::string> Keys(const std::vector<DialogueAct>& das) {
  std::vector<std::string> keys;
  for (const auto& da : das) keys.push_back(DaKey(da));
  return keys;
}

json ReadJson(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("missing artifact " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what(), 0);
  }
}

void WriteJson(const std::filesystem::path& path, const json& j, int indent) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(indent) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

std::map<int, double> ScoreMap(std::span<const Attribution> attributions) {
  std::map<int, double> m;
  for (const auto& a : attributions) m[a.feature_id] = a.score;
  return m;
}

RankedList Truncate(RankedList list, int n) {
  if (static_cast<int>(list.size()) > n) list.resize(static_cast<std::size_t>(std::max(n, 0)));
  return list;
}

}  // namespace

KeywordDaProvider KeywordDaProvider::FromJson(const json& j) {
  std::vector<Rule> rules;
  try {
    for (const auto& r : j.at("rules")) {
      Rule rule;
      rule.keyword = ToLowerAscii(r.at("keyword").get<std::string>());
      rule.act.intent = r.at("intent").get<std::string>();
      rule.act.domain = r.at("domain").get<std::string>();
      rule.act.slot = r.at("slot").get<std::string>();
      if (rule.keyword.empty() || rule.act.intent.empty() || rule.act.domain.empty() ||
          rule.act.slot.empty()) {
        throw SchemaError("rules", "empty rule field");
      }
      rules.push_back(std::move(rule));
    }
  } catch (const json::exception& e) {
    throw SchemaError("rules", e.what());
  }
  return KeywordDaProvider(std::move(rules));
}

std::vector<DialogueAct> KeywordDaProvider::Extract(const Turn& turn) const {
  std::set<std::string> words;
  for (const auto& t : Tokenize(turn.text)) words.insert(ToLowerAscii(t.surface));
  std::vector<DialogueAct> out;
  std::set<std::string> seen;
  for (const auto& r : rules_) {
    if (words.count(r.keyword) && seen.insert(DaKey(r.act)).second) out.push_back(r.act);
  }
  return out;
}

Turn PrepareUserTurn(const Turn& turn) {
  Turn t = turn;
  t.text = MaskValues(turn.text, turn.das);
  return t;
}

std::vector<Turn> PreparedUserTurns(const Dialogue& dialogue) {
  std::vector<Turn> out;
  for (const auto& t : UserSide(dialogue)) out.push_back(PrepareUserTurn(t));
  return out;
}

std::vector<TurnSample> TurnSamples(std::span<const Dialogue* const> dialogues) {
  std::vector<TurnSample> samples;
  for (const Dialogue* d : dialogues) {
    for (const auto& t : PreparedUserTurns(*d)) samples.push_back({t.text, Keys(t.das), d->label});
  }
  return samples;
}

std::vector<TeacherDialogue> ComputeTeacher(std::span<const Dialogue* const> dialogues,
                                            const TurnDetector& token_detector,
                                            const TurnDetector& da_detector,
                                            const AttributionConfig& attribution) {
  std::vector<TeacherDialogue> out;
  for (const Dialogue* d : dialogues) {
    TeacherDialogue td{d->id, d->label, {}};
    for (const auto& t : PreparedUserTurns(*d)) {
      TeacherTurn tt;
      tt.features = FeatureSet(t.index, t.text, t.das);
      tt.token_attributions = Explain(token_detector, tt.features, attribution).attributions;
      tt.da_attributions = Explain(da_detector, tt.features, attribution).attributions;
      td.turns.push_back(std::move(tt));
    }
    out.push_back(std::move(td));
  }
  return out;
}

TurnSelection SelectFeatures(const FeatureSet& fs, std::span<const Attribution> token_attributions,
                             std::span<const Attribution> da_attributions, int k_tokens, int k_das,
                             std::set<int>* kept) {
  std::vector<Attribution> all(token_attributions.begin(), token_attributions.end());
  all.insert(all.end(), da_attributions.begin(), da_attributions.end());
  const std::set<int> keep = SelectTop(fs, all, k_tokens, k_das);
  const MaskedFeatures masked = ApplyMask(fs, keep, std::string(kMaskToken));
  if (kept) *kept = keep;
  return {masked.text, masked.da_keys};
}

std::vector<DialogueSample> DialogueSamplesFromTeacher(std::span<const TeacherDialogue> teacher,
                                                       int k_tokens, int k_das) {
  std::vector<DialogueSample> samples;
  for (const auto& d : teacher) {
    std::vector<TurnSelection> selections;
    for (const auto& t : d.turns) {
      selections.push_back(
          SelectFeatures(t.features, t.token_attributions, t.da_attributions, k_tokens, k_das));
      samples.push_back({selections, d.label});
    }
  }
  return samples;
}

AggregationInputs AggregationInputsFromTeacher(std::span<const TeacherDialogue> teacher) {
  AggregationInputs in;
  for (const auto& d : teacher) {
    for (const auto& t : d.turns) {
      in.records.push_back({t.features.text(), t.features.das()});
      std::vector<double> scores(static_cast<std::size_t>(t.features.num_tokens()), 0.0);
      for (const auto& a : t.token_attributions) {
        if (t.features.KindOf(a.feature_id) == FeatureKind::kToken) {
          scores[static_cast<std::size_t>(t.features.LocalIndex(a.feature_id))] = a.score;
        }
      }
      in.token_scores.push_back(std::move(scores));
    }
  }
  return in;
}

AggregationPair BuildAggregation(const AggregationInputs& inputs, const EmbeddingProvider& provider,
                                 const Lexicon& lexicon, const AggregationConfig& config) {
  if (inputs.records.empty()) throw InvalidArgument("aggregation over an empty dataset");
  const UtteranceRecord* base = inputs.records.data();
  TokenAttributionFn attribute = [&](const UtteranceRecord& r) {
    return inputs.token_scores.at(static_cast<std::size_t>(&r - base));
  };
  const auto groups = CollectObservations(inputs.records, attribute, provider, lexicon, config);
  return {BuildIndex(groups, config), BuildGlobalIndex(groups, config)};
}

void PipelineModels::Save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  WriteJson(dir / "token_detector.json", token.ToJson(), -1);
  WriteJson(dir / "da_detector.json", da.ToJson(), -1);
  WriteJson(dir / "dialogue_detector.json", dialogue.ToJson(), -1);
  WriteJson(dir / "aggregation_index.json", semi_global.ToJson(), 2);
  WriteJson(dir / "global_index.json", global.ToJson(), 2);
}

PipelineModels PipelineModels::Load(const std::filesystem::path& dir) {
  PipelineModels m;
  m.token = TurnDetector::FromJson(ReadJson(dir / "token_detector.json"));
  m.da = TurnDetector::FromJson(ReadJson(dir / "da_detector.json"));
  m.dialogue = DialogueDetector::FromJson(ReadJson(dir / "dialogue_detector.json"));
  m.semi_global = AggregationIndex::FromJson(ReadJson(dir / "aggregation_index.json"));
  m.global = AggregationIndex::FromJson(ReadJson(dir / "global_index.json"));
  return m;
}

std::vector<const Dialogue*> SplitDialogues(const Corpus& corpus, const SplitAssignment& split,
                                            SplitPart part) {
  std::vector<const Dialogue*> out;
  for (const auto& d : corpus) {
    auto it = split.parts.find(d.id);
    if (it == split.parts.end()) throw SchemaError("split", "dialogue \"" + d.id + "\" is unassigned");
    if (it->second == part) out.push_back(&d);
  }
  return out;
}

PipelineModels TrainPipeline(const Corpus& corpus, const SplitAssignment& split,
                             const PipelineConfig& config, const EmbeddingProvider& provider,
                             const Lexicon& lexicon, TrainingSummary* summary) {
  const auto train = SplitDialogues(corpus, split, SplitPart::kTrain);
  const auto val = SplitDialogues(corpus, split, SplitPart::kVal);
  const auto train_samples = TurnSamples(train);
  const auto val_samples = TurnSamples(val);
  TrainingSummary local;
  PipelineModels m;
  m.token = TurnDetector::Train(train_samples, val_samples, Dimension::kTokens,
                                config.token_detector, &local.token);
  m.da = TurnDetector::Train(train_samples, val_samples, Dimension::kDas, config.da_detector,
                             &local.da);
  const auto teacher = ComputeTeacher(train, m.token, m.da, config.attribution);
  m.dialogue = DialogueDetector::Train(
      DialogueSamplesFromTeacher(teacher, config.k_tokens, config.k_das), config.dialogue,
      &local.dialogue);
  auto indices =
      BuildAggregation(AggregationInputsFromTeacher(teacher), provider, lexicon, config.aggregation);
  m.semi_global = std::move(indices.semi_global);
  m.global = std::move(indices.global);
  local.train_dialogues = static_cast<int>(train.size());
  local.val_dialogues = static_cast<int>(val.size());
  if (summary) *summary = local;
  return m;
}

ReportBundle BuildReport(const ReportInputs& in, const AggregationIndex& index,
                         const NarrativeTemplate& tmpl, const PipelineConfig& config) {
  const FeatureSet& fs = *in.features;
  const auto token_scores = ScoreMap(in.token_attributions);
  const auto da_scores = ScoreMap(in.da_attributions);
  auto score_of = [](const std::map<int, double>& m, int id) {
    auto it = m.find(id);
    return it == m.end() ? 0.0 : it->second;
  };

  ReportBundle b;
  b.dialogue_id = in.dialogue_id;
  b.turn_index = fs.utterance_index();
  b.text = fs.text();
  b.token_turn = PredictionView::Of(in.token_probs);
  b.da_turn = PredictionView::Of(in.da_probs);
  b.dialogue = {in.dialogue.probs, in.dialogue.label};
  for (int i = 0; i < fs.num_tokens(); ++i) {
    const Token& t = fs.tokens()[static_cast<std::size_t>(i)];
    const int id = fs.TokenId(i);
    b.tokens.push_back({t.surface, t.start, t.end, score_of(token_scores, id),
                        in.kept && in.kept->count(id) > 0});
  }
  for (int j = 0; j < fs.num_das(); ++j) {
    const int id = fs.DaId(j);
    b.das.push_back({fs.da_keys()[static_cast<std::size_t>(j)], score_of(da_scores, id),
                     in.kept && in.kept->count(id) > 0});
  }

  const Authorship target = b.token_turn.label;
  const Authorship counter = target == Authorship::kAI ? Authorship::kHuman : Authorship::kAI;
  b.semi_global.target = target;
  b.semi_global.target_features =
      Truncate(RankFeatures(OnlineSemiGlobal(fs.da_keys(), target, index)), config.report_features);
  b.semi_global.counter_features = Truncate(
      RankFeatures(OnlineSemiGlobal(fs.da_keys(), counter, index)), config.report_features);

  std::map<std::string, int> frequency;
  for (const auto& key : fs.da_keys()) {
    if (const auto* list = index.Find(key, target)) {
      for (const auto& f : *list) frequency[f.feature] += f.count;
    }
  }
  std::vector<RankedPhrase> phrases;
  for (const auto& [f, s] : b.semi_global.target_features) {
    phrases.push_back({f, s, std::max(1, frequency[f])});
  }
  b.semi_global.cloud = PrepareWordCloud(phrases, config.wordcloud_k_merge);

  NarrativeInput n;
  n.turn_number = in.turn_number;
  n.turn = b.token_turn;
  n.dialogue = b.dialogue;
  n.tokens = b.tokens;
  n.das = b.das;
  n.semi_global = b.semi_global.target_features;
  b.narrative = RenderNarrative(tmpl, n);
  b.Validate();
  return b;
}

OnlineSession::OnlineSession(const PipelineModels& models, const PipelineConfig& config,
                             const NarrativeTemplate& tmpl, const DaProvider& provider,
                             std::string dialogue_id)
    : models_(models), config_(config), template_(tmpl), provider_(provider) {
  trace_.dialogue_id = std::move(dialogue_id);
}

const TurnTrace& OnlineSession::Push(const Turn& user_turn) {
  if (user_turn.speaker != Speaker::kUser) throw InvalidArgument("only user turns are detected");
  TurnTrace t;
  t.turn_index = user_turn.index;

  auto c0 = Clock::now();
  Turn turn = user_turn;
  turn.das = provider_.Extract(user_turn);
  turn = PrepareUserTurn(turn);
  t.features = FeatureSet(turn.index, turn.text, turn.das);

  auto c1 = Clock::now();
  t.token_probs = models_.token.Predict(t.features);
  t.da_probs = models_.da.Predict(t.features);

  auto c2 = Clock::now();
  t.token_attributions = Explain(models_.token, t.features, config_.attribution).attributions;
  ++trace_.token_attribution_calls;
  t.da_attributions = Explain(models_.da, t.features, config_.attribution).attributions;
  ++trace_.da_attribution_calls;

  auto c3 = Clock::now();
  t.selection = SelectFeatures(t.features, t.token_attributions, t.da_attributions,
                               config_.k_tokens, config_.k_das, &t.kept);
  selections_.push_back(t.selection);
  t.dialogue = models_.dialogue.Detect(selections_);
  ++trace_.dialogue_predictions;

  auto c4 = Clock::now();
  ReportInputs in;
  in.dialogue_id = trace_.dialogue_id;
  in.turn_number = static_cast<int>(trace_.turns.size()) + 1;
  in.features = &t.features;
  in.token_probs = t.token_probs;
  in.da_probs = t.da_probs;
  in.dialogue = t.dialogue;
  in.token_attributions = t.token_attributions;
  in.da_attributions = t.da_attributions;
  in.kept = &t.kept;
  t.report = BuildReport(in, models_.semi_global, template_, config_);
  auto c5 = Clock::now();

  t.times = {Seconds(c0, c1), Seconds(c1, c2), Seconds(c2, c3), Seconds(c3, c4), Seconds(c4, c5)};
  trace_.turns.push_back(std::move(t));
  return trace_.turns.back();
}

OnlineTrace RunSelectorPredictor(const Dialogue& dialogue, const PipelineModels& models,
                                 const PipelineConfig& config, const NarrativeTemplate& tmpl,
                                 const DaProvider& provider) {
  OnlineSession session(models, config, tmpl, provider, dialogue.id);
  for (const auto& turn : UserSide(dialogue)) session.Push(turn);
  return session.trace();
}

NarrativeTemplate TemplateFor(const PipelineConfig& config) {
  return config.template_path.empty() ? NarrativeTemplate::Default()
                                      : NarrativeTemplate::Load(config.template_path);
}

Lexicon LexiconFor(const PipelineConfig& config) {
  return config.lexicon_path.empty() ? Lexicon::Default() : Lexicon::Load(config.lexicon_path);
}

std::unique_ptr<DaProvider> DaProviderFor(const PipelineConfig& config) {
  if (config.da_provider == "annotation") return std::make_unique<AnnotationDaProvider>();
  if (config.keyword_rules_path.empty()) {
    throw SchemaError("keyword_rules_path", "required by the keyword provider");
  }
  return std::make_unique<KeywordDaProvider>(
      KeywordDaProvider::FromJson(ReadJson(config.keyword_rules_path)));
}

}  // namespace turnlens
