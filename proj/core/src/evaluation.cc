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

#include "turnlens/evaluation.h"

#include <algorithm>
#include <random>
#include <set>

#include "turnlens/errors.h"
#include "turnlens/metrics.h"
#include "turnlens/text_util.h"

namespace turnlens {

using nlohmann::json;

json DetectionEval::ToJson() const {
  return {{"dialogue_macro_f1", dialogue_macro_f1},
          {"token_turn_macro_f1", token_turn_macro_f1},
          {"da_turn_macro_f1", da_turn_macro_f1},
          {"dialogues", dialogues},
          {"turns", turns}};
}

DetectionEval EvaluateDetection(std::span<const Dialogue* const> dialogues,
                                const PipelineModels& models, const PipelineConfig& config,
                                const NarrativeTemplate& tmpl, const DaProvider& provider) {
  if (dialogues.empty()) throw InvalidArgument("no dialogues to evaluate");
  std::vector<Authorship> d_pred, d_gold, tok_pred, da_pred, t_gold;
  for (const Dialogue* d : dialogues) {
    const OnlineTrace trace = RunSelectorPredictor(*d, models, config, tmpl, provider);
    d_pred.push_back(trace.turns.back().dialogue.label);
    d_gold.push_back(d->label);
    for (const auto& t : trace.turns) {
      tok_pred.push_back(t.token_probs.Argmax());
      da_pred.push_back(t.da_probs.Argmax());
      t_gold.push_back(d->label);
    }
  }
  DetectionEval e;
  e.dialogue_macro_f1 = MacroF1(d_pred, d_gold);
  e.token_turn_macro_f1 = MacroF1(tok_pred, t_gold);
  e.da_turn_macro_f1 = MacroF1(da_pred, t_gold);
  e.dialogues = static_cast<int>(d_gold.size());
  e.turns = static_cast<int>(t_gold.size());
  return e;
}

std::vector<AopcSample> AopcSamples(std::span<const Dialogue* const> dialogues) {
  std::vector<AopcSample> out;
  for (const Dialogue* d : dialogues) {
    for (const auto& t : PreparedUserTurns(*d)) {
      out.push_back({d->id + "#" + std::to_string(t.index), FeatureSet(t.index, t.text, t.das)});
    }
  }
  return out;
}

MaskedScorer TokenScorer(const TurnDetector& detector) {
  if (detector.dimension() != Dimension::kTokens) {
    throw InvalidArgument("AOPC masks tokens; a token detector is required");
  }
  return [&detector](const FeatureSet& fs, std::span<const char> kept) {
    return detector.PredictVector(detector.Vectorize(fs, kept));
  };
}

RankingFn SemiGlobalRanking(const AggregationIndex& index) {
  return [&index](const FeatureSet& fs, Authorship c) {
    return RankFeatures(OnlineSemiGlobal(fs.da_keys(), c, index));
  };
}

RankingFn GlobalRankingOf(const AggregationIndex& index) {
  return [&index](const FeatureSet&, Authorship c) { return GlobalRanking(index, c); };
}

std::vector<int> PhraseOccurrences(const FeatureSet& fs, std::string_view phrase) {
  std::vector<std::string> needle;
  for (const auto& t : Tokenize(phrase)) needle.push_back(ToLowerAscii(t.surface));
  std::vector<std::string> hay;
  for (const auto& t : fs.tokens()) hay.push_back(ToLowerAscii(t.surface));
  std::set<int> covered;
  if (!needle.empty() && needle.size() <= hay.size()) {
    for (std::size_t i = 0; i + needle.size() <= hay.size(); ++i) {
      if (std::equal(needle.begin(), needle.end(), hay.begin() + static_cast<std::ptrdiff_t>(i))) {
        for (std::size_t k = 0; k < needle.size(); ++k) covered.insert(static_cast<int>(i + k));
      }
    }
  }
  return {covered.begin(), covered.end()};
}

std::vector<double> AopcCurve::SampleAopc(int k) const {
  if (k < 1 || k > k_max) throw InvalidArgument("k outside 1..k_max");
  std::vector<double> out;
  for (const auto& d : drops) {
    double sum = 0.0;
    for (int j = 0; j < k; ++j) sum += d[static_cast<std::size_t>(j)];
    out.push_back(sum / k);
  }
  return out;
}

json AopcCurve::ToJson() const {
  json curve = json::array();
  for (int k = 1; k <= k_max; ++k) {
    curve.push_back({{"k", k}, {"aopc", aopc[static_cast<std::size_t>(k - 1)]}});
  }
  return {{"class", AuthorshipName(target)},
          {"samples", static_cast<int>(sample_ids.size())},
          {"k_max", k_max},
          {"curve", curve}};
}

AopcCurve ComputeAopc(const MaskedScorer& scorer, std::span<const AopcSample> samples,
                      const RankingFn& ranking, Authorship c, const AopcOptions& options) {
  if (options.k_max < 1) throw InvalidArgument("k_max must be positive");
  AopcCurve curve;
  curve.target = c;
  curve.k_max = options.k_max;
  for (const auto& s : samples) {
    const FeatureSet& fs = s.features;
    std::vector<char> kept(static_cast<std::size_t>(fs.num_tokens()), 1);
    const ProbPair original = scorer(fs, kept);
    if (original.Argmax() != c) continue;
    const double p0 = original.Of(c);

    std::vector<std::vector<int>> slots;
    for (const auto& [feature, score] : ranking(fs, c)) {
      if (static_cast<int>(slots.size()) == options.k_max) break;
      auto occ = PhraseOccurrences(fs, feature);
      if (occ.empty() && options.skip_absent) continue;
      slots.push_back(std::move(occ));
    }
    std::vector<double> drops;
    double last = 0.0;
    for (int j = 0; j < options.k_max; ++j) {
      if (j < static_cast<int>(slots.size()) && !slots[static_cast<std::size_t>(j)].empty()) {
        bool changed = false;
        for (int t : slots[static_cast<std::size_t>(j)]) {
          if (kept[static_cast<std::size_t>(t)]) {
            kept[static_cast<std::size_t>(t)] = 0;
            changed = true;
          }
        }
        if (changed) last = p0 - scorer(fs, kept).Of(c);
      }
      drops.push_back(last);
    }
    curve.sample_ids.push_back(s.id);
    curve.drops.push_back(std::move(drops));
  }
  if (curve.drops.empty()) {
    throw InvalidArgument("no sample is predicted as " + std::string(AuthorshipName(c)));
  }
  for (int k = 1; k <= options.k_max; ++k) {
    const auto per = curve.SampleAopc(k);
    double sum = 0.0;
    for (double v : per) sum += v;
    curve.aopc.push_back(sum / static_cast<double>(per.size()));
  }
  return curve;
}

json AopcComparison::ToJson() const {
  json tests_json = json::array();
  for (std::size_t i = 0; i < tests.size(); ++i) {
    json t = {{"k", static_cast<int>(i) + 1}};
    if (tests[i]) {
      t["w_plus"] = tests[i]->statistic;
      t["p_value"] = tests[i]->p_value;
      t["n"] = tests[i]->n;
      t["exact"] = tests[i]->exact;
    } else {
      t["p_value"] = nullptr;
    }
    tests_json.push_back(std::move(t));
  }
  return {{"semi_global", semi_global.ToJson()},
          {"global", global.ToJson()},
          {"wilcoxon", tests_json}};
}

AopcComparison CompareAggregations(const MaskedScorer& scorer, std::span<const AopcSample> samples,
                                   const AggregationIndex& semi_global,
                                   const AggregationIndex& global, Authorship c,
                                   const AopcOptions& options) {
  AopcComparison out;
  out.semi_global = ComputeAopc(scorer, samples, SemiGlobalRanking(semi_global), c, options);
  out.global = ComputeAopc(scorer, samples, GlobalRankingOf(global), c, options);
  for (int k = 1; k <= options.k_max; ++k) {
    const auto a = out.semi_global.SampleAopc(k);
    const auto b = out.global.SampleAopc(k);
    try {
      out.tests.push_back(WilcoxonSignedRankGreater(a, b));
    } catch (const InvalidArgument&) {
      out.tests.push_back(std::nullopt);
    }
  }
  return out;
}

json TimingBreakdown::ToJson() const {
  return {{"utterances", utterances},
          {"seconds_per_utterance",
           {{"da_provider", mean.da_provider},
            {"turn_detection", mean.turn_detection},
            {"attribution", mean.attribution},
            {"dialogue_detection", mean.dialogue_detection},
            {"report", mean.report},
            {"explanation", explanation},
            {"framework", framework}}}};
}

TimingBreakdown TimeBreakdown(std::span<const Dialogue* const> pool, const PipelineModels& models,
                              const PipelineConfig& config, const NarrativeTemplate& tmpl,
                              const DaProvider& provider, int n) {
  if (n < 1) throw InvalidArgument("timing needs at least one utterance");
  std::vector<const Dialogue*> order(pool.begin(), pool.end());
  std::mt19937_64 rng(config.seed);
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[static_cast<std::size_t>(rng() % i)]);
  }
  TimingBreakdown t;
  StepTimes sum;
  for (const Dialogue* d : order) {
    if (t.utterances == n) break;
    OnlineSession session(models, config, tmpl, provider, d->id);
    for (const auto& turn : UserSide(*d)) {
      if (t.utterances == n) break;
      const StepTimes& s = session.Push(turn).times;
      sum.da_provider += s.da_provider;
      sum.turn_detection += s.turn_detection;
      sum.attribution += s.attribution;
      sum.dialogue_detection += s.dialogue_detection;
      sum.report += s.report;
      ++t.utterances;
    }
  }
  if (t.utterances < n) {
    throw InvalidArgument("timing pool has only " + std::to_string(t.utterances) +
                          " user turns, " + std::to_string(n) + " requested");
  }
  const double inv = 1.0 / n;
  t.mean = {sum.da_provider * inv, sum.turn_detection * inv, sum.attribution * inv,
            sum.dialogue_detection * inv, sum.report * inv};
  t.explanation = t.mean.attribution + t.mean.report;
  t.framework = t.mean.da_provider + t.mean.turn_detection + t.mean.attribution +
                t.mean.dialogue_detection + t.mean.report;
  return t;
}

}  // namespace turnlens
