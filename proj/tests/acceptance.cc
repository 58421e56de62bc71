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

// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "turnlens/aggregation.h"
#include "turnlens/alignment.h"
#include "turnlens/attribution.h"
#include "turnlens/config.h"
#include "turnlens/evaluation.h"
#include "turnlens/metrics.h"
#include "turnlens/pipeline.h"
#include "turnlens/synthetic.h"
#include "turnlens/wordcloud.h"

namespace turnlens {
namespace {

using Clock = std::chrono::steady_clock;

double Since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string Fmt(const char* format, double a = 0, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, a, b, c, d);
  return buf;
}

// One full offline + online run on the generated corpus.
struct Run {
  PipelineConfig config;
  Corpus corpus;
  SplitAssignment split;
  std::vector<const Dialogue*> train, test;
  std::vector<TeacherDialogue> teacher;
  PipelineModels models;
  DetectionEval eval;
  double train_seconds = 0.0;
  double eval_seconds = 0.0;
  std::vector<std::string> artifacts;  // serialized JSON, for determinism
};

Run FullRun() {
  Run r;
  auto t0 = Clock::now();
  r.corpus = GenerateSyntheticCorpus({.dialogues = 400, .seed = r.config.seed});
  r.split = SplitByDialogue(r.corpus, r.config.split, r.config.seed);
  r.train = SplitDialogues(r.corpus, r.split, SplitPart::kTrain);
  r.test = SplitDialogues(r.corpus, r.split, SplitPart::kTest);
  const auto val = SplitDialogues(r.corpus, r.split, SplitPart::kVal);
  const auto train_samples = TurnSamples(r.train);
  const auto val_samples = TurnSamples(val);
  r.models.token = TurnDetector::Train(train_samples, val_samples, Dimension::kTokens,
                                       r.config.token_detector);
  r.models.da =
      TurnDetector::Train(train_samples, val_samples, Dimension::kDas, r.config.da_detector);
  r.teacher = ComputeTeacher(r.train, r.models.token, r.models.da, r.config.attribution);
  r.models.dialogue = DialogueDetector::Train(
      DialogueSamplesFromTeacher(r.teacher, r.config.k_tokens, r.config.k_das), r.config.dialogue);
  const TrigramEmbeddingProvider provider({.dimension = r.config.embedding_dimension});
  auto indices = BuildAggregation(AggregationInputsFromTeacher(r.teacher), provider,
                                  Lexicon::Default(), r.config.aggregation);
  r.models.semi_global = std::move(indices.semi_global);
  r.models.global = std::move(indices.global);
  r.train_seconds = Since(t0);

  t0 = Clock::now();
  const auto tmpl = NarrativeTemplate::Default();
  const AnnotationDaProvider da_provider;
  r.eval = EvaluateDetection(r.test, r.models, r.config, tmpl, da_provider);
  r.eval_seconds = Since(t0);

  r.artifacts.push_back(SplitToJson(r.split).dump());
  r.artifacts.push_back(r.models.token.ToJson().dump());
  r.artifacts.push_back(r.models.da.ToJson().dump());
  r.artifacts.push_back(r.models.dialogue.ToJson().dump());
  r.artifacts.push_back(r.models.semi_global.ToJson().dump());
  r.artifacts.push_back(r.models.global.ToJson().dump());
  r.artifacts.push_back(r.eval.ToJson().dump());
  for (std::size_t i = 0; i < std::min<std::size_t>(5, r.test.size()); ++i) {
    const auto trace = RunSelectorPredictor(*r.test[i], r.models, r.config, tmpl, da_provider);
    for (const auto& t : trace.turns) r.artifacts.push_back(ReportToJson(t.report).dump());
  }
  return r;
}

Outcome Criterion1(const Run& run) {
  // Same turn models and teacher attributions, selection budget 1 + 1.
  DialogueDetector small = DialogueDetector::Train(
      DialogueSamplesFromTeacher(run.teacher, 1, 1), run.config.dialogue);
  PipelineModels models = run.models;
  models.dialogue = std::move(small);
  PipelineConfig config = run.config;
  config.k_tokens = 1;
  config.k_das = 1;
  const auto tmpl = NarrativeTemplate::Default();
  const AnnotationDaProvider provider;
  const DetectionEval e11 = EvaluateDetection(run.test, models, config, tmpl, provider);
  const double f33 = run.eval.dialogue_macro_f1, f11 = e11.dialogue_macro_f1;
  const double seconds = run.train_seconds + run.eval_seconds;
  Outcome o;
  o.pass = f33 >= 0.95 && f11 >= 0.90 && f33 >= f11 && seconds <= 300.0;
  o.detail = Fmt("macro-F1 3+3 = %.6f (>= 0.95), 1+1 = %.6f (>= 0.90), %.0f test dialogues, %.1f s",
                 f33, f11, run.eval.dialogues, seconds);
  return o;
}

// Random utterances with at most eight token features.
std::vector<FeatureSet> SmallInstances(const Run& run, int count, std::uint64_t seed) {
  auto samples = AopcSamples(run.test);
  std::mt19937_64 rng(seed);
  std::vector<FeatureSet> out;
  while (static_cast<int>(out.size()) < count) {
    const auto& fs = samples[static_cast<std::size_t>(rng() % samples.size())].features;
    if (fs.num_tokens() < 3) continue;
    const int n = std::min(fs.num_tokens(), 8);
    const std::string text = fs.text().substr(0, fs.tokens()[static_cast<std::size_t>(n - 1)].end);
    out.emplace_back(fs.utterance_index(), text, std::vector<DialogueAct>{});
  }
  return out;
}

Outcome Criterion2(const Run& run) {
  const auto instances = SmallInstances(run, 30, run.config.seed);
  double fs_sum = 0, st_sum = 0, fs_min = 1, st_min = 1, residual_max = 0;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const DetectorGame game(run.models.token, instances[i]);
    const auto exact = ExactShapleyValues(game);
    const auto faith = FaithShapValues(game, 200, run.config.seed + i);
    const auto stii = StiiValues(game, 50, run.config.seed + i);
    const double rf = SpearmanCorrelation(faith.scores, exact.scores);
    const double rs = SpearmanCorrelation(stii.scores, exact.scores);
    fs_sum += rf;
    st_sum += rs;
    fs_min = std::min(fs_min, rf);
    st_min = std::min(st_min, rs);
    residual_max = std::max(residual_max, faith.residual);
  }
  const double n = static_cast<double>(instances.size());
  Outcome o;
  o.pass = fs_sum / n >= 0.9 && st_sum / n >= 0.9 && residual_max <= 0.02;
  o.detail = Fmt("mean Spearman vs exact: faithshap %.4f, stii %.4f (>= 0.9); ", fs_sum / n,
                 st_sum / n) +
             Fmt("min faithshap %.4f, min stii %.4f; max efficiency residual %.2e (<= 0.02)",
                 fs_min, st_min, residual_max);
  return o;
}

Outcome Criterion3(const Run& run) {
  const auto samples = AopcSamples(run.test);
  double worst = 0.0;
  for (std::size_t i = 0; i < std::min<std::size_t>(30, samples.size()); ++i) {
    const auto r = ExplainIntegratedGradients(run.models.token, samples[i].features, 100);
    worst = std::max(worst, r.residual);
  }
  const NativeModel& model = run.models.token.model();
  const int dim = model.input_dimension();
  std::mt19937_64 rng(run.config.seed);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  std::uniform_int_distribution<int> pick(0, dim - 1);
  double worst_rel = 0.0;
  const double h = 1e-5;
  for (int p = 0; p < 50; ++p) {
    std::vector<double> x(static_cast<std::size_t>(dim), 0.0);
    for (int k = 0; k < 12; ++k) x[static_cast<std::size_t>(pick(rng))] = u(rng);
    const auto grad = model.Gradient(SparseVector::FromDense(x));
    for (int k = 0; k < 5; ++k) {
      const auto j = static_cast<std::size_t>(pick(rng));
      auto xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      const double fd = (model.Predict(SparseVector::FromDense(xp)).ai -
                         model.Predict(SparseVector::FromDense(xm)).ai) / (2 * h);
      const double rel = std::abs(fd - grad[j]) / std::max(1e-6, std::max(std::abs(fd), std::abs(grad[j])));
      worst_rel = std::max(worst_rel, rel);
    }
  }
  Outcome o;
  o.pass = worst <= 1e-3 && worst_rel <= 1e-4;
  o.detail = Fmt("max IG logit residual %.2e (<= 1e-3) over 30 utterances; max gradient rel. error %.2e (<= 1e-4)",
                 worst, worst_rel);
  return o;
}

Outcome Criterion4() {
  const auto two = CslsMatch({{0.9, 0.3}});
  const bool example = std::abs(two.csls[0][0] - 0.3) < 1e-12 &&
                       std::abs(two.csls[0][1] + 0.3) < 1e-12 && two.matched[0] == std::vector<int>{0};
  const auto single = CslsMatch({{1.0}});
  const bool degenerate = std::abs(single.csls[0][0]) < 1e-12 && single.matched[0] == std::vector<int>{0};
  std::mt19937_64 rng(kDefaultSeed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  bool max_matched = true;
  for (int trial = 0; trial < 200; ++trial) {
    const int t = 1 + static_cast<int>(rng() % 7), d = 1 + static_cast<int>(rng() % 5);
    std::vector<std::vector<double>> sim(static_cast<std::size_t>(t), std::vector<double>(static_cast<std::size_t>(d)));
    for (auto& row : sim) {
      for (auto& v : row) v = u(rng);
    }
    const auto m = CslsMatch(sim);
    for (int i = 0; i < t; ++i) {
      const auto& row = m.csls[static_cast<std::size_t>(i)];
      const int best = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
      const auto& matched = m.matched[static_cast<std::size_t>(i)];
      if (std::find(matched.begin(), matched.end(), best) == matched.end()) max_matched = false;
    }
  }
  Outcome o;
  o.pass = example && degenerate && max_matched;
  o.detail = std::string("two-DA example ") + (example ? "ok" : "WRONG") + ", single-DA " +
             (degenerate ? "ok" : "WRONG") + ", row maximum matched in 200 random matrices " +
             (max_matched ? "ok" : "WRONG");
  return o;
}

Outcome Criterion5(const Run& run) {
  // Partition identity on the observations of a single DA type.
  const TrigramEmbeddingProvider provider({.dimension = run.config.embedding_dimension});
  const auto inputs = AggregationInputsFromTeacher(run.teacher);
  const UtteranceRecord* base = inputs.records.data();
  TokenAttributionFn attribute = [&](const UtteranceRecord& r) {
    return inputs.token_scores.at(static_cast<std::size_t>(&r - base));
  };
  const auto groups = CollectObservations(inputs.records, attribute, provider, Lexicon::Default(),
                                          run.config.aggregation);
  GroupedObservations one;
  one.insert(*groups.begin());
  const auto per_da = BuildIndex(one, run.config.aggregation);
  const auto global = BuildGlobalIndex(one, run.config.aggregation);
  bool partition = true;
  for (Authorship c : {Authorship::kAI, Authorship::kHuman}) {
    partition = partition && *per_da.Find(groups.begin()->first, c) == *global.Find(kGlobalGroup, c);
  }

  // Linearity of the online lookup over DA multisets.
  std::vector<std::string> keys;
  for (const auto& [k, v] : run.models.semi_global.groups) keys.push_back(k);
  std::mt19937_64 rng(run.config.seed);
  bool linear = true;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::string> d1, d2;
    for (int i = 0; i < 3; ++i) d1.push_back(keys[rng() % keys.size()]);
    for (int i = 0; i < 2; ++i) d2.push_back(keys[rng() % keys.size()]);
    auto both = d1;
    both.insert(both.end(), d2.begin(), d2.end());
    const auto s = OnlineSemiGlobal(both, Authorship::kAI, run.models.semi_global);
    auto sum = OnlineSemiGlobal(d1, Authorship::kAI, run.models.semi_global);
    for (const auto& [f, v] : OnlineSemiGlobal(d2, Authorship::kAI, run.models.semi_global)) sum[f] += v;
    for (const auto& [f, v] : sum) {
      auto it = s.find(f);
      if (it == s.end() || std::abs(it->second - v) > 1e-12) linear = false;
    }
    if (s.size() != sum.size()) linear = false;
  }

  // AOPC: semi-global vs global on the test split.
  auto t0 = Clock::now();
  const auto samples = AopcSamples(run.test);
  const auto scorer = TokenScorer(run.models.token);
  const AopcOptions options{run.config.aopc_k_max, run.config.aopc_skip_absent};
  std::string detail;
  bool aopc_ok = true;
  for (Authorship c : {Authorship::kAI, Authorship::kHuman}) {
    const auto cmp = CompareAggregations(scorer, samples, run.models.semi_global, run.models.global,
                                         c, options);
    int wins = 0, significant = 0;
    double worst_p = 0.0;
    for (int k = 1; k <= options.k_max; ++k) {
      const auto ki = static_cast<std::size_t>(k - 1);
      if (cmp.semi_global.aopc[ki] > cmp.global.aopc[ki]) ++wins;
      const double p = cmp.tests[ki] ? cmp.tests[ki]->p_value : 1.0;
      if (p < 0.05) ++significant;
      worst_p = std::max(worst_p, p);
    }
    const int n = static_cast<int>(cmp.semi_global.drops.size());
    const bool ok = wins == options.k_max && significant == options.k_max && n >= 50;
    aopc_ok = aopc_ok && ok;
    detail += std::string(AuthorshipName(c)) + ": " +
              Fmt("%.0f paired samples, semi>global at %.0f/%.0f k, p<0.05 at %.0f k", n, wins,
                  options.k_max, significant) +
              Fmt(" (max p %.2e, AOPC_20 %.4f vs %.4f); ", worst_p,
                  cmp.semi_global.aopc.back(), cmp.global.aopc.back());
  }
  const double seconds = Since(t0);
  Outcome o;
  o.pass = partition && linear && aopc_ok && seconds <= 600.0;
  o.detail = std::string("partition identity ") + (partition ? "ok" : "WRONG") + ", linearity " +
             (linear ? "ok" : "WRONG") + "; " + detail + Fmt("%.1f s", seconds);
  return o;
}

Outcome Criterion6() {
  const auto kept = FilterDuplicatePhrases(
      {{"looking forward to it!", 1.0, 1}, {"looking forward", 1.0, 1}, {"forward", 1.0, 1}});
  std::vector<std::string> names;
  for (const auto& p : kept) names.push_back(p.phrase);
  const bool dedup = names == std::vector<std::string>{"looking forward to it!", "forward"};
  const auto merged =
      MergeOverlappingPhrases({{"I'm looking forward to", 1.0, 1}, {"looking forward to it!", 1.0, 1}});
  const bool merge = merged.size() == 1 && merged[0].phrase == "I'm looking forward to it!";
  Outcome o;
  o.pass = dedup && merge;
  o.detail = std::string("filter retains {\"looking forward to it!\", \"forward\"}: ") +
             (dedup ? "ok" : "WRONG") + "; merge gives \"" +
             (merged.empty() ? std::string() : merged[0].phrase) + "\"";
  return o;
}

Outcome Criterion7() {
  std::mt19937_64 rng(kDefaultSeed);
  auto random_corpus = [&](Authorship label) {
    ClassCorpus c{label, {}};
    const int features = 1 + static_cast<int>(rng() % 15);
    for (int i = 0; i < features; ++i) c.counts["f" + std::to_string(rng() % 20)] += 1 + static_cast<int>(rng() % 9);
    return c;
  };
  double identical_max = 0.0, anti_max = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const ClassCorpus a = random_corpus(Authorship::kAI);
    const ClassCorpus b = random_corpus(Authorship::kHuman);
    for (const auto& [f, z] : LorDirichlet(a, a)) identical_max = std::max(identical_max, std::abs(z));
    const auto ab = LorDirichlet(a, b);
    const auto ba = LorDirichlet(b, a);
    for (const auto& [f, z] : ab) anti_max = std::max(anti_max, std::abs(z + ba.at(f)));
  }
  Outcome o;
  o.pass = identical_max == 0.0 && anti_max <= 1e-12;
  o.detail = Fmt("identical corpora max |z| = %.1e; max |z(A,B) + z(B,A)| = %.1e over 100 pairs (<= 1e-12)",
                 identical_max, anti_max);
  return o;
}

Outcome Criterion8(const Run& run) {
  const auto tmpl = NarrativeTemplate::Default();
  const AnnotationDaProvider provider;
  const auto t = TimeBreakdown(run.test, run.models, run.config, tmpl, provider, 100);
  Outcome o;
  o.pass = t.mean.report < 0.5 && t.explanation < 1.0;
  o.detail = Fmt("over %.0f utterances: report %.2e s (< 0.5), attribution %.2e s, explanation %.2e s (< 1.0)",
                 t.utterances, t.mean.report, t.mean.attribution, t.explanation);
  return o;
}

Outcome Criterion9(const Run& first) {
  const Run second = FullRun();
  bool same = first.artifacts.size() == second.artifacts.size();
  std::size_t bytes = 0;
  for (std::size_t i = 0; same && i < first.artifacts.size(); ++i) {
    same = first.artifacts[i] == second.artifacts[i];
    bytes += first.artifacts[i].size();
  }
  Outcome o;
  o.pass = same;
  o.detail = Fmt("%.0f JSON artifacts (%.0f bytes) byte-identical across two seeded runs: ",
                 first.artifacts.size(), bytes) + (same ? "yes" : "NO");
  return o;
}

int Report(int id, const char* name, const std::function<Outcome()>& fn) {
  Outcome o;
  try {
    o = fn();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  std::printf("%s [%d] %s: %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
  std::fflush(stdout);
  return o.pass ? 0 : 1;
}

}  // namespace
}  // namespace turnlens

int main() {
  using namespace turnlens;
  Run run;
  try {
    run = FullRun();
  } catch (const std::exception& e) {
    std::printf("FAIL [0] pipeline run: %s\n", e.what());
    return 1;
  }
  int failures = 0;
  failures += Report(1, "detection macro-F1 on the generated corpus", [&] { return Criterion1(run); });
  failures += Report(2, "attribution fidelity vs exact Shapley", [&] { return Criterion2(run); });
  failures += Report(3, "integrated gradients completeness and gradient check", [&] { return Criterion3(run); });
  failures += Report(4, "CSLS matching", [] { return Criterion4(); });
  failures += Report(5, "semi-global aggregation semantics and AOPC", [&] { return Criterion5(run); });
  failures += Report(6, "word-cloud rules", [] { return Criterion6(); });
  failures += Report(7, "LOR properties", [] { return Criterion7(); });
  failures += Report(8, "latency budget", [&] { return Criterion8(run); });
  failures += Report(9, "determinism", [&] { return Criterion9(run); });
  std::printf("%d of 9 criteria passed\n", 9 - failures);
  return failures == 0 ? 0 : 1;
}
