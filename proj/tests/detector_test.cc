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

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "turnlens/classifier.h"
#include "turnlens/detector.h"
#include "turnlens/errors.h"
#include "turnlens/metrics.h"

namespace turnlens {
namespace {

// AI texts contain "synthetic"; human texts never do.
std::vector<TurnSample> Separable(int n, std::uint64_t seed) {
  static const std::vector<std::string> words = {"hotel", "room", "taxi", "north", "cheap",
                                                 "train", "ticket", "food", "please", "now"};
  std::mt19937_64 rng(seed);
  std::vector<TurnSample> out;
  for (int i = 0; i < n; ++i) {
    TurnSample s;
    s.label = i % 2 ? Authorship::kAI : Authorship::kHuman;
    for (int w = 0; w < 4; ++w) s.text += words[rng() % words.size()] + " ";
    if (s.label == Authorship::kAI) s.text += "synthetic";
    s.da_keys = {s.label == Authorship::kAI ? "inform-hotel-area" : "request-hotel-price"};
    out.push_back(s);
  }
  return out;
}

TurnDetector TrainToy(Dimension d, TurnTrainingReport* report = nullptr) {
  return TurnDetector::Train(Separable(400, 1), Separable(100, 2), d, DefaultTurnDetectorConfig(d),
                             report);
}

TEST(TurnDetector, SeparableToySet) {
  TurnTrainingReport report;
  TrainToy(Dimension::kTokens, &report);
  EXPECT_DOUBLE_EQ(report.val_macro_f1, 1.0);
  EXPECT_TRUE(std::isfinite(report.final_loss));
}

TEST(TurnDetector, OneClassRejected) {
  auto train = Separable(20, 1);
  for (auto& s : train) s.label = Authorship::kAI;
  EXPECT_THROW(TurnDetector::Train(train, {}, Dimension::kTokens,
                                   DefaultTurnDetectorConfig(Dimension::kTokens)),
               InvalidArgument);
}

TEST(TurnDetector, SameSeedSameWeights) {
  const auto a = TrainToy(Dimension::kTokens);
  const auto b = TrainToy(Dimension::kTokens);
  EXPECT_EQ(a.ToJson().dump(), b.ToJson().dump());
}

TEST(TurnDetector, JsonRoundTrip) {
  const auto a = TrainToy(Dimension::kDas);
  const auto b = TurnDetector::FromJson(a.ToJson());
  const FeatureSet fs(0, "x", {{"inform", "hotel", "area", std::nullopt}});
  EXPECT_EQ(a.Predict(fs), b.Predict(fs));
}

TEST(TurnDetector, EmptyInputIsBiasPoint) {
  const auto det = TrainToy(Dimension::kTokens);
  const FeatureSet empty(0, "", {});
  const ProbPair p = det.Predict(empty);
  EXPECT_NEAR(p.ai + p.human, 1.0, 1e-9);
  EXPECT_EQ(p, det.PredictVector(SparseVector{det.terms().dimension(), {}}));
}

TEST(TurnDetector, MaskedDiffersFromFull) {
  const auto det = TrainToy(Dimension::kTokens);
  const FeatureSet fs(0, "hotel synthetic", {});
  const std::vector<char> none(2, 0), all(2, 1);
  EXPECT_NE(det.Vectorize(fs, none), det.Vectorize(fs, all));
  EXPECT_NE(det.Predict(fs.WithKept({})).ai, det.Predict(fs).ai);
}

TEST(TurnDetector, DimensionMismatch) {
  const auto det = TrainToy(Dimension::kTokens);
  EXPECT_THROW(det.PredictVector(SparseVector{det.terms().dimension() + 1, {}}), InvalidArgument);
}

TEST(TurnDetector, ProbabilitiesSumToOne) {
  const auto det = TrainToy(Dimension::kTokens);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int i = 0; i < 100; ++i) {
    SparseVector x{det.terms().dimension(), {}};
    for (int c = 0; c < x.dimension; ++c) {
      if (rng() % 3 == 0) x.entries.push_back({c, u(rng)});
    }
    const ProbPair p = det.PredictVector(x);
    EXPECT_NEAR(p.ai + p.human, 1.0, 1e-9);
    EXPECT_GE(p.ai, 0.0);
    EXPECT_LE(p.ai, 1.0);
  }
}

TEST(NativeModel, GradientMatchesFiniteDifferences) {
  std::vector<LabeledVector> samples;
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g;
  const int dim = 12;
  for (int i = 0; i < 60; ++i) {
    std::vector<double> x(dim);
    for (auto& v : x) v = g(rng);
    samples.push_back({SparseVector::FromDense(x), x[0] + x[1] > 0 ? Authorship::kAI
                                                                    : Authorship::kHuman});
  }
  NativeModelConfig config;
  config.hidden_sizes = {16, 8};
  config.epochs = 50;
  const NativeModel model = NativeModel::Train(samples, dim, config);
  const double h = 1e-5;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x(dim);
    for (auto& v : x) v = g(rng);
    const auto grad = model.Gradient(SparseVector::FromDense(x));
    for (int d = 0; d < dim; ++d) {
      auto up = x, down = x;
      up[d] += h;
      down[d] -= h;
      const double fd = (model.Predict(SparseVector::FromDense(up)).ai -
                         model.Predict(SparseVector::FromDense(down)).ai) / (2 * h);
      const double scale = std::max({std::abs(fd), std::abs(grad[d]), 1e-6});
      EXPECT_LT(std::abs(fd - grad[d]) / scale, 1e-4) << "dim " << d;
    }
  }
}

TEST(Fuse, Algebra) {
  const std::vector<double> x = {0.5, -1.0, 2.0}, y = {1.5, -2.0, 0.0};
  EXPECT_EQ(Fuse(Fusion::kAverage, x, x), x);
  const auto m = Fuse(Fusion::kMax, x, y);
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_GE(m[i], x[i]);
    EXPECT_GE(m[i], y[i]);
  }
  const auto c = Fuse(Fusion::kConcatenate, x, std::vector<double>{7.0});
  EXPECT_EQ(c, (std::vector<double>{0.5, -1.0, 2.0, 7.0}));
  EXPECT_THROW(Fuse(Fusion::kAverage, x, std::vector<double>{1.0}), InvalidArgument);
  EXPECT_THROW(Fuse(Fusion::kMax, x, std::vector<double>{1.0}), InvalidArgument);
}

TEST(ProbPair, TieGoesToAi) {
  EXPECT_EQ((ProbPair{0.5, 0.5}).Argmax(), Authorship::kAI);
}

std::vector<DialogueSample> ToyDialogues(int n, std::uint64_t seed) {
  std::vector<DialogueSample> out;
  for (const auto& s : Separable(n, seed)) {
    out.push_back({{{s.text, s.da_keys}}, s.label});
  }
  return out;
}

TEST(DialogueDetector, EmptyInputRejected) {
  const auto dd = DialogueDetector::Train(ToyDialogues(40, 3), {});
  EXPECT_THROW(dd.Detect({}), InvalidArgument);
  const std::vector<TurnSelection> blank = {{"", {}}};
  EXPECT_THROW(dd.Detect(blank), InvalidArgument);
}

TEST(DialogueDetector, ConcatenatesTurns) {
  const std::vector<TurnSelection> turns = {{"a <mask>", {"k1"}}, {"b", {"k2", "k3"}}};
  EXPECT_EQ(DialogueDetector::ConcatText(turns), "a <mask> b");
  EXPECT_EQ(DialogueDetector::ConcatDaKeys(turns), (std::vector<std::string>{"k1", "k2", "k3"}));
}

TEST(DialogueDetector, FusionModesTrainAndRoundTrip) {
  for (Fusion f : {Fusion::kAverage, Fusion::kConcatenate, Fusion::kMax}) {
    DialogueDetectorConfig config;
    config.fusion = f;
    const auto dd = DialogueDetector::Train(ToyDialogues(80, 4), config);
    const auto back = DialogueDetector::FromJson(dd.ToJson());
    std::vector<int> pred, gold;
    for (const auto& s : ToyDialogues(40, 5)) {
      const auto p = dd.Detect(s.turns);
      EXPECT_EQ(back.Detect(s.turns).probs, p.probs);
      pred.push_back(static_cast<int>(p.label));
      gold.push_back(static_cast<int>(s.label));
    }
    EXPECT_GE(MacroF1(pred, gold), 0.95) << FusionName(f);
  }
}

TEST(DialogueDetector, NotWorseThanTurnLevel) {
  const auto det = TrainToy(Dimension::kTokens);
  const auto dd = DialogueDetector::Train(ToyDialogues(80, 1), {});
  std::vector<int> turn_pred, dlg_pred, gold;
  for (const auto& s : ToyDialogues(40, 7)) {
    dlg_pred.push_back(static_cast<int>(dd.Detect(s.turns).label));
    turn_pred.push_back(static_cast<int>(
        det.PredictSample({s.turns[0].masked_text, {}, s.label}).Argmax()));
    gold.push_back(static_cast<int>(s.label));
  }
  EXPECT_GE(MacroF1(dlg_pred, gold), MacroF1(turn_pred, gold) - 0.05);
}

}  // namespace
}  // namespace turnlens
