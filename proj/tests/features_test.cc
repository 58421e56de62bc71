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
#include <set>
#include <string>

#include "turnlens/errors.h"
#include "turnlens/features.h"
#include "turnlens/term_weights.h"

namespace turnlens {
namespace {

TEST(Tokenize, Punctuation) {
  EXPECT_EQ(Surfaces(Tokenize("any options?")),
            (std::vector<std::string>{"any", "options", "?"}));
}

TEST(Tokenize, PlaceholderIsOneToken) {
  EXPECT_EQ(Surfaces(Tokenize("leaving from <or_city>")),
            (std::vector<std::string>{"leaving", "from", "<or_city>"}));
}

TEST(Tokenize, Empty) { EXPECT_TRUE(Tokenize("").empty()); }

TEST(Tokenize, Apostrophe) {
  EXPECT_EQ(Surfaces(Tokenize("I'm here!")), (std::vector<std::string>{"I'm", "here", "!"}));
}

TEST(Tokenize, SpansReproduceSurfaces) {
  std::mt19937_64 rng(3);
  const std::string alphabet = "ab c,.!?'<>_x9 \t";
  for (int trial = 0; trial < 200; ++trial) {
    std::string text;
    for (int i = 0; i < 30; ++i) text += alphabet[rng() % alphabet.size()];
    const auto tokens = Tokenize(text);
    std::size_t prev_end = 0;
    for (const auto& t : tokens) {
      ASSERT_GE(t.start, prev_end) << text;
      ASSERT_LT(t.start, t.end);
      ASSERT_LE(t.end, text.size());
      EXPECT_EQ(text.substr(t.start, t.end - t.start), t.surface);
      prev_end = t.end;
    }
  }
}

TEST(TermWeights, SmoothedIdf) {
  const auto m = TermWeightModel::FitTexts({"a b", "a"}, {.ngram_min = 1, .ngram_max = 1});
  const int a = m.Column("a"), b = m.Column("b");
  ASSERT_GE(a, 0);
  ASSERT_GE(b, 0);
  EXPECT_DOUBLE_EQ(m.idf()[a], 1.0);  // ln(3/3) + 1, the minimum
  EXPECT_DOUBLE_EQ(m.idf()[b], std::log(3.0 / 2.0) + 1.0);
  const auto dense = m.EmbedText("a b").ToDense();
  EXPECT_GT(dense[b], dense[a]);
  EXPECT_NEAR(dense[b] / dense[a], std::log(1.5) + 1.0, 1e-12);
}

TEST(TermWeights, EmptyAndOutOfVocabulary) {
  const auto m = TermWeightModel::FitTexts({"a b", "a"}, {});
  EXPECT_TRUE(m.EmbedText("").entries.empty());
  EXPECT_TRUE(m.EmbedText("zzz qqq").entries.empty());
  EXPECT_EQ(m.EmbedText("a").dimension, m.dimension());
  EXPECT_THROW(TermWeightModel::FitTexts({}, {}), InvalidArgument);
}

TEST(TermWeights, JsonRoundTrip) {
  const auto m = TermWeightModel::FitTexts({"any options ?", "gotta get there"}, {});
  const auto back = TermWeightModel::FromJson(m.ToJson());
  EXPECT_EQ(back.terms(), m.terms());
  EXPECT_EQ(back.idf(), m.idf());
  EXPECT_EQ(back.VocabHash(), m.VocabHash());
  EXPECT_EQ(back.EmbedText("any options"), m.EmbedText("any options"));
}

TEST(TermWeights, BigramsJoinWithSpace) {
  std::vector<std::string> seen;
  const std::vector<std::string> toks = {"a", "b", "c"};
  ForEachNgram(toks, {.ngram_min = 2, .ngram_max = 2},
               [&](const std::string& t, int, int) { seen.push_back(t); });
  EXPECT_EQ(seen, (std::vector<std::string>{"a b", "b c"}));
}

TEST(DaKey, Canonical) {
  EXPECT_EQ(DaKey({"inform", "hotel", "area", "west"}), "inform-hotel-area");
  EXPECT_EQ(DaKey({"Inform", "Hotel", "Area", std::nullopt}), "inform-hotel-area");
}

TEST(DaKey, ValueInvariant) {
  for (const char* v : {"west", "east", "", "Gotham City"}) {
    EXPECT_EQ(DaKey({"inform", "hotel", "area", v}), DaKey({"inform", "hotel", "area", "north"}));
  }
}

FeatureSet Options() {
  return FeatureSet(0, "any options ?", {{"request", "travel", "options", std::nullopt}});
}

TEST(ApplyMask, KeepAllIsIdentity) {
  const FeatureSet fs = Options();
  std::set<int> all;
  for (int i = 0; i < fs.size(); ++i) all.insert(i);
  const auto m = ApplyMask(fs, all);
  EXPECT_EQ(m.text, "any options ?");
  EXPECT_EQ(m.da_keys, fs.da_keys());
}

TEST(ApplyMask, KeepNothing) {
  const auto m = ApplyMask(Options(), {});
  EXPECT_EQ(m.text, "<mask> <mask> <mask>");
  EXPECT_TRUE(m.da_keys.empty());
}

TEST(ApplyMask, KeepOneToken) {
  const FeatureSet fs = Options();
  EXPECT_EQ(ApplyMask(fs, {fs.TokenId(1)}).text, "<mask> options <mask>");
}

TEST(ApplyMask, UnknownId) { EXPECT_THROW(ApplyMask(Options(), {99}), InvalidArgument); }

TEST(ApplyMask, SourceUnchangedAndMonotone) {
  const FeatureSet fs(0, "a b a c", {});
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    std::set<int> keep;
    for (int i = 0; i < fs.size(); ++i) {
      if (rng() % 2) keep.insert(i);
    }
    std::set<int> smaller = keep;
    if (!smaller.empty()) smaller.erase(smaller.begin());
    const auto big = Tokenize(ApplyMask(fs, keep).text);
    const auto small = Tokenize(ApplyMask(fs, smaller).text);
    ASSERT_EQ(big.size(), small.size());
    for (std::size_t i = 0; i < big.size(); ++i) {
      if (big[i].surface == kMaskToken) EXPECT_EQ(small[i].surface, kMaskToken);
    }
  }
  EXPECT_EQ(fs.text(), "a b a c");
  for (bool kept : fs.mask_state()) EXPECT_TRUE(kept);
}

TEST(FeatureSet, PositionalIds) {
  const FeatureSet fs(2, "a a", {{"inform", "hotel", "area", "west"}});
  EXPECT_EQ(fs.num_tokens(), 2);
  EXPECT_EQ(fs.num_das(), 1);
  EXPECT_EQ(fs.KindOf(fs.DaId(0)), FeatureKind::kDialogueAct);
  EXPECT_EQ(fs.Key(fs.DaId(0)), "inform-hotel-area");
  EXPECT_EQ(ApplyMask(fs, {1}).text, "<mask> a");
  const FeatureSet masked = fs.WithKept({0});
  EXPECT_EQ(masked.Key(1), "a");
  EXPECT_FALSE(masked.mask_state()[1]);
}

}  // namespace
}  // namespace turnlens
