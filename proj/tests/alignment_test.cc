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

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "turnlens/alignment.h"
#include "turnlens/embedding.h"
#include "turnlens/errors.h"

namespace turnlens {
namespace {

double Cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return dot / std::sqrt(na * nb);
}

TEST(DaToText, WorkedExample) {
  EXPECT_EQ(DaToText({"inform", "travel", "or_city", "Gotham City"}, Lexicon::Default()),
            "inform or_city (Origin city) Gotham City");
}

TEST(DaToText, IntentDescription) {
  const std::string text = DaToText({"nobook", "hotel", "bookday", std::nullopt}, Lexicon::Default());
  EXPECT_NE(text.find("booking is failed"), std::string::npos);
}

TEST(DaToText, NoValue) {
  EXPECT_EQ(DaToText({"request", "hotel", "price", std::nullopt}, Lexicon::Default()),
            "request price");
}

TEST(Lexicon, JsonRoundTrip) {
  const Lexicon lex = Lexicon::Default();
  const Lexicon back = Lexicon::FromJson(lex.ToJson());
  EXPECT_EQ(back.intents, lex.intents);
  EXPECT_EQ(back.slots, lex.slots);
  EXPECT_THROW(Lexicon::FromJson(nlohmann::json{{"extra", {}}}), SchemaError);
}

TEST(Csls, SingleDaPerfectMatch) {
  const auto r = CslsMatch({{1.0}});
  EXPECT_DOUBLE_EQ(r.csls[0][0], 0.0);
  EXPECT_EQ(r.matched[0], std::vector<int>{0});
}

TEST(Csls, TwoDaWorkedExample) {
  const auto r = CslsMatch({{0.9, 0.3}}, {.k = 5, .theta = 0.9});
  // r(t) = 0.6, r(DA1) = 0.9, r(DA2) = 0.3.
  EXPECT_NEAR(r.csls[0][0], 0.3, 1e-12);
  EXPECT_NEAR(r.csls[0][1], -0.3, 1e-12);
  // threshold = -0.3 + 0.9 * 0.6 = 0.24
  EXPECT_EQ(r.matched[0], std::vector<int>{0});
}

TEST(Csls, IdenticalEverywhereMatchesAll) {
  const std::vector<std::vector<double>> s(4, std::vector<double>(3, 0.7));
  const auto r = CslsMatch(s);
  for (const auto& row : r.matched) EXPECT_EQ(row, (std::vector<int>{0, 1, 2}));
}

TEST(Csls, RowMaximumAlwaysMatched) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int tokens = 1 + static_cast<int>(rng() % 8), das = 1 + static_cast<int>(rng() % 4);
    std::vector<std::vector<double>> s(tokens, std::vector<double>(das));
    for (auto& row : s) {
      for (auto& v : row) v = u(rng);
    }
    const auto r = CslsMatch(s, {.k = 1 + static_cast<int>(rng() % 6), .theta = 0.9});
    for (int t = 0; t < tokens; ++t) {
      const int best = static_cast<int>(
          std::max_element(r.csls[t].begin(), r.csls[t].end()) - r.csls[t].begin());
      const auto& m = r.matched[t];
      EXPECT_TRUE(std::find(m.begin(), m.end(), best) != m.end());
      for (int d : m) {
        EXPECT_GE(d, 0);
        EXPECT_LT(d, das);
      }
    }
  }
}

TEST(Csls, UniformShiftKeepsRanking) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::vector<double>> s(5, std::vector<double>(3));
    for (auto& row : s) {
      for (auto& v : row) v = u(rng);
    }
    const double c = u(rng);
    auto shifted = s;
    for (auto& row : shifted) {
      for (auto& v : row) v += c;
    }
    const auto a = CslsMatch(s), b = CslsMatch(shifted);
    for (int t = 0; t < 5; ++t) {
      for (int d = 0; d < 3; ++d) EXPECT_NEAR(a.csls[t][d], b.csls[t][d], 1e-12);
      EXPECT_EQ(a.matched[t], b.matched[t]);
    }
  }
}

TEST(TrigramProvider, Basics) {
  const TrigramEmbeddingProvider p({.dimension = 4096});
  const auto hotel = p.Embed("hotel");
  EXPECT_NEAR(Cosine(hotel, p.Embed("hotel")), 1.0, 1e-12);
  // "#hotel#" and "#hotels#" share 4 trigrams out of 5 and 6.
  EXPECT_NEAR(Cosine(hotel, p.Embed("hotels")), 4.0 / std::sqrt(30.0), 1e-9);
  EXPECT_GT(Cosine(hotel, p.Embed("hotels")), Cosine(hotel, p.Embed("flight")));
  for (const auto& tv : p.TokenEmbeddings("a hotel, in the east!")) {
    double norm = 0;
    for (double v : tv.vector) norm += v * v;
    EXPECT_NEAR(norm, 1.0, 1e-9);
  }
  EXPECT_EQ(p.TokenEmbeddings("a hotel, in").size(), 4u);
  EXPECT_THROW(TrigramEmbeddingProvider({.dimension = 4}), InvalidArgument);
}

TEST(ProviderProtocol, DecodeValidates) {
  EXPECT_EQ(nlohmann::json::parse(EncodeProviderRequest("hi there")).at("text"), "hi there");
  const auto ok = DecodeProviderResponse("hi there", R"({"tokens":["hi","there"],"vectors":[[1,0],[0,1]]})", 2);
  ASSERT_EQ(ok.size(), 2u);
  EXPECT_EQ(ok[1].token.surface, "there");
  EXPECT_THROW(DecodeProviderResponse("hi there", R"({"tokens":["hi"],"vectors":[[1,0]]})", 2), Error);
  EXPECT_THROW(DecodeProviderResponse("hi", R"({"tokens":["hi"],"vectors":[[1,0,0]]})", 2), Error);
  EXPECT_THROW(DecodeProviderResponse("hi", "nope", 2), Error);
}

TEST(MatchTokensToDas, Preconditions) {
  const TrigramEmbeddingProvider p;
  const std::vector<DialogueAct> das = {{"inform", "hotel", "area", "north"}};
  EXPECT_THROW(MatchTokensToDas("", das, p, Lexicon::Default()), InvalidArgument);
  EXPECT_THROW(MatchTokensToDas("hello", {}, p, Lexicon::Default()), InvalidArgument);
}

TEST(MatchTokensToDas, SingleDaMatchesEveryToken) {
  const TrigramEmbeddingProvider p;
  const std::vector<DialogueAct> das = {{"inform", "hotel", "area", "north"}};
  const auto r = MatchTokensToDas("a hotel in the north", das, p, Lexicon::Default());
  ASSERT_EQ(r.tokens.size(), 5u);
  for (const auto& m : r.matched) EXPECT_EQ(m, std::vector<int>{0});
}

MatchResult Manual(std::string_view text, std::vector<std::vector<int>> matched) {
  MatchResult m;
  m.tokens = Tokenize(text);
  m.matched = std::move(matched);
  return m;
}

std::set<std::string> Keys(const std::vector<Phrase>& phrases) {
  std::set<std::string> out;
  for (const auto& p : phrases) out.insert(p.key);
  return out;
}

TEST(ExtractPhrases, RunEnumeration) {
  const std::vector<DialogueAct> das = {{"inform", "general", "mood", std::nullopt}};
  const auto m = Manual("looking forward", {{0}, {0}});
  const auto p = ExtractPhrases("looking forward", m, das, 2);
  EXPECT_EQ(Keys(p[0]), (std::set<std::string>{"looking", "forward", "looking forward"}));
}

TEST(ExtractPhrases, ValueBecomesSlot) {
  const std::vector<DialogueAct> das = {{"inform", "travel", "str_date", "May 5"}};
  const auto m = Manual("leave on May 5", {{0}, {0}, {0}, {0}});
  const auto p = ExtractPhrases("leave on May 5", m, das, 4);
  const auto keys = Keys(p[0]);
  EXPECT_TRUE(keys.count("on <str_date>"));
  EXPECT_TRUE(keys.count("<str_date>"));
  EXPECT_FALSE(keys.count("may"));
}

TEST(ExtractPhrases, GapBreaksRuns) {
  const std::vector<DialogueAct> das = {{"inform", "hotel", "area", std::nullopt}};
  const auto m = Manual("a b c", {{0}, {}, {0}});
  EXPECT_EQ(Keys(ExtractPhrases("a b c", m, das, 3)[0]), (std::set<std::string>{"a", "c"}));
}

TEST(ExtractPhrases, CountFormula) {
  const std::vector<DialogueAct> das = {{"inform", "hotel", "area", std::nullopt}};
  for (int len = 1; len <= 7; ++len) {
    std::string text;
    for (int i = 0; i < len; ++i) text += "w" + std::to_string(i) + " ";
    const auto m = Manual(text, std::vector<std::vector<int>>(len, {0}));
    for (int max_n = 1; max_n <= 5; ++max_n) {
      int expected = 0;
      for (int n = 1; n <= std::min(max_n, len); ++n) expected += len - n + 1;
      EXPECT_EQ(static_cast<int>(ExtractPhrases(text, m, das, max_n)[0].size()), expected);
    }
  }
}

}  // namespace
}  // namespace turnlens
