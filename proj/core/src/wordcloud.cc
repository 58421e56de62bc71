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

#include "turnlens/wordcloud.h"

#include <algorithm>
#include <cmath>

#include "turnlens/errors.h"
#include "turnlens/features.h"
#include "turnlens/text_util.h"

namespace turnlens {

namespace {

struct Tokenized {
  std::vector<Token> tokens;
  std::vector<std::string> keys;  // lowercase surfaces
};

Tokenized Split(const std::string& phrase) {
  Tokenized t;
  t.tokens = Tokenize(phrase);
  for (const auto& tok : t.tokens) t.keys.push_back(ToLowerAscii(tok.surface));
  return t;
}

// True if needle occurs as a contiguous token run inside hay.
bool Contains(const std::vector<std::string>& hay, const std::vector<std::string>& needle) {
  if (needle.empty() || needle.size() > hay.size()) return false;
  return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
}

// Largest o with k <= o < min(|a|, |b|) such that the last o tokens of a
// equal the first o tokens of b; 0 if none.
int EndOverlap(const std::vector<std::string>& a, const std::vector<std::string>& b, int k) {
  const int limit = static_cast<int>(std::min(a.size(), b.size())) - 1;
  for (int o = limit; o >= k; --o) {
    if (std::equal(a.end() - o, a.end(), b.begin())) return o;
  }
  return 0;
}

}  // namespace

std::vector<RankedPhrase> FilterDuplicatePhrases(const std::vector<RankedPhrase>& phrases) {
  std::vector<Tokenized> split;
  for (const auto& p : phrases) split.push_back(Split(p.phrase));
  std::vector<RankedPhrase> kept;
  for (std::size_t i = 0; i < phrases.size(); ++i) {
    bool contained = false, contains = false;
    for (std::size_t j = 0; j < phrases.size(); ++j) {
      if (i == j || split[i].keys == split[j].keys) continue;
      if (Contains(split[j].keys, split[i].keys)) contained = true;
      if (Contains(split[i].keys, split[j].keys)) contains = true;
    }
    if (!contained || !contains) kept.push_back(phrases[i]);
  }
  return kept;
}

std::vector<RankedPhrase> MergeOverlappingPhrases(std::vector<RankedPhrase> phrases, int k_merge) {
  if (k_merge < 1) throw InvalidArgument("k_merge must be at least 1");
  for (;;) {
    std::vector<Tokenized> split;
    for (const auto& p : phrases) split.push_back(Split(p.phrase));
    bool merged = false;
    for (std::size_t i = 0; i < phrases.size() && !merged; ++i) {
      for (std::size_t j = 0; j < phrases.size() && !merged; ++j) {
        if (i == j) continue;
        const int o = EndOverlap(split[i].keys, split[j].keys, k_merge);
        if (o == 0) continue;
        const Token& tail = split[j].tokens[static_cast<std::size_t>(o) - 1];
        RankedPhrase m;
        m.phrase = phrases[i].phrase + phrases[j].phrase.substr(tail.end);
        m.score = std::max(phrases[i].score, phrases[j].score);
        m.frequency = std::max(phrases[i].frequency, phrases[j].frequency);
        const std::size_t lo = std::min(i, j), hi = std::max(i, j);
        phrases.erase(phrases.begin() + static_cast<std::ptrdiff_t>(hi));
        phrases[lo] = std::move(m);
        merged = true;
      }
    }
    if (!merged) break;
  }
  // Merging can produce exact duplicates; keep one.
  std::vector<RankedPhrase> unique;
  for (auto& p : phrases) {
    const std::string key = ToLowerAscii(p.phrase);
    auto it = std::find_if(unique.begin(), unique.end(),
                           [&](const RankedPhrase& u) { return ToLowerAscii(u.phrase) == key; });
    if (it == unique.end()) {
      unique.push_back(std::move(p));
    } else {
      it->score = std::max(it->score, p.score);
      it->frequency = std::max(it->frequency, p.frequency);
    }
  }
  return unique;
}

double CloudWeight(double score, int frequency, int token_count) {
  return score * std::log1p(static_cast<double>(frequency)) * (1.0 + 0.1 * token_count);
}

std::vector<CloudEntry> PrepareWordCloud(const std::vector<RankedPhrase>& phrases, int k_merge) {
  const auto merged = MergeOverlappingPhrases(FilterDuplicatePhrases(phrases), k_merge);
  std::vector<CloudEntry> out;
  for (const auto& p : merged) {
    const int n = static_cast<int>(Tokenize(p.phrase).size());
    out.push_back({p.phrase, p.score, p.frequency, n, CloudWeight(p.score, p.frequency, n)});
  }
  std::sort(out.begin(), out.end(), [](const CloudEntry& a, const CloudEntry& b) {
    if (a.weight != b.weight) return a.weight > b.weight;
    return a.phrase < b.phrase;
  });
  return out;
}

nlohmann::json CloudToJson(const std::vector<CloudEntry>& entries) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& e : entries) {
    j.push_back({{"phrase", e.phrase},
                 {"score", e.score},
                 {"frequency", e.frequency},
                 {"tokens", e.token_count},
                 {"weight", e.weight}});
  }
  return j;
}

std::vector<CloudEntry> CloudFromJson(const nlohmann::json& j) {
  std::vector<CloudEntry> out;
  for (const auto& e : j) {
    out.push_back({e.at("phrase").get<std::string>(), e.at("score").get<double>(),
                   e.at("frequency").get<int>(), e.at("tokens").get<int>(),
                   e.at("weight").get<double>()});
  }
  return out;
}

}  // namespace turnlens
