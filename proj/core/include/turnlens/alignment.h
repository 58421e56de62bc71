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

// Embedding-based matching of utterance tokens to dialogue acts with CSLS
// adjustment, and phrase extraction over matched spans.

#ifndef TURNLENS_ALIGNMENT_H_
#define TURNLENS_ALIGNMENT_H_

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "turnlens/corpus.h"
#include "turnlens/embedding.h"
#include "turnlens/features.h"

namespace turnlens {

// Natural-language descriptions for intents and slots.
struct Lexicon {
  std::map<std::string, std::string> intents;
  std::map<std::string, std::string> slots;

  static Lexicon Default();
  static Lexicon FromJson(const nlohmann::json& j);
  static Lexicon Load(const std::filesystem::path& path);
  nlohmann::json ToJson() const;
};

// "{intent or its description} {slot} ({slot description}) {value}"; the
// description and value parts are omitted when absent.
std::string DaToText(const DialogueAct& da, const Lexicon& lexicon);

struct MatchConfig {
  int k = 5;
  double theta = 0.9;
};

struct MatchResult {
  std::vector<Token> tokens;
  // [token][da]
  std::vector<std::vector<double>> similarity;
  std::vector<std::vector<double>> csls;
  // DA indices matched by each token, ascending.
  std::vector<std::vector<int>> matched;
};

// Applies the CSLS adjustment and per-token threshold to a precomputed
// token x DA similarity matrix. r(token) averages the token's top-k row
// entries; r(DA) the DA's top-k column entries (fewer available: all).
MatchResult CslsMatch(const std::vector<std::vector<double>>& similarity,
                      const MatchConfig& config = {});

// s(token, DA) = max cosine similarity between the token and any DA-text
// token. Throws InvalidArgument on empty utterance / DA list or a zero-norm
// vector.
MatchResult MatchTokensToDas(std::string_view utterance, std::span<const DialogueAct> das,
                             const EmbeddingProvider& provider, const Lexicon& lexicon,
                             const MatchConfig& config = {});

struct Phrase {
  std::string text;    // surface with values replaced by "<slot>"
  std::string key;     // lowercase, whitespace-collapsed text
  int first_token = 0;  // utterance token range covered, inclusive
  int last_token = 0;
  int length = 0;  // units (tokens or value placeholders)

  bool operator==(const Phrase&) const = default;
};

// For each DA, every n-gram (1 <= n <= max_n) inside maximal runs of
// consecutive tokens matched to it. Token sequences that exactly spell a DA
// value become one "<slot>" unit first.
std::vector<std::vector<Phrase>> ExtractPhrases(std::string_view utterance,
                                                const MatchResult& match,
                                                std::span<const DialogueAct> das, int max_n = 4);

}  // namespace turnlens

#endif  // TURNLENS_ALIGNMENT_H_
