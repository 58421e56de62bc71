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

// Tokenization and the maskable per-utterance feature set shared by the
// detectors and the attribution estimators.

#ifndef TURNLENS_FEATURES_H_
#define TURNLENS_FEATURES_H_

#include <cstddef>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "turnlens/corpus.h"

namespace turnlens {

inline constexpr std::string_view kMaskToken = "<mask>";

struct Token {
  std::string surface;
  std::size_t start = 0;  // byte offsets into the source text, [start, end)
  std::size_t end = 0;

  bool operator==(const Token&) const = default;
};

// Word segments (letters, digits, '_', non-ASCII letters, with in-word
// apostrophes) plus standalone punctuation. "<name>" placeholders are single
// tokens.
std::vector<Token> Tokenize(std::string_view text);

std::vector<std::string> Surfaces(std::span<const Token> tokens);

// Canonical lowercase "intent-domain-slot"; the value is never part of it.
std::string DaKey(const DialogueAct& da);

enum class FeatureKind { kToken, kDialogueAct };

// Feature ids are positional: tokens occupy [0, num_tokens()), dialogue acts
// [num_tokens(), size()). Duplicate surfaces are therefore distinct features.
class FeatureSet {
 public:
  FeatureSet() = default;
  FeatureSet(int utterance_index, std::string text, std::vector<DialogueAct> das);

  int utterance_index() const { return utterance_index_; }
  const std::string& text() const { return text_; }
  const std::vector<Token>& tokens() const { return tokens_; }
  const std::vector<DialogueAct>& das() const { return das_; }
  const std::vector<std::string>& da_keys() const { return da_keys_; }

  int num_tokens() const { return static_cast<int>(tokens_.size()); }
  int num_das() const { return static_cast<int>(da_keys_.size()); }
  int size() const { return num_tokens() + num_das(); }

  int TokenId(int i) const { return i; }
  int DaId(int j) const { return num_tokens() + j; }
  FeatureKind KindOf(int id) const;
  // Position within its own kind (token index or DA index).
  int LocalIndex(int id) const;
  // Token surface or DA key.
  const std::string& Key(int id) const;

  // Kept/masked state; all features start kept.
  const std::vector<bool>& mask_state() const { return kept_; }
  FeatureSet WithKept(const std::set<int>& keep) const;

 private:
  int utterance_index_ = 0;
  std::string text_;
  std::vector<Token> tokens_;
  std::vector<DialogueAct> das_;
  std::vector<std::string> da_keys_;
  std::vector<bool> kept_;
};

struct MaskedFeatures {
  std::string text;
  std::vector<std::string> da_keys;

  bool operator==(const MaskedFeatures&) const = default;
};

// Kept tokens stay at their original positions, every other token becomes
// mask_token, and non-kept DA keys are dropped. Throws InvalidArgument on an
// unknown feature id.
MaskedFeatures ApplyMask(const FeatureSet& fs, const std::set<int>& keep,
                         std::string_view mask_token = kMaskToken);

// Fast path used inside perturbation loops: one flag per token / DA.
std::string RenderTokens(const FeatureSet& fs, std::span<const char> token_kept,
                         std::string_view mask_token = kMaskToken);
std::vector<std::string> KeptDaKeys(const FeatureSet& fs,
                                    std::span<const char> da_kept);

}  // namespace turnlens

#endif  // TURNLENS_FEATURES_H_
