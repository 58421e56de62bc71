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

#include "turnlens/features.h"

#include <cctype>
#include <utility>

#include "turnlens/errors.h"
#include "turnlens/text_util.h"

namespace turnlens {

namespace {

// Decodes one UTF-8 code point; malformed bytes decode as themselves.
char32_t DecodeAt(std::string_view s, std::size_t pos, std::size_t* len) {
  const auto b0 = static_cast<unsigned char>(s[pos]);
  auto cont = [&](std::size_t k) -> int {
    if (pos + k >= s.size()) return -1;
    const auto b = static_cast<unsigned char>(s[pos + k]);
    return (b & 0xC0) == 0x80 ? (b & 0x3F) : -1;
  };
  if (b0 < 0x80) {
    *len = 1;
    return b0;
  }
  int need = (b0 & 0xE0) == 0xC0 ? 1 : (b0 & 0xF0) == 0xE0 ? 2 : (b0 & 0xF8) == 0xF0 ? 3 : 0;
  char32_t cp = need == 1 ? (b0 & 0x1F) : need == 2 ? (b0 & 0x0F) : (b0 & 0x07);
  for (int k = 1; k <= need; ++k) {
    const int c = cont(k);
    if (c < 0) {
      *len = 1;
      return b0;
    }
    cp = (cp << 6) | static_cast<char32_t>(c);
  }
  *len = need == 0 ? 1 : static_cast<std::size_t>(need + 1);
  return need == 0 ? b0 : cp;
}

enum class CharClass { kSpace, kWord, kApostrophe, kPunct };

CharClass Classify(char32_t cp) {
  if (cp < 0x80) {
    const auto c = static_cast<unsigned char>(cp);
    if (std::isspace(c)) return CharClass::kSpace;
    if (std::isalnum(c) || c == '_') return CharClass::kWord;
    if (c == '\'') return CharClass::kApostrophe;
    return CharClass::kPunct;
  }
  if (cp == 0x2019) return CharClass::kApostrophe;
  if (cp == 0x00A0 || (cp >= 0x2000 && cp <= 0x200B) || cp == 0x3000) {
    return CharClass::kSpace;
  }
  // General punctuation and Latin-1 punctuation/symbols.
  if ((cp >= 0x2010 && cp <= 0x206F) || (cp >= 0x00A1 && cp <= 0x00BF) ||
      cp == 0x00D7 || cp == 0x00F7) {
    return CharClass::kPunct;
  }
  return CharClass::kWord;
}

}  // namespace

std::vector<Token> Tokenize(std::string_view text) {
  std::vector<Token> tokens;
  std::size_t pos = 0;
  while (pos < text.size()) {
    if (std::size_t len = PlaceholderLengthAt(text, pos); len > 0) {
      tokens.push_back({std::string(text.substr(pos, len)), pos, pos + len});
      pos += len;
      continue;
    }
    std::size_t len = 0;
    const CharClass cls = Classify(DecodeAt(text, pos, &len));
    if (cls == CharClass::kSpace) {
      pos += len;
      continue;
    }
    if (cls != CharClass::kWord) {
      tokens.push_back({std::string(text.substr(pos, len)), pos, pos + len});
      pos += len;
      continue;
    }
    const std::size_t start = pos;
    pos += len;
    while (pos < text.size()) {
      std::size_t l = 0;
      const CharClass c = Classify(DecodeAt(text, pos, &l));
      if (c == CharClass::kWord) {
        pos += l;
        continue;
      }
      if (c == CharClass::kApostrophe && pos + l < text.size()) {
        std::size_t l2 = 0;
        if (Classify(DecodeAt(text, pos + l, &l2)) == CharClass::kWord) {
          pos += l + l2;
          continue;
        }
      }
      break;
    }
    tokens.push_back({std::string(text.substr(start, pos - start)), start, pos});
  }
  return tokens;
}

std::vector<std::string> Surfaces(std::span<const Token> tokens) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(t.surface);
  return out;
}

std::string DaKey(const DialogueAct& da) {
  return ToLowerAscii(da.intent) + "-" + ToLowerAscii(da.domain) + "-" +
         ToLowerAscii(da.slot);
}

FeatureSet::FeatureSet(int utterance_index, std::string text,
                       std::vector<DialogueAct> das)
    : utterance_index_(utterance_index),
      text_(std::move(text)),
      tokens_(Tokenize(text_)),
      das_(std::move(das)) {
  da_keys_.reserve(das_.size());
  for (const auto& da : das_) da_keys_.push_back(DaKey(da));
  kept_.assign(static_cast<std::size_t>(size()), true);
}

FeatureKind FeatureSet::KindOf(int id) const {
  if (id < 0 || id >= size()) {
    throw InvalidArgument("unknown feature id " + std::to_string(id));
  }
  return id < num_tokens() ? FeatureKind::kToken : FeatureKind::kDialogueAct;
}

int FeatureSet::LocalIndex(int id) const {
  return KindOf(id) == FeatureKind::kToken ? id : id - num_tokens();
}

const std::string& FeatureSet::Key(int id) const {
  return KindOf(id) == FeatureKind::kToken
             ? tokens_[static_cast<std::size_t>(id)].surface
             : da_keys_[static_cast<std::size_t>(id - num_tokens())];
}

FeatureSet FeatureSet::WithKept(const std::set<int>& keep) const {
  FeatureSet out = *this;
  out.kept_.assign(kept_.size(), false);
  for (int id : keep) {
    KindOf(id);
    out.kept_[static_cast<std::size_t>(id)] = true;
  }
  return out;
}

std::string RenderTokens(const FeatureSet& fs, std::span<const char> token_kept,
                         std::string_view mask_token) {
  const std::string& text = fs.text();
  std::string out;
  out.reserve(text.size() + 8);
  std::size_t cursor = 0;
  const auto& tokens = fs.tokens();
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    out.append(text, cursor, tokens[i].start - cursor);
    if (token_kept[i]) {
      out.append(tokens[i].surface);
    } else {
      out.append(mask_token);
    }
    cursor = tokens[i].end;
  }
  out.append(text, cursor, std::string::npos);
  return out;
}

std::vector<std::string> KeptDaKeys(const FeatureSet& fs,
                                    std::span<const char> da_kept) {
  std::vector<std::string> out;
  for (std::size_t j = 0; j < fs.da_keys().size(); ++j) {
    if (da_kept[j]) out.push_back(fs.da_keys()[j]);
  }
  return out;
}

MaskedFeatures ApplyMask(const FeatureSet& fs, const std::set<int>& keep,
                         std::string_view mask_token) {
  std::vector<char> token_kept(static_cast<std::size_t>(fs.num_tokens()), 0);
  std::vector<char> da_kept(static_cast<std::size_t>(fs.num_das()), 0);
  for (int id : keep) {
    if (fs.KindOf(id) == FeatureKind::kToken) {
      token_kept[static_cast<std::size_t>(id)] = 1;
    } else {
      da_kept[static_cast<std::size_t>(fs.LocalIndex(id))] = 1;
    }
  }
  return {RenderTokens(fs, token_kept, mask_token), KeptDaKeys(fs, da_kept)};
}

}  // namespace turnlens
