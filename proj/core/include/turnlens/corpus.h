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

// Labeled dialogue corpora: loading from JSONL, value masking, splitting by
// dialogue id, and the user-side view used for detection.

#ifndef TURNLENS_CORPUS_H_
#define TURNLENS_CORPUS_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace turnlens {

enum class Speaker { kUser, kSystem };
enum class Authorship { kHuman = 0, kAI = 1 };
enum class SplitPart { kTrain, kVal, kTest };

std::string_view SpeakerName(Speaker speaker);
std::string_view AuthorshipName(Authorship label);
std::string_view SplitPartName(SplitPart part);
Authorship ParseAuthorship(std::string_view name);

struct DialogueAct {
  std::string intent;
  std::string domain;
  std::string slot;
  std::optional<std::string> value;

  bool operator==(const DialogueAct&) const = default;
};

struct Turn {
  int index = 0;
  Speaker speaker = Speaker::kUser;
  std::string text;
  std::vector<DialogueAct> das;

  bool operator==(const Turn&) const = default;
};

struct Dialogue {
  std::string id;
  std::string domain_tag;
  std::vector<Turn> turns;
  Authorship label = Authorship::kHuman;

  bool operator==(const Dialogue&) const = default;
};

// Immutable after construction. Dialogue ids are unique.
class Corpus {
 public:
  Corpus() = default;
  // Validates every dialogue; throws SchemaError / DuplicateIdError.
  explicit Corpus(std::vector<Dialogue> dialogues);

  std::size_t size() const { return dialogues_.size(); }
  bool empty() const { return dialogues_.empty(); }
  const std::vector<Dialogue>& dialogues() const { return dialogues_; }
  const Dialogue& at(std::size_t i) const { return dialogues_.at(i); }
  // Returns nullptr when the id is unknown.
  const Dialogue* Find(std::string_view id) const;

  auto begin() const { return dialogues_.begin(); }
  auto end() const { return dialogues_.end(); }

 private:
  std::vector<Dialogue> dialogues_;
  std::map<std::string, std::size_t, std::less<>> by_id_;
};

// Throws SchemaError naming the field on any invariant violation.
void ValidateDialogue(const Dialogue& dialogue);

// JSONL: one dialogue object per line; blank lines are skipped.
Corpus ParseCorpus(std::istream& in);
Corpus LoadCorpus(const std::filesystem::path& path);
void WriteCorpus(const Corpus& corpus, std::ostream& out);

nlohmann::json DialogueActToJson(const DialogueAct& da);
DialogueAct DialogueActFromJson(const nlohmann::json& j);
nlohmann::json TurnToJson(const Turn& turn);
Turn TurnFromJson(const nlohmann::json& j);
nlohmann::json DialogueToJson(const Dialogue& dialogue);
// Does not run ValidateDialogue.
Dialogue DialogueFromJson(const nlohmann::json& j);

struct SplitRatios {
  double train = 0.7;
  double val = 0.15;
  double test = 0.15;
};

struct SplitAssignment {
  std::map<std::string, SplitPart> parts;
  std::uint64_t seed = 0;

  std::vector<std::string> Ids(SplitPart part) const;
  std::size_t Count(SplitPart part) const;
};

// Sizes are floor(n * r_val) and floor(n * r_test); the remainder goes to
// train. Ids are sorted before the seeded shuffle so the result does not
// depend on corpus order.
SplitAssignment SplitByDialogue(const Corpus& corpus, const SplitRatios& ratios,
                                std::uint64_t seed);
nlohmann::json SplitToJson(const SplitAssignment& split);
SplitAssignment SplitFromJson(const nlohmann::json& j);

// Replaces every exact (case-sensitive) occurrence of a DA value with
// "<slot>". Longest value wins on overlap; existing placeholders are left
// untouched, which makes the operation idempotent.
std::string MaskValues(std::string_view text, std::span<const DialogueAct> das);

// The User turns of a dialogue, in order, with original indices.
std::vector<Turn> UserSide(const Dialogue& dialogue);

}  // namespace turnlens

#endif  // TURNLENS_CORPUS_H_
