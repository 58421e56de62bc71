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

#include "turnlens/corpus.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <utility>

#include "turnlens/errors.h"
#include "turnlens/text_util.h"

namespace turnlens {

using nlohmann::json;

std::string_view SpeakerName(Speaker speaker) {
  return speaker == Speaker::kUser ? "user" : "system";
}

std::string_view AuthorshipName(Authorship label) {
  return label == Authorship::kAI ? "ai" : "human";
}

std::string_view SplitPartName(SplitPart part) {
  switch (part) {
    case SplitPart::kTrain: return "train";
    case SplitPart::kVal: return "val";
    case SplitPart::kTest: return "test";
  }
  return "train";
}

Authorship ParseAuthorship(std::string_view name) {
  if (name == "ai") return Authorship::kAI;
  if (name == "human") return Authorship::kHuman;
  throw SchemaError("label", "expected \"human\" or \"ai\", got \"" +
                                 std::string(name) + "\"");
}

namespace {

SplitPart ParseSplitPart(std::string_view name) {
  if (name == "train") return SplitPart::kTrain;
  if (name == "val") return SplitPart::kVal;
  if (name == "test") return SplitPart::kTest;
  throw SchemaError("split", "unknown split part \"" + std::string(name) + "\"");
}

const json& Require(const json& j, const char* field, const std::string& path) {
  auto it = j.find(field);
  if (it == j.end()) throw SchemaError(path + field, "missing field");
  return *it;
}

std::string RequireString(const json& j, const char* field,
                          const std::string& path) {
  const json& v = Require(j, field, path);
  if (!v.is_string()) throw SchemaError(path + field, "expected a string");
  return v.get<std::string>();
}

}  // namespace

json DialogueActToJson(const DialogueAct& da) {
  json j = {{"intent", da.intent}, {"domain", da.domain}, {"slot", da.slot}};
  j["value"] = da.value ? json(*da.value) : json(nullptr);
  return j;
}

DialogueAct DialogueActFromJson(const json& j) {
  if (!j.is_object()) throw SchemaError("das[]", "expected an object");
  DialogueAct da;
  da.intent = RequireString(j, "intent", "das[].");
  da.domain = RequireString(j, "domain", "das[].");
  da.slot = RequireString(j, "slot", "das[].");
  if (auto it = j.find("value"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw SchemaError("das[].value", "expected string or null");
    da.value = it->get<std::string>();
  }
  return da;
}

json TurnToJson(const Turn& turn) {
  json das = json::array();
  for (const auto& da : turn.das) das.push_back(DialogueActToJson(da));
  return {{"index", turn.index},
          {"speaker", SpeakerName(turn.speaker)},
          {"text", turn.text},
          {"das", das}};
}

Turn TurnFromJson(const json& j) {
  if (!j.is_object()) throw SchemaError("turns[]", "expected an object");
  Turn turn;
  const json& index = Require(j, "index", "turns[].");
  if (!index.is_number_integer()) {
    throw SchemaError("turns[].index", "expected an integer");
  }
  turn.index = index.get<int>();
  const std::string speaker = RequireString(j, "speaker", "turns[].");
  if (speaker == "user") {
    turn.speaker = Speaker::kUser;
  } else if (speaker == "system") {
    turn.speaker = Speaker::kSystem;
  } else {
    throw SchemaError("turns[].speaker",
                      "expected \"user\" or \"system\", got \"" + speaker + "\"");
  }
  turn.text = RequireString(j, "text", "turns[].");
  if (auto it = j.find("das"); it != j.end()) {
    if (!it->is_array()) throw SchemaError("turns[].das", "expected an array");
    for (const auto& da : *it) turn.das.push_back(DialogueActFromJson(da));
  }
  return turn;
}

json DialogueToJson(const Dialogue& dialogue) {
  json turns = json::array();
  for (const auto& t : dialogue.turns) turns.push_back(TurnToJson(t));
  return {{"id", dialogue.id},
          {"domain", dialogue.domain_tag},
          {"label", AuthorshipName(dialogue.label)},
          {"turns", turns}};
}

Dialogue DialogueFromJson(const json& j) {
  if (!j.is_object()) throw SchemaError("dialogue", "expected a JSON object");
  Dialogue d;
  d.id = RequireString(j, "id", "");
  d.domain_tag = RequireString(j, "domain", "");
  d.label = ParseAuthorship(RequireString(j, "label", ""));
  const json& turns = Require(j, "turns", "");
  if (!turns.is_array()) throw SchemaError("turns", "expected an array");
  for (const auto& t : turns) d.turns.push_back(TurnFromJson(t));
  return d;
}

void ValidateDialogue(const Dialogue& dialogue) {
  if (dialogue.id.empty()) throw SchemaError("id", "must be non-empty");
  bool has_user = false;
  int previous = -1;
  for (const auto& turn : dialogue.turns) {
    if (turn.index < 0) throw SchemaError("turns[].index", "must be non-negative");
    if (turn.index <= previous) {
      throw SchemaError("turns[].index", "indices must be strictly increasing");
    }
    previous = turn.index;
    if (TrimAscii(turn.text).empty()) {
      throw SchemaError("turns[].text", "must be non-empty after trimming");
    }
    for (const auto& da : turn.das) {
      if (da.intent.empty()) throw SchemaError("das[].intent", "must be non-empty");
      if (da.domain.empty()) throw SchemaError("das[].domain", "must be non-empty");
      if (da.slot.empty()) throw SchemaError("das[].slot", "must be non-empty");
    }
    has_user = has_user || turn.speaker == Speaker::kUser;
  }
  if (!has_user) throw SchemaError("turns", "dialogue has no user turn");
}

Corpus::Corpus(std::vector<Dialogue> dialogues) : dialogues_(std::move(dialogues)) {
  for (std::size_t i = 0; i < dialogues_.size(); ++i) {
    ValidateDialogue(dialogues_[i]);
    if (!by_id_.emplace(dialogues_[i].id, i).second) {
      throw DuplicateIdError(dialogues_[i].id);
    }
  }
}

const Dialogue* Corpus::Find(std::string_view id) const {
  auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : &dialogues_[it->second];
}

Corpus ParseCorpus(std::istream& in) {
  std::vector<Dialogue> dialogues;
  std::map<std::string, std::size_t> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (TrimAscii(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(e.what(), line_no);
    }
    Dialogue d;
    try {
      d = DialogueFromJson(j);
      ValidateDialogue(d);
    } catch (const SchemaError& e) {
      throw SchemaError(e.field(), std::string("line ") +
                                       std::to_string(line_no) + ": " + e.what());
    }
    if (!seen.emplace(d.id, line_no).second) throw DuplicateIdError(d.id);
    dialogues.push_back(std::move(d));
  }
  return Corpus(std::move(dialogues));
}

Corpus LoadCorpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus file " + path.string());
  return ParseCorpus(in);
}

void WriteCorpus(const Corpus& corpus, std::ostream& out) {
  for (const auto& d : corpus) out << DialogueToJson(d).dump() << '\n';
}

std::vector<std::string> SplitAssignment::Ids(SplitPart part) const {
  std::vector<std::string> ids;
  for (const auto& [id, p] : parts) {
    if (p == part) ids.push_back(id);
  }
  return ids;
}

std::size_t SplitAssignment::Count(SplitPart part) const {
  return static_cast<std::size_t>(std::count_if(
      parts.begin(), parts.end(), [part](const auto& kv) { return kv.second == part; }));
}

SplitAssignment SplitByDialogue(const Corpus& corpus, const SplitRatios& ratios,
                                std::uint64_t seed) {
  if (!(ratios.train > 0 && ratios.val > 0 && ratios.test > 0)) {
    throw InvalidArgument("split ratios must be positive");
  }
  if (std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9) {
    throw InvalidArgument("split ratios must sum to 1");
  }
  std::vector<std::string> ids;
  ids.reserve(corpus.size());
  for (const auto& d : corpus) ids.push_back(d.id);
  std::sort(ids.begin(), ids.end());

  std::mt19937_64 rng(seed);
  for (std::size_t i = ids.size(); i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(ids[i - 1], ids[pick(rng)]);
  }

  // The epsilon absorbs representation error such as 20 * 0.15.
  const double n = static_cast<double>(ids.size());
  const auto n_val = static_cast<std::size_t>(std::floor(n * ratios.val + 1e-9));
  const auto n_test = static_cast<std::size_t>(std::floor(n * ratios.test + 1e-9));

  SplitAssignment split;
  split.seed = seed;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    SplitPart part = SplitPart::kTrain;
    if (i < n_val) {
      part = SplitPart::kVal;
    } else if (i < n_val + n_test) {
      part = SplitPart::kTest;
    }
    split.parts.emplace(ids[i], part);
  }
  return split;
}

json SplitToJson(const SplitAssignment& split) {
  json parts = json::object();
  for (const auto& [id, part] : split.parts) parts[id] = SplitPartName(part);
  return {{"format", "split"}, {"version", 1}, {"seed", split.seed}, {"parts", parts}};
}

SplitAssignment SplitFromJson(const json& j) {
  SplitAssignment split;
  split.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& [id, part] : j.at("parts").items()) {
    split.parts.emplace(id, ParseSplitPart(part.get<std::string>()));
  }
  return split;
}

std::string MaskValues(std::string_view text, std::span<const DialogueAct> das) {
  std::vector<std::pair<std::string_view, std::string_view>> values;
  for (const auto& da : das) {
    if (da.value && !da.value->empty()) values.emplace_back(*da.value, da.slot);
  }
  if (values.empty()) return std::string(text);
  std::stable_sort(values.begin(), values.end(), [](const auto& a, const auto& b) {
    return a.first.size() > b.first.size();
  });

  std::string out;
  out.reserve(text.size());
  std::size_t pos = 0;
  while (pos < text.size()) {
    if (std::size_t len = PlaceholderLengthAt(text, pos); len > 0) {
      out.append(text.substr(pos, len));
      pos += len;
      continue;
    }
    bool replaced = false;
    for (const auto& [value, slot] : values) {
      if (text.substr(pos, value.size()) == value) {
        out.push_back('<');
        out.append(slot);
        out.push_back('>');
        pos += value.size();
        replaced = true;
        break;
      }
    }
    if (!replaced) out.push_back(text[pos++]);
  }
  return out;
}

std::vector<Turn> UserSide(const Dialogue& dialogue) {
  std::vector<Turn> out;
  for (const auto& turn : dialogue.turns) {
    if (turn.speaker == Speaker::kUser) out.push_back(turn);
  }
  if (out.empty()) throw SchemaError("turns", "dialogue has no user turn");
  return out;
}

}  // namespace turnlens
