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

// Per-turn explanation reports: the bundle, the narrative template and its
// renderer, and JSON / HTML output.

#ifndef TURNLENS_REPORT_H_
#define TURNLENS_REPORT_H_

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "turnlens/classifier.h"
#include "turnlens/corpus.h"
#include "turnlens/wordcloud.h"

namespace turnlens {

inline constexpr int kReportSchemaVersion = 1;

struct PredictionView {
  ProbPair probs;
  Authorship label = Authorship::kAI;

  static PredictionView Of(const ProbPair& p) { return {p, p.Argmax()}; }
  bool operator==(const PredictionView&) const = default;
};

struct TokenHighlight {
  std::string surface;
  std::size_t start = 0;
  std::size_t end = 0;
  double score = 0.0;
  bool kept = false;

  bool operator==(const TokenHighlight&) const = default;
};

struct DaHighlight {
  std::string key;
  double score = 0.0;
  bool kept = false;

  bool operator==(const DaHighlight&) const = default;
};

using RankedList = std::vector<std::pair<std::string, double>>;

struct SemiGlobalSection {
  Authorship target = Authorship::kAI;
  RankedList target_features;
  RankedList counter_features;
  std::vector<CloudEntry> cloud;

  bool operator==(const SemiGlobalSection&) const = default;
};

struct ReportBundle {
  std::string dialogue_id;
  int turn_index = 0;
  std::string text;  // the utterance highlights refer to
  PredictionView token_turn;
  PredictionView da_turn;
  PredictionView dialogue;
  std::vector<TokenHighlight> tokens;
  std::vector<DaHighlight> das;
  std::string narrative;
  SemiGlobalSection semi_global;

  // Throws SchemaError when a span leaves the text or the narrative is empty.
  void Validate() const;
  bool operator==(const ReportBundle&) const = default;
};

// Sections render in `order`. Every section has a pattern; the list sections
// ("tokens", "das", "semi_global") also have an item pattern, joined into the
// {items} slot, and a fallback used when there is nothing to list.
struct NarrativeTemplate {
  struct Section {
    std::string pattern;
    std::string item;
    std::string fallback;

    bool operator==(const Section&) const = default;
  };

  std::vector<std::string> order;
  std::map<std::string, Section> sections;
  std::string human_name;
  std::string ai_name;
  std::vector<std::string> strength_words;    // strong, moderate, weak
  std::vector<std::string> confidence_words;  // high (>= 0.9), fair (>= 0.7), low
  bool show_scores = false;

  static NarrativeTemplate Default();
  // Validates slot names per section. Throws SchemaError.
  static NarrativeTemplate FromJson(const nlohmann::json& j);
  static NarrativeTemplate Load(const std::filesystem::path& path);
  nlohmann::json ToJson() const;
  void Validate() const;
  bool operator==(const NarrativeTemplate&) const = default;
};

// Substitutes "{name}" slots. Throws InvalidArgument naming a slot without a
// value. "{{" and "}}" are literal braces.
std::string RenderPattern(std::string_view pattern,
                          const std::map<std::string, std::string, std::less<>>& values);

// Strength words from terciles of |score| over `all_scores` (the same kind
// within one utterance): index 0 strong, 1 moderate, 2 weak.
int StrengthIndex(double score, const std::vector<double>& all_scores);

struct NarrativeInput {
  int turn_number = 1;  // 1-based position among user turns
  PredictionView turn;
  PredictionView dialogue;
  std::vector<TokenHighlight> tokens;
  std::vector<DaHighlight> das;
  RankedList semi_global;  // target-class features
  int max_semi_global = 5;
};

// Names kept features only, ordered by |score|.
std::string RenderNarrative(const NarrativeTemplate& tmpl, const NarrativeInput& input);

nlohmann::json ReportToJson(const ReportBundle& bundle);
ReportBundle ReportFromJson(const nlohmann::json& j);

// Self-contained page: inline styles, diverging colors normalized by the
// largest |score| (red toward AI, blue toward Human, 0 neutral), kept
// features outlined.
std::string ReportToHtml(const ReportBundle& bundle);
// "#rrggbb" for a score on the diverging scale.
std::string ScoreColor(double score, double max_abs);

enum class ReportFormat { kJson, kHtml };
void WriteReport(const ReportBundle& bundle, ReportFormat format,
                 const std::filesystem::path& path);

}  // namespace turnlens

#endif  // TURNLENS_REPORT_H_
