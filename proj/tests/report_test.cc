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

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "turnlens/errors.h"
#include "turnlens/report.h"

namespace turnlens {
namespace {

NarrativeInput AiInput() {
  NarrativeInput in;
  in.turn_number = 2;
  in.turn = PredictionView::Of({0.08, 0.92});
  in.dialogue = PredictionView::Of({0.2, 0.8});
  in.tokens = {{"any", 0, 3, 0.05, false}, {"options", 4, 11, 0.41, true},
               {"?", 11, 12, -0.02, true}};
  in.das = {{"request-travel-options", 0.3, true}};
  in.semi_global = {{"any options ?", 4.2}, {"seamless journey", 3.1}};
  return in;
}

TEST(Narrative, NamesTopTokenAndVerdict) {
  const auto tmpl = NarrativeTemplate::Default();
  const std::string text = RenderNarrative(tmpl, AiInput());
  EXPECT_NE(text.find("\"options\""), std::string::npos);
  EXPECT_NE(text.find(tmpl.ai_name), std::string::npos);
  EXPECT_NE(text.find("high"), std::string::npos);
  EXPECT_EQ(text.find("\"any\""), std::string::npos);  // not kept
  EXPECT_EQ(text.find("0.41"), std::string::npos);     // no raw scores by default
  EXPECT_EQ(RenderNarrative(tmpl, AiInput()), text);
}

TEST(Narrative, DaFallback) {
  const auto tmpl = NarrativeTemplate::Default();
  auto in = AiInput();
  in.das.clear();
  EXPECT_NE(RenderNarrative(tmpl, in).find(tmpl.sections.at("das").fallback), std::string::npos);
}

TEST(Narrative, ShowScores) {
  auto tmpl = NarrativeTemplate::Default();
  tmpl.show_scores = true;
  tmpl.sections["tokens"].item = "{feature} {score}";
  tmpl.Validate();
  EXPECT_NE(RenderNarrative(tmpl, AiInput()).find("0.41"), std::string::npos);
}

TEST(Narrative, NamedFeaturesAreHighlighted) {
  const auto in = AiInput();
  const std::string text = RenderNarrative(NarrativeTemplate::Default(), in);
  for (const auto& t : in.tokens) {
    if (t.kept) EXPECT_NE(text.find("\"" + t.surface + "\""), std::string::npos) << t.surface;
  }
  for (const auto& d : in.das) EXPECT_NE(text.find(d.key), std::string::npos);
}

TEST(RenderPattern, Slots) {
  EXPECT_EQ(RenderPattern("{a} and {{b}}", {{"a", "x"}}), "x and {b}");
  EXPECT_THROW(RenderPattern("{missing}", {}), InvalidArgument);
}

TEST(StrengthIndex, Terciles) {
  const std::vector<double> all = {0.1, -0.2, 0.3, 0.4, -0.5, 0.6};
  EXPECT_EQ(StrengthIndex(0.6, all), 0);
  EXPECT_EQ(StrengthIndex(0.3, all), 1);
  EXPECT_EQ(StrengthIndex(0.1, all), 2);
}

TEST(Template, JsonRoundTripAndValidation) {
  const auto tmpl = NarrativeTemplate::Default();
  EXPECT_EQ(NarrativeTemplate::FromJson(tmpl.ToJson()), tmpl);
  auto j = tmpl.ToJson();
  j["sections"]["tokens"]["pattern"] = "Words: {nope}.";
  EXPECT_THROW(NarrativeTemplate::FromJson(j), SchemaError);
  j = tmpl.ToJson();
  j["colour"] = "red";
  EXPECT_THROW(NarrativeTemplate::FromJson(j), SchemaError);
}

ReportBundle Bundle() {
  ReportBundle b;
  b.dialogue_id = "d1";
  b.turn_index = 2;
  b.text = "any options?";
  b.token_turn = PredictionView::Of({0.1, 0.9});
  b.da_turn = PredictionView::Of({0.6, 0.4});
  b.dialogue = PredictionView::Of({0.3, 0.7});
  b.tokens = {{"any", 0, 3, 0.1, false}, {"options", 4, 11, 0.5, true}, {"?", 11, 12, -0.2, true}};
  b.das = {{"request-travel-options", -0.1, true}};
  b.narrative = RenderNarrative(NarrativeTemplate::Default(), AiInput());
  b.semi_global.target = Authorship::kAI;
  b.semi_global.target_features = {{"any options ?", 1.5}};
  b.semi_global.counter_features = {{"gotta get there", 1.2}};
  b.semi_global.cloud = {{"any options ?", 1.5, 3, 3, 2.7}};
  return b;
}

TEST(Report, JsonRoundTrip) {
  const auto b = Bundle();
  const auto j = ReportToJson(b);
  EXPECT_EQ(j.at("schema_version"), kReportSchemaVersion);
  EXPECT_EQ(ReportFromJson(nlohmann::json::parse(j.dump())), b);
}

TEST(Report, ValidateSpansAndNarrative) {
  auto b = Bundle();
  EXPECT_NO_THROW(b.Validate());
  b.tokens[2].end = 40;
  EXPECT_THROW(b.Validate(), SchemaError);
  b = Bundle();
  b.narrative = "  ";
  EXPECT_THROW(b.Validate(), SchemaError);
}

TEST(Report, ZeroScoresAreNeutral) {
  EXPECT_EQ(ScoreColor(0.0, 1.0), "#f7f7f7");
  EXPECT_EQ(ScoreColor(0.0, 0.0), "#f7f7f7");
  EXPECT_NE(ScoreColor(1.0, 1.0), ScoreColor(-1.0, 1.0));
  auto b = Bundle();
  for (auto& t : b.tokens) t.score = 0.0;
  for (auto& d : b.das) d.score = 0.0;
  const std::string html = ReportToHtml(b);
  EXPECT_EQ(html.find(ScoreColor(1.0, 1.0)), std::string::npos);
  EXPECT_EQ(html.find(ScoreColor(-1.0, 1.0)), std::string::npos);
}

std::size_t Count(const std::string& s, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = s.find(needle); p != std::string::npos; p = s.find(needle, p + 1)) ++n;
  return n;
}

TEST(Report, HtmlMarksKeptTokens) {
  auto b = Bundle();
  const std::string html = ReportToHtml(b);
  EXPECT_NE(html.find("<html"), std::string::npos);
  EXPECT_EQ(html.find("<link"), std::string::npos);
  EXPECT_EQ(html.find("<script src"), std::string::npos);
  const std::size_t kept_marks = Count(html, " kept\"");
  for (auto& t : b.tokens) t.kept = false;
  EXPECT_GT(kept_marks, Count(ReportToHtml(b), " kept\""));
}

TEST(Report, WriteFiles) {
  const auto dir = std::filesystem::temp_directory_path() / "turnlens_report_test";
  std::filesystem::create_directories(dir);
  const auto b = Bundle();
  WriteReport(b, ReportFormat::kJson, dir / "r.json");
  WriteReport(b, ReportFormat::kHtml, dir / "r.html");
  std::ifstream in(dir / "r.json");
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(ReportFromJson(nlohmann::json::parse(ss.str())), b);
  EXPECT_GT(std::filesystem::file_size(dir / "r.html"), 100u);
  EXPECT_THROW(WriteReport(b, ReportFormat::kJson, dir / "missing" / "x" / "r.json"), IoError);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace turnlens
