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

#include "turnlens/report.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "turnlens/errors.h"
#include "turnlens/text_util.h"

namespace turnlens {

using nlohmann::json;

namespace {

using Slots = std::map<std::string, std::string, std::less<>>;

const std::set<std::string>& SectionNames() {
  static const std::set<std::string> names = {"background", "tokens", "das", "semi_global"};
  return names;
}

bool IsListSection(const std::string& name) { return name != "background"; }

std::set<std::string> PatternSlots(const std::string& section, bool show_scores) {
  if (section == "background") {
    std::set<std::string> s = {"turn_number", "turn_class", "turn_confidence", "dialogue_class",
                               "dialogue_confidence"};
    if (show_scores) s.insert({"turn_probability", "dialogue_probability"});
    return s;
  }
  if (section == "semi_global") return {"items", "count", "turn_class", "counter_class"};
  return {"items", "count", "turn_class"};
}

std::set<std::string> ItemSlots(const std::string& section, bool show_scores) {
  std::set<std::string> s = {"feature"};
  if (section != "semi_global") s.insert({"strength", "direction"});
  if (show_scores) s.insert("score");
  return s;
}

std::set<std::string> FallbackSlots() { return {"turn_class", "counter_class"}; }

// Slot names referenced by a pattern.
std::vector<std::string> SlotsIn(std::string_view pattern) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    if (pattern[i] == '{') {
      if (i + 1 < pattern.size() && pattern[i + 1] == '{') {
        ++i;
        continue;
      }
      const auto close = pattern.find('}', i);
      if (close == std::string_view::npos) throw SchemaError("pattern", "unterminated slot");
      out.emplace_back(pattern.substr(i + 1, close - i - 1));
      i = close;
    } else if (pattern[i] == '}' && i + 1 < pattern.size() && pattern[i + 1] == '}') {
      ++i;
    }
  }
  return out;
}

void CheckSlots(const std::string& where, const std::string& pattern,
                const std::set<std::string>& allowed) {
  for (const auto& slot : SlotsIn(pattern)) {
    if (!allowed.count(slot)) throw SchemaError(where, "unknown slot {" + slot + "}");
  }
}

std::string JoinItems(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += i + 1 == items.size() ? " and " : ", ";
    out += items[i];
  }
  return out;
}

std::string FormatScore(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%+.3f", v);
  return buf;
}

std::string FormatProb(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f%%", 100.0 * v);
  return buf;
}

const std::string& ClassName(const NarrativeTemplate& t, Authorship c) {
  return c == Authorship::kAI ? t.ai_name : t.human_name;
}

const std::string& ConfidenceWord(const NarrativeTemplate& t, const PredictionView& p) {
  const double prob = p.probs.Of(p.label);
  if (prob >= 0.9) return t.confidence_words[0];
  if (prob >= 0.7) return t.confidence_words[1];
  return t.confidence_words[2];
}

std::string RenderSection(const NarrativeTemplate& t, const std::string& name,
                          const std::vector<Slots>& items, Slots slots) {
  const auto& section = t.sections.at(name);
  if (items.empty()) return RenderPattern(section.fallback, slots);
  std::vector<std::string> rendered;
  for (const auto& item : items) rendered.push_back(RenderPattern(section.item, item));
  slots["items"] = JoinItems(rendered);
  slots["count"] = std::to_string(items.size());
  return RenderPattern(section.pattern, slots);
}

template <typename Highlight>
std::vector<Slots> FeatureItems(const NarrativeTemplate& t, const std::vector<Highlight>& all,
                                const std::string& (*key)(const Highlight&)) {
  std::vector<double> scores;
  std::vector<const Highlight*> kept;
  for (const auto& h : all) {
    scores.push_back(h.score);
    if (h.kept) kept.push_back(&h);
  }
  std::stable_sort(kept.begin(), kept.end(), [](const Highlight* a, const Highlight* b) {
    return std::abs(a->score) > std::abs(b->score);
  });
  std::vector<Slots> items;
  for (const Highlight* h : kept) {
    Slots s;
    s["feature"] = key(*h);
    s["strength"] = t.strength_words[static_cast<std::size_t>(StrengthIndex(h->score, scores))];
    s["direction"] = ClassName(t, h->score >= 0 ? Authorship::kAI : Authorship::kHuman);
    if (t.show_scores) s["score"] = FormatScore(h->score);
    items.push_back(std::move(s));
  }
  return items;
}

const std::string& TokenKey(const TokenHighlight& h) { return h.surface; }
const std::string& DaKeyOf(const DaHighlight& h) { return h.key; }

json PredictionToJson(const PredictionView& p) {
  return {{"label", AuthorshipName(p.label)}, {"p_human", p.probs.human}, {"p_ai", p.probs.ai}};
}

PredictionView PredictionFromJson(const json& j) {
  PredictionView p;
  p.label = ParseAuthorship(j.at("label").get<std::string>());
  p.probs.human = j.at("p_human").get<double>();
  p.probs.ai = j.at("p_ai").get<double>();
  return p;
}

json RankedToJson(const RankedList& list) {
  json j = json::array();
  for (const auto& [f, s] : list) j.push_back({{"feature", f}, {"score", s}});
  return j;
}

RankedList RankedFromJson(const json& j) {
  RankedList out;
  for (const auto& e : j) out.emplace_back(e.at("feature").get<std::string>(), e.at("score").get<double>());
  return out;
}

}  // namespace

void ReportBundle::Validate() const {
  for (const auto& t : tokens) {
    if (t.start > t.end || t.end > text.size()) throw SchemaError("tokens", "span outside the utterance");
    if (text.compare(t.start, t.end - t.start, t.surface) != 0) {
      throw SchemaError("tokens", "surface does not match its span");
    }
  }
  if (TrimAscii(narrative).empty()) throw SchemaError("narrative", "empty narrative");
}

std::string RenderPattern(std::string_view pattern, const Slots& values) {
  std::string out;
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    const char c = pattern[i];
    if (c == '{' && i + 1 < pattern.size() && pattern[i + 1] == '{') {
      out += '{';
      ++i;
    } else if (c == '}' && i + 1 < pattern.size() && pattern[i + 1] == '}') {
      out += '}';
      ++i;
    } else if (c == '{') {
      const auto close = pattern.find('}', i);
      if (close == std::string_view::npos) throw InvalidArgument("unterminated slot in pattern");
      const std::string_view name = pattern.substr(i + 1, close - i - 1);
      auto it = values.find(name);
      if (it == values.end()) throw InvalidArgument("missing slot value {" + std::string(name) + "}");
      out += it->second;
      i = close;
    } else {
      out += c;
    }
  }
  return out;
}

int StrengthIndex(double score, const std::vector<double>& all_scores) {
  if (all_scores.empty()) return 2;
  const double a = std::abs(score);
  const auto at_most = std::count_if(all_scores.begin(), all_scores.end(),
                                     [&](double s) { return std::abs(s) <= a; });
  const double frac = static_cast<double>(at_most) / static_cast<double>(all_scores.size());
  if (frac > 2.0 / 3.0) return 0;
  if (frac > 1.0 / 3.0) return 1;
  return 2;
}

NarrativeTemplate NarrativeTemplate::Default() {
  NarrativeTemplate t;
  t.order = {"background", "tokens", "das", "semi_global"};
  t.sections["background"] = {
      "This is user turn {turn_number}. The detector reads it as written by {turn_class}, with "
      "{turn_confidence} confidence. Taking the conversation so far into account, it is most "
      "likely written by {dialogue_class} ({dialogue_confidence} confidence).",
      "", ""};
  t.sections["tokens"] = {"The words that shaped this decision most were {items}.",
                          "\"{feature}\" ({strength} push toward {direction})",
                          "No single word stood out in this turn."};
  t.sections["das"] = {"Among the dialogue acts, {items} mattered most.",
                       "{feature} ({strength} push toward {direction})",
                       "No dialogue act in this turn influenced the decision."};
  t.sections["semi_global"] = {
      "Turns with the same dialogue acts written by {turn_class} often contain phrases like "
      "{items}.",
      "\"{feature}\"", "There are no typical phrases on record for these dialogue acts."};
  t.human_name = "a person";
  t.ai_name = "an AI system";
  t.strength_words = {"strong", "moderate", "weak"};
  t.confidence_words = {"high", "fair", "low"};
  return t;
}

void NarrativeTemplate::Validate() const {
  if (order.empty()) throw SchemaError("order", "no sections");
  std::set<std::string> seen;
  for (const auto& name : order) {
    if (!SectionNames().count(name)) throw SchemaError("order", "unknown section \"" + name + "\"");
    if (!seen.insert(name).second) throw SchemaError("order", "repeated section \"" + name + "\"");
    if (!sections.count(name)) throw SchemaError("sections." + name, "missing section");
  }
  for (const auto& [name, s] : sections) {
    if (!SectionNames().count(name)) throw SchemaError("sections." + name, "unknown section");
    CheckSlots("sections." + name + ".pattern", s.pattern, PatternSlots(name, show_scores));
    if (TrimAscii(s.pattern).empty()) throw SchemaError("sections." + name + ".pattern", "empty");
    if (IsListSection(name)) {
      if (TrimAscii(s.item).empty()) throw SchemaError("sections." + name + ".item", "empty");
      if (TrimAscii(s.fallback).empty()) {
        throw SchemaError("sections." + name + ".fallback", "empty");
      }
      CheckSlots("sections." + name + ".item", s.item, ItemSlots(name, show_scores));
      CheckSlots("sections." + name + ".fallback", s.fallback, FallbackSlots());
    }
  }
  if (strength_words.size() != 3) throw SchemaError("strength_words", "expected 3 words");
  if (confidence_words.size() != 3) throw SchemaError("confidence_words", "expected 3 words");
  if (human_name.empty() || ai_name.empty()) throw SchemaError("class_names", "empty class name");
}

NarrativeTemplate NarrativeTemplate::FromJson(const json& j) {
  static const std::set<std::string> keys = {"format",         "version",          "order",
                                             "sections",       "class_names",      "strength_words",
                                             "confidence_words", "show_scores"};
  for (const auto& [key, value] : j.items()) {
    if (!keys.count(key)) throw SchemaError(key, "unknown template key");
  }
  if (j.value("format", "") != "narrative_template" || j.value("version", 0) != 1) {
    throw SchemaError("format", "expected narrative_template version 1");
  }
  NarrativeTemplate t;
  try {
    t.order = j.at("order").get<std::vector<std::string>>();
    for (const auto& [name, s] : j.at("sections").items()) {
      for (const auto& [key, value] : s.items()) {
        if (key != "pattern" && key != "item" && key != "fallback") {
          throw SchemaError("sections." + name + "." + key, "unknown section key");
        }
      }
      t.sections[name] = {s.at("pattern").get<std::string>(), s.value("item", ""),
                          s.value("fallback", "")};
    }
    t.human_name = j.at("class_names").at("human").get<std::string>();
    t.ai_name = j.at("class_names").at("ai").get<std::string>();
    t.strength_words = j.at("strength_words").get<std::vector<std::string>>();
    t.confidence_words = j.at("confidence_words").get<std::vector<std::string>>();
    t.show_scores = j.value("show_scores", false);
  } catch (const json::exception& e) {
    throw SchemaError("template", e.what());
  }
  t.Validate();
  return t;
}

NarrativeTemplate NarrativeTemplate::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open template " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what(), 0);
  }
  return FromJson(j);
}

json NarrativeTemplate::ToJson() const {
  json s = json::object();
  for (const auto& [name, sec] : sections) {
    json e = {{"pattern", sec.pattern}};
    if (IsListSection(name)) {
      e["item"] = sec.item;
      e["fallback"] = sec.fallback;
    }
    s[name] = std::move(e);
  }
  return {{"format", "narrative_template"},
          {"version", 1},
          {"order", order},
          {"sections", s},
          {"class_names", {{"human", human_name}, {"ai", ai_name}}},
          {"strength_words", strength_words},
          {"confidence_words", confidence_words},
          {"show_scores", show_scores}};
}

std::string RenderNarrative(const NarrativeTemplate& t, const NarrativeInput& in) {
  const Authorship counter =
      in.turn.label == Authorship::kAI ? Authorship::kHuman : Authorship::kAI;
  Slots common;
  common["turn_class"] = ClassName(t, in.turn.label);
  common["counter_class"] = ClassName(t, counter);

  std::vector<std::string> parts;
  for (const auto& name : t.order) {
    if (name == "background") {
      Slots s = common;
      s["turn_number"] = std::to_string(in.turn_number);
      s["turn_confidence"] = ConfidenceWord(t, in.turn);
      s["dialogue_class"] = ClassName(t, in.dialogue.label);
      s["dialogue_confidence"] = ConfidenceWord(t, in.dialogue);
      if (t.show_scores) {
        s["turn_probability"] = FormatProb(in.turn.probs.Of(in.turn.label));
        s["dialogue_probability"] = FormatProb(in.dialogue.probs.Of(in.dialogue.label));
      }
      parts.push_back(RenderPattern(t.sections.at(name).pattern, s));
    } else if (name == "tokens") {
      parts.push_back(RenderSection(t, name, FeatureItems(t, in.tokens, &TokenKey), common));
    } else if (name == "das") {
      parts.push_back(RenderSection(t, name, FeatureItems(t, in.das, &DaKeyOf), common));
    } else {
      std::vector<Slots> items;
      for (const auto& [f, score] : in.semi_global) {
        if (static_cast<int>(items.size()) >= in.max_semi_global) break;
        Slots s{{"feature", f}};
        if (t.show_scores) s["score"] = FormatScore(score);
        items.push_back(std::move(s));
      }
      parts.push_back(RenderSection(t, name, items, common));
    }
  }
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out += ' ';
    out += p;
  }
  return out;
}

json ReportToJson(const ReportBundle& b) {
  json tokens = json::array();
  for (const auto& t : b.tokens) {
    tokens.push_back({{"surface", t.surface},
                      {"span", {t.start, t.end}},
                      {"score", t.score},
                      {"kept", t.kept}});
  }
  json das = json::array();
  for (const auto& d : b.das) das.push_back({{"key", d.key}, {"score", d.score}, {"kept", d.kept}});
  return {{"schema_version", kReportSchemaVersion},
          {"dialogue_id", b.dialogue_id},
          {"turn_index", b.turn_index},
          {"text", b.text},
          {"prediction",
           {{"turn_tokens", PredictionToJson(b.token_turn)},
            {"turn_das", PredictionToJson(b.da_turn)},
            {"dialogue", PredictionToJson(b.dialogue)}}},
          {"tokens", tokens},
          {"das", das},
          {"narrative", b.narrative},
          {"semi_global",
           {{"target", AuthorshipName(b.semi_global.target)},
            {"target_features", RankedToJson(b.semi_global.target_features)},
            {"counter_features", RankedToJson(b.semi_global.counter_features)},
            {"cloud", CloudToJson(b.semi_global.cloud)}}}};
}

ReportBundle ReportFromJson(const json& j) {
  if (j.value("schema_version", 0) != kReportSchemaVersion) {
    throw SchemaError("schema_version", "unsupported report schema version");
  }
  ReportBundle b;
  try {
    b.dialogue_id = j.at("dialogue_id").get<std::string>();
    b.turn_index = j.at("turn_index").get<int>();
    b.text = j.at("text").get<std::string>();
    const json& p = j.at("prediction");
    b.token_turn = PredictionFromJson(p.at("turn_tokens"));
    b.da_turn = PredictionFromJson(p.at("turn_das"));
    b.dialogue = PredictionFromJson(p.at("dialogue"));
    for (const auto& t : j.at("tokens")) {
      b.tokens.push_back({t.at("surface").get<std::string>(), t.at("span").at(0).get<std::size_t>(),
                          t.at("span").at(1).get<std::size_t>(), t.at("score").get<double>(),
                          t.at("kept").get<bool>()});
    }
    for (const auto& d : j.at("das")) {
      b.das.push_back({d.at("key").get<std::string>(), d.at("score").get<double>(),
                       d.at("kept").get<bool>()});
    }
    b.narrative = j.at("narrative").get<std::string>();
    const json& s = j.at("semi_global");
    b.semi_global.target = ParseAuthorship(s.at("target").get<std::string>());
    b.semi_global.target_features = RankedFromJson(s.at("target_features"));
    b.semi_global.counter_features = RankedFromJson(s.at("counter_features"));
    b.semi_global.cloud = CloudFromJson(s.at("cloud"));
  } catch (const json::exception& e) {
    throw SchemaError("report", e.what());
  }
  b.Validate();
  return b;
}

std::string ScoreColor(double score, double max_abs) {
  // Neutral #f7f7f7, AI end #d6604d, Human end #4393c3.
  static constexpr int kNeutral[3] = {0xf7, 0xf7, 0xf7};
  static constexpr int kAi[3] = {0xd6, 0x60, 0x4d};
  static constexpr int kHuman[3] = {0x43, 0x93, 0xc3};
  double t = max_abs > 0 ? std::clamp(std::abs(score) / max_abs, 0.0, 1.0) : 0.0;
  const int* end = score >= 0 ? kAi : kHuman;
  char buf[8];
  int rgb[3];
  for (int i = 0; i < 3; ++i) {
    rgb[i] = static_cast<int>(std::lround(kNeutral[i] + t * (end[i] - kNeutral[i])));
  }
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", rgb[0], rgb[1], rgb[2]);
  return buf;
}

std::string ReportToHtml(const ReportBundle& b) {
  std::ostringstream o;
  auto pred = [&](const char* title, const PredictionView& p) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", p.probs.ai);
    o << "<tr><td>" << title << "</td><td>" << AuthorshipName(p.label) << "</td><td>" << buf
      << "</td></tr>\n";
  };
  o << "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>Turn "
    << b.turn_index << " of " << HtmlEscape(b.dialogue_id) << "</title>\n"
    << "<style>body{font-family:sans-serif;max-width:48em;margin:2em auto;color:#222}"
       ".tok{padding:1px 2px;border-radius:3px}"
       ".kept{outline:2px solid #222;font-weight:bold}"
       ".da{display:inline-block;margin:2px;padding:2px 6px;border-radius:3px}"
       ".cloud span{display:inline-block;margin:2px 6px}"
       "table{border-collapse:collapse}td,th{padding:2px 8px;border-bottom:1px solid #ddd}"
       "</style></head><body>\n";
  o << "<h1>Dialogue " << HtmlEscape(b.dialogue_id) << ", turn " << b.turn_index << "</h1>\n";
  o << "<table><tr><th>level</th><th>verdict</th><th>p(ai)</th></tr>\n";
  pred("turn (tokens)", b.token_turn);
  pred("turn (dialogue acts)", b.da_turn);
  pred("dialogue", b.dialogue);
  o << "</table>\n<h2>Explanation</h2>\n<p>" << HtmlEscape(b.narrative) << "</p>\n";

  double max_abs = 0.0;
  for (const auto& t : b.tokens) max_abs = std::max(max_abs, std::abs(t.score));
  o << "<h2>Utterance</h2>\n<p>";
  std::size_t pos = 0;
  for (const auto& t : b.tokens) {
    o << HtmlEscape(std::string_view(b.text).substr(pos, t.start - pos));
    o << "<span class=\"tok" << (t.kept ? " kept" : "") << "\" style=\"background:"
      << ScoreColor(t.score, max_abs) << "\">" << HtmlEscape(t.surface) << "</span>";
    pos = t.end;
  }
  o << HtmlEscape(std::string_view(b.text).substr(pos)) << "</p>\n";

  double max_da = 0.0;
  for (const auto& d : b.das) max_da = std::max(max_da, std::abs(d.score));
  o << "<h2>Dialogue acts</h2>\n<p>";
  if (b.das.empty()) o << "none";
  for (const auto& d : b.das) {
    o << "<span class=\"da" << (d.kept ? " kept" : "") << "\" style=\"background:"
      << ScoreColor(d.score, max_da) << "\">" << HtmlEscape(d.key) << "</span>";
  }
  o << "</p>\n<h2>Typical phrases (" << AuthorshipName(b.semi_global.target) << ")</h2>\n"
    << "<div class=\"cloud\">";
  double max_w = 0.0;
  for (const auto& e : b.semi_global.cloud) max_w = std::max(max_w, e.weight);
  for (const auto& e : b.semi_global.cloud) {
    const double px = max_w > 0 ? 12.0 + 24.0 * std::max(e.weight, 0.0) / max_w : 12.0;
    char size[16];
    std::snprintf(size, sizeof size, "%.0fpx", px);
    o << "<span style=\"font-size:" << size << "\">" << HtmlEscape(e.phrase) << "</span>";
  }
  o << "</div>\n<h3>Counter-class phrases</h3>\n<ul>";
  for (const auto& [f, s] : b.semi_global.counter_features) o << "<li>" << HtmlEscape(f) << "</li>";
  o << "</ul>\n</body></html>\n";
  return o.str();
}

void WriteReport(const ReportBundle& bundle, ReportFormat format,
                 const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  if (format == ReportFormat::kJson) {
    out << ReportToJson(bundle).dump(2) << '\n';
  } else {
    out << ReportToHtml(bundle);
  }
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace turnlens
