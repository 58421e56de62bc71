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

#include "turnlens/alignment.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>

#include "turnlens/errors.h"
#include "turnlens/text_util.h"

namespace turnlens {

using nlohmann::json;

Lexicon Lexicon::Default() {
  Lexicon lex;
  lex.intents = {{"nobook", "booking is failed"},
                 {"nooffer", "no offer is available"},
                 {"reqmore", "request more information"},
                 {"reqalts", "request alternatives"},
                 {"negate", "say no"},
                 {"affirm", "say yes"},
                 {"thankyou", "thank you"},
                 {"bye", "say goodbye"},
                 {"greet", "greeting"}};
  lex.slots = {{"or_city", "Origin city"},    {"dst_city", "Destination city"},
               {"str_date", "Start date"},    {"end_date", "End date"},
               {"budget", "Budget"},          {"n_adults", "Number of adults"},
               {"area", "Area"},              {"pricerange", "Price range"},
               {"stars", "Star rating"},      {"parking", "Parking"},
               {"internet", "Internet"},      {"bookday", "Booking day"},
               {"bookpeople", "Number of people"}, {"bookstay", "Length of stay"}};
  return lex;
}

Lexicon Lexicon::FromJson(const json& j) {
  Lexicon lex;
  for (const auto& [key, value] : j.items()) {
    if (key == "intents") {
      lex.intents = value.get<std::map<std::string, std::string>>();
    } else if (key == "slots") {
      lex.slots = value.get<std::map<std::string, std::string>>();
    } else {
      throw SchemaError(key, "unknown lexicon key");
    }
  }
  return lex;
}

Lexicon Lexicon::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open lexicon " + path.string());
  try {
    return FromJson(json::parse(in));
  } catch (const json::parse_error& e) {
    throw ParseError(e.what(), 0);
  }
}

json Lexicon::ToJson() const { return {{"intents", intents}, {"slots", slots}}; }

std::string DaToText(const DialogueAct& da, const Lexicon& lexicon) {
  std::string out;
  auto intent = lexicon.intents.find(ToLowerAscii(da.intent));
  out = intent != lexicon.intents.end() ? intent->second : da.intent;
  out += " " + da.slot;
  if (auto slot = lexicon.slots.find(ToLowerAscii(da.slot)); slot != lexicon.slots.end()) {
    out += " (" + slot->second + ")";
  }
  if (da.value && !da.value->empty()) out += " " + *da.value;
  return out;
}

namespace {

double TopKMean(std::vector<double> values, int k) {
  const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(std::max(k, 1)), values.size());
  std::partial_sort(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(take), values.end(),
                    std::greater<>());
  return std::accumulate(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(take), 0.0) /
         static_cast<double>(take);
}

double Norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

MatchResult CslsMatch(const std::vector<std::vector<double>>& similarity,
                      const MatchConfig& config) {
  MatchResult out;
  out.similarity = similarity;
  const std::size_t n_tok = similarity.size();
  if (n_tok == 0) return out;
  const std::size_t n_da = similarity[0].size();
  std::vector<double> r_tok(n_tok), r_da(n_da);
  for (std::size_t t = 0; t < n_tok; ++t) r_tok[t] = TopKMean(similarity[t], config.k);
  for (std::size_t d = 0; d < n_da; ++d) {
    std::vector<double> column(n_tok);
    for (std::size_t t = 0; t < n_tok; ++t) column[t] = similarity[t][d];
    r_da[d] = TopKMean(std::move(column), config.k);
  }
  out.csls.assign(n_tok, std::vector<double>(n_da));
  out.matched.assign(n_tok, {});
  for (std::size_t t = 0; t < n_tok; ++t) {
    for (std::size_t d = 0; d < n_da; ++d) {
      out.csls[t][d] = 2.0 * similarity[t][d] - r_tok[t] - r_da[d];
    }
    const auto [lo, hi] = std::minmax_element(out.csls[t].begin(), out.csls[t].end());
    const double threshold = *lo + config.theta * (*hi - *lo);
    for (std::size_t d = 0; d < n_da; ++d) {
      // max >= threshold must hold even when rounding nudges the threshold up.
      if (out.csls[t][d] >= threshold || out.csls[t][d] == *hi) {
        out.matched[t].push_back(static_cast<int>(d));
      }
    }
  }
  return out;
}

MatchResult MatchTokensToDas(std::string_view utterance, std::span<const DialogueAct> das,
                             const EmbeddingProvider& provider, const Lexicon& lexicon,
                             const MatchConfig& config) {
  if (das.empty()) throw InvalidArgument("matching needs at least one dialogue act");
  if (TrimAscii(utterance).empty()) throw InvalidArgument("matching needs a non-empty utterance");
  const std::vector<TokenVector> utt = provider.TokenEmbeddings(utterance);
  std::vector<std::vector<TokenVector>> da_tokens;
  for (const auto& da : das) da_tokens.push_back(provider.TokenEmbeddings(DaToText(da, lexicon)));

  auto check = [](const std::vector<double>& v) {
    const double n = Norm(v);
    if (!(n > 0.0) || !std::isfinite(n)) {
      throw InvalidArgument("embedding provider returned a zero-norm vector");
    }
    return n;
  };
  std::vector<std::vector<double>> sim(utt.size(), std::vector<double>(das.size()));
  for (std::size_t t = 0; t < utt.size(); ++t) {
    const double nt = check(utt[t].vector);
    for (std::size_t d = 0; d < das.size(); ++d) {
      double best = -std::numeric_limits<double>::infinity();
      for (const auto& dv : da_tokens[d]) {
        const double nd = check(dv.vector);
        double dot = 0.0;
        for (std::size_t i = 0; i < dv.vector.size(); ++i) dot += utt[t].vector[i] * dv.vector[i];
        best = std::max(best, dot / (nt * nd));
      }
      sim[t][d] = da_tokens[d].empty() ? 0.0 : best;
    }
  }
  MatchResult out = CslsMatch(sim, config);
  for (const auto& tv : utt) out.tokens.push_back(tv.token);
  return out;
}

namespace {

struct Unit {
  std::string surface;
  std::size_t start = 0;
  std::size_t end = 0;
  int first_token = 0;
  int last_token = 0;
};

std::vector<Unit> BuildUnits(std::string_view text, const std::vector<Token>& tokens, int lo,
                             int hi, std::span<const DialogueAct> das) {
  std::vector<std::pair<std::string_view, std::string_view>> values;
  for (const auto& da : das) {
    if (da.value && !da.value->empty()) values.emplace_back(*da.value, da.slot);
  }
  std::vector<Unit> units;
  for (int j = lo; j <= hi;) {
    int best_end = -1;
    std::string_view best_slot;
    for (int m = hi; m >= j && best_end < 0; --m) {
      const std::string_view span =
          text.substr(tokens[j].start, tokens[m].end - tokens[j].start);
      for (const auto& [value, slot] : values) {
        if (span == value) {
          best_end = m;
          best_slot = slot;
          break;
        }
      }
    }
    if (best_end >= 0) {
      units.push_back({"<" + std::string(best_slot) + ">", tokens[j].start, tokens[best_end].end,
                       j, best_end});
      j = best_end + 1;
    } else {
      units.push_back({tokens[j].surface, tokens[j].start, tokens[j].end, j, j});
      ++j;
    }
  }
  return units;
}

}  // namespace

std::vector<std::vector<Phrase>> ExtractPhrases(std::string_view utterance,
                                                const MatchResult& match,
                                                std::span<const DialogueAct> das, int max_n) {
  if (max_n < 1) throw InvalidArgument("max_n must be at least 1");
  std::vector<std::vector<Phrase>> out(das.size());
  const int n_tok = static_cast<int>(match.tokens.size());
  for (std::size_t d = 0; d < das.size(); ++d) {
    auto is_matched = [&](int t) {
      const auto& m = match.matched[t];
      return std::binary_search(m.begin(), m.end(), static_cast<int>(d));
    };
    for (int t = 0; t < n_tok;) {
      if (!is_matched(t)) {
        ++t;
        continue;
      }
      int end = t;
      while (end + 1 < n_tok && is_matched(end + 1)) ++end;
      const std::vector<Unit> units = BuildUnits(utterance, match.tokens, t, end, das);
      const int len = static_cast<int>(units.size());
      for (int n = 1; n <= std::min(max_n, len); ++n) {
        for (int p = 0; p + n <= len; ++p) {
          Phrase phrase;
          for (int q = p; q < p + n; ++q) {
            if (q > p) {
              phrase.text.append(utterance.substr(units[q - 1].end, units[q].start - units[q - 1].end));
            }
            phrase.text += units[q].surface;
          }
          phrase.key = ToLowerAscii(CollapseWhitespace(phrase.text));
          phrase.first_token = units[p].first_token;
          phrase.last_token = units[p + n - 1].last_token;
          phrase.length = n;
          out[d].push_back(std::move(phrase));
        }
      }
      t = end + 1;
    }
  }
  return out;
}

}  // namespace turnlens
