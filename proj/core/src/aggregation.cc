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

#include "turnlens/aggregation.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "turnlens/errors.h"
#include "turnlens/text_util.h"

namespace turnlens {

using nlohmann::json;

std::string_view MetricName(AggregationMetric m) { return m == AggregationMetric::kAgg ? "agg" : "lor"; }

AggregationMetric ParseMetric(std::string_view name) {
  if (name == "agg") return AggregationMetric::kAgg;
  if (name == "lor") return AggregationMetric::kLor;
  throw InvalidArgument("unknown aggregation metric \"" + std::string(name) + "\"");
}

long long ClassCorpus::Total() const {
  long long total = 0;
  for (const auto& [f, c] : counts) total += c;
  return total;
}

std::pair<ClassCorpus, ClassCorpus> BuildClassCorpora(
    std::span<const FeatureObservation> observations) {
  ClassCorpus ai{Authorship::kAI, {}};
  ClassCorpus human{Authorship::kHuman, {}};
  for (const auto& o : observations) {
    if (o.score > 0) {
      ++ai.counts[o.feature];
    } else if (o.score < 0) {
      ++human.counts[o.feature];
    }
  }
  return {std::move(ai), std::move(human)};
}

double PhraseScore(const Phrase& phrase, std::span<const double> token_scores) {
  double sum = 0.0;
  for (int t = phrase.first_token; t <= phrase.last_token; ++t) sum += token_scores[t];
  return sum / (phrase.last_token - phrase.first_token + 1);
}

std::map<std::string, double> LorDirichletWithPrior(const FeatureCounts& a, const FeatureCounts& b,
                                                    const FeatureCounts& prior, double alpha0) {
  if (!(alpha0 > 0)) throw InvalidArgument("alpha0 must be positive");
  double prior_total = 0.0;
  for (const auto& [f, c] : prior) prior_total += c;
  if (prior_total <= 0) throw InvalidArgument("LOR prior is empty");
  double n_a = 0.0, n_b = 0.0;
  for (const auto& [f, c] : a) n_a += c;
  for (const auto& [f, c] : b) n_b += c;

  std::map<std::string, double> z;
  auto score = [&](const std::string& f) {
    auto p = prior.find(f);
    if (p == prior.end()) throw InvalidArgument("feature \"" + f + "\" missing from the LOR prior");
    const double alpha = alpha0 * p->second / prior_total;
    auto count = [&](const FeatureCounts& m) {
      auto it = m.find(f);
      return it == m.end() ? 0.0 : static_cast<double>(it->second);
    };
    const double ya = count(a), yb = count(b);
    const double da = n_a + alpha0 - ya - alpha;
    const double db = n_b + alpha0 - yb - alpha;
    // A feature holding all prior mass has no complement in either corpus.
    if (da <= 0 && db <= 0 && alpha >= alpha0) {
      z[f] = 0.0;
      return;
    }
    if (!(da > 0 && db > 0)) {
      throw NumericalError("LOR prior mass is degenerate for feature \"" + f + "\"");
    }
    const double delta = std::log((ya + alpha) / da) - std::log((yb + alpha) / db);
    const double variance = 1.0 / (ya + alpha) + 1.0 / (yb + alpha);
    z[f] = delta / std::sqrt(variance);
  };
  for (const auto& [f, c] : a) score(f);
  for (const auto& [f, c] : b) {
    if (!z.count(f)) score(f);
  }
  return z;
}

std::map<std::string, double> LorDirichlet(const ClassCorpus& a, const ClassCorpus& b,
                                           double alpha0) {
  if (a.empty() || b.empty()) throw InvalidArgument("LOR needs two non-empty corpora");
  FeatureCounts pooled = a.counts;
  for (const auto& [f, c] : b.counts) pooled[f] += c;
  return LorDirichletWithPrior(a.counts, b.counts, pooled, alpha0);
}

std::array<std::map<std::string, double>, 2> AnchorScores(const ClassCorpus& ai,
                                                          const ClassCorpus& human) {
  if (ai.empty() || human.empty()) throw InvalidArgument("anchor scores need non-empty corpora");
  std::array<std::map<std::string, double>, 2> out;
  for (const ClassCorpus* corpus : {&ai, &human}) {
    auto& target = out[corpus == &ai ? 0 : 1];
    const double total = static_cast<double>(corpus->Total());
    for (const auto& [f, c] : corpus->counts) target[f] = c / total;
  }
  return out;
}

const std::vector<ScoredFeature>* AggregationIndex::Find(std::string_view group,
                                                        Authorship c) const {
  auto it = groups.find(group);
  return it == groups.end() ? nullptr : &it->second[static_cast<int>(c)];
}

json AggregationIndex::ToJson() const {
  json g = json::object();
  for (const auto& [key, lists] : groups) {
    json entry = json::object();
    for (Authorship c : {Authorship::kAI, Authorship::kHuman}) {
      json list = json::array();
      for (const auto& f : lists[static_cast<int>(c)]) {
        list.push_back({{"feature", f.feature}, {"score", f.score}, {"count", f.count}});
      }
      entry[std::string(AuthorshipName(c))] = std::move(list);
    }
    g[key] = std::move(entry);
  }
  return {{"format", "aggregation_index"},
          {"version", 1},
          {"metric", MetricName(metric)},
          {"k", k},
          {"alpha0", alpha0},
          {"groups", g}};
}

AggregationIndex AggregationIndex::FromJson(const json& j) {
  if (j.value("format", "") != "aggregation_index" || j.value("version", 0) != 1) {
    throw SchemaError("format", "expected aggregation_index version 1");
  }
  AggregationIndex index;
  index.metric = ParseMetric(j.at("metric").get<std::string>());
  index.k = j.at("k").get<int>();
  index.alpha0 = j.at("alpha0").get<double>();
  for (const auto& [key, entry] : j.at("groups").items()) {
    auto& lists = index.groups[key];
    for (Authorship c : {Authorship::kAI, Authorship::kHuman}) {
      for (const auto& f : entry.at(std::string(AuthorshipName(c)))) {
        lists[static_cast<int>(c)].push_back(
            {f.at("feature").get<std::string>(), f.at("score").get<double>(),
             f.at("count").get<int>()});
      }
    }
  }
  return index;
}

GroupedObservations CollectObservations(std::span<const UtteranceRecord> records,
                                        const TokenAttributionFn& attribute,
                                        const EmbeddingProvider& provider, const Lexicon& lexicon,
                                        const AggregationConfig& config) {
  GroupedObservations groups;
  for (const auto& record : records) {
    if (record.das.empty() || TrimAscii(record.text).empty()) continue;
    const std::vector<double> scores = attribute(record);
    const MatchResult match =
        MatchTokensToDas(record.text, record.das, provider, lexicon, config.match);
    if (scores.size() != match.tokens.size()) {
      throw InvalidArgument("attribution returned " + std::to_string(scores.size()) +
                            " scores for " + std::to_string(match.tokens.size()) + " tokens");
    }
    const auto phrases = ExtractPhrases(record.text, match, record.das, config.max_n);
    for (std::size_t d = 0; d < record.das.size(); ++d) {
      auto& bucket = groups[DaKey(record.das[d])];
      for (const auto& p : phrases[d]) bucket.push_back({p.key, PhraseScore(p, scores)});
    }
  }
  return groups;
}

namespace {

std::vector<ScoredFeature> TopK(std::vector<ScoredFeature> features, int k) {
  std::sort(features.begin(), features.end(), [](const auto& a, const auto& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.feature < b.feature;
  });
  if (static_cast<int>(features.size()) > k) features.resize(static_cast<std::size_t>(std::max(k, 0)));
  return features;
}

std::array<std::vector<ScoredFeature>, 2> ScoreGroup(const ClassCorpus& ai, const ClassCorpus& human,
                                                     const FeatureCounts& prior,
                                                     const AggregationConfig& config) {
  std::array<std::vector<ScoredFeature>, 2> out;
  const ClassCorpus* corpora[2] = {&human, &ai};  // indexed by Authorship
  if (config.metric == AggregationMetric::kAgg) {
    for (int c = 0; c < 2; ++c) {
      const double total = static_cast<double>(corpora[c]->Total());
      std::vector<ScoredFeature> features;
      for (const auto& [f, n] : corpora[c]->counts) features.push_back({f, n / total, n});
      out[c] = TopK(std::move(features), config.k);
    }
    return out;
  }
  // Frequency-weighted LOR: z_c(f) * log(1 + count_c(f)), positive only.
  const auto z_ai = LorDirichletWithPrior(ai.counts, human.counts, prior, config.alpha0);
  for (int c = 0; c < 2; ++c) {
    const double sign = c == static_cast<int>(Authorship::kAI) ? 1.0 : -1.0;
    std::vector<ScoredFeature> features;
    for (const auto& [f, n] : corpora[c]->counts) {
      const double z = sign * z_ai.at(f);
      if (z > 0) features.push_back({f, z * std::log1p(static_cast<double>(n)), n});
    }
    out[c] = TopK(std::move(features), config.k);
  }
  return out;
}

FeatureCounts PooledCounts(const GroupedObservations& groups) {
  FeatureCounts pooled;
  for (const auto& [key, obs] : groups) {
    for (const auto& o : obs) {
      if (o.score != 0) ++pooled[o.feature];
    }
  }
  return pooled;
}

}  // namespace

AggregationIndex BuildIndex(const GroupedObservations& groups, const AggregationConfig& config) {
  AggregationIndex index;
  index.metric = config.metric;
  index.k = config.k;
  index.alpha0 = config.alpha0;
  const FeatureCounts prior = PooledCounts(groups);
  for (const auto& [key, obs] : groups) {
    const auto [ai, human] = BuildClassCorpora(obs);
    if (ai.empty() && human.empty()) continue;
    index.groups.emplace(key, ScoreGroup(ai, human, prior, config));
  }
  return index;
}

AggregationIndex BuildGlobalIndex(const GroupedObservations& groups,
                                  const AggregationConfig& config) {
  GroupedObservations pooled;
  auto& all = pooled[std::string(kGlobalGroup)];
  for (const auto& [key, obs] : groups) all.insert(all.end(), obs.begin(), obs.end());
  return BuildIndex(pooled, config);
}

AggregationIndex OfflineAggregate(std::span<const UtteranceRecord> records,
                                  const TokenAttributionFn& attribute,
                                  const EmbeddingProvider& provider, const Lexicon& lexicon,
                                  const AggregationConfig& config) {
  if (records.empty()) throw InvalidArgument("aggregation over an empty dataset");
  return BuildIndex(CollectObservations(records, attribute, provider, lexicon, config), config);
}

AggregationIndex GlobalAggregate(std::span<const UtteranceRecord> records,
                                 const TokenAttributionFn& attribute,
                                 const EmbeddingProvider& provider, const Lexicon& lexicon,
                                 const AggregationConfig& config) {
  if (records.empty()) throw InvalidArgument("aggregation over an empty dataset");
  return BuildGlobalIndex(CollectObservations(records, attribute, provider, lexicon, config),
                          config);
}

SemiGlobalResult OnlineSemiGlobal(std::span<const std::string> target_da_keys, Authorship c,
                                  const AggregationIndex& index) {
  SemiGlobalResult s;
  for (const auto& da : target_da_keys) {
    const auto* list = index.Find(da, c);
    if (!list) continue;
    for (const auto& [f, score, count] : *list) s[f] += score;
  }
  return s;
}

std::vector<std::pair<std::string, double>> RankFeatures(const SemiGlobalResult& result) {
  std::vector<std::pair<std::string, double>> ranked(result.begin(), result.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  return ranked;
}

std::vector<std::pair<std::string, double>> GlobalRanking(const AggregationIndex& index,
                                                          Authorship c) {
  std::vector<std::pair<std::string, double>> ranked;
  if (const auto* list = index.Find(kGlobalGroup, c)) {
    for (const auto& f : *list) ranked.emplace_back(f.feature, f.score);
  }
  return ranked;
}

}  // namespace turnlens
