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

// Word-cloud post-processing of ranked phrases: duplicate filtering,
// end-overlap merging and display weights.

#ifndef TURNLENS_WORDCLOUD_H_
#define TURNLENS_WORDCLOUD_H_

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace turnlens {

struct RankedPhrase {
  std::string phrase;
  double score = 0.0;
  int frequency = 1;
};

struct CloudEntry {
  std::string phrase;
  double score = 0.0;
  int frequency = 1;
  int token_count = 0;
  double weight = 0.0;

  bool operator==(const CloudEntry&) const = default;
};

// Keeps a phrase unless it both contains another phrase and is contained in
// another phrase. Containment is token-contiguous and case-insensitive.
std::vector<RankedPhrase> FilterDuplicatePhrases(const std::vector<RankedPhrase>& phrases);

// Merges pairs whose suffix/prefix overlap spans at least k_merge tokens,
// until no pair qualifies. Merged entries take the max score and frequency.
std::vector<RankedPhrase> MergeOverlappingPhrases(std::vector<RankedPhrase> phrases,
                                                  int k_merge = 2);

// score * log(1 + frequency) * (1 + 0.1 * token_count)
double CloudWeight(double score, int frequency, int token_count);

// Filter, merge, weight; sorted by descending weight then phrase.
std::vector<CloudEntry> PrepareWordCloud(const std::vector<RankedPhrase>& phrases,
                                         int k_merge = 2);

nlohmann::json CloudToJson(const std::vector<CloudEntry>& entries);
std::vector<CloudEntry> CloudFromJson(const nlohmann::json& j);

}  // namespace turnlens

#endif  // TURNLENS_WORDCLOUD_H_
