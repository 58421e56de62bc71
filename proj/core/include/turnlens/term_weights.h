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

// TF-IDF term weighting over word n-grams, with a sparse vector type used as
// the input representation of every native classifier.

#ifndef TURNLENS_TERM_WEIGHTS_H_
#define TURNLENS_TERM_WEIGHTS_H_

#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace turnlens {

// Sorted by index, no duplicate indices.
struct SparseVector {
  int dimension = 0;
  std::vector<std::pair<int, double>> entries;

  bool operator==(const SparseVector&) const = default;
  std::vector<double> ToDense() const;
  static SparseVector FromDense(std::span<const double> dense);
};

struct TermWeightConfig {
  int ngram_min = 1;
  int ngram_max = 2;
  bool lowercase = true;
  bool l2_normalize = true;

  bool operator==(const TermWeightConfig&) const = default;
};

// Calls fn(term, first_token, last_token) for every n-gram occurrence, with
// n-grams joined by a single space.
void ForEachNgram(std::span<const std::string> tokens, const TermWeightConfig& config,
                  const std::function<void(const std::string&, int, int)>& fn);

// Vocabulary and idf are fixed after Fit. idf(t) = ln((1 + N) / (1 + df(t))) + 1.
class TermWeightModel {
 public:
  TermWeightModel() = default;

  // Each document is a pre-tokenized term sequence. Throws InvalidArgument on
  // an empty document list.
  static TermWeightModel Fit(const std::vector<std::vector<std::string>>& docs,
                             const TermWeightConfig& config);
  static TermWeightModel FitTexts(const std::vector<std::string>& texts,
                                  const TermWeightConfig& config);

  SparseVector Embed(std::span<const std::string> tokens) const;
  SparseVector EmbedText(std::string_view text) const;

  int dimension() const { return static_cast<int>(terms_.size()); }
  const TermWeightConfig& config() const { return config_; }
  const std::vector<std::string>& terms() const { return terms_; }
  const std::vector<double>& idf() const { return idf_; }
  // Column index, or -1 when out of vocabulary.
  int Column(std::string_view term) const;
  std::string VocabHash() const;

  nlohmann::json ToJson() const;
  static TermWeightModel FromJson(const nlohmann::json& j);

 private:
  TermWeightConfig config_;
  std::vector<std::string> terms_;
  std::vector<double> idf_;
  std::map<std::string, int, std::less<>> columns_;
};

}  // namespace turnlens

#endif  // TURNLENS_TERM_WEIGHTS_H_
