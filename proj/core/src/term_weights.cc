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

#include "turnlens/term_weights.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "turnlens/errors.h"
#include "turnlens/features.h"
#include "turnlens/text_util.h"

namespace turnlens {

using nlohmann::json;

std::vector<double> SparseVector::ToDense() const {
  std::vector<double> dense(static_cast<std::size_t>(dimension), 0.0);
  for (const auto& [i, v] : entries) dense[static_cast<std::size_t>(i)] = v;
  return dense;
}

SparseVector SparseVector::FromDense(std::span<const double> dense) {
  SparseVector out;
  out.dimension = static_cast<int>(dense.size());
  for (std::size_t i = 0; i < dense.size(); ++i) {
    if (dense[i] != 0.0) out.entries.emplace_back(static_cast<int>(i), dense[i]);
  }
  return out;
}

void ForEachNgram(std::span<const std::string> tokens, const TermWeightConfig& config,
                  const std::function<void(const std::string&, int, int)>& fn) {
  const int n_tokens = static_cast<int>(tokens.size());
  std::vector<std::string> normalized;
  normalized.reserve(tokens.size());
  for (const auto& t : tokens) {
    normalized.push_back(config.lowercase ? ToLowerAscii(t) : t);
  }
  std::string term;
  for (int n = config.ngram_min; n <= config.ngram_max; ++n) {
    for (int first = 0; first + n <= n_tokens; ++first) {
      term = normalized[static_cast<std::size_t>(first)];
      for (int k = 1; k < n; ++k) {
        term.push_back(' ');
        term += normalized[static_cast<std::size_t>(first + k)];
      }
      fn(term, first, first + n - 1);
    }
  }
}

namespace {

void ValidateConfig(const TermWeightConfig& config) {
  if (config.ngram_min < 1 || config.ngram_max < config.ngram_min) {
    throw InvalidArgument("invalid n-gram range");
  }
}

}  // namespace

TermWeightModel TermWeightModel::Fit(const std::vector<std::vector<std::string>>& docs,
                                     const TermWeightConfig& config) {
  ValidateConfig(config);
  if (docs.empty()) throw InvalidArgument("cannot fit term weights on an empty corpus");
  std::map<std::string, int, std::less<>> df;
  for (const auto& doc : docs) {
    std::set<std::string> seen;
    ForEachNgram(doc, config, [&](const std::string& term, int, int) {
      if (seen.insert(term).second) ++df[term];
    });
  }
  TermWeightModel model;
  model.config_ = config;
  const double n_docs = static_cast<double>(docs.size());
  for (const auto& [term, count] : df) {
    model.columns_.emplace(term, static_cast<int>(model.terms_.size()));
    model.terms_.push_back(term);
    model.idf_.push_back(std::log((1.0 + n_docs) / (1.0 + count)) + 1.0);
  }
  return model;
}

TermWeightModel TermWeightModel::FitTexts(const std::vector<std::string>& texts,
                                          const TermWeightConfig& config) {
  std::vector<std::vector<std::string>> docs;
  docs.reserve(texts.size());
  for (const auto& t : texts) docs.push_back(Surfaces(Tokenize(t)));
  return Fit(docs, config);
}

int TermWeightModel::Column(std::string_view term) const {
  auto it = columns_.find(term);
  return it == columns_.end() ? -1 : it->second;
}

SparseVector TermWeightModel::Embed(std::span<const std::string> tokens) const {
  std::map<int, double> counts;
  ForEachNgram(tokens, config_, [&](const std::string& term, int, int) {
    if (int col = Column(term); col >= 0) counts[col] += 1.0;
  });
  SparseVector out;
  out.dimension = dimension();
  double norm2 = 0.0;
  for (const auto& [col, tf] : counts) {
    const double w = tf * idf_[static_cast<std::size_t>(col)];
    out.entries.emplace_back(col, w);
    norm2 += w * w;
  }
  if (config_.l2_normalize && norm2 > 0.0) {
    const double inv = 1.0 / std::sqrt(norm2);
    for (auto& e : out.entries) e.second *= inv;
  }
  return out;
}

SparseVector TermWeightModel::EmbedText(std::string_view text) const {
  return Embed(Surfaces(Tokenize(text)));
}

std::string TermWeightModel::VocabHash() const {
  std::uint64_t h = Fnv1a64("");
  for (const auto& t : terms_) {
    h = Fnv1a64(t, h);
    h = Fnv1a64(std::string_view("\n"), h);
  }
  return HexU64(h);
}

json TermWeightModel::ToJson() const {
  return {{"format", "term_weights"},
          {"version", 1},
          {"config",
           {{"ngram_min", config_.ngram_min},
            {"ngram_max", config_.ngram_max},
            {"lowercase", config_.lowercase},
            {"l2_normalize", config_.l2_normalize}}},
          {"vocabulary", terms_},
          {"idf", idf_}};
}

TermWeightModel TermWeightModel::FromJson(const json& j) {
  if (j.value("format", "") != "term_weights" || j.value("version", 0) != 1) {
    throw SchemaError("format", "expected term_weights version 1");
  }
  TermWeightModel model;
  const json& c = j.at("config");
  model.config_.ngram_min = c.at("ngram_min").get<int>();
  model.config_.ngram_max = c.at("ngram_max").get<int>();
  model.config_.lowercase = c.at("lowercase").get<bool>();
  model.config_.l2_normalize = c.at("l2_normalize").get<bool>();
  ValidateConfig(model.config_);
  model.terms_ = j.at("vocabulary").get<std::vector<std::string>>();
  model.idf_ = j.at("idf").get<std::vector<double>>();
  if (model.terms_.size() != model.idf_.size()) {
    throw SchemaError("idf", "length differs from vocabulary");
  }
  for (std::size_t i = 0; i < model.terms_.size(); ++i) {
    if (!std::isfinite(model.idf_[i]) || model.idf_[i] < 0) {
      throw SchemaError("idf", "weights must be finite and non-negative");
    }
    model.columns_.emplace(model.terms_[i], static_cast<int>(i));
  }
  return model;
}

}  // namespace turnlens
