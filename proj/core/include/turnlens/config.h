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

// Pipeline configuration: a single JSON document with defaults for every key.
// Unknown keys are rejected with the full key path; dotted overrides such as
// "attribution.estimator=stii" are applied on top.

#ifndef TURNLENS_CONFIG_H_
#define TURNLENS_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "turnlens/aggregation.h"
#include "turnlens/attribution.h"
#include "turnlens/corpus.h"
#include "turnlens/detector.h"

namespace turnlens {

inline constexpr std::uint64_t kDefaultSeed = 2025;

struct PipelineConfig {
  std::uint64_t seed = kDefaultSeed;
  SplitRatios split;
  TurnDetectorConfig token_detector = DefaultTurnDetectorConfig(Dimension::kTokens);
  TurnDetectorConfig da_detector = DefaultTurnDetectorConfig(Dimension::kDas);
  DialogueDetectorConfig dialogue;
  AttributionConfig attribution;
  int k_tokens = 3;
  int k_das = 3;
  AggregationConfig aggregation;
  int embedding_dimension = 256;
  std::string da_provider = "annotation";  // annotation | keyword
  std::string keyword_rules_path;          // required by the keyword provider
  std::string lexicon_path;                // empty: built-in lexicon
  std::string template_path;               // empty: built-in template
  int report_features = 10;                // semi-global features per class in a report
  int wordcloud_k_merge = 2;
  int aopc_k_max = 20;
  bool aopc_skip_absent = false;
  int timing_samples = 100;
};

// Every key with its default value.
nlohmann::json DefaultConfigJson();

// Missing keys take defaults. Throws SchemaError naming the first unknown or
// ill-typed key. All seeds are taken from the top-level "seed".
PipelineConfig ConfigFromJson(const nlohmann::json& j);
nlohmann::json ConfigToJson(const PipelineConfig& config);

// "a.b.c=value"; value is parsed as JSON, falling back to a plain string.
// Throws SchemaError if the path is not a known key.
void ApplyOverride(nlohmann::json& j, std::string_view assignment);

// An empty path means defaults only.
PipelineConfig LoadConfig(const std::filesystem::path& path,
                          std::span<const std::string> overrides = {});

}  // namespace turnlens

#endif  // TURNLENS_CONFIG_H_
