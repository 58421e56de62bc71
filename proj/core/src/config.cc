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

#include "turnlens/config.h"

#include <fstream>

#include "turnlens/errors.h"

namespace turnlens {

using nlohmann::json;

namespace {

json TermsToJson(const TermWeightConfig& c) {
  return {{"ngram_min", c.ngram_min},
          {"ngram_max", c.ngram_max},
          {"lowercase", c.lowercase},
          {"l2_normalize", c.l2_normalize}};
}

TermWeightConfig TermsFromJson(const json& j) {
  TermWeightConfig c;
  c.ngram_min = j.at("ngram_min").get<int>();
  c.ngram_max = j.at("ngram_max").get<int>();
  c.lowercase = j.at("lowercase").get<bool>();
  c.l2_normalize = j.at("l2_normalize").get<bool>();
  if (c.ngram_min < 1 || c.ngram_max < c.ngram_min) {
    throw SchemaError("ngram_min", "expected 1 <= ngram_min <= ngram_max");
  }
  return c;
}

json ModelToJson(const NativeModelConfig& c) {
  json j = NativeModelConfigToJson(c);
  j.erase("seed");
  return j;
}

json TurnToJson(const TurnDetectorConfig& c) {
  return {{"terms", TermsToJson(c.terms)}, {"model", ModelToJson(c.model)}};
}

TurnDetectorConfig TurnFromJson(const json& j, std::uint64_t seed) {
  TurnDetectorConfig c;
  c.terms = TermsFromJson(j.at("terms"));
  c.model = NativeModelConfigFromJson(j.at("model"));
  c.model.seed = seed;
  return c;
}

// Reports the first key of `given` absent from `schema`, recursing into
// objects. Arrays and scalars are leaves.
void CheckKeys(const json& schema, const json& given, const std::string& prefix) {
  if (!given.is_object()) throw SchemaError(prefix.empty() ? "<root>" : prefix, "expected an object");
  for (const auto& [key, value] : given.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    auto it = schema.find(key);
    if (it == schema.end()) throw SchemaError(path, "unknown configuration key");
    if (it->is_object()) {
      CheckKeys(*it, value, path);
    } else if (value.is_object()) {
      throw SchemaError(path, "expected a scalar or array");
    }
  }
}

void MergeInto(json& base, const json& patch) {
  for (const auto& [key, value] : patch.items()) {
    if (value.is_object() && base[key].is_object()) {
      MergeInto(base[key], value);
    } else {
      base[key] = value;
    }
  }
}

template <typename T>
T Get(const json& j, const char* key, const std::string& path) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw SchemaError(path.empty() ? key : path + "." + key, e.what());
  }
}

}  // namespace

json DefaultConfigJson() { return ConfigToJson(PipelineConfig{}); }

json ConfigToJson(const PipelineConfig& c) {
  return {
      {"seed", c.seed},
      {"split", {{"train", c.split.train}, {"val", c.split.val}, {"test", c.split.test}}},
      {"token_detector", TurnToJson(c.token_detector)},
      {"da_detector", TurnToJson(c.da_detector)},
      {"dialogue",
       {{"fusion", FusionName(c.dialogue.fusion)},
        {"fused_width", c.dialogue.fused_width},
        {"token_terms", TermsToJson(c.dialogue.token_terms)},
        {"da_terms", TermsToJson(c.dialogue.da_terms)},
        {"model", ModelToJson(c.dialogue.model)}}},
      {"attribution",
       {{"estimator", EstimatorName(c.attribution.estimator)},
        {"faithshap_budget", c.attribution.faithshap_budget},
        {"stii_budget", c.attribution.stii_budget},
        {"ig_steps", c.attribution.ig_steps}}},
      {"selection", {{"k_tokens", c.k_tokens}, {"k_das", c.k_das}}},
      {"aggregation",
       {{"metric", MetricName(c.aggregation.metric)},
        {"k", c.aggregation.k},
        {"max_n", c.aggregation.max_n},
        {"alpha0", c.aggregation.alpha0},
        {"csls_k", c.aggregation.match.k},
        {"theta", c.aggregation.match.theta}}},
      {"embedding_dimension", c.embedding_dimension},
      {"da_provider", c.da_provider},
      {"keyword_rules_path", c.keyword_rules_path},
      {"lexicon_path", c.lexicon_path},
      {"template_path", c.template_path},
      {"report", {{"features", c.report_features}, {"wordcloud_k_merge", c.wordcloud_k_merge}}},
      {"evaluation",
       {{"aopc_k_max", c.aopc_k_max},
        {"aopc_skip_absent", c.aopc_skip_absent},
        {"timing_samples", c.timing_samples}}},
  };
}

PipelineConfig ConfigFromJson(const json& given) {
  const json defaults = DefaultConfigJson();
  CheckKeys(defaults, given, "");
  json j = defaults;
  MergeInto(j, given);

  PipelineConfig c;
  try {
    c.seed = Get<std::uint64_t>(j, "seed", "");
    const json& s = j.at("split");
    c.split = {Get<double>(s, "train", "split"), Get<double>(s, "val", "split"),
               Get<double>(s, "test", "split")};
    c.token_detector = TurnFromJson(j.at("token_detector"), c.seed);
    c.da_detector = TurnFromJson(j.at("da_detector"), c.seed);
    const json& d = j.at("dialogue");
    c.dialogue.fusion = ParseFusion(Get<std::string>(d, "fusion", "dialogue"));
    c.dialogue.fused_width = Get<int>(d, "fused_width", "dialogue");
    c.dialogue.token_terms = TermsFromJson(d.at("token_terms"));
    c.dialogue.da_terms = TermsFromJson(d.at("da_terms"));
    c.dialogue.model = NativeModelConfigFromJson(d.at("model"));
    c.dialogue.model.seed = c.seed;
    const json& a = j.at("attribution");
    c.attribution.estimator = ParseEstimator(Get<std::string>(a, "estimator", "attribution"));
    c.attribution.faithshap_budget = Get<int>(a, "faithshap_budget", "attribution");
    c.attribution.stii_budget = Get<int>(a, "stii_budget", "attribution");
    c.attribution.ig_steps = Get<int>(a, "ig_steps", "attribution");
    c.attribution.seed = c.seed;
    c.k_tokens = Get<int>(j.at("selection"), "k_tokens", "selection");
    c.k_das = Get<int>(j.at("selection"), "k_das", "selection");
    const json& g = j.at("aggregation");
    c.aggregation.metric = ParseMetric(Get<std::string>(g, "metric", "aggregation"));
    c.aggregation.k = Get<int>(g, "k", "aggregation");
    c.aggregation.max_n = Get<int>(g, "max_n", "aggregation");
    c.aggregation.alpha0 = Get<double>(g, "alpha0", "aggregation");
    c.aggregation.match.k = Get<int>(g, "csls_k", "aggregation");
    c.aggregation.match.theta = Get<double>(g, "theta", "aggregation");
    c.embedding_dimension = Get<int>(j, "embedding_dimension", "");
    c.da_provider = Get<std::string>(j, "da_provider", "");
    c.keyword_rules_path = Get<std::string>(j, "keyword_rules_path", "");
    c.lexicon_path = Get<std::string>(j, "lexicon_path", "");
    c.template_path = Get<std::string>(j, "template_path", "");
    c.report_features = Get<int>(j.at("report"), "features", "report");
    c.wordcloud_k_merge = Get<int>(j.at("report"), "wordcloud_k_merge", "report");
    const json& e = j.at("evaluation");
    c.aopc_k_max = Get<int>(e, "aopc_k_max", "evaluation");
    c.aopc_skip_absent = Get<bool>(e, "aopc_skip_absent", "evaluation");
    c.timing_samples = Get<int>(e, "timing_samples", "evaluation");
  } catch (const InvalidArgument& e) {
    throw SchemaError("config", e.what());
  }
  if (c.k_tokens < 0 || c.k_das < 0) throw SchemaError("selection", "k must be non-negative");
  if (c.aggregation.k < 1) throw SchemaError("aggregation.k", "must be positive");
  if (c.aggregation.max_n < 1) throw SchemaError("aggregation.max_n", "must be positive");
  if (c.aopc_k_max < 1) throw SchemaError("evaluation.aopc_k_max", "must be positive");
  if (c.timing_samples < 1) throw SchemaError("evaluation.timing_samples", "must be positive");
  if (c.da_provider != "annotation" && c.da_provider != "keyword") {
    throw SchemaError("da_provider", "expected \"annotation\" or \"keyword\"");
  }
  return c;
}

void ApplyOverride(json& j, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw SchemaError(std::string(assignment), "override must look like key=value");
  }
  const std::string path(assignment.substr(0, eq));
  const std::string raw(assignment.substr(eq + 1));
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;

  const json defaults = DefaultConfigJson();
  const json* schema = &defaults;
  json* target = &j;
  std::size_t start = 0;
  for (;;) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos
                                                                         : dot - start);
    auto it = schema->find(key);
    if (it == schema->end()) throw SchemaError(path, "unknown configuration key");
    if (dot == std::string::npos) {
      if (it->is_object()) throw SchemaError(path, "cannot override a whole section");
      (*target)[key] = value;
      return;
    }
    schema = &*it;
    if (!target->contains(key) || !(*target)[key].is_object()) (*target)[key] = json::object();
    target = &(*target)[key];
    start = dot + 1;
  }
}

PipelineConfig LoadConfig(const std::filesystem::path& path,
                          std::span<const std::string> overrides) {
  json j = json::object();
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("config: ") + e.what(), 0);
    }
  }
  for (const auto& o : overrides) ApplyOverride(j, o);
  return ConfigFromJson(j);
}

}  // namespace turnlens
