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

#include "turnlens/detector.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "turnlens/errors.h"
#include "turnlens/metrics.h"

namespace turnlens {

using nlohmann::json;

std::string_view DimensionName(Dimension d) { return d == Dimension::kTokens ? "tokens" : "das"; }

Dimension ParseDimension(std::string_view name) {
  if (name == "tokens") return Dimension::kTokens;
  if (name == "das") return Dimension::kDas;
  throw InvalidArgument("unknown dimension \"" + std::string(name) + "\"");
}

std::string_view FusionName(Fusion f) {
  switch (f) {
    case Fusion::kAverage: return "average";
    case Fusion::kConcatenate: return "concatenate";
    case Fusion::kMax: return "max";
  }
  return "average";
}

Fusion ParseFusion(std::string_view name) {
  if (name == "average") return Fusion::kAverage;
  if (name == "concatenate") return Fusion::kConcatenate;
  if (name == "max") return Fusion::kMax;
  throw InvalidArgument("unknown fusion \"" + std::string(name) + "\"");
}

TurnDetectorConfig DefaultTurnDetectorConfig(Dimension d) {
  TurnDetectorConfig config;
  if (d == Dimension::kTokens) config.model.l2 = 3e-2;
  if (d == Dimension::kDas) {
    config.terms = {.ngram_min = 1, .ngram_max = 1, .lowercase = false, .l2_normalize = true};
  }
  return config;
}

namespace {

std::vector<std::string> SampleTerms(const TurnSample& s, Dimension d) {
  return d == Dimension::kTokens ? Surfaces(Tokenize(s.text)) : s.da_keys;
}

json TermConfigToJson(const TermWeightConfig& c) {
  return {{"ngram_min", c.ngram_min},
          {"ngram_max", c.ngram_max},
          {"lowercase", c.lowercase},
          {"l2_normalize", c.l2_normalize}};
}

TermWeightConfig TermConfigFromJson(const json& j) {
  return {.ngram_min = j.at("ngram_min").get<int>(),
          .ngram_max = j.at("ngram_max").get<int>(),
          .lowercase = j.at("lowercase").get<bool>(),
          .l2_normalize = j.at("l2_normalize").get<bool>()};
}

SparseVector DenseAsSparse(std::span<const double> v) {
  SparseVector out;
  out.dimension = static_cast<int>(v.size());
  out.entries.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out.entries.emplace_back(static_cast<int>(i), v[i]);
  return out;
}

}  // namespace

TurnDetector::TurnDetector(Dimension dimension, TermWeightModel terms, NativeModel model)
    : dimension_(dimension), terms_(std::move(terms)), model_(std::move(model)) {
  if (terms_.dimension() != model_.input_dimension()) {
    throw InvalidArgument("term model and classifier dimensions differ");
  }
}

TurnDetector TurnDetector::Train(const std::vector<TurnSample>& train,
                                 const std::vector<TurnSample>& val, Dimension dimension,
                                 const TurnDetectorConfig& config, TurnTrainingReport* report) {
  bool has_ai = false, has_human = false;
  for (const auto& s : train) (s.label == Authorship::kAI ? has_ai : has_human) = true;
  if (!has_ai || !has_human) {
    throw InvalidArgument("turn detector training needs samples of both classes");
  }
  std::vector<std::vector<std::string>> docs;
  docs.reserve(train.size());
  for (const auto& s : train) docs.push_back(SampleTerms(s, dimension));
  TermWeightModel terms = TermWeightModel::Fit(docs, config.terms);

  std::vector<LabeledVector> vectors;
  vectors.reserve(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) {
    vectors.push_back({terms.Embed(docs[i]), train[i].label});
  }
  TrainingReport tr;
  NativeModel model = NativeModel::Train(vectors, terms.dimension(), config.model, &tr);
  TurnDetector detector(dimension, std::move(terms), std::move(model));
  if (report) {
    report->final_loss = tr.final_loss;
    report->val_macro_f1 = std::numeric_limits<double>::quiet_NaN();
    if (!val.empty()) {
      std::vector<Authorship> pred, gold;
      for (const auto& s : val) {
        pred.push_back(detector.PredictSample(s).Argmax());
        gold.push_back(s.label);
      }
      report->val_macro_f1 = MacroF1(pred, gold);
    }
  }
  return detector;
}

int TurnDetector::NumFeatures(const FeatureSet& fs) const {
  return dimension_ == Dimension::kTokens ? fs.num_tokens() : fs.num_das();
}

std::vector<std::string> TurnDetector::Terms(const FeatureSet& fs,
                                             std::span<const char> kept) const {
  if (static_cast<int>(kept.size()) != NumFeatures(fs)) {
    throw InvalidArgument("kept flags do not match the feature count");
  }
  std::vector<std::string> out;
  if (dimension_ == Dimension::kTokens) {
    out.reserve(fs.tokens().size());
    for (std::size_t i = 0; i < fs.tokens().size(); ++i) {
      out.push_back(kept[i] ? fs.tokens()[i].surface : std::string(kMaskToken));
    }
  } else {
    out = KeptDaKeys(fs, kept);
  }
  return out;
}

SparseVector TurnDetector::Vectorize(const FeatureSet& fs, std::span<const char> kept) const {
  return terms_.Embed(Terms(fs, kept));
}

SparseVector TurnDetector::Vectorize(const FeatureSet& fs) const {
  const auto& state = fs.mask_state();
  std::vector<char> kept;
  const int offset = dimension_ == Dimension::kTokens ? 0 : fs.num_tokens();
  for (int i = 0; i < NumFeatures(fs); ++i) {
    kept.push_back(state[static_cast<std::size_t>(offset + i)] ? 1 : 0);
  }
  return Vectorize(fs, kept);
}

ProbPair TurnDetector::Predict(const FeatureSet& fs) const {
  return model_.Predict(Vectorize(fs));
}

ProbPair TurnDetector::PredictVector(const SparseVector& x) const {
  if (x.dimension != terms_.dimension()) {
    throw InvalidArgument("input of dimension " + std::to_string(x.dimension) +
                          " given to a " + std::string(DimensionName(dimension_)) +
                          " detector of dimension " + std::to_string(terms_.dimension()));
  }
  return model_.Predict(x);
}

ProbPair TurnDetector::PredictSample(const TurnSample& sample) const {
  return model_.Predict(terms_.Embed(SampleTerms(sample, dimension_)));
}

json TurnDetector::ToJson() const {
  return {{"format", "turn_detector"},
          {"version", 1},
          {"dimension", DimensionName(dimension_)},
          {"vocab_hash", terms_.VocabHash()},
          {"terms", terms_.ToJson()},
          {"model", model_.ToJson()}};
}

TurnDetector TurnDetector::FromJson(const json& j) {
  if (j.value("format", "") != "turn_detector" || j.value("version", 0) != 1) {
    throw SchemaError("format", "expected turn_detector version 1");
  }
  TermWeightModel terms = TermWeightModel::FromJson(j.at("terms"));
  if (terms.VocabHash() != j.at("vocab_hash").get<std::string>()) {
    throw SchemaError("vocab_hash", "vocabulary does not match its recorded hash");
  }
  return TurnDetector(ParseDimension(j.at("dimension").get<std::string>()), std::move(terms),
                      NativeModel::FromJson(j.at("model")));
}

std::vector<double> Fuse(Fusion fusion, std::span<const double> a, std::span<const double> b) {
  std::vector<double> out;
  switch (fusion) {
    case Fusion::kConcatenate:
      out.assign(a.begin(), a.end());
      out.insert(out.end(), b.begin(), b.end());
      return out;
    case Fusion::kAverage:
    case Fusion::kMax:
      if (a.size() != b.size()) {
        throw InvalidArgument("average/max fusion requires equal branch widths");
      }
      out.resize(a.size());
      for (std::size_t i = 0; i < a.size(); ++i) {
        out[i] = fusion == Fusion::kAverage ? 0.5 * (a[i] + b[i]) : std::max(a[i], b[i]);
      }
      return out;
  }
  return out;
}

std::string DialogueDetector::ConcatText(std::span<const TurnSelection> turns) {
  std::string out;
  for (const auto& t : turns) {
    if (!out.empty()) out.push_back(' ');
    out += t.masked_text;
  }
  return out;
}

std::vector<std::string> DialogueDetector::ConcatDaKeys(std::span<const TurnSelection> turns) {
  std::vector<std::string> out;
  for (const auto& t : turns) out.insert(out.end(), t.kept_da_keys.begin(), t.kept_da_keys.end());
  return out;
}

std::vector<double> DialogueDetector::EncodeBranch(const Branch& branch,
                                                   const SparseVector& x) const {
  std::vector<double> h = branch.encoder.Forward(x);
  if (branch.projection.empty()) return h;
  return branch.projection.Forward(DenseAsSparse(h));
}

DialoguePrediction DialogueDetector::Detect(std::span<const TurnSelection> turns) const {
  if (turns.empty()) throw InvalidArgument("dialogue detection needs at least one turn");
  const std::vector<std::string> tokens = Surfaces(Tokenize(ConcatText(turns)));
  const std::vector<std::string> das = ConcatDaKeys(turns);
  if (tokens.empty() && das.empty()) {
    throw InvalidArgument("both dialogue branches are empty");
  }
  const auto a = EncodeBranch(token_, token_.terms.Embed(tokens));
  const auto b = EncodeBranch(da_, da_.terms.Embed(das));
  const auto fused = Fuse(config_.fusion, a, b);
  const double z = head_.Forward(std::span<const double>(fused))[0];
  DialoguePrediction p;
  p.probs = ProbFromLogit(z);
  p.label = p.probs.Argmax();
  return p;
}

DialogueDetector DialogueDetector::Train(const std::vector<DialogueSample>& samples,
                                         const DialogueDetectorConfig& config,
                                         TrainingReport* report) {
  bool has_ai = false, has_human = false;
  for (const auto& s : samples) (s.label == Authorship::kAI ? has_ai : has_human) = true;
  if (!has_ai || !has_human) {
    throw InvalidArgument("dialogue detector training needs samples of both classes");
  }
  if (config.model.hidden_sizes.empty()) {
    throw InvalidArgument("dialogue detector branches need at least one hidden layer");
  }

  std::vector<std::vector<std::string>> token_docs, da_docs;
  for (const auto& s : samples) {
    token_docs.push_back(Surfaces(Tokenize(ConcatText(s.turns))));
    da_docs.push_back(ConcatDaKeys(s.turns));
  }
  // Guarantees "<mask>" is a column even if no training text contains it.
  token_docs.push_back({std::string(kMaskToken)});
  DialogueDetector dd;
  dd.config_ = config;
  dd.token_.terms = TermWeightModel::Fit(token_docs, config.token_terms);
  dd.da_.terms = TermWeightModel::Fit(da_docs, config.da_terms);
  token_docs.pop_back();

  std::mt19937_64 rng(config.model.seed);
  dd.token_.encoder = InitHiddenStack(dd.token_.terms.dimension(), config.model.hidden_sizes, rng);
  dd.da_.encoder = InitHiddenStack(dd.da_.terms.dimension(), config.model.hidden_sizes, rng);
  const int enc = config.model.hidden_sizes.back();
  int head_in = 2 * enc;
  if (config.fusion != Fusion::kConcatenate) {
    dd.token_.projection = nn::Stack(
        {nn::Dense::Init(enc, config.fused_width, nn::Activation::kIdentity, rng)});
    dd.da_.projection = nn::Stack(
        {nn::Dense::Init(enc, config.fused_width, nn::Activation::kIdentity, rng)});
    head_in = config.fused_width;
  }
  nn::Stack head({nn::Dense::Init(head_in, 1, nn::Activation::kIdentity, rng)});

  std::vector<SparseVector> xt, xd;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    xt.push_back(dd.token_.terms.Embed(token_docs[i]));
    xd.push_back(dd.da_.terms.Embed(da_docs[i]));
  }

  std::vector<nn::Stack*> stacks = {&dd.token_.encoder, &dd.da_.encoder, &dd.token_.projection,
                                    &dd.da_.projection, &head};
  std::vector<std::span<double>> params;
  for (auto* s : stacks) nn::AppendParams(*s, &params);
  nn::Adam adam(params, {.learning_rate = config.model.learning_rate});
  std::vector<std::vector<nn::DenseGrad>> grads;
  for (auto* s : stacks) grads.push_back(s->MakeGrads());

  const double inv_n = 1.0 / static_cast<double>(samples.size());
  double loss = 0.0;
  nn::Stack::Cache ct, cd, cpt, cpd, ch;
  for (int epoch = 0; epoch < config.model.epochs; ++epoch) {
    for (auto& gs : grads) {
      for (auto& g : gs) g.Zero();
    }
    loss = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const double y = samples[i].label == Authorship::kAI ? 1.0 : 0.0;
      const auto ht = dd.token_.encoder.Forward(xt[i], &ct);
      const auto hd = dd.da_.encoder.Forward(xd[i], &cd);
      const SparseVector st = DenseAsSparse(ht), sd = DenseAsSparse(hd);
      std::vector<double> pt = ht, pd = hd;
      if (config.fusion != Fusion::kConcatenate) {
        pt = dd.token_.projection.Forward(st, &cpt);
        pd = dd.da_.projection.Forward(sd, &cpd);
      }
      const auto fused = Fuse(config.fusion, pt, pd);
      const SparseVector sf = DenseAsSparse(fused);
      const double z = head.Forward(sf, &ch)[0];
      loss += (nn::Softplus(z) - y * z) * inv_n;

      std::vector<double> d_fused;
      head.Backward(sf, ch, {(nn::Sigmoid(z) - y) * inv_n}, &grads[4], &d_fused);
      std::vector<double> d_pt(pt.size()), d_pd(pd.size());
      for (std::size_t k = 0; k < pt.size(); ++k) {
        if (config.fusion == Fusion::kConcatenate) {
          d_pt[k] = d_fused[k];
        } else if (config.fusion == Fusion::kAverage) {
          d_pt[k] = 0.5 * d_fused[k];
          d_pd[k] = 0.5 * d_fused[k];
        } else {
          (pt[k] >= pd[k] ? d_pt[k] : d_pd[k]) = d_fused[k];
        }
      }
      if (config.fusion == Fusion::kConcatenate) {
        for (std::size_t k = 0; k < pd.size(); ++k) d_pd[k] = d_fused[pt.size() + k];
      }
      std::vector<double> d_ht = d_pt, d_hd = d_pd;
      if (config.fusion != Fusion::kConcatenate) {
        dd.token_.projection.Backward(st, cpt, d_pt, &grads[2], &d_ht);
        dd.da_.projection.Backward(sd, cpd, d_pd, &grads[3], &d_hd);
      }
      dd.token_.encoder.Backward(xt[i], ct, d_ht, &grads[0], nullptr);
      dd.da_.encoder.Backward(xd[i], cd, d_hd, &grads[1], nullptr);
    }
    std::vector<std::span<const double>> flat;
    for (std::size_t s = 0; s < stacks.size(); ++s) {
      loss += 0.5 * config.model.l2 * nn::SquaredWeightNorm(*stacks[s]);
      nn::AddWeightDecay(*stacks[s], config.model.l2, &grads[s]);
      nn::AppendGrads(grads[s], &flat);
    }
    adam.Step(flat);
  }
  dd.head_ = head.layers()[0];
  if (report) {
    report->final_loss = loss;
    report->epochs = config.model.epochs;
  }
  return dd;
}

json DialogueDetector::ToJson() const {
  auto branch = [](const Branch& b) {
    return json{{"vocab_hash", b.terms.VocabHash()},
                {"terms", b.terms.ToJson()},
                {"encoder", b.encoder.ToJson()},
                {"projection", b.projection.ToJson()}};
  };
  return {{"format", "dialogue_detector"},
          {"version", 1},
          {"fusion", FusionName(config_.fusion)},
          {"fused_width", config_.fused_width},
          {"token_terms_config", TermConfigToJson(config_.token_terms)},
          {"da_terms_config", TermConfigToJson(config_.da_terms)},
          {"model_config", NativeModelConfigToJson(config_.model)},
          {"token_branch", branch(token_)},
          {"da_branch", branch(da_)},
          {"head", nn::Stack({head_}).ToJson()}};
}

DialogueDetector DialogueDetector::FromJson(const json& j) {
  if (j.value("format", "") != "dialogue_detector" || j.value("version", 0) != 1) {
    throw SchemaError("format", "expected dialogue_detector version 1");
  }
  auto branch = [](const json& bj) {
    Branch b;
    b.terms = TermWeightModel::FromJson(bj.at("terms"));
    if (b.terms.VocabHash() != bj.at("vocab_hash").get<std::string>()) {
      throw SchemaError("vocab_hash", "vocabulary does not match its recorded hash");
    }
    b.encoder = nn::Stack::FromJson(bj.at("encoder"));
    b.projection = nn::Stack::FromJson(bj.at("projection"));
    return b;
  };
  DialogueDetector dd;
  dd.config_.fusion = ParseFusion(j.at("fusion").get<std::string>());
  dd.config_.fused_width = j.at("fused_width").get<int>();
  dd.config_.token_terms = TermConfigFromJson(j.at("token_terms_config"));
  dd.config_.da_terms = TermConfigFromJson(j.at("da_terms_config"));
  dd.config_.model = NativeModelConfigFromJson(j.at("model_config"));
  dd.token_ = branch(j.at("token_branch"));
  dd.da_ = branch(j.at("da_branch"));
  const nn::Stack head = nn::Stack::FromJson(j.at("head"));
  if (head.layers().size() != 1) throw SchemaError("head", "expected one layer");
  dd.head_ = head.layers()[0];
  return dd;
}

}  // namespace turnlens
