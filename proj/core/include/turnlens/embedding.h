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

// Token embedding providers used by text-DA matching.

#ifndef TURNLENS_EMBEDDING_H_
#define TURNLENS_EMBEDDING_H_

#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "turnlens/features.h"

namespace turnlens {

struct TokenVector {
  Token token;
  std::vector<double> vector;
};

// Returns one vector per token of Tokenize(text), in order. Deterministic.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual int dimension() const = 0;
  virtual std::vector<TokenVector> TokenEmbeddings(std::string_view text) const = 0;
};

struct TrigramEmbeddingConfig {
  int dimension = 256;
};

// Hashed bag of lowercase character trigrams of "#token#", L2-normalized.
// Safe for concurrent use.
class TrigramEmbeddingProvider : public EmbeddingProvider {
 public:
  // Throws InvalidArgument when dimension < 8.
  explicit TrigramEmbeddingProvider(TrigramEmbeddingConfig config = {});
  int dimension() const override { return config_.dimension; }
  std::vector<TokenVector> TokenEmbeddings(std::string_view text) const override;
  std::vector<double> Embed(std::string_view token) const;

 private:
  TrigramEmbeddingConfig config_;
};

std::unique_ptr<EmbeddingProvider> DefaultEmbeddingProvider(const TrigramEmbeddingConfig& config);

// Wraps a provider that is not safe for concurrent calls.
class SerializingProvider : public EmbeddingProvider {
 public:
  explicit SerializingProvider(std::unique_ptr<EmbeddingProvider> inner)
      : inner_(std::move(inner)) {}
  int dimension() const override { return inner_->dimension(); }
  std::vector<TokenVector> TokenEmbeddings(std::string_view text) const override;

 private:
  std::unique_ptr<EmbeddingProvider> inner_;
  mutable std::mutex mu_;
};

// Line protocol for external encoders: request {"text": str}, response
// {"tokens": [str...], "vectors": [[num...]...]}, one JSON document per line.
std::string EncodeProviderRequest(std::string_view text);
// Validates the response against Tokenize(text) and the dimension.
std::vector<TokenVector> DecodeProviderResponse(std::string_view text, std::string_view line,
                                                int dimension);

// Runs `command` through /bin/sh and speaks the line protocol over its
// stdin/stdout. Not thread safe; wrap in SerializingProvider to share.
class SubprocessEmbeddingProvider : public EmbeddingProvider {
 public:
  SubprocessEmbeddingProvider(std::string command, int dimension);
  ~SubprocessEmbeddingProvider() override;
  SubprocessEmbeddingProvider(const SubprocessEmbeddingProvider&) = delete;
  SubprocessEmbeddingProvider& operator=(const SubprocessEmbeddingProvider&) = delete;

  int dimension() const override { return dimension_; }
  std::vector<TokenVector> TokenEmbeddings(std::string_view text) const override;

 private:
  int dimension_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  mutable std::string buffer_;
};

}  // namespace turnlens

#endif  // TURNLENS_EMBEDDING_H_
