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

#include "turnlens/embedding.h"

#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>

#include "turnlens/errors.h"
#include "turnlens/text_util.h"

namespace turnlens {

using nlohmann::json;

TrigramEmbeddingProvider::TrigramEmbeddingProvider(TrigramEmbeddingConfig config)
    : config_(config) {
  if (config_.dimension < 8) throw InvalidArgument("embedding dimension must be at least 8");
}

std::vector<double> TrigramEmbeddingProvider::Embed(std::string_view token) const {
  const std::string padded = "#" + ToLowerAscii(token) + "#";
  std::vector<double> v(static_cast<std::size_t>(config_.dimension), 0.0);
  for (std::size_t i = 0; i + 3 <= padded.size(); ++i) {
    v[Fnv1a64(std::string_view(padded).substr(i, 3)) % v.size()] += 1.0;
  }
  double norm2 = 0.0;
  for (double x : v) norm2 += x * x;
  const double inv = 1.0 / std::sqrt(norm2);
  for (double& x : v) x *= inv;
  return v;
}

std::vector<TokenVector> TrigramEmbeddingProvider::TokenEmbeddings(std::string_view text) const {
  std::vector<TokenVector> out;
  for (auto& t : Tokenize(text)) {
    std::vector<double> v = Embed(t.surface);
    out.push_back({std::move(t), std::move(v)});
  }
  return out;
}

std::unique_ptr<EmbeddingProvider> DefaultEmbeddingProvider(const TrigramEmbeddingConfig& config) {
  return std::make_unique<TrigramEmbeddingProvider>(config);
}

std::vector<TokenVector> SerializingProvider::TokenEmbeddings(std::string_view text) const {
  std::lock_guard<std::mutex> lock(mu_);
  return inner_->TokenEmbeddings(text);
}

std::string EncodeProviderRequest(std::string_view text) {
  return json{{"text", text}}.dump();
}

std::vector<TokenVector> DecodeProviderResponse(std::string_view text, std::string_view line,
                                                int dimension) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("embedding provider response: ") + e.what(), 0);
  }
  if (!j.contains("tokens") || !j.contains("vectors")) {
    throw SchemaError("tokens", "provider response needs \"tokens\" and \"vectors\"");
  }
  const auto tokens = j.at("tokens").get<std::vector<std::string>>();
  const auto vectors = j.at("vectors").get<std::vector<std::vector<double>>>();
  std::vector<Token> expected = Tokenize(text);
  if (tokens.size() != expected.size() || vectors.size() != expected.size()) {
    throw SchemaError("tokens", "provider must return one vector per token");
  }
  std::vector<TokenVector> out;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (tokens[i] != expected[i].surface) {
      throw SchemaError("tokens", "provider token \"" + tokens[i] + "\" does not match \"" +
                                      expected[i].surface + "\"");
    }
    if (static_cast<int>(vectors[i].size()) != dimension) {
      throw SchemaError("vectors", "vector has the wrong dimension");
    }
    for (double x : vectors[i]) {
      if (!std::isfinite(x)) throw SchemaError("vectors", "non-finite component");
    }
    out.push_back({std::move(expected[i]), vectors[i]});
  }
  return out;
}

SubprocessEmbeddingProvider::SubprocessEmbeddingProvider(std::string command, int dimension)
    : dimension_(dimension) {
  int in_pipe[2], out_pipe[2];
  if (pipe(in_pipe) != 0 || pipe(out_pipe) != 0) throw IoError("pipe() failed");
  pid_ = fork();
  if (pid_ < 0) throw IoError("fork() failed");
  if (pid_ == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    close(in_pipe[0]);
    close(in_pipe[1]);
    close(out_pipe[0]);
    close(out_pipe[1]);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
}

SubprocessEmbeddingProvider::~SubprocessEmbeddingProvider() {
  if (to_child_ >= 0) close(to_child_);
  if (from_child_ >= 0) close(from_child_);
  if (pid_ > 0) {
    int status = 0;
    waitpid(pid_, &status, 0);
  }
}

std::vector<TokenVector> SubprocessEmbeddingProvider::TokenEmbeddings(std::string_view text) const {
  const std::string request = EncodeProviderRequest(text) + "\n";
  std::size_t written = 0;
  while (written < request.size()) {
    const ssize_t n = write(to_child_, request.data() + written, request.size() - written);
    if (n <= 0) throw IoError("embedding provider closed its input");
    written += static_cast<std::size_t>(n);
  }
  std::size_t newline;
  while ((newline = buffer_.find('\n')) == std::string::npos) {
    char chunk[4096];
    const ssize_t n = read(from_child_, chunk, sizeof(chunk));
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) throw IoError("embedding provider closed its output");
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
  const std::string line = buffer_.substr(0, newline);
  buffer_.erase(0, newline + 1);
  return DecodeProviderResponse(text, line, dimension_);
}

}  // namespace turnlens
