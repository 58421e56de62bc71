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

#include "turnlens/attribution.h"

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "turnlens/errors.h"

namespace turnlens {

using nlohmann::json;

std::string_view EstimatorName(Estimator e) {
  switch (e) {
    case Estimator::kFaithShap: return "faithshap";
    case Estimator::kStii: return "stii";
    case Estimator::kIntegratedGradients: return "ig";
    case Estimator::kExactShapley: return "exact";
  }
  return "faithshap";
}

Estimator ParseEstimator(std::string_view name) {
  if (name == "faithshap") return Estimator::kFaithShap;
  if (name == "stii") return Estimator::kStii;
  if (name == "ig") return Estimator::kIntegratedGradients;
  if (name == "exact") return Estimator::kExactShapley;
  throw InvalidArgument("unknown attribution method \"" + std::string(name) + "\"");
}

double DetectorGame::Value(std::span<const char> kept) const {
  return detector_.model().Predict(detector_.Vectorize(fs_, kept)).ai;
}

int DetectorGame::FeatureId(int player) const {
  return detector_.dimension() == Dimension::kTokens ? fs_.TokenId(player) : fs_.DaId(player);
}

namespace {

double Binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Visits every subset of {0..n-1} with exactly `size` members.
void ForEachSubsetOfSize(int n, int size, const std::function<void(const std::vector<char>&)>& fn) {
  std::vector<char> z(static_cast<std::size_t>(n), 0);
  std::fill(z.end() - size, z.end(), 1);
  do {
    fn(z);
  } while (std::next_permutation(z.begin(), z.end()));
}

std::vector<char> UniformSubset(int n, int size, std::mt19937_64& rng) {
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  // Partial Fisher-Yates.
  for (int i = 0; i < size; ++i) {
    std::uniform_int_distribution<int> pick(i, n - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  std::vector<char> z(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < size; ++i) z[idx[i]] = 1;
  return z;
}

AttributionResult ToResult(const GameAttribution& g, const DetectorGame& game,
                           const FeatureSet& fs, Estimator estimator) {
  AttributionResult r;
  r.residual = g.residual;
  r.probability_residual = g.probability_residual;
  r.evaluations = g.evaluations;
  for (int i = 0; i < game.size(); ++i) {
    const int id = game.FeatureId(i);
    r.attributions.push_back({id, fs.KindOf(id), g.scores[i], estimator});
  }
  return r;
}

}  // namespace

GameAttribution ExactShapleyValues(const CoalitionGame& game) {
  const int n = game.size();
  if (n > 12) throw InvalidArgument("exact Shapley is capped at 12 features");
  const std::size_t count = std::size_t{1} << n;
  std::vector<double> v(count);
  std::vector<char> z(static_cast<std::size_t>(n));
  for (std::size_t mask = 0; mask < count; ++mask) {
    for (int i = 0; i < n; ++i) z[i] = (mask >> i) & 1;
    v[mask] = game.Value(z);
  }
  std::vector<double> factorial(static_cast<std::size_t>(n) + 1, 1.0);
  for (int i = 1; i <= n; ++i) factorial[i] = factorial[i - 1] * i;
  GameAttribution out;
  out.scores.assign(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    const std::size_t bit = std::size_t{1} << i;
    for (std::size_t mask = 0; mask < count; ++mask) {
      if (mask & bit) continue;
      const int s = std::popcount(mask);
      const double w = factorial[s] * factorial[n - s - 1] / factorial[n];
      out.scores[i] += w * (v[mask | bit] - v[mask]);
    }
  }
  const double total = std::accumulate(out.scores.begin(), out.scores.end(), 0.0);
  out.residual = std::abs(total - (v[count - 1] - v[0]));
  out.evaluations = static_cast<int>(count);
  return out;
}

GameAttribution FaithShapValues(const CoalitionGame& game, int budget, std::uint64_t seed) {
  const int n = game.size();
  GameAttribution out;
  if (budget < n + 2) {
    throw InvalidArgument("Faith-SHAP budget " + std::to_string(budget) +
                          " is below feature count + 2 = " + std::to_string(n + 2));
  }
  const std::vector<char> none(static_cast<std::size_t>(n), 0);
  const std::vector<char> all(static_cast<std::size_t>(n), 1);
  const double v_empty = game.Value(none);
  const double v_full = n > 0 ? game.Value(all) : v_empty;
  out.evaluations = n > 0 ? 2 : 1;
  const double delta = v_full - v_empty;
  if (n == 0) return out;
  if (n == 1) {
    out.scores = {delta};
    return out;
  }

  // Coalitions strictly between empty and full, with regression weights.
  std::map<std::vector<char>, double> design;
  int remaining = budget - 2;
  std::vector<int> open_sizes;
  for (int s = 1; s <= n / 2; ++s) {
    const int mirror = n - s;
    const double count = Binomial(n, s) * (mirror == s ? 1 : 2);
    if (open_sizes.empty() && count <= remaining) {
      for (int size : {s, mirror}) {
        const double w = (n - 1) / (Binomial(n, size) * size * (n - size));
        ForEachSubsetOfSize(n, size, [&](const std::vector<char>& z) { design[z] = w; });
        if (mirror == s) break;
      }
      remaining -= static_cast<int>(count);
    } else {
      open_sizes.push_back(s);
      if (mirror != s) open_sizes.push_back(mirror);
    }
  }
  if (!open_sizes.empty() && remaining > 0) {
    std::vector<double> mass;
    double total_mass = 0.0;
    for (int s : open_sizes) {
      mass.push_back((n - 1.0) / (s * (n - s)));
      total_mass += mass.back();
    }
    double available = 0.0;
    for (int s : open_sizes) available += Binomial(n, s);
    const int target = static_cast<int>(std::min<double>(remaining, available));
    std::mt19937_64 rng(seed);
    std::discrete_distribution<int> size_dist(mass.begin(), mass.end());
    // Complement pairs only when rows are plentiful.
    const bool paired = target >= 2 * (n - 1);
    std::vector<std::vector<char>> sampled;
    const int max_attempts = 50 * target + 100;
    for (int attempt = 0; attempt < max_attempts && static_cast<int>(sampled.size()) < target;
         ++attempt) {
      std::vector<char> z = UniformSubset(n, open_sizes[size_dist(rng)], rng);
      std::vector<char> c(z.size());
      for (std::size_t i = 0; i < z.size(); ++i) c[i] = !z[i];
      for (auto* cand : {&z, &c}) {
        if (static_cast<int>(sampled.size()) >= target || (cand == &c && !paired)) break;
        if (design.emplace(*cand, 0.0).second) sampled.push_back(*cand);
      }
    }
    const double w = total_mass / static_cast<double>(sampled.size());
    for (const auto& z : sampled) design[z] = w;
  }

  // Eliminate the efficiency constraint through the last player:
  // y_S - z_last * delta = sum_{i<last} (z_i - z_last) phi_i.
  const int unknowns = n - 1;
  if (static_cast<int>(design.size()) < unknowns) {
    throw NumericalError("Faith-SHAP design has fewer coalitions than unknowns");
  }
  Eigen::MatrixXd a(design.size(), unknowns);
  Eigen::VectorXd b(design.size());
  int row = 0;
  for (const auto& [z, w] : design) {
    const double sw = std::sqrt(w);
    const double y = game.Value(z) - v_empty;
    ++out.evaluations;
    for (int i = 0; i < unknowns; ++i) a(row, i) = sw * (z[i] - z[n - 1]);
    b(row) = sw * (y - z[n - 1] * delta);
    ++row;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < unknowns) throw NumericalError("Faith-SHAP design is rank deficient");
  const Eigen::VectorXd phi = qr.solve(b);
  out.scores.resize(static_cast<std::size_t>(n));
  double partial = 0.0;
  for (int i = 0; i < unknowns; ++i) {
    out.scores[i] = phi(i);
    partial += phi(i);
  }
  out.scores[n - 1] = delta - partial;
  const double total = std::accumulate(out.scores.begin(), out.scores.end(), 0.0);
  out.residual = std::abs(total - delta);
  return out;
}

int StiiAllocation(int num_features, int budget) {
  if (num_features <= 0) throw InvalidArgument("STII needs at least one feature");
  return std::max(1, (budget + num_features - 1) / num_features);
}

GameAttribution StiiValues(const CoalitionGame& game, int budget, std::uint64_t seed) {
  const int n = game.size();
  if (n == 0) throw InvalidArgument("STII needs at least one feature");
  if (budget < n) throw InvalidArgument("STII budget is below the feature count");
  const int per_feature = StiiAllocation(n, budget);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  GameAttribution out;
  out.scores.assign(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    const double offset = unit(rng);
    double sum = 0.0;
    for (int j = 0; j < per_feature; ++j) {
      const double t = (j + offset) / per_feature;
      const int size = std::min(n - 1, static_cast<int>(std::floor(t * n)));
      std::vector<char> others = UniformSubset(n - 1, size, rng);
      std::vector<char> z(static_cast<std::size_t>(n), 0);
      for (int k = 0, o = 0; k < n; ++k) {
        if (k != i) z[k] = others[o++];
      }
      const double without = game.Value(z);
      z[i] = 1;
      sum += game.Value(z) - without;
      out.evaluations += 2;
    }
    out.scores[i] = sum / per_feature;
  }
  const std::vector<char> none(static_cast<std::size_t>(n), 0);
  const std::vector<char> all(static_cast<std::size_t>(n), 1);
  const double total = std::accumulate(out.scores.begin(), out.scores.end(), 0.0);
  out.residual = std::abs(total - (game.Value(all) - game.Value(none)));
  return out;
}

VectorAttribution IntegratedGradients(const Classifier& model, const SparseVector& input,
                                      const SparseVector& baseline, int steps) {
  if (!model.differentiable()) {
    throw CapabilityError("integrated gradients needs a differentiable model");
  }
  if (steps < 1) throw InvalidArgument("integrated gradients needs at least one step");
  if (input.dimension != baseline.dimension) {
    throw InvalidArgument("input and baseline dimensions differ");
  }
  const std::vector<double> x = input.ToDense();
  const std::vector<double> b = baseline.ToDense();
  std::vector<int> support;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (x[j] != 0.0 || b[j] != 0.0) support.push_back(static_cast<int>(j));
  }
  VectorAttribution out;
  out.per_dimension.assign(x.size(), 0.0);
  SparseVector point{input.dimension, {}};
  for (int k = 0; k < steps; ++k) {
    const double alpha = (k + 0.5) / steps;
    point.entries.clear();
    for (int j : support) point.entries.emplace_back(j, b[j] + alpha * (x[j] - b[j]));
    const std::vector<double> g = model.LogitGradient(point);
    for (int j : support) out.per_dimension[j] += g[j];
  }
  double total = 0.0;
  for (int j : support) {
    out.per_dimension[j] *= (x[j] - b[j]) / steps;
    total += out.per_dimension[j];
  }
  const double logit_gap = model.Logit(input) - model.Logit(baseline);
  out.logit_residual = std::abs(total - logit_gap);
  out.probability_residual =
      std::abs(total - (model.Predict(input).ai - model.Predict(baseline).ai));
  return out;
}

AttributionResult ExplainFaithShap(const TurnDetector& detector, const FeatureSet& fs,
                                   int budget, std::uint64_t seed) {
  const DetectorGame game(detector, fs);
  return ToResult(FaithShapValues(game, budget, seed), game, fs, Estimator::kFaithShap);
}

AttributionResult ExplainStii(const TurnDetector& detector, const FeatureSet& fs, int budget,
                              std::uint64_t seed) {
  const DetectorGame game(detector, fs);
  return ToResult(StiiValues(game, budget, seed), game, fs, Estimator::kStii);
}

AttributionResult ExactShapley(const TurnDetector& detector, const FeatureSet& fs) {
  const DetectorGame game(detector, fs);
  return ToResult(ExactShapleyValues(game), game, fs, Estimator::kExactShapley);
}

AttributionResult ExplainIntegratedGradients(const TurnDetector& detector, const FeatureSet& fs,
                                             int steps) {
  const DetectorGame game(detector, fs);
  const int n = game.size();
  const std::vector<char> all(static_cast<std::size_t>(n), 1);
  const std::vector<char> none(static_cast<std::size_t>(n), 0);
  const auto full_terms = detector.Terms(fs, all);
  const auto base_terms = detector.Terms(fs, none);
  const VectorAttribution va =
      IntegratedGradients(detector.model(), detector.terms().Embed(full_terms),
                          detector.terms().Embed(base_terms), steps);

  // Occurrence-based sharing of each input dimension among players. For the
  // DA dimension the baseline is empty and each key maps to its own players.
  std::map<int, std::vector<double>> share;
  auto add = [&](const std::vector<std::string>& terms, bool positional) {
    if (detector.dimension() == Dimension::kTokens) {
      ForEachNgram(terms, detector.terms().config(), [&](const std::string& term, int first, int last) {
        const int col = detector.terms().Column(term);
        if (col < 0 || va.per_dimension[col] == 0.0) return;
        auto& s = share.try_emplace(col, std::vector<double>(n, 0.0)).first->second;
        for (int p = first; p <= last; ++p) s[p] += 1.0;
      });
    } else if (positional) {
      for (int p = 0; p < n; ++p) {
        const int col = detector.terms().Column(terms[p]);
        if (col < 0 || va.per_dimension[col] == 0.0) continue;
        share.try_emplace(col, std::vector<double>(n, 0.0)).first->second[p] += 1.0;
      }
    }
  };
  add(full_terms, true);
  add(base_terms, false);

  GameAttribution g;
  g.scores.assign(static_cast<std::size_t>(n), 0.0);
  for (const auto& [col, weights] : share) {
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    for (int p = 0; p < n; ++p) g.scores[p] += va.per_dimension[col] * weights[p] / total;
  }
  g.residual = va.logit_residual;
  g.probability_residual = va.probability_residual;
  g.evaluations = steps;
  return ToResult(g, game, fs, Estimator::kIntegratedGradients);
}

AttributionResult Explain(const TurnDetector& detector, const FeatureSet& fs,
                          const AttributionConfig& config) {
  const int n = detector.NumFeatures(fs);
  if (n == 0) return {};
  switch (config.estimator) {
    case Estimator::kFaithShap:
      return ExplainFaithShap(detector, fs, std::max(config.faithshap_budget, n + 2), config.seed);
    case Estimator::kStii:
      return ExplainStii(detector, fs, std::max(config.stii_budget, n), config.seed);
    case Estimator::kIntegratedGradients:
      return ExplainIntegratedGradients(detector, fs, config.ig_steps);
    case Estimator::kExactShapley:
      return ExactShapley(detector, fs);
  }
  return {};
}

std::set<int> SelectTop(const FeatureSet& fs, std::span<const Attribution> attributions,
                        int k_tokens, int k_das) {
  std::vector<const Attribution*> tokens, das;
  for (const auto& a : attributions) {
    (fs.KindOf(a.feature_id) == FeatureKind::kToken ? tokens : das).push_back(&a);
  }
  auto before = [&](const Attribution* x, const Attribution* y) {
    const double ax = std::abs(x->score), ay = std::abs(y->score);
    if (ax != ay) return ax > ay;
    const int px = fs.LocalIndex(x->feature_id), py = fs.LocalIndex(y->feature_id);
    if (px != py) return px < py;
    return fs.Key(x->feature_id) < fs.Key(y->feature_id);
  };
  std::set<int> kept;
  for (auto [list, k] : {std::pair{&tokens, k_tokens}, std::pair{&das, k_das}}) {
    std::sort(list->begin(), list->end(), before);
    const int take = std::min<int>(std::max(k, 0), static_cast<int>(list->size()));
    for (int i = 0; i < take; ++i) kept.insert((*list)[i]->feature_id);
  }
  return kept;
}

json AttributionsToJson(const FeatureSet& fs, std::span<const Attribution> attributions) {
  json out = json::array();
  for (const auto& a : attributions) {
    json item = {{"feature", fs.Key(a.feature_id)},
                 {"feature_id", a.feature_id},
                 {"kind", a.kind == FeatureKind::kToken ? "token" : "da"},
                 {"estimator", EstimatorName(a.estimator)},
                 {"score", a.score}};
    if (a.kind == FeatureKind::kToken) {
      const Token& t = fs.tokens()[static_cast<std::size_t>(a.feature_id)];
      item["span"] = {t.start, t.end};
    } else {
      item["span"] = nullptr;
    }
    out.push_back(std::move(item));
  }
  return out;
}

}  // namespace turnlens
