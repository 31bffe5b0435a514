/*
 * Copyright (c) 2026 The flc Authors. All Rights Reserved
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "flc/vocab.hpp"

#include "flc/error.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace flc {

Vocabulary::Vocabulary(std::uint32_t num_pairs) : num_pairs_(num_pairs) {
  if (num_pairs == 0 || num_pairs > kMaxPairs)
    fail(Errc::invalid_argument, "num_pairs must be in [1, " + std::to_string(kMaxPairs) + "], got " +
                                     std::to_string(num_pairs));
}

Vocabulary make_vocab(std::int64_t num_pairs) {
  if (num_pairs < 1 || num_pairs > static_cast<std::int64_t>(kMaxPairs))
    fail(Errc::invalid_argument, "num_pairs must be in [1, " + std::to_string(kMaxPairs) + "], got " +
                                     std::to_string(num_pairs));
  return Vocabulary(static_cast<std::uint32_t>(num_pairs));
}

std::string_view dist_kind_name(DistKind kind) noexcept {
  switch (kind) {
  case DistKind::uniform: return "uniform";
  case DistKind::zipf: return "zipf";
  case DistKind::explicit_weights: return "explicit";
  }
  return "uniform";
}

std::optional<DistKind> parse_dist_kind(std::string_view name) noexcept {
  if (name == "uniform")
    return DistKind::uniform;
  if (name == "zipf")
    return DistKind::zipf;
  if (name == "explicit")
    return DistKind::explicit_weights;
  return std::nullopt;
}

DistributionWeights make_distribution(DistKind kind, std::size_t support_size, double alpha, double beta,
                                      std::optional<std::uint64_t> permute_seed) {
  if (support_size == 0)
    fail(Errc::invalid_argument, "support_size must be >= 1");
  if (support_size > std::numeric_limits<std::uint32_t>::max())
    fail(Errc::invalid_argument, "support_size too large");
  if (kind == DistKind::explicit_weights)
    fail(Errc::invalid_argument, "explicit distributions are built with make_explicit_distribution");

  DistributionWeights d;
  d.kind_ = kind;
  d.permute_seed_ = permute_seed;
  d.rank_permutation_.resize(support_size);
  std::iota(d.rank_permutation_.begin(), d.rank_permutation_.end(), 0u);
  if (permute_seed) {
    // Fisher-Yates with our own bounded draws so the permutation is portable.
    Rng rng(*permute_seed);
    for (std::size_t i = support_size - 1; i > 0; --i) {
      const auto j = static_cast<std::size_t>(rng.below(i + 1));
      std::swap(d.rank_permutation_[i], d.rank_permutation_[j]);
    }
  }

  d.probabilities_.assign(support_size, 0.0);
  if (kind == DistKind::uniform) {
    d.probabilities_.assign(support_size, 1.0 / static_cast<double>(support_size));
  } else {
    if (!(alpha > 0.0) || !std::isfinite(alpha))
      fail(Errc::invalid_argument, "zipf alpha must be > 0, got " + std::to_string(alpha));
    if (!(beta > -1.0) || !std::isfinite(beta))
      fail(Errc::invalid_argument, "zipf beta must be > -1, got " + std::to_string(beta));
    d.alpha_ = alpha;
    d.beta_ = beta;
    std::vector<double> mass(support_size);
    double total = 0.0;
    for (std::size_t r = 0; r < support_size; ++r) {
      mass[r] = std::pow(static_cast<double>(r + 1) + beta, -alpha);
      total += mass[r];
    }
    for (std::size_t r = 0; r < support_size; ++r)
      d.probabilities_[d.rank_permutation_[r]] = mass[r] / total;
  }
  d.finalize();
  return d;
}

DistributionWeights make_explicit_distribution(std::vector<double> weights) {
  if (weights.empty())
    fail(Errc::invalid_argument, "explicit distribution needs at least one weight");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w))
      fail(Errc::invalid_argument, "explicit weights must be finite and non-negative");
    total += w;
  }
  if (!(total > 0.0))
    fail(Errc::invalid_argument, "explicit weights must not all be zero");
  DistributionWeights d;
  d.kind_ = DistKind::explicit_weights;
  d.rank_permutation_.resize(weights.size());
  std::iota(d.rank_permutation_.begin(), d.rank_permutation_.end(), 0u);
  d.probabilities_.resize(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i)
    d.probabilities_[i] = weights[i] / total;
  d.raw_weights_ = std::move(weights);
  d.finalize();
  return d;
}

// Vose's alias method.
void DistributionWeights::finalize() {
  const std::size_t n = probabilities_.size();
  surprisal_.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    surprisal_[i] = probabilities_[i] > 0.0 ? -std::log2(probabilities_[i])
                                            : std::numeric_limits<double>::infinity();

  alias_cut_.assign(n, 1.0);
  alias_other_.resize(n);
  std::iota(alias_other_.begin(), alias_other_.end(), 0u);
  std::vector<double> scaled(n);
  std::vector<std::uint32_t> small, large;
  for (std::size_t i = 0; i < n; ++i) {
    scaled[i] = probabilities_[i] * static_cast<double>(n);
    (scaled[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
  }
  while (!small.empty() && !large.empty()) {
    const std::uint32_t s = small.back();
    small.pop_back();
    const std::uint32_t l = large.back();
    alias_cut_[s] = scaled[s];
    alias_other_[s] = l;
    scaled[l] = (scaled[l] + scaled[s]) - 1.0;
    if (scaled[l] < 1.0) {
      large.pop_back();
      small.push_back(l);
    }
  }
  // Leftovers are 1 up to rounding. A zero-mass leftover must never be
  // returned, so point it at a bucket with mass.
  for (std::uint32_t i : small) {
    alias_cut_[i] = 1.0;
    if (probabilities_[i] == 0.0) {
      alias_cut_[i] = 0.0;
      for (std::size_t j = 0; j < n; ++j)
        if (probabilities_[j] > 0.0) {
          alias_other_[i] = static_cast<std::uint32_t>(j);
          break;
        }
    }
  }
  for (std::uint32_t i : large)
    alias_cut_[i] = 1.0;
  for (std::size_t i = 0; i < n; ++i)
    if (probabilities_[i] == 0.0)
      alias_cut_[i] = 0.0;
}

std::size_t DistributionWeights::sample(Rng& rng) const noexcept {
  const std::size_t n = probabilities_.size();
  if (n == 1)
    return 0;
  const double scaled = rng.uniform() * static_cast<double>(n);
  auto bucket = static_cast<std::size_t>(scaled);
  if (bucket >= n)
    bucket = n - 1;
  const double frac = scaled - static_cast<double>(bucket);
  return frac < alias_cut_[bucket] ? bucket : alias_other_[bucket];
}

} // namespace flc
