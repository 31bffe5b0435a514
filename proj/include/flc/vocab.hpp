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

#ifndef FLC_VOCAB_HPP
#define FLC_VOCAB_HPP

#include "flc/rng.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace flc {

using TokenId = std::uint16_t;

// Largest pair count whose flat IDs still fit the 16-bit token width.
inline constexpr std::uint32_t kMaxPairs = 32768;

// Paired open/close token space. Open IDs are [0, N), the close partner of
// open t is t + N, so the flat view has 2N IDs.
class Vocabulary {
public:
  explicit Vocabulary(std::uint32_t num_pairs);

  std::uint32_t num_pairs() const noexcept { return num_pairs_; }
  std::uint32_t total_size() const noexcept { return 2 * num_pairs_; }

  bool contains(std::uint32_t id) const noexcept { return id < total_size(); }
  bool is_open(std::uint32_t id) const noexcept { return id < num_pairs_; }
  bool is_close(std::uint32_t id) const noexcept { return id >= num_pairs_ && id < total_size(); }
  TokenId close_of(std::uint32_t open) const noexcept { return static_cast<TokenId>(open + num_pairs_); }
  TokenId open_of(std::uint32_t close) const noexcept { return static_cast<TokenId>(close - num_pairs_); }
  std::uint32_t pair_type(std::uint32_t id) const noexcept { return is_open(id) ? id : id - num_pairs_; }

  friend bool operator==(const Vocabulary&, const Vocabulary&) = default;

private:
  std::uint32_t num_pairs_;
};

// Throws Errc::invalid_argument unless 1 <= num_pairs <= kMaxPairs.
Vocabulary make_vocab(std::int64_t num_pairs);

enum class DistKind { uniform, zipf, explicit_weights };

std::string_view dist_kind_name(DistKind kind) noexcept;
std::optional<DistKind> parse_dist_kind(std::string_view name) noexcept;

// Normalized weights over a finite support, with an alias table for O(1)
// sampling and a cached surprisal per support index.
//
// For zipf, rank r (1-based) carries mass proportional to 1/(r + beta)^alpha
// and lands on support index rank_permutation()[r - 1]. The permutation is the
// identity unless a permute seed was given.
class DistributionWeights {
public:
  DistKind kind() const noexcept { return kind_; }
  double alpha() const noexcept { return alpha_; }
  double beta() const noexcept { return beta_; }
  const std::optional<std::uint64_t>& permute_seed() const noexcept { return permute_seed_; }
  std::size_t size() const noexcept { return probabilities_.size(); }

  std::span<const std::uint32_t> rank_permutation() const noexcept { return rank_permutation_; }
  std::span<const double> probabilities() const noexcept { return probabilities_; }
  // Only meaningful for explicit_weights: the weights as supplied.
  std::span<const double> raw_weights() const noexcept { return raw_weights_; }

  double probability(std::size_t index) const noexcept { return probabilities_[index]; }
  // -log2 probability(index); +inf for zero-mass explicit entries.
  double surprisal_bits(std::size_t index) const noexcept { return surprisal_[index]; }

  std::size_t sample(Rng& rng) const noexcept;

  friend DistributionWeights make_distribution(DistKind, std::size_t, double, double,
                                               std::optional<std::uint64_t>);
  friend DistributionWeights make_explicit_distribution(std::vector<double>);

private:
  DistributionWeights() = default;
  void finalize();

  DistKind kind_ = DistKind::uniform;
  double alpha_ = 0.0;
  double beta_ = 0.0;
  std::optional<std::uint64_t> permute_seed_;
  std::vector<std::uint32_t> rank_permutation_;
  std::vector<double> probabilities_;
  std::vector<double> raw_weights_;
  std::vector<double> surprisal_;
  std::vector<double> alias_cut_;
  std::vector<std::uint32_t> alias_other_;
};

// alpha/beta are ignored for uniform. Errors: support_size 0, and for zipf a
// non-positive alpha or beta <= -1, raise Errc::invalid_argument.
DistributionWeights make_distribution(DistKind kind, std::size_t support_size, double alpha = 1.0,
                                      double beta = 2.7,
                                      std::optional<std::uint64_t> permute_seed = std::nullopt);

// Caller-supplied non-negative weights (at least one positive), normalized.
DistributionWeights make_explicit_distribution(std::vector<double> weights);

inline std::size_t sample_token(const DistributionWeights& dist, Rng& rng) { return dist.sample(rng); }

} // namespace flc

#endif // FLC_VOCAB_HPP
