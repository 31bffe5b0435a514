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

#ifndef FLC_ARCSTATS_HPP
#define FLC_ARCSTATS_HPP

#include "flc/vocab.hpp"

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

// Validators and estimators computed from raw token streams. Nothing here
// trusts generator annotations unless explicitly asked to (MatchPolicy::annotated).
namespace flc {

struct Arc {
  std::uint32_t open = 0;
  std::uint32_t close = 0;
  std::uint32_t distance() const noexcept { return close - open; }
  friend bool operator==(const Arc&, const Arc&) = default;
  friend auto operator<=>(const Arc&, const Arc&) = default;
};

enum class MatchPolicy {
  stack,     // per-type LIFO; concurrent same-type opens never error
  scheduled, // per-type, concurrent same-type opens are an ambiguity error
  annotated, // use partner annotations when given, else behave like scheduled
};

// Arcs sorted by open index.
struct ArcSet {
  std::vector<Arc> arcs;
  MatchPolicy policy = MatchPolicy::stack;
};

struct BalanceReport {
  bool balanced = true;
  // Index of the first close with no open of its type before it, if any.
  std::optional<std::size_t> first_violation;
  std::vector<std::uint32_t> unmatched_open_types;
  std::vector<std::uint32_t> unmatched_close_types;

  std::string describe() const;
};

// Out-of-range IDs raise Errc::invalid_input.
BalanceReport check_balanced(std::span<const TokenId> tokens, const Vocabulary& vocab);
bool check_well_nested(std::span<const TokenId> tokens, const Vocabulary& vocab);

// `partners` (optional, same length as tokens, -1 for none) is consulted only
// for MatchPolicy::annotated. Unbalanced input raises Errc::match_failure with
// the first violation index; ambiguous reopen raises Errc::ambiguous.
ArcSet match_arcs(std::span<const TokenId> tokens, const Vocabulary& vocab, MatchPolicy policy,
                  std::span<const std::int32_t> partners = {});

// Unordered arc pairs (a,b),(c,d) with a < c < b < d. Fenwick sweep, O(n log n).
std::uint64_t count_crossings(std::span<const Arc> arcs);
inline std::uint64_t count_crossings(const ArcSet& set) { return count_crossings(set.arcs); }

class DistanceDistribution {
public:
  DistanceDistribution() = default;

  // Distances must be >= 1 and counts positive; Errc::invalid_input otherwise.
  static DistanceDistribution from_counts(const std::map<std::uint32_t, std::uint64_t>& counts);
  // pmf is renormalized; sample_count is provenance only.
  static DistanceDistribution from_pmf(std::map<std::uint32_t, double> pmf, std::uint64_t sample_count);

  const std::map<std::uint32_t, double>& pmf() const noexcept { return pmf_; }
  std::uint64_t sample_count() const noexcept { return sample_count_; }
  bool empty() const noexcept { return pmf_.empty(); }
  double probability(std::uint32_t distance) const noexcept;
  double mean() const noexcept;
  std::uint32_t max_distance() const noexcept { return pmf_.empty() ? 0 : pmf_.rbegin()->first; }

  // Weighted merge (weights are the sample counts).
  DistanceDistribution merged(const DistanceDistribution& other) const;

  std::string to_json() const;
  static DistanceDistribution from_json(const std::string& text);

private:
  std::map<std::uint32_t, double> pmf_;
  std::uint64_t sample_count_ = 0;
};

// Streaming histogram of arc distances.
class DistanceCounter {
public:
  void add(std::span<const Arc> arcs);
  void add(std::uint32_t distance, std::uint64_t count = 1) { counts_[distance] += count; total_ += count; }
  void merge(const DistanceCounter& other);
  std::uint64_t total() const noexcept { return total_; }
  const std::map<std::uint32_t, std::uint64_t>& counts() const noexcept { return counts_; }
  // Errc::invalid_input when nothing was counted.
  DistanceDistribution distribution() const;

private:
  std::map<std::uint32_t, std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

DistanceDistribution distance_distribution(std::span<const ArcSet> arc_sets);

// KL(p || q) in bits. q is smoothed on p's support: distances unseen in q get
// `smoothing` mass and q is renormalized. With no smoothing argument the
// smoothing is 1 / q.sample_count().
double kl_divergence(const DistanceDistribution& p, const DistanceDistribution& q, double smoothing);
double kl_divergence(const DistanceDistribution& p, const DistanceDistribution& q);

struct DepthStats {
  double mean_depth = 0.0;
  std::uint32_t max_depth = 0;
  std::vector<std::uint64_t> histogram; // histogram[d] = positions with depth d after the token
};

// Depth after each token (+1 open, -1 close). A negative depth raises
// Errc::invalid_input.
DepthStats depth_stats(std::span<const TokenId> tokens, const Vocabulary& vocab);

// Accumulates depth statistics over many documents.
class DepthAccumulator {
public:
  void add(std::span<const TokenId> tokens, const Vocabulary& vocab);
  void merge(const DepthAccumulator& other);
  DepthStats stats() const;
  std::uint64_t positions() const noexcept { return positions_; }

private:
  std::vector<std::uint64_t> histogram_;
  std::uint64_t positions_ = 0;
  long double depth_sum_ = 0;
};

struct ZipfFit {
  double alpha_hat = 0.0;
  double beta_fixed = 0.0;
  double log_likelihood = 0.0;
  std::size_t support_size = 0;
};

// Log-likelihood of rank-sorted counts under the finite Zipf-Mandelbrot law
// with the given exponent, over ranks 1..counts.size(). Counts must already be
// sorted descending.
double zipf_log_likelihood(std::span<const std::uint64_t> sorted_counts, double alpha, double beta);

// Maximum-likelihood alpha with beta held fixed. Zero counts are dropped; the
// remaining counts sorted descending define ranks. Fewer than two observed
// tokens raise Errc::invalid_input. alpha_hat is clamped to [0, 64].
ZipfFit fit_zipf(std::span<const std::uint64_t> token_counts, double beta_fixed = 2.7);

} // namespace flc

#endif // FLC_ARCSTATS_HPP
