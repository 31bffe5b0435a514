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

#ifndef FLC_LANGGEN_HPP
#define FLC_LANGGEN_HPP

#include "flc/arcstats.hpp"
#include "flc/rng.hpp"
#include "flc/vocab.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

namespace flc {

enum class Family { nest, cross, rand, rep, nest_mix };

std::string_view family_name(Family family) noexcept;
std::optional<Family> parse_family(std::string_view name) noexcept;
// nest, cross and nest_mix draw pair types; rand and rep draw flat IDs.
inline bool is_paren_family(Family f) noexcept { return f == Family::nest || f == Family::cross || f == Family::nest_mix; }

// Fixed-point reweighting of the distance proposal used by the CROSS
// scheduler, so the realized arc distances follow distance_ref despite
// occupied slots and end-of-document filling. rounds = 0 draws straight from
// distance_ref.
struct CrossCalibration {
  std::uint32_t rounds = 6;
  std::uint64_t tokens_per_round = 2'000'000;
};

struct LanguageSpec {
  Family family = Family::nest;
  Vocabulary vocab{250};
  // Over pair types (support num_pairs) for paren families, over flat IDs
  // (support 2 * num_pairs) for rand/rep.
  std::optional<DistributionWeights> distribution;
  double p_open = 0.49;
  std::uint32_t rep_block = 10;
  double p_mix = 0.0;
  std::optional<DistanceDistribution> distance_ref;
  std::uint32_t doc_target_len = 480;
  std::uint64_t seed = 0;
  CrossCalibration calibration;

  // Errc::invalid_spec with a field-level message.
  void validate() const;
};

// Uniform distribution of the right support for the family.
DistributionWeights default_distribution(Family family, const Vocabulary& vocab);

inline constexpr std::uint8_t kCrossArcFlag = 0x1;

struct AnnotatedToken {
  TokenId id = 0;
  std::int32_t partner = -1; // document-relative index, -1 when absent
  double surprisal_bits = 0.0;
  bool cross = false;        // arc was placed by the distance scheduler
};

struct GenerationCounters {
  std::uint64_t forced_closes = 0;    // a pending pair closed before its scheduled or stack turn
  std::uint64_t collision_pushes = 0; // scheduled close moved past an occupied slot
};

// One generated document, stored column-wise.
struct Document {
  Family family = Family::nest;
  std::vector<TokenId> ids;
  std::vector<std::int32_t> partners;
  std::vector<double> surprisal_bits;
  std::vector<std::uint8_t> flags;
  // Distance drawn for each scheduled open, in emission order (cross opens only).
  std::vector<std::uint32_t> drawn_distances;
  GenerationCounters counters;

  std::size_t size() const noexcept { return ids.size(); }
  bool empty() const noexcept { return ids.empty(); }
  AnnotatedToken token(std::size_t i) const {
    return {ids[i], partners[i], surprisal_bits[i], (flags[i] & kCrossArcFlag) != 0};
  }
  double total_surprisal_bits() const noexcept;
  void clear() noexcept;
};

// Weighted distances with an inverse-CDF table; restricting a draw to
// distances <= limit reuses the same table.
class DistanceSampler {
public:
  explicit DistanceSampler(const std::map<std::uint32_t, double>& weights);

  double probability(std::uint32_t d) const noexcept { return d < dense_.size() ? dense_[d] : 0.0; }
  std::uint32_t max_distance() const noexcept { return support_.empty() ? 0 : support_.back(); }
  // Mass on distances <= limit.
  double mass_upto(std::uint64_t limit) const noexcept;
  std::uint32_t sample(Rng& rng) const noexcept;
  // Requires mass_upto(limit) > 0.
  std::uint32_t sample_upto(std::uint64_t limit, Rng& rng) const noexcept;
  std::span<const std::uint32_t> support() const noexcept { return support_; }

private:
  std::size_t count_upto(std::uint64_t limit) const noexcept;

  std::vector<std::uint32_t> support_;
  std::vector<double> cumulative_;
  std::vector<double> dense_;
};

// A validated spec plus its derived sampling state. Cheap to copy; the state
// is shared and immutable, so one Language can feed generators on any number
// of threads.
class Language {
public:
  // Validates and, for cross, runs the proposal calibration.
  static Language prepare(LanguageSpec spec);

  const LanguageSpec& spec() const noexcept;
  // Distances the CROSS scheduler draws from (calibrated); null for other families.
  const DistanceSampler* cross_proposal() const noexcept;
  // distance_ref as a sampler; null when absent.
  const DistanceSampler* reference_sampler() const noexcept;

  struct State;

private:
  explicit Language(std::shared_ptr<const State> state) : state_(std::move(state)) {}
  std::shared_ptr<const State> state_;
};

namespace detail {
class FamilyProcess;
}

// Emits whole documents until the emitted token count reaches the budget.
// Stream `shard_index` is seeded with mix_seed(spec.seed, shard_index).
class Generator {
public:
  Generator(const Language& language, std::uint64_t budget, std::uint64_t shard_index = 0);
  ~Generator();
  Generator(Generator&&) noexcept;
  Generator& operator=(Generator&&) noexcept;

  // Fills `doc` and returns true, or returns false once the budget is spent.
  bool next(Document& doc);
  std::uint64_t emitted_tokens() const noexcept { return emitted_; }
  std::uint64_t budget() const noexcept { return budget_; }

private:
  Language language_;
  std::unique_ptr<detail::FamilyProcess> process_;
  std::uint64_t budget_;
  std::uint64_t emitted_ = 0;
};

// Family-checked entry points; a mismatched family raises Errc::invalid_spec.
Generator gen_nest(const Language& language, std::uint64_t n_tokens, std::uint64_t shard_index = 0);
Generator gen_cross(const Language& language, std::uint64_t n_tokens, std::uint64_t shard_index = 0);
Generator gen_rand(const Language& language, std::uint64_t n_tokens, std::uint64_t shard_index = 0);
Generator gen_rep(const Language& language, std::uint64_t n_tokens, std::uint64_t shard_index = 0);
Generator gen_nest_mix(const Language& language, std::uint64_t n_tokens, std::uint64_t shard_index = 0);

struct DocumentStats {
  std::size_t length = 0;
  std::uint32_t max_depth = 0;
  double mean_depth = 0.0;
  std::uint64_t crossing_count = 0;
  double cross_arc_fraction = 0.0;
};

// Depth is tracked for paren families only; arcs come from the annotations.
DocumentStats document_stats(const Document& doc, const Vocabulary& vocab);

// Arcs from the partner annotations, sorted by open index.
std::vector<Arc> annotated_arcs(const Document& doc);

} // namespace flc

#endif // FLC_LANGGEN_HPP
