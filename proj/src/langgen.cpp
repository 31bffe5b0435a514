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

#include "flc/langgen.hpp"

#include "flc/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace flc {

std::string_view family_name(Family family) noexcept {
  switch (family) {
  case Family::nest: return "nest";
  case Family::cross: return "cross";
  case Family::rand: return "rand";
  case Family::rep: return "rep";
  case Family::nest_mix: return "nest_mix";
  }
  return "nest";
}

std::optional<Family> parse_family(std::string_view name) noexcept {
  if (name == "nest")
    return Family::nest;
  if (name == "cross")
    return Family::cross;
  if (name == "rand")
    return Family::rand;
  if (name == "rep")
    return Family::rep;
  if (name == "nest_mix" || name == "nest-mix")
    return Family::nest_mix;
  return std::nullopt;
}

DistributionWeights default_distribution(Family family, const Vocabulary& vocab) {
  return make_distribution(DistKind::uniform, is_paren_family(family) ? vocab.num_pairs() : vocab.total_size());
}

namespace {
// Dense per-distance tables are kept, so distances are capped.
constexpr std::uint32_t kMaxRefDistance = 1u << 24;

[[noreturn]] void bad_spec(const std::string& field, const std::string& why) {
  fail(Errc::invalid_spec, field + ": " + why);
}
} // namespace

void LanguageSpec::validate() const {
  const std::string fam(family_name(family));
  if (!distribution)
    bad_spec(is_paren_family(family) ? "pair_dist" : "token_dist", "missing for family " + fam);
  const std::size_t want = is_paren_family(family) ? vocab.num_pairs() : vocab.total_size();
  if (distribution->size() != want)
    bad_spec("distribution", "support size " + std::to_string(distribution->size()) + " does not match " +
                                 std::to_string(want) + " for family " + fam);
  if (doc_target_len < 1)
    bad_spec("doc_target_len", "must be >= 1");
  if (family == Family::nest || family == Family::nest_mix) {
    if (!(p_open > 0.0 && p_open < 0.5))
      bad_spec("p_open", "must be in (0, 0.5) so documents terminate, got " + std::to_string(p_open));
  }
  if (family == Family::rep && rep_block < 1)
    bad_spec("rep_block", "must be >= 1");
  if (family == Family::nest_mix && !(p_mix >= 0.0 && p_mix <= 1.0))
    bad_spec("p_mix", "must be in [0, 1], got " + std::to_string(p_mix));
  if (family == Family::cross || family == Family::nest_mix) {
    if (!distance_ref || distance_ref->empty())
      bad_spec("distance_ref", "required for family " + fam);
    if (distance_ref->pmf().begin()->first < 1)
      bad_spec("distance_ref", "distances must be >= 1");
    if (distance_ref->max_distance() > kMaxRefDistance)
      bad_spec("distance_ref", "distances above " + std::to_string(kMaxRefDistance) + " are not supported");
  }
  if (family == Family::cross && calibration.rounds > 0 && calibration.tokens_per_round == 0)
    bad_spec("cross_calibration.tokens_per_round", "must be >= 1 when rounds > 0");
}

double Document::total_surprisal_bits() const noexcept {
  double s = 0.0;
  for (double b : surprisal_bits)
    s += b;
  return s;
}

void Document::clear() noexcept {
  ids.clear();
  partners.clear();
  surprisal_bits.clear();
  flags.clear();
  drawn_distances.clear();
  counters = {};
}

DistanceSampler::DistanceSampler(const std::map<std::uint32_t, double>& weights) {
  double total = 0.0;
  for (auto [d, w] : weights)
    if (w > 0.0)
      total += w;
  if (!(total > 0.0))
    fail(Errc::invalid_spec, "distance weights have no mass");
  dense_.assign(static_cast<std::size_t>(weights.rbegin()->first) + 1, 0.0);
  double acc = 0.0;
  for (auto [d, w] : weights) {
    if (!(w > 0.0))
      continue;
    const double p = w / total;
    support_.push_back(d);
    acc += p;
    cumulative_.push_back(acc);
    dense_[d] = p;
  }
}

std::size_t DistanceSampler::count_upto(std::uint64_t limit) const noexcept {
  return static_cast<std::size_t>(
      std::upper_bound(support_.begin(), support_.end(), limit,
                       [](std::uint64_t v, std::uint32_t s) { return v < s; }) -
      support_.begin());
}

double DistanceSampler::mass_upto(std::uint64_t limit) const noexcept {
  const std::size_t k = count_upto(limit);
  return k == 0 ? 0.0 : cumulative_[k - 1];
}

std::uint32_t DistanceSampler::sample(Rng& rng) const noexcept {
  const double u = rng.uniform() * cumulative_.back();
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  if (it == cumulative_.end())
    --it;
  return support_[static_cast<std::size_t>(it - cumulative_.begin())];
}

std::uint32_t DistanceSampler::sample_upto(std::uint64_t limit, Rng& rng) const noexcept {
  const std::size_t k = count_upto(limit);
  const double u = rng.uniform() * cumulative_[k - 1];
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.begin() + static_cast<std::ptrdiff_t>(k), u);
  if (it == cumulative_.begin() + static_cast<std::ptrdiff_t>(k))
    --it;
  return support_[static_cast<std::size_t>(it - cumulative_.begin())];
}

struct Language::State {
  LanguageSpec spec;
  std::optional<DistanceSampler> reference;
  std::optional<DistanceSampler> proposal;
};

const LanguageSpec& Language::spec() const noexcept { return state_->spec; }
const DistanceSampler* Language::cross_proposal() const noexcept {
  return state_->proposal ? &*state_->proposal : nullptr;
}
const DistanceSampler* Language::reference_sampler() const noexcept {
  return state_->reference ? &*state_->reference : nullptr;
}

namespace detail {

class FamilyProcess {
public:
  virtual ~FamilyProcess() = default;
  virtual void generate(Document& doc) = 0;
};

namespace {

// Draws pair types from the family distribution conditioned on the types that
// are not currently open.
class TypePicker {
public:
  TypePicker(const DistributionWeights& dist)
      : dist_(&dist), open_(dist.size(), 0) {
    for (double p : dist.probabilities())
      positive_ += p > 0.0 ? 1 : 0;
  }

  void reset() noexcept {
    std::fill(open_.begin(), open_.end(), std::uint8_t{0});
    open_positive_ = 0;
    open_mass_ = 0.0;
  }

  // False when every type with mass is open.
  bool available() const noexcept { return open_positive_ < positive_; }

  void mark_open(std::uint32_t t) noexcept {
    open_[t] = 1;
    ++open_positive_;
    open_mass_ += dist_->probability(t);
  }
  void mark_closed(std::uint32_t t) noexcept {
    open_[t] = 0;
    --open_positive_;
    open_mass_ = open_positive_ == 0 ? 0.0 : open_mass_ - dist_->probability(t);
  }

  // Requires available(). bits receives -log2 P(t | closed).
  std::uint32_t draw(Rng& rng, double& bits) {
    if (open_positive_ == 0) {
      const auto t = static_cast<std::uint32_t>(dist_->sample(rng));
      bits = dist_->surprisal_bits(t);
      return t;
    }
    const bool cheap_mass = open_mass_ < 0.5;
    for (int tries = 0; cheap_mass && tries < 32; ++tries) {
      const auto t = static_cast<std::uint32_t>(dist_->sample(rng));
      if (!open_[t]) {
        bits = dist_->surprisal_bits(t) + std::log2(1.0 - open_mass_);
        return t;
      }
    }
    // Exact draw over the closed types.
    const auto probs = dist_->probabilities();
    double closed = 0.0;
    for (std::size_t t = 0; t < probs.size(); ++t)
      if (!open_[t])
        closed += probs[t];
    const double u = rng.uniform() * closed;
    double acc = 0.0;
    std::uint32_t pick = 0;
    for (std::size_t t = 0; t < probs.size(); ++t) {
      if (open_[t] || probs[t] <= 0.0)
        continue;
      pick = static_cast<std::uint32_t>(t);
      acc += probs[t];
      if (u < acc)
        break;
    }
    bits = dist_->surprisal_bits(pick) + std::log2(closed);
    return pick;
  }

private:
  const DistributionWeights* dist_;
  std::vector<std::uint8_t> open_;
  std::uint32_t positive_ = 0;
  std::uint32_t open_positive_ = 0;
  double open_mass_ = 0.0;
};

inline void emit(Document& doc, std::uint32_t id, std::int32_t partner, double bits, std::uint8_t flags) {
  doc.ids.push_back(static_cast<TokenId>(id));
  doc.partners.push_back(partner);
  doc.surprisal_bits.push_back(bits);
  doc.flags.push_back(flags);
}

inline void link(Document& doc, std::size_t open, std::size_t close) {
  doc.partners[open] = static_cast<std::int32_t>(close);
}

class NestProcess final : public FamilyProcess {
public:
  NestProcess(const LanguageSpec& spec, std::uint64_t seed)
      : spec_(spec), rng_(seed), picker_(*spec.distribution), open_bits_(-std::log2(spec.p_open)),
        close_bits_(-std::log2(1.0 - spec.p_open)) {}

  void generate(Document& doc) override {
    doc.clear();
    doc.family = Family::nest;
    picker_.reset();
    stack_.clear();
    const Vocabulary& vocab = spec_.vocab;
    std::size_t i = 0;
    for (;;) {
      bool open;
      double bits = 0.0;
      if (stack_.empty()) {
        open = true;
      } else if (!picker_.available()) {
        open = false;
        ++doc.counters.forced_closes;
      } else {
        open = rng_.uniform() < spec_.p_open;
        bits = open ? open_bits_ : close_bits_;
      }
      if (open) {
        double type_bits = 0.0;
        const std::uint32_t t = picker_.draw(rng_, type_bits);
        picker_.mark_open(t);
        stack_.push_back(static_cast<std::uint32_t>(i));
        emit(doc, t, -1, bits + type_bits, 0);
      } else {
        const std::uint32_t o = stack_.back();
        stack_.pop_back();
        const std::uint32_t t = doc.ids[o];
        picker_.mark_closed(t);
        emit(doc, vocab.close_of(t), static_cast<std::int32_t>(o), bits, 0);
        link(doc, o, i);
      }
      ++i;
      if (stack_.empty() && i >= spec_.doc_target_len)
        break;
    }
  }

private:
  const LanguageSpec& spec_;
  Rng rng_;
  TypePicker picker_;
  double open_bits_;
  double close_bits_;
  std::vector<std::uint32_t> stack_;
};

// Future close slots of the distance scheduler, indexed by document position.
class SlotSchedule {
public:
  struct Pending {
    std::uint32_t pos;
    std::uint32_t open;
  };

  void reset() {
    owner_.clear();
    pending_.clear();
  }
  bool occupied(std::uint64_t pos) const noexcept { return pos < owner_.size() && owner_[pos] >= 0; }
  std::int32_t owner(std::uint64_t pos) const noexcept { return pos < owner_.size() ? owner_[pos] : -1; }

  void schedule(std::uint32_t pos, std::uint32_t open) {
    if (pos >= owner_.size())
      owner_.resize(std::max<std::size_t>(pos + 1, owner_.size() * 2), -1);
    owner_[pos] = static_cast<std::int32_t>(open);
    pending_.push_back({pos, open});
  }

  // Removes the pending close at pos; returns its open index.
  std::uint32_t take(std::uint32_t pos) {
    const auto open = static_cast<std::uint32_t>(owner_[pos]);
    owner_[pos] = -1;
    for (std::size_t k = 0; k < pending_.size(); ++k)
      if (pending_[k].pos == pos) {
        pending_[k] = pending_.back();
        pending_.pop_back();
        break;
      }
    return open;
  }

  // Removes the pending pair opened earliest; returns its open index.
  std::uint32_t take_oldest() {
    std::size_t best = 0;
    for (std::size_t k = 1; k < pending_.size(); ++k)
      if (pending_[k].open < pending_[best].open)
        best = k;
    return take(pending_[best].pos);
  }

  // Removes the soonest-scheduled pending close whose open index satisfies
  // `eligible`; returns that open index, or nothing if none qualifies.
  template <class Pred>
  std::optional<std::uint32_t> take_next_if(Pred eligible) {
    std::optional<std::size_t> best;
    for (std::size_t k = 0; k < pending_.size(); ++k)
      if ((!best || pending_[k].pos < pending_[*best].pos) && eligible(pending_[k].open))
        best = k;
    if (!best)
      return std::nullopt;
    return take(pending_[*best].pos);
  }

  std::uint32_t last_pos() const noexcept {
    std::uint32_t m = 0;
    for (const auto& p : pending_)
      m = std::max(m, p.pos);
    return m;
  }

  const std::vector<Pending>& pending() const noexcept { return pending_; }

private:
  std::vector<std::int32_t> owner_;
  std::vector<Pending> pending_;
};

struct DistanceDraw {
  std::uint32_t distance;
  double bits;
};

// Draws d from `q` conditioned on slot pos + d being free and d <= limit.
// Returns nothing when no admissible distance has mass.
std::optional<DistanceDraw> draw_free_distance(const DistanceSampler& q, const SlotSchedule& slots,
                                               std::uint32_t pos, std::uint64_t limit, Rng& rng) {
  const double total = q.mass_upto(limit);
  if (!(total > 0.0))
    return std::nullopt;
  double blocked = 0.0;
  for (const auto& p : slots.pending())
    if (p.pos > pos && p.pos - pos <= limit)
      blocked += q.probability(p.pos - pos);
  const double free_mass = total - blocked;
  if (free_mass > 1e-3 * total) {
    for (;;) {
      const std::uint32_t d = limit == std::numeric_limits<std::uint64_t>::max() ? q.sample(rng)
                                                                                 : q.sample_upto(limit, rng);
      if (!slots.occupied(static_cast<std::uint64_t>(pos) + d))
        return DistanceDraw{d, -std::log2(q.probability(d) / free_mass)};
    }
  }
  double exact = 0.0;
  for (std::uint32_t d : q.support()) {
    if (d > limit)
      break;
    if (!slots.occupied(static_cast<std::uint64_t>(pos) + d))
      exact += q.probability(d);
  }
  if (!(exact > 0.0))
    return std::nullopt;
  const double u = rng.uniform() * exact;
  double acc = 0.0;
  std::uint32_t pick = 0;
  for (std::uint32_t d : q.support()) {
    if (d > limit)
      break;
    if (slots.occupied(static_cast<std::uint64_t>(pos) + d))
      continue;
    pick = d;
    acc += q.probability(d);
    if (u < acc)
      break;
  }
  return DistanceDraw{pick, -std::log2(q.probability(pick) / exact)};
}

// First free slot at or after pos + d.
std::uint32_t push_to_free(const SlotSchedule& slots, std::uint32_t pos, std::uint32_t d) {
  std::uint64_t at = static_cast<std::uint64_t>(pos) + d;
  while (slots.occupied(at))
    ++at;
  return static_cast<std::uint32_t>(at);
}

// Each free position opens a pair whose close is scheduled by a drawn
// distance; occupied slots are excluded from the draw. After doc_target_len
// opens, free positions keep opening but only with closes that land inside
// the already-scheduled span. When none fits, the soonest pending close whose
// new distance stays in the support moves to the current position; failing
// that, the open draws from the whole support. After doc_target_len such
// fallbacks the soonest close moves unconditionally, which bounds the
// document. The document ends when nothing is pending.
class CrossProcess final : public FamilyProcess {
public:
  CrossProcess(const LanguageSpec& spec, const DistanceSampler& proposal, std::uint64_t seed)
      : spec_(spec), proposal_(proposal), rng_(seed), picker_(*spec.distribution) {}

  void generate(Document& doc) override {
    doc.clear();
    doc.family = Family::cross;
    picker_.reset();
    slots_.reset();
    constexpr auto unlimited = std::numeric_limits<std::uint64_t>::max();
    std::uint32_t opens = 0;
    std::uint32_t fallbacks = 0;
    for (std::uint32_t i = 0;; ++i) {
      if (slots_.occupied(i)) {
        close_at(doc, i, slots_.take(i));
        continue;
      }
      const bool filling = opens >= spec_.doc_target_len;
      if (filling && slots_.pending().empty())
        break;
      if (!picker_.available()) {
        const std::uint32_t o = slots_.take_oldest();
        close_at(doc, i, o);
        ++doc.counters.forced_closes;
        continue;
      }
      std::optional<DistanceDraw> draw;
      if (filling) {
        draw = draw_free_distance(proposal_, slots_, i, slots_.last_pos() - i, rng_);
        if (!draw) {
          // Nothing fits inside the scheduled span: pull a pending close
          // forward to i if its distance stays in the support.
          auto pulled = slots_.take_next_if([&](std::uint32_t o) { return proposal_.probability(i - o) > 0.0; });
          if (!pulled && ++fallbacks > spec_.doc_target_len)
            pulled = slots_.take_next_if([](std::uint32_t) { return true; });
          if (pulled) {
            close_at(doc, i, *pulled);
            ++doc.counters.forced_closes;
            continue;
          }
        }
      }
      if (!draw)
        draw = draw_free_distance(proposal_, slots_, i, unlimited, rng_);
      double bits = 0.0;
      const std::uint32_t t = picker_.draw(rng_, bits);
      picker_.mark_open(t);
      std::uint32_t close_pos;
      if (draw) {
        close_pos = i + draw->distance;
        bits += draw->bits;
        doc.drawn_distances.push_back(draw->distance);
      } else {
        const std::uint32_t d = proposal_.sample(rng_);
        close_pos = push_to_free(slots_, i, d);
        if (close_pos != i + d)
          ++doc.counters.collision_pushes;
        bits += -std::log2(proposal_.probability(d));
        doc.drawn_distances.push_back(d);
      }
      slots_.schedule(close_pos, i);
      emit(doc, t, -1, bits, kCrossArcFlag);
      ++opens;
    }
  }

private:
  void close_at(Document& doc, std::uint32_t i, std::uint32_t open) {
    const std::uint32_t t = doc.ids[open];
    picker_.mark_closed(t);
    emit(doc, spec_.vocab.close_of(t), static_cast<std::int32_t>(open), 0.0, kCrossArcFlag);
    link(doc, open, i);
  }

  const LanguageSpec& spec_;
  const DistanceSampler& proposal_;
  Rng rng_;
  TypePicker picker_;
  SlotSchedule slots_;
};

// NEST with a fraction p_mix of opens handed to the distance scheduler: such
// an open stays off the stack and its close is injected at the first free
// slot at or after the drawn distance.
class NestMixProcess final : public FamilyProcess {
public:
  NestMixProcess(const LanguageSpec& spec, const DistanceSampler& reference, std::uint64_t seed)
      : spec_(spec), reference_(reference), rng_(seed), picker_(*spec.distribution),
        open_bits_(-std::log2(spec.p_open)), close_bits_(-std::log2(1.0 - spec.p_open)),
        cross_bits_(spec.p_mix > 0.0 ? -std::log2(spec.p_mix) : 0.0),
        nest_bits_(spec.p_mix > 0.0 ? -std::log2(1.0 - spec.p_mix) : 0.0) {}

  void generate(Document& doc) override {
    doc.clear();
    doc.family = Family::nest_mix;
    picker_.reset();
    slots_.reset();
    stack_.clear();
    const Vocabulary& vocab = spec_.vocab;
    for (std::uint32_t i = 0;; ++i) {
      if (slots_.occupied(i)) {
        close_cross(doc, i, slots_.take(i));
      } else if (stack_.empty() && !picker_.available()) {
        // Every type is held by a pending cross arc.
        close_cross(doc, i, slots_.take_oldest());
        ++doc.counters.forced_closes;
      } else {
        bool open;
        double bits = 0.0;
        if (stack_.empty()) {
          open = true;
        } else if (!picker_.available()) {
          open = false;
          ++doc.counters.forced_closes;
        } else {
          open = rng_.uniform() < spec_.p_open;
          bits = open ? open_bits_ : close_bits_;
        }
        if (open) {
          const bool cross = spec_.p_mix > 0.0 && rng_.uniform() < spec_.p_mix;
          bits += cross ? cross_bits_ : nest_bits_;
          double type_bits = 0.0;
          const std::uint32_t t = picker_.draw(rng_, type_bits);
          picker_.mark_open(t);
          bits += type_bits;
          if (cross) {
            const std::uint32_t d = reference_.sample(rng_);
            bits += -std::log2(reference_.probability(d));
            const std::uint32_t close_pos = push_to_free(slots_, i, d);
            if (close_pos != i + d)
              ++doc.counters.collision_pushes;
            slots_.schedule(close_pos, i);
            doc.drawn_distances.push_back(d);
            emit(doc, t, -1, bits, kCrossArcFlag);
          } else {
            stack_.push_back(i);
            emit(doc, t, -1, bits, 0);
          }
        } else {
          const std::uint32_t o = stack_.back();
          stack_.pop_back();
          const std::uint32_t t = doc.ids[o];
          picker_.mark_closed(t);
          emit(doc, vocab.close_of(t), static_cast<std::int32_t>(o), bits, 0);
          link(doc, o, i);
        }
      }
      if (stack_.empty() && slots_.pending().empty() && i + 1 >= spec_.doc_target_len)
        break;
    }
  }

private:
  void close_cross(Document& doc, std::uint32_t i, std::uint32_t open) {
    const std::uint32_t t = doc.ids[open];
    picker_.mark_closed(t);
    emit(doc, spec_.vocab.close_of(t), static_cast<std::int32_t>(open), 0.0, kCrossArcFlag);
    link(doc, open, i);
  }

  const LanguageSpec& spec_;
  const DistanceSampler& reference_;
  Rng rng_;
  TypePicker picker_;
  SlotSchedule slots_;
  std::vector<std::uint32_t> stack_;
  double open_bits_;
  double close_bits_;
  double cross_bits_;
  double nest_bits_;
};

class RandProcess final : public FamilyProcess {
public:
  RandProcess(const LanguageSpec& spec, std::uint64_t seed) : spec_(spec), rng_(seed) {}

  void generate(Document& doc) override {
    doc.clear();
    doc.family = Family::rand;
    const DistributionWeights& dist = *spec_.distribution;
    for (std::uint32_t i = 0; i < spec_.doc_target_len; ++i) {
      const auto t = static_cast<std::uint32_t>(dist.sample(rng_));
      emit(doc, t, -1, dist.surprisal_bits(t), 0);
    }
  }

private:
  const LanguageSpec& spec_;
  Rng rng_;
};

// Blocks of rep_block fresh tokens followed by their copy; a document holds
// ceil(doc_target_len / (2 * rep_block)) whole blocks.
class RepProcess final : public FamilyProcess {
public:
  RepProcess(const LanguageSpec& spec, std::uint64_t seed) : spec_(spec), rng_(seed) {}

  void generate(Document& doc) override {
    doc.clear();
    doc.family = Family::rep;
    const DistributionWeights& dist = *spec_.distribution;
    const std::uint32_t k = spec_.rep_block;
    const std::uint64_t blocks = (static_cast<std::uint64_t>(spec_.doc_target_len) + 2 * k - 1) / (2 * k);
    for (std::uint64_t b = 0; b < blocks; ++b) {
      const std::size_t start = doc.size();
      for (std::uint32_t j = 0; j < k; ++j) {
        const auto t = static_cast<std::uint32_t>(dist.sample(rng_));
        emit(doc, t, static_cast<std::int32_t>(start + k + j), dist.surprisal_bits(t), 0);
      }
      for (std::uint32_t j = 0; j < k; ++j)
        emit(doc, doc.ids[start + j], static_cast<std::int32_t>(start + j), 0.0, 0);
    }
  }

private:
  const LanguageSpec& spec_;
  Rng rng_;
};

std::unique_ptr<FamilyProcess> make_process(const Language& language, const LanguageSpec& spec,
                                            std::uint64_t seed) {
  switch (spec.family) {
  case Family::nest: return std::make_unique<NestProcess>(spec, seed);
  case Family::cross: return std::make_unique<CrossProcess>(spec, *language.cross_proposal(), seed);
  case Family::rand: return std::make_unique<RandProcess>(spec, seed);
  case Family::rep: return std::make_unique<RepProcess>(spec, seed);
  case Family::nest_mix: return std::make_unique<NestMixProcess>(spec, *language.reference_sampler(), seed);
  }
  fail(Errc::invalid_spec, "unknown family");
}

// Distances below 64 are reweighted individually, longer ones in geometric
// buckets (ratio 1.15) that share one weight.
std::size_t calibration_bucket(std::uint32_t d) {
  if (d < 64)
    return d;
  return 64 + static_cast<std::size_t>(std::log(static_cast<double>(d) / 64.0) / std::log(1.15));
}

} // namespace
} // namespace detail

Language Language::prepare(LanguageSpec spec) {
  spec.validate();
  auto state = std::make_shared<State>();
  state->spec = std::move(spec);
  const LanguageSpec& s = state->spec;
  if (s.distance_ref)
    state->reference.emplace(s.distance_ref->pmf());
  if (s.family == Family::cross) {
    state->proposal.emplace(s.distance_ref->pmf());
    if (s.calibration.rounds > 0) {
      std::map<std::size_t, double> target;
      for (auto [d, p] : s.distance_ref->pmf())
        target[detail::calibration_bucket(d)] += p;
      std::map<std::size_t, double> weight;
      Document doc;
      for (std::uint32_t round = 0; round < s.calibration.rounds; ++round) {
        detail::CrossProcess process(s, *state->proposal, mix_seed(s.seed, 0xca1100000000ull + round));
        std::map<std::size_t, double> realized;
        double arcs = 0.0;
        std::uint64_t emitted = 0;
        while (emitted < s.calibration.tokens_per_round) {
          process.generate(doc);
          emitted += doc.size();
          for (std::size_t i = 0; i < doc.size(); ++i)
            if (doc.partners[i] > static_cast<std::int32_t>(i)) {
              realized[detail::calibration_bucket(static_cast<std::uint32_t>(doc.partners[i]) -
                                                  static_cast<std::uint32_t>(i))] += 1.0;
              arcs += 1.0;
            }
        }
        for (auto [b, mass] : target) {
          auto it = realized.find(b);
          if (it == realized.end())
            continue;
          const double ratio = std::clamp(mass / (it->second / arcs), 0.2, 5.0);
          auto [w, inserted] = weight.try_emplace(b, 1.0);
          w->second *= ratio;
        }
        std::map<std::uint32_t, double> proposal;
        for (auto [d, p] : s.distance_ref->pmf()) {
          auto it = weight.find(detail::calibration_bucket(d));
          proposal[d] = p * (it == weight.end() ? 1.0 : it->second);
        }
        state->proposal.emplace(proposal);
      }
    }
  }
  return Language(std::move(state));
}

Generator::Generator(const Language& language, std::uint64_t budget, std::uint64_t shard_index)
    : language_(language),
      process_(detail::make_process(language_, language_.spec(), mix_seed(language_.spec().seed, shard_index))),
      budget_(budget) {}

Generator::~Generator() = default;
Generator::Generator(Generator&&) noexcept = default;
Generator& Generator::operator=(Generator&&) noexcept = default;

bool Generator::next(Document& doc) {
  if (emitted_ >= budget_)
    return false;
  process_->generate(doc);
  emitted_ += doc.size();
  return true;
}

namespace {
Generator checked(Family want, const Language& language, std::uint64_t n_tokens, std::uint64_t shard) {
  if (language.spec().family != want)
    fail(Errc::invalid_spec, "family: expected " + std::string(family_name(want)) + ", spec has " +
                                 std::string(family_name(language.spec().family)));
  return Generator(language, n_tokens, shard);
}
} // namespace

Generator gen_nest(const Language& l, std::uint64_t n, std::uint64_t shard) { return checked(Family::nest, l, n, shard); }
Generator gen_cross(const Language& l, std::uint64_t n, std::uint64_t shard) { return checked(Family::cross, l, n, shard); }
Generator gen_rand(const Language& l, std::uint64_t n, std::uint64_t shard) { return checked(Family::rand, l, n, shard); }
Generator gen_rep(const Language& l, std::uint64_t n, std::uint64_t shard) { return checked(Family::rep, l, n, shard); }
Generator gen_nest_mix(const Language& l, std::uint64_t n, std::uint64_t shard) {
  return checked(Family::nest_mix, l, n, shard);
}

std::vector<Arc> annotated_arcs(const Document& doc) {
  std::vector<Arc> arcs;
  for (std::size_t i = 0; i < doc.size(); ++i)
    if (doc.partners[i] > static_cast<std::int32_t>(i))
      arcs.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(doc.partners[i])});
  return arcs;
}

DocumentStats document_stats(const Document& doc, const Vocabulary& vocab) {
  DocumentStats s;
  s.length = doc.size();
  if (doc.empty())
    return s;
  if (is_paren_family(doc.family)) {
    const DepthStats depth = depth_stats(doc.ids, vocab);
    s.max_depth = depth.max_depth;
    s.mean_depth = depth.mean_depth;
  }
  const std::vector<Arc> arcs = annotated_arcs(doc);
  s.crossing_count = count_crossings(arcs);
  if (!arcs.empty()) {
    std::size_t flagged = 0;
    for (const Arc& a : arcs)
      flagged += (doc.flags[a.open] & kCrossArcFlag) ? 1 : 0;
    s.cross_arc_fraction = static_cast<double>(flagged) / static_cast<double>(arcs.size());
  }
  return s;
}

} // namespace flc
