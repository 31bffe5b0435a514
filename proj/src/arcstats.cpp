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

#include "flc/arcstats.hpp"

#include "flc/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace flc {

namespace {

void check_range(std::span<const TokenId> tokens, const Vocabulary& vocab) {
  for (std::size_t i = 0; i < tokens.size(); ++i)
    if (!vocab.contains(tokens[i]))
      fail(Errc::invalid_input, "token " + std::to_string(tokens[i]) + " at index " + std::to_string(i) +
                                    " is outside the vocabulary of " + std::to_string(vocab.total_size()));
}

} // namespace

std::string BalanceReport::describe() const {
  if (balanced)
    return "balanced";
  std::ostringstream out;
  out << "unbalanced";
  if (first_violation)
    out << "; first unmatched close at index " << *first_violation;
  for (auto t : unmatched_open_types)
    out << "; unmatched open " << t;
  for (auto t : unmatched_close_types)
    out << "; unmatched close " << t;
  return out.str();
}

BalanceReport check_balanced(std::span<const TokenId> tokens, const Vocabulary& vocab) {
  check_range(tokens, vocab);
  std::vector<std::int64_t> open_count(vocab.num_pairs(), 0);
  std::vector<std::uint8_t> bad_close(vocab.num_pairs(), 0);
  BalanceReport report;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const std::uint32_t id = tokens[i];
    const std::uint32_t t = vocab.pair_type(id);
    if (vocab.is_open(id)) {
      ++open_count[t];
    } else if (open_count[t] == 0) {
      report.balanced = false;
      if (!report.first_violation)
        report.first_violation = i;
      if (!bad_close[t]) {
        bad_close[t] = 1;
        report.unmatched_close_types.push_back(t);
      }
    } else {
      --open_count[t];
    }
  }
  for (std::uint32_t t = 0; t < vocab.num_pairs(); ++t)
    if (open_count[t] > 0) {
      report.balanced = false;
      report.unmatched_open_types.push_back(t);
    }
  std::sort(report.unmatched_close_types.begin(), report.unmatched_close_types.end());
  return report;
}

bool check_well_nested(std::span<const TokenId> tokens, const Vocabulary& vocab) {
  check_range(tokens, vocab);
  std::vector<TokenId> stack;
  for (TokenId id : tokens) {
    if (vocab.is_open(id)) {
      stack.push_back(id);
    } else {
      if (stack.empty() || vocab.close_of(stack.back()) != id)
        return false;
      stack.pop_back();
    }
  }
  return stack.empty();
}

ArcSet match_arcs(std::span<const TokenId> tokens, const Vocabulary& vocab, MatchPolicy policy,
                  std::span<const std::int32_t> partners) {
  check_range(tokens, vocab);
  ArcSet out;
  out.policy = policy;
  const std::size_t n = tokens.size();

  if (policy == MatchPolicy::annotated && !partners.empty()) {
    if (partners.size() != n)
      fail(Errc::invalid_input, "annotation length " + std::to_string(partners.size()) +
                                    " does not match token count " + std::to_string(n));
    for (std::size_t i = 0; i < n; ++i) {
      const std::int32_t j = partners[i];
      const std::uint32_t id = tokens[i];
      if (j < 0 || static_cast<std::size_t>(j) >= n || partners[static_cast<std::size_t>(j)] != static_cast<std::int32_t>(i))
        fail(Errc::match_failure, "annotation at index " + std::to_string(i) + " has no symmetric partner");
      if (vocab.is_open(id)) {
        const auto close = static_cast<std::uint32_t>(j);
        if (close <= i || tokens[close] != vocab.close_of(id))
          fail(Errc::match_failure, "annotated arc at index " + std::to_string(i) + " does not close its pair type");
        out.arcs.push_back({static_cast<std::uint32_t>(i), close});
      }
    }
    std::sort(out.arcs.begin(), out.arcs.end());
    return out;
  }

  // Per-type stacks threaded through `below`: top[t] is the newest pending
  // open of type t, below[i] the one under open i.
  constexpr std::uint32_t none = 0xffffffffu;
  std::vector<std::uint32_t> top(vocab.num_pairs(), none);
  std::vector<std::uint32_t> below(n, none);
  out.arcs.reserve(n / 2);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t id = tokens[i];
    const std::uint32_t t = vocab.pair_type(id);
    if (vocab.is_open(id)) {
      if (top[t] != none && policy != MatchPolicy::stack)
        fail(Errc::ambiguous, "pair type " + std::to_string(t) + " is opened at index " + std::to_string(i) +
                                  " while already open at index " + std::to_string(top[t]));
      below[i] = top[t];
      top[t] = static_cast<std::uint32_t>(i);
    } else {
      if (top[t] == none)
        fail(Errc::match_failure, "unmatched close of type " + std::to_string(t) + " at index " + std::to_string(i));
      const std::uint32_t open = top[t];
      top[t] = below[open];
      out.arcs.push_back({open, static_cast<std::uint32_t>(i)});
    }
  }
  std::uint32_t first_pending = none;
  for (std::uint32_t t = 0; t < vocab.num_pairs(); ++t)
    for (std::uint32_t o = top[t]; o != none; o = below[o])
      first_pending = std::min(first_pending, o);
  if (first_pending != none)
    fail(Errc::match_failure, "unmatched open of type " + std::to_string(vocab.pair_type(tokens[first_pending])) +
                                  " at index " + std::to_string(first_pending));
  std::sort(out.arcs.begin(), out.arcs.end());
  return out;
}

std::uint64_t count_crossings(std::span<const Arc> arcs) {
  if (arcs.size() < 2)
    return 0;
  std::vector<Arc> sorted;
  std::span<const Arc> view = arcs;
  if (!std::is_sorted(arcs.begin(), arcs.end(), [](const Arc& a, const Arc& b) { return a.open < b.open; })) {
    sorted.assign(arcs.begin(), arcs.end());
    std::sort(sorted.begin(), sorted.end());
    view = sorted;
  }
  std::uint32_t max_close = 0;
  for (const Arc& a : view)
    max_close = std::max(max_close, a.close);

  // Fenwick tree over close positions of arcs already swept (all opened
  // earlier). An earlier arc crosses (a, b) iff its close lies in (a, b).
  std::vector<std::uint32_t> tree(static_cast<std::size_t>(max_close) + 2, 0);
  auto prefix = [&](std::uint32_t pos) {
    std::uint64_t s = 0;
    for (std::size_t i = static_cast<std::size_t>(pos) + 1; i > 0; i -= i & (~i + 1))
      s += tree[i];
    return s;
  };
  std::uint64_t crossings = 0;
  for (const Arc& a : view) {
    if (a.close > a.open + 1)
      crossings += prefix(a.close - 1) - prefix(a.open);
    for (std::size_t i = static_cast<std::size_t>(a.close) + 1; i < tree.size(); i += i & (~i + 1))
      ++tree[i];
  }
  return crossings;
}

DistanceDistribution DistanceDistribution::from_counts(const std::map<std::uint32_t, std::uint64_t>& counts) {
  std::uint64_t total = 0;
  for (auto [d, c] : counts) {
    if (d < 1)
      fail(Errc::invalid_input, "arc distances must be >= 1");
    total += c;
  }
  if (total == 0)
    fail(Errc::invalid_input, "distance distribution needs at least one sample");
  DistanceDistribution out;
  out.sample_count_ = total;
  for (auto [d, c] : counts)
    if (c > 0)
      out.pmf_[d] = static_cast<double>(c) / static_cast<double>(total);
  return out;
}

DistanceDistribution DistanceDistribution::from_pmf(std::map<std::uint32_t, double> pmf, std::uint64_t sample_count) {
  double total = 0.0;
  for (auto [d, p] : pmf) {
    if (d < 1)
      fail(Errc::invalid_input, "arc distances must be >= 1, got " + std::to_string(d));
    if (!(p >= 0.0) || !std::isfinite(p))
      fail(Errc::invalid_input, "distance probabilities must be finite and non-negative");
    total += p;
  }
  if (!(total > 0.0))
    fail(Errc::invalid_input, "distance distribution has no mass");
  // Already-normalized input is kept bit-for-bit, so serialized pmfs reload
  // to exactly the same values.
  const double scale = std::abs(total - 1.0) <= 1e-12 ? 1.0 : total;
  DistanceDistribution out;
  out.sample_count_ = sample_count;
  for (auto [d, p] : pmf)
    if (p > 0.0)
      out.pmf_[d] = p / scale;
  return out;
}

double DistanceDistribution::probability(std::uint32_t distance) const noexcept {
  auto it = pmf_.find(distance);
  return it == pmf_.end() ? 0.0 : it->second;
}

double DistanceDistribution::mean() const noexcept {
  double m = 0.0;
  for (auto [d, p] : pmf_)
    m += static_cast<double>(d) * p;
  return m;
}

DistanceDistribution DistanceDistribution::merged(const DistanceDistribution& other) const {
  if (pmf_.empty())
    return other;
  if (other.pmf_.empty())
    return *this;
  const double n1 = static_cast<double>(sample_count_);
  const double n2 = static_cast<double>(other.sample_count_);
  const double w1 = (n1 + n2) > 0 ? n1 / (n1 + n2) : 0.5;
  std::map<std::uint32_t, double> pmf;
  for (auto [d, p] : pmf_)
    pmf[d] += w1 * p;
  for (auto [d, p] : other.pmf_)
    pmf[d] += (1.0 - w1) * p;
  return from_pmf(std::move(pmf), sample_count_ + other.sample_count_);
}

std::string DistanceDistribution::to_json() const {
  nlohmann::json j;
  j["sample_count"] = sample_count_;
  auto pmf = nlohmann::json::array();
  for (auto [d, p] : pmf_)
    pmf.push_back({d, p});
  j["pmf"] = std::move(pmf);
  return j.dump();
}

DistanceDistribution DistanceDistribution::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::parse, std::string("distance distribution is not valid JSON: ") + e.what());
  }
  try {
    std::map<std::uint32_t, double> pmf;
    for (const auto& entry : j.at("pmf")) {
      const auto d = entry.at(0).get<std::int64_t>();
      if (d < 1)
        fail(Errc::invalid_input, "arc distances must be >= 1, got " + std::to_string(d));
      pmf[static_cast<std::uint32_t>(d)] += entry.at(1).get<double>();
    }
    return from_pmf(std::move(pmf), j.value("sample_count", std::uint64_t{0}));
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::parse, std::string("malformed distance distribution: ") + e.what());
  }
}

void DistanceCounter::add(std::span<const Arc> arcs) {
  for (const Arc& a : arcs)
    add(a.distance());
}

void DistanceCounter::merge(const DistanceCounter& other) {
  for (auto [d, c] : other.counts_)
    counts_[d] += c;
  total_ += other.total_;
}

DistanceDistribution DistanceCounter::distribution() const { return DistanceDistribution::from_counts(counts_); }

DistanceDistribution distance_distribution(std::span<const ArcSet> arc_sets) {
  DistanceCounter counter;
  for (const ArcSet& s : arc_sets)
    counter.add(s.arcs);
  return counter.distribution();
}

double kl_divergence(const DistanceDistribution& p, const DistanceDistribution& q, double smoothing) {
  if (!(smoothing > 0.0))
    fail(Errc::invalid_argument, "KL smoothing must be > 0");
  std::size_t unseen = 0;
  for (auto [d, pd] : p.pmf())
    if (q.pmf().find(d) == q.pmf().end())
      ++unseen;
  const double norm = 1.0 + smoothing * static_cast<double>(unseen);
  double kl = 0.0;
  for (auto [d, pd] : p.pmf()) {
    if (pd <= 0.0)
      continue;
    auto it = q.pmf().find(d);
    const double qd = (it == q.pmf().end() ? smoothing : it->second) / norm;
    kl += pd * std::log2(pd / qd);
  }
  return std::max(kl, 0.0);
}

double kl_divergence(const DistanceDistribution& p, const DistanceDistribution& q) {
  if (q.sample_count() == 0)
    fail(Errc::invalid_input, "reference distribution has no sample count; pass an explicit smoothing");
  return kl_divergence(p, q, 1.0 / static_cast<double>(q.sample_count()));
}

DepthStats depth_stats(std::span<const TokenId> tokens, const Vocabulary& vocab) {
  DepthAccumulator acc;
  acc.add(tokens, vocab);
  return acc.stats();
}

void DepthAccumulator::add(std::span<const TokenId> tokens, const Vocabulary& vocab) {
  check_range(tokens, vocab);
  std::int64_t depth = 0;
  std::uint64_t sum = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    depth += vocab.is_open(tokens[i]) ? 1 : -1;
    if (depth < 0)
      fail(Errc::invalid_input, "negative depth at index " + std::to_string(i));
    const auto d = static_cast<std::size_t>(depth);
    if (d >= histogram_.size())
      histogram_.resize(d + 1, 0);
    ++histogram_[d];
    sum += d;
  }
  positions_ += tokens.size();
  depth_sum_ += static_cast<long double>(sum);
}

void DepthAccumulator::merge(const DepthAccumulator& other) {
  if (other.histogram_.size() > histogram_.size())
    histogram_.resize(other.histogram_.size(), 0);
  for (std::size_t d = 0; d < other.histogram_.size(); ++d)
    histogram_[d] += other.histogram_[d];
  positions_ += other.positions_;
  depth_sum_ += other.depth_sum_;
}

DepthStats DepthAccumulator::stats() const {
  DepthStats s;
  s.histogram = histogram_;
  if (positions_ > 0)
    s.mean_depth = static_cast<double>(depth_sum_ / static_cast<long double>(positions_));
  for (std::size_t d = histogram_.size(); d > 0; --d)
    if (histogram_[d - 1] > 0) {
      s.max_depth = static_cast<std::uint32_t>(d - 1);
      break;
    }
  return s;
}

namespace {

struct ZipfObjective {
  std::vector<double> log_rank; // ln(r + beta), r = 1..K
  std::vector<double> counts;
  double total = 0.0;
  double weighted_log_sum = 0.0; // sum_r c_r ln(r + beta)

  // d/dalpha of the log-likelihood: -S + N E_alpha[ln(r + beta)].
  double derivative(double alpha) const {
    const double shift = log_rank.front();
    double z = 0.0, m = 0.0;
    for (double lr : log_rank) {
      const double w = std::exp(-alpha * (lr - shift));
      z += w;
      m += w * lr;
    }
    return -weighted_log_sum + total * (m / z);
  }
};

} // namespace

double zipf_log_likelihood(std::span<const std::uint64_t> sorted_counts, double alpha, double beta) {
  if (!(beta > -1.0))
    fail(Errc::invalid_argument, "beta must be > -1");
  const double shift = std::log(1.0 + beta);
  double z = 0.0, ll = 0.0, total = 0.0;
  for (std::size_t r = 0; r < sorted_counts.size(); ++r) {
    const double lr = std::log(static_cast<double>(r + 1) + beta);
    z += std::exp(-alpha * (lr - shift));
    ll += -alpha * lr * static_cast<double>(sorted_counts[r]);
    total += static_cast<double>(sorted_counts[r]);
  }
  // ln Z(alpha) = ln(z) - alpha * shift
  return ll - total * (std::log(z) - alpha * shift);
}

ZipfFit fit_zipf(std::span<const std::uint64_t> token_counts, double beta_fixed) {
  if (!(beta_fixed > -1.0) || !std::isfinite(beta_fixed))
    fail(Errc::invalid_argument, "beta must be > -1");
  std::vector<std::uint64_t> sorted;
  for (auto c : token_counts)
    if (c > 0)
      sorted.push_back(c);
  if (sorted.size() < 2)
    fail(Errc::invalid_input, "Zipf fit needs at least two observed tokens, got " + std::to_string(sorted.size()));
  std::sort(sorted.begin(), sorted.end(), std::greater<>());

  ZipfObjective f;
  for (std::size_t r = 0; r < sorted.size(); ++r) {
    const double lr = std::log(static_cast<double>(r + 1) + beta_fixed);
    f.log_rank.push_back(lr);
    f.counts.push_back(static_cast<double>(sorted[r]));
    f.total += static_cast<double>(sorted[r]);
    f.weighted_log_sum += static_cast<double>(sorted[r]) * lr;
  }

  // The log-likelihood is concave in alpha, so its derivative is decreasing:
  // bisect for the root, or stop at the boundary.
  constexpr double kMaxAlpha = 64.0;
  double alpha = 0.0;
  if (f.derivative(0.0) > 0.0) {
    double lo = 0.0, hi = 1.0;
    while (hi < kMaxAlpha && f.derivative(hi) > 0.0) {
      lo = hi;
      hi *= 2.0;
    }
    if (hi >= kMaxAlpha && f.derivative(kMaxAlpha) > 0.0) {
      alpha = kMaxAlpha;
    } else {
      for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
        const double mid = 0.5 * (lo + hi);
        (f.derivative(mid) > 0.0 ? lo : hi) = mid;
      }
      alpha = 0.5 * (lo + hi);
    }
  }
  ZipfFit fit;
  fit.alpha_hat = alpha;
  fit.beta_fixed = beta_fixed;
  fit.support_size = sorted.size();
  fit.log_likelihood = zipf_log_likelihood(sorted, alpha, beta_fixed);
  return fit;
}

} // namespace flc
