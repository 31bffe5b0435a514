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

#include "oracles.hpp"

#include "flc/arcstats.hpp"
#include "flc/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace flc;

namespace {
const Vocabulary V = make_vocab(250);
std::vector<TokenId> P(const std::string& s) { return oracle::parse_paren(s, V); }

const std::string kFig2a = "1( 54( 54) 225( 225) 1) 248( 103( 123( 123) 103) 248)";
const std::string kFig2b = "1( 54( 225( 1) 54) 225) 248( 248) 123( 103( 123) 103)";
} // namespace

TEST_CASE("check_balanced examples") {
  CHECK(check_balanced(P("1( 54( 54) 1)"), V).balanced);
  CHECK(check_balanced(P("1( 54( 1) 54)"), V).balanced);
  const BalanceReport r = check_balanced(P("1( 54)"), V);
  CHECK_FALSE(r.balanced);
  CHECK(r.first_violation == 1u);
  CHECK(r.unmatched_open_types == std::vector<std::uint32_t>{1});
  CHECK(r.unmatched_close_types == std::vector<std::uint32_t>{54});
  CHECK(r.describe().find("54") != std::string::npos);
}

TEST_CASE("check_balanced: trailing open, empty input, out-of-range id") {
  const BalanceReport r = check_balanced(P("3( 3) 4("), V);
  CHECK_FALSE(r.balanced);
  CHECK_FALSE(r.first_violation.has_value());
  CHECK(r.unmatched_open_types == std::vector<std::uint32_t>{4});
  CHECK(check_balanced(std::vector<TokenId>{}, V).balanced);
  const std::vector<TokenId> bad{3, 500};
  CHECK(oracle::error_code_of([&] { check_balanced(bad, V); }) == Errc::invalid_input);
  CHECK(oracle::error_code_of([&] { check_well_nested(bad, V); }) == Errc::invalid_input);
}

TEST_CASE("check_well_nested examples") {
  CHECK(check_well_nested(P(kFig2a), V));
  CHECK_FALSE(check_well_nested(P(kFig2b), V));
  CHECK(check_well_nested(std::vector<TokenId>{}, V));
  CHECK_FALSE(check_well_nested(P("1( 1) 2("), V));
  CHECK_FALSE(check_well_nested(P("1) 1("), V));
}

TEST_CASE("match_arcs on the crossing example gives the drawn edges") {
  const ArcSet s = match_arcs(P(kFig2b), V, MatchPolicy::scheduled);
  const std::vector<Arc> want{{0, 3}, {1, 4}, {2, 5}, {6, 7}, {8, 10}, {9, 11}};
  CHECK(s.arcs == want);
  CHECK(s.policy == MatchPolicy::scheduled);
  CHECK(match_arcs(P(kFig2b), V, MatchPolicy::stack).arcs == want);
  CHECK(count_crossings(s) == 4);
  CHECK(oracle::crossings(s.arcs) == 4);
}

TEST_CASE("match_arcs single pair and same-type reopen") {
  CHECK(match_arcs(P("7( 7)"), V, MatchPolicy::stack).arcs == std::vector<Arc>{{0, 1}});
  const auto toks = P("7( 7( 7) 7)");
  CHECK(match_arcs(toks, V, MatchPolicy::stack).arcs == std::vector<Arc>{{0, 3}, {1, 2}});
  CHECK(oracle::error_code_of([&] { match_arcs(toks, V, MatchPolicy::annotated); }) == Errc::ambiguous);
  CHECK(oracle::error_code_of([&] { match_arcs(toks, V, MatchPolicy::scheduled); }) == Errc::ambiguous);
  try {
    match_arcs(toks, V, MatchPolicy::scheduled);
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("7") != std::string::npos);
  }
}

TEST_CASE("match_arcs annotated uses the partners") {
  const auto toks = P("7( 7( 7) 7)");
  const std::vector<std::int32_t> fifo{2, 3, 0, 1};
  CHECK(match_arcs(toks, V, MatchPolicy::annotated, fifo).arcs == std::vector<Arc>{{0, 2}, {1, 3}});
  const std::vector<std::int32_t> inconsistent{1, 0, 3, 2};
  CHECK(oracle::error_code_of([&] { match_arcs(toks, V, MatchPolicy::annotated, inconsistent); }) ==
        Errc::match_failure);
  const std::vector<std::int32_t> asymmetric{3, 2, 1, 1};
  CHECK(oracle::error_code_of([&] { match_arcs(toks, V, MatchPolicy::annotated, asymmetric); }) ==
        Errc::match_failure);
}

TEST_CASE("match_arcs on unbalanced input names the first violation") {
  try {
    match_arcs(P("1( 2) 1)"), V, MatchPolicy::stack);
    FAIL("expected match failure");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::match_failure);
    CHECK(std::string(e.what()).find("1") != std::string::npos);
  }
  CHECK(oracle::error_code_of([] { match_arcs(P("1( 1) 2("), V, MatchPolicy::stack); }) == Errc::match_failure);
}

TEST_CASE("count_crossings examples") {
  CHECK(count_crossings(match_arcs(P(kFig2a), V, MatchPolicy::stack)) == 0);
  CHECK(count_crossings(std::vector<Arc>{{0, 2}, {1, 3}}) == 1);
  CHECK(count_crossings(std::vector<Arc>{}) == 0);
  CHECK(count_crossings(std::vector<Arc>{{1, 3}, {0, 2}}) == 1);
}

TEST_CASE("count_crossings equals the pairwise oracle on random arc sets") {
  Rng rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    const std::uint32_t n = 2 + static_cast<std::uint32_t>(rng.below(40));
    std::vector<std::uint32_t> pos(2 * n);
    std::iota(pos.begin(), pos.end(), 0u);
    for (std::size_t i = pos.size(); i > 1; --i)
      std::swap(pos[i - 1], pos[rng.below(i)]);
    std::vector<Arc> arcs;
    for (std::uint32_t k = 0; k < n; ++k)
      arcs.push_back({std::min(pos[2 * k], pos[2 * k + 1]), std::max(pos[2 * k], pos[2 * k + 1])});
    REQUIRE(count_crossings(arcs) == oracle::crossings(arcs));
  }
}

TEST_CASE("no crossings iff well-nested, for balanced input without reopen") {
  Rng rng(12);
  const Vocabulary v = make_vocab(8);
  for (int trial = 0; trial < 2000; ++trial) {
    // random balanced word: shuffle positions of up to 8 distinct pairs
    const std::uint32_t n = 1 + static_cast<std::uint32_t>(rng.below(8));
    std::vector<std::uint32_t> slots(2 * n);
    std::iota(slots.begin(), slots.end(), 0u);
    for (std::size_t i = slots.size(); i > 1; --i)
      std::swap(slots[i - 1], slots[rng.below(i)]);
    std::vector<TokenId> toks(2 * n);
    for (std::uint32_t t = 0; t < n; ++t) {
      const auto a = std::min(slots[2 * t], slots[2 * t + 1]);
      const auto b = std::max(slots[2 * t], slots[2 * t + 1]);
      toks[a] = static_cast<TokenId>(t);
      toks[b] = v.close_of(t);
    }
    REQUIRE(check_balanced(toks, v).balanced);
    const ArcSet s = match_arcs(toks, v, MatchPolicy::scheduled);
    REQUIRE(s.arcs == oracle::nearest_open_match(toks, v));
    REQUIRE((count_crossings(s) == 0) == check_well_nested(toks, v));
  }
}

TEST_CASE("statistics are invariant under relabeling pair types") {
  const auto toks = P(kFig2b);
  std::vector<std::uint32_t> perm(250);
  std::iota(perm.begin(), perm.end(), 0u);
  Rng rng(4);
  for (std::size_t i = perm.size(); i > 1; --i)
    std::swap(perm[i - 1], perm[rng.below(i)]);
  std::vector<TokenId> relabeled;
  for (TokenId t : toks)
    relabeled.push_back(V.is_open(t) ? static_cast<TokenId>(perm[t]) : V.close_of(perm[V.open_of(t)]));
  CHECK(match_arcs(relabeled, V, MatchPolicy::scheduled).arcs == match_arcs(toks, V, MatchPolicy::scheduled).arcs);
  CHECK(check_well_nested(relabeled, V) == check_well_nested(toks, V));
  CHECK(depth_stats(relabeled, V).mean_depth == depth_stats(toks, V).mean_depth);
}

TEST_CASE("distance_distribution examples") {
  std::vector<ArcSet> one{ArcSet{{{0, 1}, {2, 3}}, MatchPolicy::stack}};
  const auto d1 = distance_distribution(one);
  CHECK(d1.pmf() == std::map<std::uint32_t, double>{{1, 1.0}});
  CHECK(d1.sample_count() == 2);
  std::vector<ArcSet> two{ArcSet{{{0, 1}, {0, 3}}, MatchPolicy::stack}};
  const auto d2 = distance_distribution(two);
  CHECK(d2.probability(1) == 0.5);
  CHECK(d2.probability(3) == 0.5);
  CHECK(d2.probability(2) == 0.0);
  CHECK(d2.mean() == 2.0);
  std::vector<ArcSet> none{ArcSet{}};
  CHECK(oracle::error_code_of([&] { distance_distribution(none); }) == Errc::invalid_input);
  CHECK(oracle::error_code_of([] { distance_distribution({}); }) == Errc::invalid_input);
}

TEST_CASE("DistanceDistribution validation, merge and JSON") {
  CHECK(oracle::error_code_of([] { DistanceDistribution::from_counts({{0, 3}}); }) == Errc::invalid_input);
  CHECK(oracle::error_code_of([] { DistanceDistribution::from_counts({{2, 0}}); }) == Errc::invalid_input);
  CHECK(oracle::error_code_of([] { DistanceDistribution::from_pmf({{1, -0.1}, {2, 1.1}}, 1); }) ==
        Errc::invalid_input);
  const auto a = DistanceDistribution::from_counts({{1, 3}, {2, 1}});
  const auto b = DistanceDistribution::from_counts({{2, 3}, {5, 1}});
  const auto m = a.merged(b);
  CHECK(m.sample_count() == 8);
  CHECK(m.probability(1) == doctest::Approx(3.0 / 8));
  CHECK(m.probability(2) == doctest::Approx(4.0 / 8));
  CHECK(m.probability(5) == doctest::Approx(1.0 / 8));
  const auto r = DistanceDistribution::from_json(m.to_json());
  CHECK(r.pmf() == m.pmf());
  CHECK(r.sample_count() == 8);
  double total = 0;
  for (auto [d, p] : r.pmf())
    total += p;
  CHECK(std::abs(total - 1.0) <= 1e-9);
  CHECK(oracle::error_code_of([] { DistanceDistribution::from_json("{\"pmf\": 3}"); }) == Errc::parse);
  CHECK(oracle::error_code_of([] { DistanceDistribution::from_json("nope"); }) == Errc::parse);
}

TEST_CASE("from_pmf renormalizes and is stable on normalized input") {
  const auto d = DistanceDistribution::from_pmf({{1, 2.0}, {4, 6.0}}, 10);
  CHECK(d.probability(1) == 0.25);
  CHECK(d.probability(4) == 0.75);
  const auto again = DistanceDistribution::from_pmf(d.pmf(), 10);
  CHECK(again.pmf() == d.pmf());
}

TEST_CASE("kl_divergence examples") {
  const auto p = DistanceDistribution::from_pmf({{1, 1.0}}, 100);
  const auto q = DistanceDistribution::from_pmf({{1, 0.5}, {2, 0.5}}, 100);
  CHECK(kl_divergence(p, p) == 0.0);
  CHECK(kl_divergence(p, q, 1e-15) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(kl_divergence(p, q) == doctest::Approx(1.0).epsilon(1e-12));
  // unseen support in q is smoothed, not infinite
  const auto r = DistanceDistribution::from_pmf({{3, 1.0}}, 1000);
  const double k = kl_divergence(p, r);
  CHECK(std::isfinite(k));
  CHECK(k == doctest::Approx(std::log2((1.0 + 1e-3) / 1e-3)).epsilon(1e-9));
}

TEST_CASE("kl_divergence is non-negative and zero on identical random pmfs") {
  Rng rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    std::map<std::uint32_t, double> a, b;
    const int n = 1 + static_cast<int>(rng.below(30));
    for (int i = 0; i < n; ++i) {
      a[1 + static_cast<std::uint32_t>(rng.below(50))] += rng.uniform() + 1e-3;
      b[1 + static_cast<std::uint32_t>(rng.below(50))] += rng.uniform() + 1e-3;
    }
    const auto p = DistanceDistribution::from_pmf(a, 1000);
    const auto q = DistanceDistribution::from_pmf(b, 1000);
    CHECK(kl_divergence(p, p) == doctest::Approx(0.0));
    CHECK(kl_divergence(p, q) >= 0.0);
  }
}

TEST_CASE("depth_stats examples") {
  const Vocabulary v = make_vocab(2);
  const std::vector<TokenId> one{0, 2};
  CHECK(depth_stats(one, v).max_depth == 1);
  const std::vector<TokenId> two{0, 1, 3, 2};
  const DepthStats s = depth_stats(two, v);
  CHECK(s.max_depth == 2);
  CHECK(s.mean_depth == 1.0);
  CHECK(s.histogram == std::vector<std::uint64_t>{1, 2, 1});
  CHECK(oracle::error_code_of([&] { depth_stats(std::vector<TokenId>{2, 0}, v); }) == Errc::invalid_input);
  const DepthStats empty = depth_stats(std::vector<TokenId>{}, v);
  CHECK(empty.mean_depth == 0.0);
  CHECK(empty.max_depth == 0);
}

TEST_CASE("DepthAccumulator matches depth_stats over the concatenation") {
  const auto a = P(kFig2a);
  const auto b = P(kFig2b);
  DepthAccumulator acc, left, right;
  acc.add(a, V);
  acc.add(b, V);
  left.add(a, V);
  right.add(b, V);
  left.merge(right);
  std::vector<TokenId> both(a);
  both.insert(both.end(), b.begin(), b.end());
  const DepthStats whole = depth_stats(both, V);
  CHECK(acc.stats().mean_depth == doctest::Approx(whole.mean_depth));
  CHECK(acc.stats().max_depth == whole.max_depth);
  CHECK(left.stats().histogram == whole.histogram);
  CHECK(acc.positions() == both.size());
}

TEST_CASE("fit_zipf on exact Zipf counts recovers alpha 1") {
  std::vector<std::uint64_t> counts;
  for (int r = 1; r <= 500; ++r)
    counts.push_back(static_cast<std::uint64_t>(std::llround(1e9 / (r + 2.7))));
  const ZipfFit f = fit_zipf(counts, 2.7);
  CHECK(f.alpha_hat == doctest::Approx(1.0).epsilon(0.01));
  CHECK(f.beta_fixed == 2.7);
  CHECK(f.support_size == 500);
  CHECK(f.log_likelihood == doctest::Approx(oracle::zipf_loglik(counts, f.alpha_hat, 2.7)).epsilon(1e-9));
}

TEST_CASE("fit_zipf on uniform counts is near zero") {
  std::vector<std::uint64_t> counts(500, 20000);
  CHECK(fit_zipf(counts).alpha_hat < 0.05);
  Rng rng(99);
  std::vector<std::uint64_t> noisy(500, 0);
  for (int i = 0; i < 1'000'000; ++i)
    ++noisy[rng.below(500)];
  const double a = fit_zipf(noisy).alpha_hat;
  CHECK(a < 0.05);
  CHECK(a == doctest::Approx(oracle::zipf_grid_mle(noisy, 2.7)).epsilon(1e-3).scale(1.0));
}

TEST_CASE("fit_zipf agrees with grid search, ignores zeros and order, and is scale invariant") {
  Rng rng(5);
  const auto dist = make_distribution(DistKind::zipf, 100, 1.4, 2.7, 17);
  std::vector<std::uint64_t> counts(130, 0);
  for (int i = 0; i < 300000; ++i)
    ++counts[sample_token(dist, rng)];
  const double a = fit_zipf(counts).alpha_hat;
  CHECK(a == doctest::Approx(oracle::zipf_grid_mle(counts, 2.7)).epsilon(1e-3));
  CHECK(a == doctest::Approx(1.4).epsilon(0.05));
  std::vector<std::uint64_t> scaled;
  for (auto c : counts)
    scaled.push_back(c * 7);
  CHECK(fit_zipf(scaled).alpha_hat == doctest::Approx(a).epsilon(1e-9));
  CHECK(fit_zipf(counts).support_size == 100);
}

TEST_CASE("fit_zipf rejects degenerate tables") {
  CHECK(oracle::error_code_of([] { fit_zipf(std::vector<std::uint64_t>{5, 0, 0}); }) == Errc::invalid_input);
  CHECK(oracle::error_code_of([] { fit_zipf(std::vector<std::uint64_t>{}); }) == Errc::invalid_input);
  CHECK(fit_zipf(std::vector<std::uint64_t>{5, 1}).alpha_hat > 0.0);
}

TEST_CASE("DistanceCounter") {
  DistanceCounter c;
  CHECK(oracle::error_code_of([&] { c.distribution(); }) == Errc::invalid_input);
  c.add(std::vector<Arc>{{0, 1}, {2, 5}});
  DistanceCounter other;
  other.add(3, 2);
  c.merge(other);
  CHECK(c.total() == 4);
  CHECK(c.counts().at(3) == 3);
  CHECK(c.distribution().probability(3) == 0.75);
}
