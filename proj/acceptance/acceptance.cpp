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


// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include "oracles_core.hpp"

#include "flc/arcstats.hpp"
#include "flc/corpusio.hpp"
#include "flc/error.hpp"
#include "flc/langgen.hpp"
#include "flc/rng.hpp"
#include "flc/spec_io.hpp"
#include "flc/vocab.hpp"

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace fs = std::filesystem;
using namespace flc;

namespace {

constexpr std::uint64_t kTenMillion = 10'000'000;

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Clock {
public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

struct ScratchDir {
  fs::path path;
  explicit ScratchDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("flc_acceptance_" + tag);
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

LanguageSpec spec_for(Family family) {
  LanguageSpec s;
  s.family = family;
  s.vocab = make_vocab(250);
  s.distribution = default_distribution(family, s.vocab);
  return s;
}

// Shared by criteria 1-3 and 5: one single-threaded 10M-token NEST run.
struct NestRun {
  double seconds = 0;
  std::uint64_t documents = 0;
  std::uint64_t tokens = 0;
  std::uint64_t unbalanced = 0;
  std::uint64_t not_well_nested = 0;
  std::uint64_t crossings = 0;
  std::uint64_t crossing_docs_ge_50 = 0;
  double depth_sum = 0;
  DistanceCounter distances;
};

NestRun run_nest() {
  NestRun r;
  const LanguageSpec spec = spec_for(Family::nest);
  const Language lang = Language::prepare(spec);
  Clock clock;
  Generator gen = gen_nest(lang, kTenMillion);
  Document d;
  while (gen.next(d)) {
    ++r.documents;
    r.tokens += d.size();
    r.unbalanced += !check_balanced(d.ids, spec.vocab).balanced;
    r.not_well_nested += !check_well_nested(d.ids, spec.vocab);
    const ArcSet arcs = match_arcs(d.ids, spec.vocab, MatchPolicy::stack);
    const std::uint64_t c = count_crossings(arcs);
    r.crossings += c;
    r.crossing_docs_ge_50 += d.size() >= 50 && c > 0;
    r.distances.add(arcs.arcs);
    r.depth_sum += depth_stats(d.ids, spec.vocab).mean_depth * static_cast<double>(d.size());
  }
  r.seconds = clock.seconds();
  return r;
}

Outcome criterion1(const NestRun& r) {
  const bool ok = r.tokens >= kTenMillion && r.unbalanced == 0 && r.not_well_nested == 0 && r.crossings == 0 &&
                  r.seconds < 60.0;
  return {ok, fmt("tokens=%llu documents=%llu unbalanced=%llu not_well_nested=%llu crossings=%llu seconds=%.2f",
                  (unsigned long long)r.tokens, (unsigned long long)r.documents, (unsigned long long)r.unbalanced,
                  (unsigned long long)r.not_well_nested, (unsigned long long)r.crossings, r.seconds)};
}

// Plain simulation of the reflected walk, independent of the generator.
double simulate_reflected_walk(double p, std::uint64_t steps) {
  Rng rng(0x5eed);
  std::uint64_t depth = 0;
  double sum = 0;
  for (std::uint64_t i = 0; i < steps; ++i) {
    if (depth == 0 || rng.uniform() < p)
      ++depth;
    else
      --depth;
    sum += static_cast<double>(depth);
  }
  return sum / static_cast<double>(steps);
}

Outcome criterion2(const NestRun& r) {
  const double p = spec_for(Family::nest).p_open;
  const double closed_form = oracle::reflected_walk_mean(p);
  const double simulated = simulate_reflected_walk(p, 100'000'000);
  const double measured = r.depth_sum / static_cast<double>(r.tokens);
  const double rel = std::abs(measured - closed_form) / closed_form;
  const bool oracles_agree = std::abs(simulated - closed_form) / closed_form < 0.02;
  return {rel < 0.05 && oracles_agree,
          fmt("mean_depth=%.4f closed_form=%.4f simulated_1e8=%.4f relative_error=%.4f", measured, closed_form,
              simulated, rel)};
}

Outcome criterion3(const NestRun& nest) {
  const DistanceDistribution reference = nest.distances.distribution();
  LanguageSpec spec = spec_for(Family::cross);
  spec.distance_ref = reference;
  const Language lang = Language::prepare(spec);
  Generator gen = gen_cross(lang, kTenMillion);
  Document d;
  DistanceCounter realized;
  std::uint64_t tokens = 0, long_docs = 0, long_crossing = 0;
  while (gen.next(d)) {
    tokens += d.size();
    const ArcSet arcs = match_arcs(d.ids, spec.vocab, MatchPolicy::scheduled);
    realized.add(arcs.arcs);
    if (d.size() >= 50) {
      ++long_docs;
      long_crossing += count_crossings(arcs) > 0;
    }
  }
  const double kl = kl_divergence(realized.distribution(), reference);
  const double frac = long_docs ? static_cast<double>(long_crossing) / static_cast<double>(long_docs) : 0.0;
  const bool ok = kl < 0.01 && frac > 0.99 && nest.crossings == 0 && nest.crossing_docs_ge_50 == 0;
  return {ok, fmt("kl_bits=%.6f cross_tokens=%llu cross_docs_len_ge_50=%llu with_crossing=%.4f nest_crossings=%llu",
                  kl, (unsigned long long)tokens, (unsigned long long)long_docs, frac,
                  (unsigned long long)nest.crossings)};
}

Outcome criterion4() {
  LanguageSpec spec = spec_for(Family::rep);
  spec.rep_block = 10;
  spec.distribution = make_distribution(DistKind::uniform, 500);
  const Language lang = Language::prepare(spec);
  Generator gen = gen_rep(lang, kTenMillion);
  Document d;
  std::uint64_t tokens = 0, blocks = 0, bad_blocks = 0;
  double bits = 0;
  while (gen.next(d)) {
    tokens += d.size();
    bits += d.total_surprisal_bits();
    if (d.size() % 20 != 0)
      ++bad_blocks;
    for (std::size_t b = 0; b + 20 <= d.size(); b += 20) {
      ++blocks;
      for (std::size_t j = 0; j < 10; ++j)
        if (d.ids[b + 10 + j] != d.ids[b + j]) {
          ++bad_blocks;
          break;
        }
    }
  }
  const double mean = bits / static_cast<double>(tokens);
  const double want = std::log2(500.0) / 2.0;
  return {bad_blocks == 0 && std::abs(mean - want) <= 0.001,
          fmt("blocks=%llu bad_blocks=%llu mean_surprisal=%.6f target=%.6f", (unsigned long long)blocks,
              (unsigned long long)bad_blocks, mean, want)};
}

double mix_fraction(const DistanceDistribution& reference, double p_mix) {
  LanguageSpec spec = spec_for(Family::nest_mix);
  spec.p_mix = p_mix;
  spec.distance_ref = reference;
  const Language lang = Language::prepare(spec);
  Generator gen = gen_nest_mix(lang, kTenMillion);
  Document d;
  std::uint64_t arcs = 0, cross = 0;
  while (gen.next(d))
    for (std::size_t i = 0; i < d.size(); ++i)
      if (spec.vocab.is_open(d.ids[i])) {
        ++arcs;
        cross += (d.flags[i] & kCrossArcFlag) != 0;
      }
  return static_cast<double>(cross) / static_cast<double>(arcs);
}

Outcome criterion5(const NestRun& nest) {
  const DistanceDistribution reference = nest.distances.distribution();
  const double f1 = mix_fraction(reference, 0.01);
  const double f10 = mix_fraction(reference, 0.10);

  ScratchDir dir("mix0");
  LanguageSpec nest_spec = spec_for(Family::nest);
  LanguageSpec mix_spec = spec_for(Family::nest_mix);
  mix_spec.p_mix = 0.0;
  mix_spec.distance_ref = reference;
  CorpusParams params;
  params.n_tokens = kTenMillion;
  const CorpusManifest a = generate_corpus(Language::prepare(nest_spec), params, dir.path / "nest");
  const CorpusManifest b = generate_corpus(Language::prepare(mix_spec), params, dir.path / "mix0");
  bool identical = a.shards.size() == b.shards.size();
  for (std::size_t s = 0; identical && s < a.shards.size(); ++s)
    identical = a.shards[s].content_hash == b.shards[s].content_hash;
  identical = identical && read_all_tokens(dir.path / "nest" / kManifestName) ==
                               read_all_tokens(dir.path / "mix0" / kManifestName);

  const bool ok = std::abs(f1 - 0.01) <= 0.002 && std::abs(f10 - 0.10) <= 0.01 && identical;
  return {ok, fmt("mix1_fraction=%.5f mix10_fraction=%.5f p_mix0_identical=%s", f1, f10, identical ? "yes" : "no")};
}

std::vector<std::uint64_t> draw_counts(const DistributionWeights& dist, std::uint64_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::uint64_t> counts(dist.size(), 0);
  for (std::uint64_t i = 0; i < n; ++i)
    ++counts[dist.sample(rng)];
  return counts;
}

Outcome criterion6() {
  const auto zipf = draw_counts(make_distribution(DistKind::zipf, 500, 1.0, 2.7), kTenMillion, 61);
  const auto uniform = draw_counts(make_distribution(DistKind::uniform, 500), kTenMillion, 62);
  const double a_zipf = fit_zipf(zipf, 2.7).alpha_hat;
  const double a_uniform = fit_zipf(uniform, 2.7).alpha_hat;
  const double g_zipf = oracle::zipf_grid_mle(zipf, 2.7);
  const double g_uniform = oracle::zipf_grid_mle(uniform, 2.7);
  const bool ok = a_zipf >= 0.95 && a_zipf <= 1.05 && a_uniform < 0.05 && g_uniform < 0.05 &&
                  std::abs(a_zipf - g_zipf) < 1e-3;
  return {ok, fmt("alpha_hat_zipf=%.5f grid_zipf=%.5f alpha_hat_uniform=%.5f grid_uniform=%.5f", a_zipf, g_zipf,
                  a_uniform, g_uniform)};
}

Outcome criterion7(const NestRun& nest) {
  ScratchDir dir("determinism");
  std::vector<std::string> problems;

  // Regeneration from a manifest, with a different worker count.
  LanguageSpec spec = spec_for(Family::nest);
  spec.seed = 7;
  CorpusParams params;
  params.n_tokens = 3'000'000;
  params.shard_tokens = 1'000'000;
  params.workers = 3;
  params.write_annotations = true;
  const CorpusManifest first = generate_corpus(Language::prepare(spec), params, dir.path / "first");
  const CorpusManifest loaded = read_manifest(dir.path / "first" / kManifestName);
  CorpusParams again;
  again.n_tokens = loaded.requested_tokens;
  again.shard_tokens = loaded.shard_tokens;
  again.seq_len = loaded.seq_len;
  again.batch_size = loaded.batch_size;
  again.write_annotations = !loaded.shards.empty() && !loaded.shards[0].annotation_path.empty();
  again.workers = 1;
  const CorpusManifest second =
      generate_corpus(Language::prepare(spec_from_json(loaded.language_spec)), again, dir.path / "second");
  bool same_hashes = first.shards.size() == second.shards.size() && first.shards.size() > 1;
  for (std::size_t s = 0; same_hashes && s < first.shards.size(); ++s)
    same_hashes = first.shards[s].content_hash == second.shards[s].content_hash &&
                  first.shards[s].index_hash == second.shards[s].index_hash &&
                  first.shards[s].annotation_hash == second.shards[s].annotation_hash;
  if (!same_hashes)
    problems.push_back("regenerated hashes differ");

  // 1M-token write -> read -> to_text -> from_text per family.
  const DistanceDistribution reference = nest.distances.distribution();
  std::uint64_t round_trips = 0;
  for (Family family : {Family::nest, Family::cross, Family::nest_mix, Family::rand, Family::rep}) {
    LanguageSpec s = spec_for(family);
    if (family == Family::cross || family == Family::nest_mix)
      s.distance_ref = reference;
    if (family == Family::nest_mix)
      s.p_mix = 0.1;
    const Language lang = Language::prepare(s);
    std::vector<std::vector<TokenId>> docs;
    Generator gen(lang, 1'000'000);
    Document d;
    while (gen.next(d))
      docs.push_back(d.ids);
    CorpusParams p;
    p.n_tokens = 1'000'000;
    const fs::path out = dir.path / std::string(family_name(family));
    generate_corpus(lang, p, out);

    CorpusReader reader(out / kManifestName);
    ShardData shard;
    std::vector<std::vector<TokenId>> read_docs;
    while (reader.next_shard(shard)) {
      std::size_t at = 0;
      for (std::uint32_t len : shard.doc_lengths) {
        read_docs.emplace_back(shard.tokens.begin() + at, shard.tokens.begin() + at + len);
        at += len;
      }
    }
    const TextStyle style = is_paren_family(family) ? TextStyle::paren : TextStyle::flat;
    std::string text;
    for (const auto& doc : read_docs) {
      text += to_text(doc, s.vocab, style);
      text += '\n';
    }
    const bool ok = read_docs == docs && from_text_lines(text, s.vocab) == docs;
    if (ok)
      ++round_trips;
    else
      problems.push_back(std::string(family_name(family)) + " round trip differs");
  }

  std::string detail = fmt("shards=%zu regenerated_hashes_equal=%s round_trips=%llu/5", first.shards.size(),
                           same_hashes ? "yes" : "no", (unsigned long long)round_trips);
  for (const auto& p : problems)
    detail += "; " + p;
  return {problems.empty(), detail};
}

Outcome criterion8() {
  ScratchDir dir("scale");
  CorpusParams params;
  params.n_tokens = 1'000'000'000;
  params.workers = 8;
  Clock clock;
  generate_corpus(Language::prepare(spec_for(Family::nest)), params, dir.path);
  const double seconds = clock.seconds();
  const CorpusManifest m = read_manifest(dir.path / kManifestName);
  const double rate = static_cast<double>(m.total_tokens) / seconds;
  const std::uint64_t want_batches = 1'000'000'000ull / (512ull * 512ull);
  const bool ok = rate >= 5e6 && m.full_batches() == want_batches && m.full_batches() == 3814;
  return {ok, fmt("total_tokens=%llu seconds=%.2f tokens_per_s=%.3g workers=8 hardware_threads=%u full_batches=%llu",
                  (unsigned long long)m.total_tokens, seconds, rate, std::thread::hardware_concurrency(),
                  (unsigned long long)m.full_batches())};
}

// Copy arcs of a REP document derived from its block layout alone.
std::vector<Arc> rep_layout_arcs(const Document& d, std::uint32_t k) {
  std::vector<Arc> arcs;
  for (std::uint32_t b = 0; b + 2 * k <= d.size(); b += 2 * k)
    for (std::uint32_t j = 0; j < k; ++j)
      if (d.ids[b + j] == d.ids[b + k + j])
        arcs.push_back({b + j, b + k + j});
  return arcs;
}

Outcome criterion9() {
  constexpr std::uint64_t kDocs = 10'000;
  constexpr std::size_t kMaxLen = 64;
  std::string detail;
  bool all_ok = true;
  for (Family family : {Family::nest, Family::cross, Family::nest_mix, Family::rand, Family::rep}) {
    LanguageSpec s = spec_for(family);
    s.seed = 9;
    s.doc_target_len = family == Family::rand ? 48 : family == Family::rep ? 40 : 8;
    if (family == Family::cross || family == Family::nest_mix)
      s.distance_ref = oracle::small_reference();
    if (family == Family::nest_mix)
      s.p_mix = 0.3;
    const Language lang = Language::prepare(s);
    Generator gen(lang, ~0ull);
    Document d;
    std::uint64_t checked = 0, mismatches = 0, seen = 0;
    while (checked < kDocs && seen < 100 * kDocs && gen.next(d)) {
      ++seen;
      if (d.size() > kMaxLen)
        continue;
      ++checked;
      const std::vector<Arc> annotated = annotated_arcs(d);
      std::vector<Arc> matched;
      if (is_paren_family(family))
        matched = match_arcs(d.ids, s.vocab, family == Family::nest ? MatchPolicy::stack : MatchPolicy::scheduled)
                      .arcs;
      else if (family == Family::rep)
        matched = rep_layout_arcs(d, s.rep_block);
      const bool same = matched == annotated && count_crossings(matched) == oracle::crossings(matched) &&
                        count_crossings(annotated) == oracle::crossings(annotated);
      mismatches += !same;
    }
    all_ok = all_ok && checked == kDocs && mismatches == 0;
    detail += fmt("%s%s=%llu/%llu", detail.empty() ? "" : " ", std::string(family_name(family)).c_str(),
                  (unsigned long long)(checked - mismatches), (unsigned long long)checked);
  }
  return {all_ok, detail};
}

Outcome guarded(const std::function<Outcome()>& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    return {false, std::string("exception: ") + e.what()};
  }
}

} // namespace

int main() {
  int failures = 0;
  auto report = [&](int n, const char* name, const Outcome& o) {
    std::printf("[%s] %d %s: %s\n", o.pass ? "PASS" : "FAIL", n, name, o.detail.c_str());
    std::fflush(stdout);
    failures += !o.pass;
  };
  std::optional<NestRun> nest;
  try {
    nest = run_nest();
  } catch (const std::exception& e) {
    std::printf("nest run failed: %s\n", e.what());
  }
  auto with_nest = [&](auto fn) {
    return guarded([&]() -> Outcome {
      if (!nest)
        return {false, "nest run unavailable"};
      return fn(*nest);
    });
  };
  report(1, "nest structural validity", with_nest(criterion1));
  report(2, "nest depth law", with_nest(criterion2));
  report(3, "cross distance matching", with_nest(criterion3));
  report(4, "rep regularity", guarded(criterion4));
  report(5, "nest_mix calibration", with_nest(criterion5));
  report(6, "zipf recovery", guarded(criterion6));
  report(7, "determinism and io", with_nest(criterion7));
  report(8, "scale sanity", guarded(criterion8));
  report(9, "oracle equivalence", guarded(criterion9));
  std::printf("%d/9 criteria passed\n", 9 - failures);
  return failures == 0 ? 0 : 1;
}
