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

#include "flc/commands.hpp"

#include "flc/corpusio.hpp"
#include "flc/error.hpp"
#include "flc/spec_io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace flc {

namespace fs = std::filesystem;

void Report::add(std::string key, std::string value) { entries_.emplace_back(std::move(key), std::move(value)); }

void Report::add(std::string key, double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", value);
  add(std::move(key), std::string(buf));
}

void Report::add(std::string key, std::uint64_t value) { add(std::move(key), std::to_string(value)); }

std::optional<std::string> Report::find(const std::string& key) const {
  for (const auto& [k, v] : entries_)
    if (k == key)
      return v;
  return std::nullopt;
}

std::string Report::render(bool machine) const {
  std::string out;
  std::size_t width = 0;
  for (const auto& e : entries_)
    width = std::max(width, e.first.size());
  for (const auto& [k, v] : entries_) {
    if (machine) {
      out += k + "=" + v + "\n";
    } else {
      out += k + ":" + std::string(width - k.size() + 1, ' ') + v + "\n";
    }
  }
  return out;
}

namespace {

LanguageSpec manifest_spec(const CorpusManifest& m) { return spec_from_json(m.language_spec); }

MatchPolicy policy_for(Family f) { return f == Family::nest ? MatchPolicy::stack : MatchPolicy::scheduled; }

// Calls fn(document tokens, document partners) for every document in order.
template <typename Fn>
void for_each_document(CorpusReader& reader, bool annotations, Fn&& fn) {
  ShardData shard;
  std::uint64_t doc_index = 0;
  while (reader.next_shard(shard, annotations)) {
    std::size_t pos = 0;
    for (std::uint32_t len : shard.doc_lengths) {
      std::span<const TokenId> toks(shard.tokens.data() + pos, len);
      std::span<const std::int32_t> partners;
      std::span<const std::uint8_t> flags;
      if (shard.has_annotations) {
        partners = {shard.partners.data() + pos, len};
        flags = {shard.flags.data() + pos, len};
      }
      fn(doc_index++, toks, partners, flags);
      pos += len;
    }
  }
}

// Empty string when the document satisfies the family.
std::string document_violation(Family family, const LanguageSpec& spec, std::span<const TokenId> toks) {
  const Vocabulary& vocab = spec.vocab;
  for (TokenId t : toks)
    if (!vocab.contains(t))
      return "token " + std::to_string(t) + " outside vocabulary";
  switch (family) {
  case Family::nest:
    if (!check_well_nested(toks, vocab))
      return "well-nestedness violated";
    return {};
  case Family::cross:
  case Family::nest_mix: {
    if (!check_balanced(toks, vocab).balanced)
      return "balance violated";
    try {
      match_arcs(toks, vocab, MatchPolicy::scheduled);
    } catch (const Error&) {
      return "pair type reopened while open";
    }
    return {};
  }
  case Family::rand:
    if (toks.size() != spec.doc_target_len)
      return "length " + std::to_string(toks.size()) + " != " + std::to_string(spec.doc_target_len);
    return {};
  case Family::rep: {
    const std::size_t k = spec.rep_block;
    if (toks.size() % (2 * k) != 0)
      return "length " + std::to_string(toks.size()) + " is not a multiple of " + std::to_string(2 * k);
    for (std::size_t b = 0; b < toks.size(); b += 2 * k)
      for (std::size_t j = 0; j < k; ++j)
        if (toks[b + j] != toks[b + k + j])
          return "repetition violated at position " + std::to_string(b + k + j);
    return {};
  }
  }
  return "unknown family";
}

} // namespace

ValidationResult validate_corpus(const fs::path& manifest_path, std::optional<Family> family) {
  CorpusReader reader(manifest_path);
  const LanguageSpec spec = manifest_spec(reader.manifest());
  const Family fam = family.value_or(spec.family);
  ValidationResult result;
  std::uint64_t docs = 0, bad = 0, tokens = 0;
  for_each_document(reader, false, [&](std::uint64_t d, std::span<const TokenId> toks, auto, auto) {
    ++docs;
    tokens += toks.size();
    const std::string why = document_violation(fam, spec, toks);
    if (!why.empty()) {
      ++bad;
      if (result.failures.size() < 10)
        result.failures.push_back(why + " at document " + std::to_string(d));
    }
  });
  if (tokens != reader.manifest().total_tokens)
    result.failures.push_back("document lengths cover " + std::to_string(tokens) + " tokens, manifest says " +
                              std::to_string(reader.manifest().total_tokens));
  result.passed = result.failures.empty();
  result.report.add("family", std::string(family_name(fam)));
  result.report.add("documents", docs);
  result.report.add("tokens", tokens);
  result.report.add("failed_documents", bad);
  result.report.add("result", std::string(result.passed ? "pass" : "fail"));
  return result;
}

Report corpus_stats(const fs::path& manifest_path) {
  CorpusReader reader(manifest_path);
  const CorpusManifest& m = reader.manifest();
  const LanguageSpec spec = manifest_spec(m);
  const Vocabulary& vocab = spec.vocab;
  const bool paren = is_paren_family(spec.family);
  const MatchPolicy policy = policy_for(spec.family);

  std::uint64_t docs = 0, tokens = 0, max_len = 0;
  std::uint64_t arcs = 0, crossings = 0, docs_ge50 = 0, docs_ge50_crossing = 0;
  std::uint64_t flagged_arcs = 0, annotated_arc_total = 0;
  long double distance_sum = 0;
  DepthAccumulator depth;
  std::vector<std::uint64_t> counts(paren ? vocab.num_pairs() : vocab.total_size(), 0);
  for_each_document(reader, paren, [&](std::uint64_t, std::span<const TokenId> toks,
                                       std::span<const std::int32_t> partners, std::span<const std::uint8_t> flags) {
    ++docs;
    tokens += toks.size();
    max_len = std::max<std::uint64_t>(max_len, toks.size());
    for (TokenId t : toks) {
      if (!vocab.contains(t))
        fail(Errc::invalid_input, "token " + std::to_string(t) + " outside vocabulary");
      if (!paren)
        ++counts[t];
      else if (vocab.is_open(t))
        ++counts[vocab.pair_type(t)];
    }
    if (!paren)
      return;
    depth.add(toks, vocab);
    const ArcSet set = match_arcs(toks, vocab, policy);
    const std::uint64_t c = count_crossings(set);
    arcs += set.arcs.size();
    crossings += c;
    for (const Arc& a : set.arcs)
      distance_sum += a.distance();
    if (toks.size() >= 50) {
      ++docs_ge50;
      docs_ge50_crossing += c > 0;
    }
    if (!flags.empty())
      for (std::size_t i = 0; i < toks.size(); ++i)
        if (partners[i] > static_cast<std::int32_t>(i)) {
          ++annotated_arc_total;
          flagged_arcs += (flags[i] & kCrossArcFlag) != 0;
        }
  });

  Report r;
  r.add("family", std::string(family_name(spec.family)));
  r.add("num_pairs", static_cast<std::uint64_t>(vocab.num_pairs()));
  r.add("vocab_total_size", static_cast<std::uint64_t>(vocab.total_size()));
  r.add("seed", m.seed);
  r.add("shards", static_cast<std::uint64_t>(m.shards.size()));
  r.add("documents", docs);
  r.add("total_tokens", tokens);
  r.add("mean_document_length", docs ? static_cast<double>(tokens) / static_cast<double>(docs) : 0.0);
  r.add("max_document_length", max_len);
  if (paren) {
    const DepthStats ds = depth.stats();
    r.add("mean_depth", ds.mean_depth);
    r.add("max_depth", static_cast<std::uint64_t>(ds.max_depth));
    r.add("arcs", arcs);
    r.add("mean_arc_distance", arcs ? static_cast<double>(distance_sum / arcs) : 0.0);
    r.add("crossings", crossings);
    r.add("documents_len_ge_50", docs_ge50);
    r.add("documents_len_ge_50_with_crossing", docs_ge50_crossing);
    if (annotated_arc_total > 0)
      r.add("cross_arc_fraction", static_cast<double>(flagged_arcs) / static_cast<double>(annotated_arc_total));
  }
  std::uint64_t observed = 0;
  for (auto c : counts)
    observed += c > 0;
  if (observed >= 2) {
    const ZipfFit fit = fit_zipf(counts, 2.7);
    r.add("zipf_alpha_hat", fit.alpha_hat);
    r.add("zipf_beta_fixed", fit.beta_fixed);
  }
  r.add("seq_len", static_cast<std::uint64_t>(m.seq_len));
  r.add("batch_size", static_cast<std::uint64_t>(m.batch_size));
  r.add("full_sequences", m.full_sequences());
  r.add("dropped_tokens", m.dropped_tokens());
  r.add("full_batches", m.full_batches());
  return r;
}

DistanceCounter corpus_distances(const fs::path& manifest_path) {
  CorpusReader reader(manifest_path);
  const LanguageSpec spec = manifest_spec(reader.manifest());
  if (!is_paren_family(spec.family))
    fail(Errc::invalid_input, "family " + std::string(family_name(spec.family)) + " has no bracket arcs");
  const MatchPolicy policy = policy_for(spec.family);
  DistanceCounter counter;
  for_each_document(reader, false, [&](std::uint64_t, std::span<const TokenId> toks, auto, auto) {
    counter.add(match_arcs(toks, spec.vocab, policy).arcs);
  });
  return counter;
}

CompareResult compare_distances(const fs::path& manifest_path, const std::optional<fs::path>& other_manifest,
                                const std::optional<fs::path>& reference_pmf, double threshold) {
  const DistanceDistribution p = corpus_distances(manifest_path).distribution();
  DistanceDistribution q;
  std::string source;
  if (other_manifest) {
    q = corpus_distances(*other_manifest).distribution();
    source = other_manifest->string();
  } else if (reference_pmf) {
    std::ifstream in(*reference_pmf, std::ios::binary);
    if (!in)
      fail(Errc::io, "cannot open " + reference_pmf->string());
    std::stringstream buf;
    buf << in.rdbuf();
    q = DistanceDistribution::from_json(buf.str());
    source = reference_pmf->string();
  } else {
    const LanguageSpec spec = manifest_spec(read_manifest(manifest_path));
    if (!spec.distance_ref)
      fail(Errc::invalid_argument, "no reference given and the corpus spec has no distance_ref");
    q = *spec.distance_ref;
    source = "distance_ref";
  }
  CompareResult r;
  r.kl_bits = kl_divergence(p, q);
  r.within_threshold = r.kl_bits < threshold;
  r.report.add("reference", source);
  r.report.add("arcs", p.sample_count());
  r.report.add("reference_samples", q.sample_count());
  r.report.add("mean_distance", p.mean());
  r.report.add("reference_mean_distance", q.mean());
  r.report.add("kl_bits", r.kl_bits);
  r.report.add("threshold", threshold);
  r.report.add("result", std::string(r.within_threshold ? "pass" : "fail"));
  return r;
}

std::string sample_text(const Language& language, std::uint64_t n_documents) {
  const LanguageSpec& spec = language.spec();
  const TextStyle style = is_paren_family(spec.family) ? TextStyle::paren : TextStyle::flat;
  Generator gen(language, UINT64_MAX, 0);
  Document doc;
  std::string out;
  for (std::uint64_t i = 0; i < n_documents && gen.next(doc); ++i) {
    out += to_text(doc.ids, spec.vocab, style);
    out += '\n';
  }
  return out;
}

} // namespace flc
