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

#include "flc/flc.h"

#include "flc/arcstats.hpp"
#include "flc/commands.hpp"
#include "flc/corpusio.hpp"
#include "flc/error.hpp"
#include "flc/langgen.hpp"
#include "flc/spec_io.hpp"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

struct flc_language {
  flc::Language language;
};

struct flc_generator {
  flc::Generator generator;
  flc::Document doc;
};

namespace {

thread_local std::string g_last_error;

flc_status to_status(flc::Errc e) {
  switch (e) {
  case flc::Errc::invalid_argument: return FLC_ERR_INVALID_ARGUMENT;
  case flc::Errc::invalid_spec: return FLC_ERR_INVALID_SPEC;
  case flc::Errc::invalid_input: return FLC_ERR_INVALID_INPUT;
  case flc::Errc::io: return FLC_ERR_IO;
  case flc::Errc::corrupt: return FLC_ERR_CORRUPT;
  case flc::Errc::unsupported_format: return FLC_ERR_UNSUPPORTED_FORMAT;
  case flc::Errc::parse: return FLC_ERR_PARSE;
  case flc::Errc::match_failure: return FLC_ERR_MATCH_FAILURE;
  case flc::Errc::ambiguous: return FLC_ERR_AMBIGUOUS;
  }
  return FLC_ERR_INTERNAL;
}

flc_status set_error(flc_status s, std::string msg) {
  g_last_error = std::move(msg);
  return s;
}

template <typename Fn>
flc_status guard(Fn&& fn) {
  try {
    fn();
    return FLC_OK;
  } catch (const flc::Error& e) {
    return set_error(to_status(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(FLC_ERR_OUT_OF_MEMORY, "out of memory");
  } catch (const std::exception& e) {
    return set_error(FLC_ERR_INTERNAL, e.what());
  } catch (...) {
    return set_error(FLC_ERR_INTERNAL, "unknown error");
  }
}

void need(const void* p, const char* name) {
  if (!p)
    flc::fail(flc::Errc::invalid_argument, std::string(name) + " must not be NULL");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out)
    throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

template <typename T>
T* dup_array(const T* data, std::size_t n) {
  T* out = static_cast<T*>(std::malloc(n ? n * sizeof(T) : 1));
  if (!out)
    throw std::bad_alloc();
  if (n)
    std::memcpy(out, data, n * sizeof(T));
  return out;
}

std::span<const flc::TokenId> token_span(const uint16_t* tokens, size_t n) {
  if (n > 0)
    need(tokens, "tokens");
  return {tokens, n};
}

} // namespace

extern "C" {

const char* flc_version(void) { return "1.0.0"; }

const char* flc_status_name(flc_status status) {
  switch (status) {
  case FLC_OK: return "ok";
  case FLC_ERR_INVALID_ARGUMENT: return "invalid_argument";
  case FLC_ERR_INVALID_SPEC: return "invalid_spec";
  case FLC_ERR_INVALID_INPUT: return "invalid_input";
  case FLC_ERR_IO: return "io";
  case FLC_ERR_CORRUPT: return "corrupt";
  case FLC_ERR_UNSUPPORTED_FORMAT: return "unsupported_format";
  case FLC_ERR_PARSE: return "parse";
  case FLC_ERR_MATCH_FAILURE: return "match_failure";
  case FLC_ERR_AMBIGUOUS: return "ambiguous";
  case FLC_ERR_OUT_OF_MEMORY: return "out_of_memory";
  case FLC_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* flc_last_error(void) { return g_last_error.c_str(); }

void flc_string_free(char* s) { std::free(s); }

flc_status flc_language_create(const char* spec_json, const char* base_dir, flc_language** out) {
  return guard([&] {
    need(spec_json, "spec_json");
    need(out, "out");
    *out = nullptr;
    flc::LanguageSpec spec = flc::spec_from_json(spec_json, base_dir ? base_dir : "");
    *out = new flc_language{flc::Language::prepare(std::move(spec))};
  });
}

void flc_language_free(flc_language* language) { delete language; }

flc_status flc_language_spec_json(const flc_language* language, int pretty, char** out) {
  return guard([&] {
    need(language, "language");
    need(out, "out");
    *out = dup_string(flc::spec_to_json(language->language.spec(), pretty != 0));
  });
}

flc_status flc_language_family(const flc_language* language, const char** name) {
  return guard([&] {
    need(language, "language");
    need(name, "name");
    *name = flc::family_name(language->language.spec().family).data();
  });
}

flc_status flc_language_num_pairs(const flc_language* language, uint32_t* num_pairs) {
  return guard([&] {
    need(language, "language");
    need(num_pairs, "num_pairs");
    *num_pairs = language->language.spec().vocab.num_pairs();
  });
}

flc_status flc_generator_create(const flc_language* language, uint64_t budget, uint64_t shard_index,
                                flc_generator** out) {
  return guard([&] {
    need(language, "language");
    need(out, "out");
    *out = new flc_generator{flc::Generator(language->language, budget, shard_index), {}};
  });
}

void flc_generator_free(flc_generator* generator) { delete generator; }

flc_status flc_generator_next(flc_generator* generator, flc_document_view* view, int* has_document) {
  return guard([&] {
    need(generator, "generator");
    need(view, "view");
    need(has_document, "has_document");
    *view = {};
    *has_document = 0;
    flc::Document& d = generator->doc;
    if (!generator->generator.next(d))
      return;
    *has_document = 1;
    view->length = d.size();
    view->ids = d.ids.data();
    view->partners = d.partners.data();
    view->surprisal_bits = d.surprisal_bits.data();
    view->flags = d.flags.data();
    view->forced_closes = d.counters.forced_closes;
    view->collision_pushes = d.counters.collision_pushes;
  });
}

flc_status flc_check_balanced(const uint16_t* tokens, size_t n, uint32_t num_pairs, int* balanced,
                              int64_t* first_violation) {
  return guard([&] {
    need(balanced, "balanced");
    const flc::Vocabulary vocab = flc::make_vocab(num_pairs);
    const flc::BalanceReport r = flc::check_balanced(token_span(tokens, n), vocab);
    *balanced = r.balanced ? 1 : 0;
    if (first_violation)
      *first_violation = r.first_violation ? static_cast<int64_t>(*r.first_violation) : -1;
  });
}

flc_status flc_check_well_nested(const uint16_t* tokens, size_t n, uint32_t num_pairs, int* well_nested) {
  return guard([&] {
    need(well_nested, "well_nested");
    const flc::Vocabulary vocab = flc::make_vocab(num_pairs);
    *well_nested = flc::check_well_nested(token_span(tokens, n), vocab) ? 1 : 0;
  });
}

flc_status flc_match_arcs(const uint16_t* tokens, size_t n, uint32_t num_pairs, flc_match_policy policy,
                          const int32_t* partners, flc_arc** arcs, size_t* n_arcs) {
  return guard([&] {
    need(arcs, "arcs");
    need(n_arcs, "n_arcs");
    if (policy < FLC_MATCH_STACK || policy > FLC_MATCH_ANNOTATED)
      flc::fail(flc::Errc::invalid_argument, "unknown match policy");
    const flc::Vocabulary vocab = flc::make_vocab(num_pairs);
    std::span<const std::int32_t> p;
    if (partners)
      p = {partners, n};
    const flc::ArcSet set =
        flc::match_arcs(token_span(tokens, n), vocab, static_cast<flc::MatchPolicy>(policy), p);
    static_assert(sizeof(flc_arc) == sizeof(flc::Arc));
    *arcs = reinterpret_cast<flc_arc*>(dup_array(set.arcs.data(), set.arcs.size()));
    *n_arcs = set.arcs.size();
  });
}

void flc_arcs_free(flc_arc* arcs) { std::free(arcs); }

flc_status flc_count_crossings(const flc_arc* arcs, size_t n_arcs, uint64_t* crossings) {
  return guard([&] {
    need(crossings, "crossings");
    if (n_arcs > 0)
      need(arcs, "arcs");
    std::vector<flc::Arc> v(n_arcs);
    for (size_t i = 0; i < n_arcs; ++i) {
      if (arcs[i].close <= arcs[i].open)
        flc::fail(flc::Errc::invalid_argument, "arc " + std::to_string(i) + " has close <= open");
      v[i] = {arcs[i].open, arcs[i].close};
    }
    *crossings = flc::count_crossings(v);
  });
}

flc_status flc_depth_stats(const uint16_t* tokens, size_t n, uint32_t num_pairs, double* mean_depth,
                           uint32_t* max_depth) {
  return guard([&] {
    const flc::Vocabulary vocab = flc::make_vocab(num_pairs);
    const flc::DepthStats s = flc::depth_stats(token_span(tokens, n), vocab);
    if (mean_depth)
      *mean_depth = s.mean_depth;
    if (max_depth)
      *max_depth = s.max_depth;
  });
}

flc_status flc_fit_zipf(const uint64_t* counts, size_t n, double beta_fixed, double* alpha_hat,
                        double* log_likelihood) {
  return guard([&] {
    need(alpha_hat, "alpha_hat");
    if (n > 0)
      need(counts, "counts");
    const flc::ZipfFit fit = flc::fit_zipf(std::span<const std::uint64_t>(counts, n), beta_fixed);
    *alpha_hat = fit.alpha_hat;
    if (log_likelihood)
      *log_likelihood = fit.log_likelihood;
  });
}

flc_status flc_kl_divergence(const char* p_json, const char* q_json, double* kl_bits) {
  return guard([&] {
    need(p_json, "p_json");
    need(q_json, "q_json");
    need(kl_bits, "kl_bits");
    *kl_bits = flc::kl_divergence(flc::DistanceDistribution::from_json(p_json),
                                  flc::DistanceDistribution::from_json(q_json));
  });
}

void flc_corpus_params_default(flc_corpus_params* params) {
  if (!params)
    return;
  const flc::CorpusParams d;
  params->n_tokens = d.n_tokens;
  params->shard_tokens = d.shard_tokens;
  params->seq_len = d.seq_len;
  params->batch_size = d.batch_size;
  params->write_annotations = d.write_annotations ? 1 : 0;
  params->workers = d.workers;
}

flc_status flc_generate_corpus(const flc_language* language, const flc_corpus_params* params, const char* out_dir,
                               const char* spec_source, char** manifest_json) {
  return guard([&] {
    need(language, "language");
    need(params, "params");
    need(out_dir, "out_dir");
    flc::CorpusParams p;
    p.n_tokens = params->n_tokens;
    p.shard_tokens = params->shard_tokens;
    p.seq_len = params->seq_len;
    p.batch_size = params->batch_size;
    p.write_annotations = params->write_annotations != 0;
    p.workers = params->workers;
    const flc::CorpusManifest m =
        flc::generate_corpus(language->language, p, out_dir, spec_source ? spec_source : "");
    if (manifest_json)
      *manifest_json = dup_string(m.to_json());
  });
}

flc_status flc_validate_corpus(const char* manifest_path, const char* family, int machine, int* passed,
                               char** report) {
  return guard([&] {
    need(manifest_path, "manifest_path");
    need(passed, "passed");
    std::optional<flc::Family> fam;
    if (family) {
      fam = flc::parse_family(family);
      if (!fam)
        flc::fail(flc::Errc::invalid_argument, std::string("unknown family '") + family + "'");
    }
    flc::ValidationResult r = flc::validate_corpus(manifest_path, fam);
    for (const std::string& f : r.failures)
      r.report.add("failure", f);
    *passed = r.passed ? 1 : 0;
    if (report)
      *report = dup_string(r.report.render(machine != 0));
  });
}

flc_status flc_corpus_stats(const char* manifest_path, int machine, char** report) {
  return guard([&] {
    need(manifest_path, "manifest_path");
    need(report, "report");
    *report = dup_string(flc::corpus_stats(manifest_path).render(machine != 0));
  });
}

flc_status flc_compare_dist(const char* manifest_path, const char* other_manifest, const char* reference_pmf_path,
                            double threshold, int machine, double* kl_bits, int* within_threshold, char** report) {
  return guard([&] {
    need(manifest_path, "manifest_path");
    std::optional<std::filesystem::path> other, ref;
    if (other_manifest)
      other = other_manifest;
    if (reference_pmf_path)
      ref = reference_pmf_path;
    const flc::CompareResult r = flc::compare_distances(manifest_path, other, ref, threshold);
    if (kl_bits)
      *kl_bits = r.kl_bits;
    if (within_threshold)
      *within_threshold = r.within_threshold ? 1 : 0;
    if (report)
      *report = dup_string(r.report.render(machine != 0));
  });
}

flc_status flc_extract_dist(const char* manifest_path, char** pmf_json) {
  return guard([&] {
    need(manifest_path, "manifest_path");
    need(pmf_json, "pmf_json");
    *pmf_json = dup_string(flc::corpus_distances(manifest_path).distribution().to_json());
  });
}

flc_status flc_sample_text(const flc_language* language, uint64_t n_documents, char** text) {
  return guard([&] {
    need(language, "language");
    need(text, "text");
    *text = dup_string(flc::sample_text(language->language, n_documents));
  });
}

flc_status flc_read_tokens(const char* manifest_path, uint16_t** tokens, size_t* n) {
  return guard([&] {
    need(manifest_path, "manifest_path");
    need(tokens, "tokens");
    need(n, "n");
    const std::vector<flc::TokenId> all = flc::read_all_tokens(manifest_path);
    *tokens = dup_array(all.data(), all.size());
    *n = all.size();
  });
}

void flc_tokens_free(uint16_t* tokens) { std::free(tokens); }

flc_status flc_to_text(const uint16_t* tokens, size_t n, uint32_t num_pairs, int flat, char** text) {
  return guard([&] {
    need(text, "text");
    const flc::Vocabulary vocab = flc::make_vocab(num_pairs);
    *text = dup_string(
        flc::to_text(token_span(tokens, n), vocab, flat ? flc::TextStyle::flat : flc::TextStyle::paren));
  });
}

flc_status flc_from_text(const char* text, uint32_t num_pairs, uint16_t** tokens, size_t* n) {
  return guard([&] {
    need(text, "text");
    need(tokens, "tokens");
    need(n, "n");
    const flc::Vocabulary vocab = flc::make_vocab(num_pairs);
    const std::vector<flc::TokenId> v = flc::from_text(text, vocab);
    *tokens = dup_array(v.data(), v.size());
    *n = v.size();
  });
}

} // extern "C"
