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

#ifndef FLC_H
#define FLC_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define FLC_API __declspec(dllexport)
#else
#define FLC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Every call returns a status; on failure flc_last_error() holds a message
 * for the calling thread until its next failing call. Strings and arrays
 * handed out by the library are released with the matching free function. */
typedef enum flc_status {
  FLC_OK = 0,
  FLC_ERR_INVALID_ARGUMENT = 1,
  FLC_ERR_INVALID_SPEC = 2,
  FLC_ERR_INVALID_INPUT = 3,
  FLC_ERR_IO = 4,
  FLC_ERR_CORRUPT = 5,
  FLC_ERR_UNSUPPORTED_FORMAT = 6,
  FLC_ERR_PARSE = 7,
  FLC_ERR_MATCH_FAILURE = 8,
  FLC_ERR_AMBIGUOUS = 9,
  FLC_ERR_OUT_OF_MEMORY = 10,
  FLC_ERR_INTERNAL = 11
} flc_status;

FLC_API const char* flc_version(void);
FLC_API const char* flc_status_name(flc_status status);
FLC_API const char* flc_last_error(void);
FLC_API void flc_string_free(char* s);

/* ---- languages and generation ---- */

typedef struct flc_language flc_language;
typedef struct flc_generator flc_generator;

/* Parses a JSON language spec; relative distance_ref paths resolve against
 * base_dir (may be NULL). Cross specs run their distance calibration here. */
FLC_API flc_status flc_language_create(const char* spec_json, const char* base_dir, flc_language** out);
FLC_API void flc_language_free(flc_language* language);
/* Resolved spec as JSON (every field present). */
FLC_API flc_status flc_language_spec_json(const flc_language* language, int pretty, char** out);
FLC_API flc_status flc_language_family(const flc_language* language, const char** name);
FLC_API flc_status flc_language_num_pairs(const flc_language* language, uint32_t* num_pairs);

/* Document columns; pointers stay valid until the next flc_generator_next
 * or flc_generator_free on the same generator. */
typedef struct flc_document_view {
  size_t length;
  const uint16_t* ids;
  const int32_t* partners;       /* document-relative, -1 when absent */
  const double* surprisal_bits;
  const uint8_t* flags;          /* bit 0: arc placed by the distance scheduler */
  uint64_t forced_closes;
  uint64_t collision_pushes;
} flc_document_view;

/* Stream shard_index of the language seed; stops after the document that
 * reaches budget tokens. */
FLC_API flc_status flc_generator_create(const flc_language* language, uint64_t budget, uint64_t shard_index,
                                        flc_generator** out);
FLC_API void flc_generator_free(flc_generator* generator);
/* *has_document is 0 once the budget is spent. */
FLC_API flc_status flc_generator_next(flc_generator* generator, flc_document_view* view, int* has_document);

/* ---- arc statistics on raw tokens ---- */

typedef struct flc_arc {
  uint32_t open;
  uint32_t close;
} flc_arc;

typedef enum flc_match_policy {
  FLC_MATCH_STACK = 0,
  FLC_MATCH_SCHEDULED = 1,
  FLC_MATCH_ANNOTATED = 2
} flc_match_policy;

/* *first_violation is -1 when there is none. */
FLC_API flc_status flc_check_balanced(const uint16_t* tokens, size_t n, uint32_t num_pairs, int* balanced,
                                      int64_t* first_violation);
FLC_API flc_status flc_check_well_nested(const uint16_t* tokens, size_t n, uint32_t num_pairs, int* well_nested);
/* partners may be NULL; arcs are sorted by open index. */
FLC_API flc_status flc_match_arcs(const uint16_t* tokens, size_t n, uint32_t num_pairs, flc_match_policy policy,
                                  const int32_t* partners, flc_arc** arcs, size_t* n_arcs);
FLC_API void flc_arcs_free(flc_arc* arcs);
FLC_API flc_status flc_count_crossings(const flc_arc* arcs, size_t n_arcs, uint64_t* crossings);
FLC_API flc_status flc_depth_stats(const uint16_t* tokens, size_t n, uint32_t num_pairs, double* mean_depth,
                                   uint32_t* max_depth);
FLC_API flc_status flc_fit_zipf(const uint64_t* counts, size_t n, double beta_fixed, double* alpha_hat,
                                double* log_likelihood);
/* Distance distributions as JSON {"sample_count": n, "pmf": [[d, p], ...]}. */
FLC_API flc_status flc_kl_divergence(const char* p_json, const char* q_json, double* kl_bits);

/* ---- corpora ---- */

typedef struct flc_corpus_params {
  uint64_t n_tokens;
  uint64_t shard_tokens;
  uint32_t seq_len;
  uint32_t batch_size;
  int write_annotations;
  unsigned workers;
} flc_corpus_params;

FLC_API void flc_corpus_params_default(flc_corpus_params* params);
/* Writes shards and manifest.json under out_dir; *manifest_json (may be NULL)
 * receives the committed manifest. spec_source is stored verbatim (may be NULL). */
FLC_API flc_status flc_generate_corpus(const flc_language* language, const flc_corpus_params* params,
                                       const char* out_dir, const char* spec_source, char** manifest_json);

/* Reports are "key: value" lines, or "key=value" lines when machine != 0. */
/* family may be NULL to use the manifest's own family. */
FLC_API flc_status flc_validate_corpus(const char* manifest_path, const char* family, int machine, int* passed,
                                       char** report);
FLC_API flc_status flc_corpus_stats(const char* manifest_path, int machine, char** report);
/* Reference: other_manifest, else reference_pmf_path, else the corpus's own
 * distance_ref (either may be NULL). */
FLC_API flc_status flc_compare_dist(const char* manifest_path, const char* other_manifest,
                                    const char* reference_pmf_path, double threshold, int machine, double* kl_bits,
                                    int* within_threshold, char** report);
FLC_API flc_status flc_extract_dist(const char* manifest_path, char** pmf_json);
FLC_API flc_status flc_sample_text(const flc_language* language, uint64_t n_documents, char** text);
FLC_API flc_status flc_read_tokens(const char* manifest_path, uint16_t** tokens, size_t* n);
FLC_API void flc_tokens_free(uint16_t* tokens);

/* ---- text codec ---- */

/* flat != 0 renders bare integers instead of "t_(" / "t_)". */
FLC_API flc_status flc_to_text(const uint16_t* tokens, size_t n, uint32_t num_pairs, int flat, char** text);
FLC_API flc_status flc_from_text(const char* text, uint32_t num_pairs, uint16_t** tokens, size_t* n);

#ifdef __cplusplus
}
#endif

#endif /* FLC_H */
