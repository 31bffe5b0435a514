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

#ifndef FLC_SPEC_IO_HPP
#define FLC_SPEC_IO_HPP

#include "flc/langgen.hpp"

#include <filesystem>
#include <string>
#include <string_view>

namespace flc {

// Language spec files are JSON objects:
//   {"family": "cross", "num_pairs": 250, "seed": 7,
//    "distribution": {"kind": "zipf", "alpha": 1.0, "beta": 2.7, "permute_seed": 3},
//    "p_open": 0.49, "rep_block": 10, "p_mix": 0.01, "doc_target_len": 480,
//    "distance_ref": "nest_distances.json" | {"sample_count": n, "pmf": [[d, p], ...]},
//    "cross_calibration": {"rounds": 6, "tokens_per_round": 2000000}}
// Every field but "family" is optional. A string distance_ref is a path
// resolved against base_dir. Errors raise Errc::invalid_spec.
LanguageSpec spec_from_json(std::string_view text, const std::filesystem::path& base_dir = {});

// Resolved form: every field present, distance_ref inlined. Round-trips
// through spec_from_json.
std::string spec_to_json(const LanguageSpec& spec, bool pretty = false);

} // namespace flc

#endif // FLC_SPEC_IO_HPP
