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

#ifndef FLC_COMMANDS_HPP
#define FLC_COMMANDS_HPP

#include "flc/arcstats.hpp"
#include "flc/langgen.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

// Corpus-level operations behind the CLI subcommands.
namespace flc {

// Ordered key/value metrics. Human rendering pads labels; machine rendering
// is one "key=value" per line.
class Report {
public:
  void add(std::string key, std::string value);
  void add(std::string key, double value);
  void add(std::string key, std::uint64_t value);
  const std::vector<std::pair<std::string, std::string>>& entries() const noexcept { return entries_; }
  std::optional<std::string> find(const std::string& key) const;
  std::string render(bool machine) const;

private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

struct ValidationResult {
  bool passed = true;
  std::vector<std::string> failures; // first few, human-readable
  Report report;
};

// Checks every document against the invariants of `family` (defaults to the
// manifest's own family). Hash/size corruption still throws.
ValidationResult validate_corpus(const std::filesystem::path& manifest_path,
                                 std::optional<Family> family = std::nullopt);

Report corpus_stats(const std::filesystem::path& manifest_path);

// Arc distances of a paren-family corpus, matched from raw tokens.
DistanceCounter corpus_distances(const std::filesystem::path& manifest_path);

struct CompareResult {
  double kl_bits = 0.0;
  bool within_threshold = false;
  Report report;
};

// KL(corpus distances || reference). The reference is another manifest's
// distances, a pmf file, or (both absent) the distance_ref of the corpus language.
CompareResult compare_distances(const std::filesystem::path& manifest_path,
                                const std::optional<std::filesystem::path>& other_manifest,
                                const std::optional<std::filesystem::path>& reference_pmf, double threshold);

// First n documents of stream 0, one per line.
std::string sample_text(const Language& language, std::uint64_t n_documents);

} // namespace flc

#endif // FLC_COMMANDS_HPP
