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

#ifndef FLC_CORPUSIO_HPP
#define FLC_CORPUSIO_HPP

#include "flc/langgen.hpp"
#include "flc/vocab.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace flc {

// Shard file: 16-byte header "FLC1" | version u32 | vocab_total_size u32 |
// token_count u32 (all little-endian), then token_count u16 LE IDs.
inline constexpr std::array<char, 4> kShardMagic{'F', 'L', 'C', '1'};
// Document index sidecar (.idx): "FLI1" | version | doc_count | 0, then one
// u32 document length per document.
inline constexpr std::array<char, 4> kIndexMagic{'F', 'L', 'I', '1'};
// Annotation sidecar (.ann): "FLA1" | version | token_count | 0, then
// token_count i32 partners, token_count u8 flags, token_count f64 surprisals.
inline constexpr std::array<char, 4> kAnnotationMagic{'F', 'L', 'A', '1'};
inline constexpr std::uint32_t kShardFormatVersion = 1;
inline constexpr std::uint32_t kManifestFormatVersion = 1;
inline constexpr std::size_t kShardHeaderBytes = 16;
inline constexpr const char* kManifestName = "manifest.json";

struct ShardHeader {
  std::uint32_t format_version = kShardFormatVersion;
  std::uint32_t vocab_total_size = 0;
  std::uint32_t token_count = 0;
};

std::array<std::uint8_t, kShardHeaderBytes> encode_header(const std::array<char, 4>& magic, const ShardHeader& header);
// Errc::corrupt on bad magic or short input, Errc::unsupported_format on a version mismatch.
ShardHeader decode_header(const std::array<char, 4>& magic, std::span<const std::uint8_t> bytes,
                          const std::string& what);

std::string sha256_hex(std::span<const std::uint8_t> bytes);

struct ShardEntry {
  std::string path; // relative to the corpus root
  std::uint64_t token_count = 0;
  std::uint64_t document_count = 0;
  std::string content_hash;
  std::string index_path;
  std::string index_hash;
  std::string annotation_path; // empty when annotations were not written
  std::string annotation_hash;
};

struct CorpusParams {
  std::uint64_t n_tokens = 0;
  std::uint64_t shard_tokens = 64ull << 20;
  std::uint32_t seq_len = 512;
  std::uint32_t batch_size = 512;
  bool write_annotations = false;
  unsigned workers = 1;
};

struct CorpusManifest {
  std::uint32_t format_version = kManifestFormatVersion;
  std::string language_spec; // resolved spec, compact JSON
  std::string spec_source;    // spec file text as given, may be empty
  std::uint64_t seed = 0;
  std::string layout = "seeded-shards"; // or "stream"
  std::uint64_t requested_tokens = 0;
  std::uint64_t shard_tokens = 0;
  std::uint64_t total_tokens = 0;
  std::uint32_t seq_len = 512;
  std::uint32_t batch_size = 512;
  std::vector<ShardEntry> shards;
  std::string created_at;

  std::uint64_t full_sequences() const noexcept { return seq_len ? total_tokens / seq_len : 0; }
  std::uint64_t dropped_tokens() const noexcept { return seq_len ? total_tokens % seq_len : 0; }
  std::uint64_t full_batches() const noexcept { return batch_size ? full_sequences() / batch_size : 0; }

  std::string to_json() const;
  static CorpusManifest from_json(std::string_view text);
};

// Writes one shard (and its sidecars) under temporary names; finish() renames
// them into place and returns the entry. Abandoned writers remove their temp files.
class ShardWriter {
public:
  ShardWriter(std::filesystem::path root, std::string stem, std::uint32_t vocab_total_size, bool annotate);
  ~ShardWriter();
  ShardWriter(const ShardWriter&) = delete;
  ShardWriter& operator=(const ShardWriter&) = delete;

  void append(const Document& doc);
  std::uint64_t token_count() const noexcept { return token_count_; }
  ShardEntry finish();

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::uint64_t token_count_ = 0;
};

using DocumentSource = std::function<bool(Document&)>;

// Splits one document stream into shards of at least params.shard_tokens
// tokens (cut at document boundaries) and commits the manifest last.
CorpusManifest write_shards(const DocumentSource& source, const Language& language, const CorpusParams& params,
                            const std::filesystem::path& dir, const std::string& spec_source = {});

// Shard s holds the stream seeded for shard s with budget
// min(shard_tokens, n_tokens - s * shard_tokens); shards are generated by
// params.workers threads. Output is independent of the worker count.
CorpusManifest generate_corpus(const Language& language, const CorpusParams& params,
                               const std::filesystem::path& dir, const std::string& spec_source = {});

// Write-temp-then-rename.
void write_manifest(const CorpusManifest& manifest, const std::filesystem::path& dir);
CorpusManifest read_manifest(const std::filesystem::path& manifest_path);

struct ShardData {
  std::vector<TokenId> tokens;
  std::vector<std::uint32_t> doc_lengths;
  std::vector<std::int32_t> partners; // filled only when annotations were requested and exist
  std::vector<std::uint8_t> flags;
  std::vector<double> surprisal_bits;
  bool has_annotations = false;
};

// Yields shards in manifest order, verifying sizes and hashes first.
class CorpusReader {
public:
  explicit CorpusReader(const std::filesystem::path& manifest_path);

  const CorpusManifest& manifest() const noexcept { return manifest_; }
  const std::filesystem::path& root() const noexcept { return root_; }
  // Errc::corrupt names the shard on size/hash mismatch.
  bool next_shard(ShardData& out, bool load_annotations = false);

private:
  CorpusManifest manifest_;
  std::filesystem::path root_;
  std::size_t next_ = 0;
};

std::vector<TokenId> read_all_tokens(const std::filesystem::path& manifest_path);

struct ChunkResult {
  std::vector<std::vector<TokenId>> sequences;
  std::uint64_t dropped = 0;
};

// Non-overlapping windows of exactly seq_len tokens, remainder dropped.
ChunkResult chunk(std::span<const TokenId> tokens, std::size_t seq_len);

// Streaming form of chunk(): windows may straddle feed() calls.
class SequenceChunker {
public:
  explicit SequenceChunker(std::size_t seq_len);
  void feed(std::span<const TokenId> tokens, const std::function<void(std::span<const TokenId>)>& emit);
  std::uint64_t sequences() const noexcept { return sequences_; }
  std::uint64_t pending() const noexcept { return buffer_.size(); }
  // Tokens that will be dropped if the stream ends now.
  std::uint64_t dropped() const noexcept { return buffer_.size(); }

private:
  std::size_t seq_len_;
  std::vector<TokenId> buffer_;
  std::uint64_t sequences_ = 0;
};

enum class TextStyle { paren, flat };

// paren: open t -> "t_(", close t+N -> "t_)"; flat: bare integers.
std::string to_text(std::span<const TokenId> tokens, const Vocabulary& vocab, TextStyle style);
// Accepts both notations; Errc::parse with line/column on bad input.
std::vector<TokenId> from_text(std::string_view text, const Vocabulary& vocab);
// One document per non-empty line.
std::vector<std::vector<TokenId>> from_text_lines(std::string_view text, const Vocabulary& vocab);

} // namespace flc

#endif // FLC_CORPUSIO_HPP
