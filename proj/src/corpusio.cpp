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

#include "flc/corpusio.hpp"

#include "flc/error.hpp"
#include "flc/spec_io.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <atomic>
#include <bit>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

namespace flc {

namespace fs = std::filesystem;

namespace {

constexpr bool kLittleEndian = std::endian::native == std::endian::little;

template <typename T>
T byteswap(T v) {
  T out{};
  auto* src = reinterpret_cast<const unsigned char*>(&v);
  auto* dst = reinterpret_cast<unsigned char*>(&out);
  for (std::size_t i = 0; i < sizeof(T); ++i)
    dst[i] = src[sizeof(T) - 1 - i];
  return out;
}

void put_u32(std::uint8_t* out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b)
    out[b] = static_cast<std::uint8_t>(v >> (8 * b));
}

std::uint32_t get_u32(const std::uint8_t* in) {
  std::uint32_t v = 0;
  for (int b = 0; b < 4; ++b)
    v |= static_cast<std::uint32_t>(in[b]) << (8 * b);
  return v;
}

class Sha256 {
public:
  Sha256() : ctx_(EVP_MD_CTX_new()) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1)
      fail(Errc::io, "cannot initialise SHA-256");
  }
  ~Sha256() { EVP_MD_CTX_free(ctx_); }
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  void update(const void* data, std::size_t n) { EVP_DigestUpdate(ctx_, data, n); }
  std::string hex() {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx_, digest, &len);
    static const char* digits = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < len; ++i) {
      out += digits[digest[i] >> 4];
      out += digits[digest[i] & 15];
    }
    return out;
  }

private:
  EVP_MD_CTX* ctx_;
};

std::string hash_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    fail(Errc::io, "cannot read " + path.string());
  Sha256 sha;
  std::vector<char> buf(1 << 20);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    sha.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return sha.hex();
}

std::vector<std::uint8_t> read_file(const fs::path& path, const std::string& what) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in)
    fail(Errc::corrupt, what + ": cannot open " + path.string());
  const auto size = static_cast<std::size_t>(in.tellg());
  std::vector<std::uint8_t> bytes(size);
  in.seekg(0);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size));
  if (!in)
    fail(Errc::io, what + ": read failed for " + path.string());
  return bytes;
}

void write_all(std::ofstream& out, const void* data, std::size_t n, const fs::path& path) {
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
  if (!out)
    fail(Errc::io, "write failed for " + path.string());
}

template <typename T>
void write_le(std::ofstream& out, std::span<const T> values, const fs::path& path) {
  if constexpr (kLittleEndian || sizeof(T) == 1) {
    write_all(out, values.data(), values.size_bytes(), path);
  } else {
    std::vector<T> swapped(values.begin(), values.end());
    for (T& v : swapped)
      v = byteswap(v);
    write_all(out, swapped.data(), swapped.size() * sizeof(T), path);
  }
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

} // namespace

std::array<std::uint8_t, kShardHeaderBytes> encode_header(const std::array<char, 4>& magic, const ShardHeader& header) {
  std::array<std::uint8_t, kShardHeaderBytes> out{};
  std::memcpy(out.data(), magic.data(), 4);
  put_u32(out.data() + 4, header.format_version);
  put_u32(out.data() + 8, header.vocab_total_size);
  put_u32(out.data() + 12, header.token_count);
  return out;
}

ShardHeader decode_header(const std::array<char, 4>& magic, std::span<const std::uint8_t> bytes, const std::string& what) {
  if (bytes.size() < kShardHeaderBytes)
    fail(Errc::corrupt, what + ": header truncated (" + std::to_string(bytes.size()) + " bytes)");
  if (std::memcmp(bytes.data(), magic.data(), 4) != 0)
    fail(Errc::corrupt, what + ": bad magic");
  ShardHeader h;
  h.format_version = get_u32(bytes.data() + 4);
  h.vocab_total_size = get_u32(bytes.data() + 8);
  h.token_count = get_u32(bytes.data() + 12);
  if (h.format_version != kShardFormatVersion)
    fail(Errc::unsupported_format, what + ": format version " + std::to_string(h.format_version) +
                                       " (supported: " + std::to_string(kShardFormatVersion) + ")");
  return h;
}

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
  Sha256 sha;
  sha.update(bytes.data(), bytes.size());
  return sha.hex();
}

std::string CorpusManifest::to_json() const {
  nlohmann::ordered_json j;
  j["format_version"] = format_version;
  j["language_spec"] = nlohmann::ordered_json::parse(language_spec.empty() ? "{}" : language_spec);
  j["spec_source"] = spec_source;
  j["seed"] = seed;
  j["layout"] = layout;
  j["requested_tokens"] = requested_tokens;
  j["shard_tokens"] = shard_tokens;
  j["total_tokens"] = total_tokens;
  j["seq_len"] = seq_len;
  j["batch_size"] = batch_size;
  j["full_sequences"] = full_sequences();
  j["dropped_tokens"] = dropped_tokens();
  j["full_batches"] = full_batches();
  auto shards_json = nlohmann::ordered_json::array();
  for (const ShardEntry& s : shards) {
    nlohmann::ordered_json e;
    e["path"] = s.path;
    e["token_count"] = s.token_count;
    e["document_count"] = s.document_count;
    e["content_hash"] = s.content_hash;
    e["index_path"] = s.index_path;
    e["index_hash"] = s.index_hash;
    if (!s.annotation_path.empty()) {
      e["annotation_path"] = s.annotation_path;
      e["annotation_hash"] = s.annotation_hash;
    }
    shards_json.push_back(std::move(e));
  }
  j["shards"] = std::move(shards_json);
  j["created_at"] = created_at;
  return j.dump(2) + "\n";
}

CorpusManifest CorpusManifest::from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::parse, std::string("manifest is not valid JSON: ") + e.what());
  }
  try {
    CorpusManifest m;
    m.format_version = j.at("format_version").get<std::uint32_t>();
    if (m.format_version != kManifestFormatVersion)
      fail(Errc::unsupported_format, "manifest format version " + std::to_string(m.format_version) +
                                         " (supported: " + std::to_string(kManifestFormatVersion) + ")");
    m.language_spec = j.at("language_spec").dump();
    m.spec_source = j.value("spec_source", std::string{});
    m.seed = j.at("seed").get<std::uint64_t>();
    m.layout = j.value("layout", std::string{"seeded-shards"});
    m.requested_tokens = j.value("requested_tokens", std::uint64_t{0});
    m.shard_tokens = j.value("shard_tokens", std::uint64_t{0});
    m.total_tokens = j.at("total_tokens").get<std::uint64_t>();
    m.seq_len = j.value("seq_len", 512u);
    m.batch_size = j.value("batch_size", 512u);
    m.created_at = j.value("created_at", std::string{});
    std::uint64_t sum = 0;
    for (const auto& e : j.at("shards")) {
      ShardEntry s;
      s.path = e.at("path").get<std::string>();
      s.token_count = e.at("token_count").get<std::uint64_t>();
      s.document_count = e.value("document_count", std::uint64_t{0});
      s.content_hash = e.at("content_hash").get<std::string>();
      s.index_path = e.value("index_path", std::string{});
      s.index_hash = e.value("index_hash", std::string{});
      s.annotation_path = e.value("annotation_path", std::string{});
      s.annotation_hash = e.value("annotation_hash", std::string{});
      sum += s.token_count;
      m.shards.push_back(std::move(s));
    }
    if (sum != m.total_tokens)
      fail(Errc::corrupt, "manifest shard token counts sum to " + std::to_string(sum) + ", total_tokens is " +
                              std::to_string(m.total_tokens));
    return m;
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::parse, std::string("malformed manifest: ") + e.what());
  }
}

struct ShardWriter::Impl {
  fs::path root;
  std::string stem;
  std::uint32_t vocab_total_size;
  bool annotate;
  bool finished = false;
  fs::path tmp_bin, tmp_idx, tmp_ann, tmp_partners, tmp_flags, tmp_bits;
  std::ofstream bin, partners, flags, bits;
  std::vector<std::uint32_t> doc_lengths;
  std::vector<char> buffer;

  void remove_temps() noexcept {
    std::error_code ec;
    for (const fs::path* p : {&tmp_bin, &tmp_idx, &tmp_ann, &tmp_partners, &tmp_flags, &tmp_bits})
      if (!p->empty())
        fs::remove(*p, ec);
  }
};

ShardWriter::ShardWriter(fs::path root, std::string stem, std::uint32_t vocab_total_size, bool annotate)
    : impl_(std::make_unique<Impl>()) {
  Impl& m = *impl_;
  m.root = std::move(root);
  m.stem = std::move(stem);
  m.vocab_total_size = vocab_total_size;
  m.annotate = annotate;
  m.tmp_bin = m.root / (m.stem + ".bin.tmp");
  m.buffer.resize(1 << 20);
  m.bin.rdbuf()->pubsetbuf(m.buffer.data(), static_cast<std::streamsize>(m.buffer.size()));
  m.bin.open(m.tmp_bin, std::ios::binary | std::ios::trunc);
  if (!m.bin)
    fail(Errc::io, "cannot create " + m.tmp_bin.string());
  const auto header = encode_header(kShardMagic, {kShardFormatVersion, vocab_total_size, 0});
  write_all(m.bin, header.data(), header.size(), m.tmp_bin);
  if (annotate) {
    m.tmp_partners = m.root / (m.stem + ".partners.tmp");
    m.tmp_flags = m.root / (m.stem + ".flags.tmp");
    m.tmp_bits = m.root / (m.stem + ".bits.tmp");
    m.partners.open(m.tmp_partners, std::ios::binary | std::ios::trunc);
    m.flags.open(m.tmp_flags, std::ios::binary | std::ios::trunc);
    m.bits.open(m.tmp_bits, std::ios::binary | std::ios::trunc);
    if (!m.partners || !m.flags || !m.bits)
      fail(Errc::io, "cannot create annotation temp files under " + m.root.string());
  }
}

ShardWriter::~ShardWriter() {
  if (impl_ && !impl_->finished) {
    impl_->bin.close();
    impl_->partners.close();
    impl_->flags.close();
    impl_->bits.close();
    impl_->remove_temps();
  }
}

void ShardWriter::append(const Document& doc) {
  Impl& m = *impl_;
  if (token_count_ + doc.size() > 0xffffffffull)
    fail(Errc::invalid_argument, "shard " + m.stem + " would exceed 2^32-1 tokens");
  for (TokenId id : doc.ids)
    if (id >= m.vocab_total_size)
      fail(Errc::invalid_input, "token " + std::to_string(id) + " outside vocabulary");
  write_le<TokenId>(m.bin, doc.ids, m.tmp_bin);
  if (m.annotate) {
    write_le<std::int32_t>(m.partners, doc.partners, m.tmp_partners);
    write_le<std::uint8_t>(m.flags, doc.flags, m.tmp_flags);
    static_assert(sizeof(double) == 8);
    std::vector<std::uint64_t> raw(doc.size());
    std::memcpy(raw.data(), doc.surprisal_bits.data(), raw.size() * 8);
    write_le<std::uint64_t>(m.bits, raw, m.tmp_bits);
  }
  m.doc_lengths.push_back(static_cast<std::uint32_t>(doc.size()));
  token_count_ += doc.size();
}

ShardEntry ShardWriter::finish() {
  Impl& m = *impl_;
  const auto count = static_cast<std::uint32_t>(token_count_);
  const auto header = encode_header(kShardMagic, {kShardFormatVersion, m.vocab_total_size, count});
  m.bin.seekp(0);
  write_all(m.bin, header.data(), header.size(), m.tmp_bin);
  m.bin.close();
  if (!m.bin)
    fail(Errc::io, "closing " + m.tmp_bin.string() + " failed");

  ShardEntry entry;
  entry.token_count = token_count_;
  entry.document_count = m.doc_lengths.size();
  entry.content_hash = hash_file(m.tmp_bin);

  m.tmp_idx = m.root / (m.stem + ".idx.tmp");
  {
    std::ofstream idx(m.tmp_idx, std::ios::binary | std::ios::trunc);
    if (!idx)
      fail(Errc::io, "cannot create " + m.tmp_idx.string());
    const auto h = encode_header(kIndexMagic, {kShardFormatVersion, m.vocab_total_size,
                                               static_cast<std::uint32_t>(m.doc_lengths.size())});
    write_all(idx, h.data(), h.size(), m.tmp_idx);
    write_le<std::uint32_t>(idx, m.doc_lengths, m.tmp_idx);
    idx.close();
    if (!idx)
      fail(Errc::io, "closing " + m.tmp_idx.string() + " failed");
  }
  entry.index_hash = hash_file(m.tmp_idx);

  if (m.annotate) {
    m.partners.close();
    m.flags.close();
    m.bits.close();
    m.tmp_ann = m.root / (m.stem + ".ann.tmp");
    std::ofstream ann(m.tmp_ann, std::ios::binary | std::ios::trunc);
    if (!ann)
      fail(Errc::io, "cannot create " + m.tmp_ann.string());
    const auto h = encode_header(kAnnotationMagic, {kShardFormatVersion, m.vocab_total_size, count});
    write_all(ann, h.data(), h.size(), m.tmp_ann);
    for (const fs::path* part : {&m.tmp_partners, &m.tmp_flags, &m.tmp_bits}) {
      std::ifstream in(*part, std::ios::binary);
      ann << in.rdbuf();
    }
    ann.close();
    if (!ann)
      fail(Errc::io, "writing " + m.tmp_ann.string() + " failed");
    entry.annotation_hash = hash_file(m.tmp_ann);
  }

  auto commit = [&](const fs::path& tmp, const std::string& ext) {
    const fs::path final_path = m.root / (m.stem + ext);
    std::error_code ec;
    fs::rename(tmp, final_path, ec);
    if (ec)
      fail(Errc::io, "cannot rename " + tmp.string() + ": " + ec.message());
    return final_path.filename().string();
  };
  entry.path = commit(m.tmp_bin, ".bin");
  entry.index_path = commit(m.tmp_idx, ".idx");
  if (m.annotate) {
    entry.annotation_path = commit(m.tmp_ann, ".ann");
    std::error_code ec;
    for (const fs::path* p : {&m.tmp_partners, &m.tmp_flags, &m.tmp_bits})
      fs::remove(*p, ec);
  }
  m.finished = true;
  return entry;
}

void write_manifest(const CorpusManifest& manifest, const fs::path& dir) {
  const fs::path tmp = dir / (std::string(kManifestName) + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      fail(Errc::io, "cannot create " + tmp.string());
    const std::string text = manifest.to_json();
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.close();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      fail(Errc::io, "writing " + tmp.string() + " failed");
    }
  }
  std::error_code ec;
  fs::rename(tmp, dir / kManifestName, ec);
  if (ec) {
    fs::remove(tmp, ec);
    fail(Errc::io, "cannot commit manifest in " + dir.string());
  }
}

CorpusManifest read_manifest(const fs::path& manifest_path) {
  std::ifstream in(manifest_path, std::ios::binary);
  if (!in)
    fail(Errc::io, "cannot open manifest " + manifest_path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return CorpusManifest::from_json(buf.str());
}

namespace {

void prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    fail(Errc::io, "cannot create output directory " + dir.string() + (ec ? ": " + ec.message() : ""));
}

std::string shard_stem(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "shard_%05zu", index);
  return buf;
}

CorpusManifest base_manifest(const Language& language, const CorpusParams& params, const std::string& spec_source) {
  CorpusManifest m;
  m.language_spec = spec_to_json(language.spec());
  m.spec_source = spec_source;
  m.seed = language.spec().seed;
  m.requested_tokens = params.n_tokens;
  m.shard_tokens = params.shard_tokens;
  m.seq_len = params.seq_len;
  m.batch_size = params.batch_size;
  m.created_at = utc_now();
  return m;
}

void check_params(const CorpusParams& params) {
  if (params.shard_tokens == 0)
    fail(Errc::invalid_argument, "shard_tokens must be >= 1");
  if (params.seq_len == 0)
    fail(Errc::invalid_argument, "seq_len must be >= 1");
  if (params.batch_size == 0)
    fail(Errc::invalid_argument, "batch_size must be >= 1");
}

} // namespace

CorpusManifest write_shards(const DocumentSource& source, const Language& language, const CorpusParams& params,
                            const fs::path& dir, const std::string& spec_source) {
  check_params(params);
  prepare_dir(dir);
  CorpusManifest manifest = base_manifest(language, params, spec_source);
  manifest.layout = "stream";
  const std::uint32_t vocab_total = language.spec().vocab.total_size();
  std::unique_ptr<ShardWriter> writer;
  Document doc;
  while (source(doc)) {
    if (!writer)
      writer = std::make_unique<ShardWriter>(dir, shard_stem(manifest.shards.size()), vocab_total,
                                             params.write_annotations);
    writer->append(doc);
    if (writer->token_count() >= params.shard_tokens) {
      manifest.shards.push_back(writer->finish());
      writer.reset();
    }
  }
  if (writer && writer->token_count() > 0)
    manifest.shards.push_back(writer->finish());
  for (const ShardEntry& s : manifest.shards)
    manifest.total_tokens += s.token_count;
  write_manifest(manifest, dir);
  return manifest;
}

CorpusManifest generate_corpus(const Language& language, const CorpusParams& params, const fs::path& dir,
                               const std::string& spec_source) {
  check_params(params);
  prepare_dir(dir);
  CorpusManifest manifest = base_manifest(language, params, spec_source);
  manifest.layout = "seeded-shards";
  const std::uint64_t shard_count = (params.n_tokens + params.shard_tokens - 1) / params.shard_tokens;
  std::vector<ShardEntry> entries(shard_count);
  const std::uint32_t vocab_total = language.spec().vocab.total_size();

  std::atomic<std::uint64_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    Document doc;
    for (;;) {
      const std::uint64_t s = next.fetch_add(1);
      if (s >= shard_count)
        return;
      {
        std::lock_guard lock(error_mutex);
        if (error)
          return;
      }
      try {
        const std::uint64_t budget = std::min(params.shard_tokens, params.n_tokens - s * params.shard_tokens);
        Generator gen(language, budget, s);
        ShardWriter writer(dir, shard_stem(s), vocab_total, params.write_annotations);
        while (gen.next(doc))
          writer.append(doc);
        entries[s] = writer.finish();
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error)
          error = std::current_exception();
        return;
      }
    }
  };
  const unsigned workers = std::max(1u, std::min<unsigned>(params.workers, static_cast<unsigned>(std::max<std::uint64_t>(shard_count, 1))));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back(work);
    for (auto& t : pool)
      t.join();
  }
  if (error)
    std::rethrow_exception(error);
  manifest.shards = std::move(entries);
  for (const ShardEntry& s : manifest.shards)
    manifest.total_tokens += s.token_count;
  write_manifest(manifest, dir);
  return manifest;
}

CorpusReader::CorpusReader(const fs::path& manifest_path)
    : manifest_(read_manifest(manifest_path)), root_(manifest_path.parent_path()) {}

bool CorpusReader::next_shard(ShardData& out, bool load_annotations) {
  if (next_ >= manifest_.shards.size())
    return false;
  const ShardEntry& e = manifest_.shards[next_++];
  const std::string what = "shard " + e.path;
  const std::vector<std::uint8_t> bytes = read_file(root_ / e.path, what);
  const std::uint64_t expected = kShardHeaderBytes + 2 * e.token_count;
  if (bytes.size() != expected)
    fail(Errc::corrupt, what + ": expected " + std::to_string(expected) + " bytes, found " +
                            std::to_string(bytes.size()));
  if (sha256_hex(bytes) != e.content_hash)
    fail(Errc::corrupt, what + ": content hash mismatch");
  const ShardHeader h = decode_header(kShardMagic, bytes, what);
  if (h.token_count != e.token_count)
    fail(Errc::corrupt, what + ": header token count " + std::to_string(h.token_count) + " != manifest " +
                            std::to_string(e.token_count));

  out.tokens.resize(e.token_count);
  std::memcpy(out.tokens.data(), bytes.data() + kShardHeaderBytes, 2 * e.token_count);
  if constexpr (!kLittleEndian)
    for (TokenId& t : out.tokens)
      t = byteswap(t);

  out.doc_lengths.clear();
  if (!e.index_path.empty()) {
    const std::string iwhat = "index " + e.index_path;
    const auto ibytes = read_file(root_ / e.index_path, iwhat);
    if (sha256_hex(ibytes) != e.index_hash)
      fail(Errc::corrupt, iwhat + ": content hash mismatch");
    const ShardHeader ih = decode_header(kIndexMagic, ibytes, iwhat);
    if (ibytes.size() != kShardHeaderBytes + 4ull * ih.token_count)
      fail(Errc::corrupt, iwhat + ": size does not match document count");
    std::uint64_t sum = 0;
    out.doc_lengths.resize(ih.token_count);
    for (std::size_t d = 0; d < ih.token_count; ++d) {
      out.doc_lengths[d] = get_u32(ibytes.data() + kShardHeaderBytes + 4 * d);
      sum += out.doc_lengths[d];
    }
    if (sum != e.token_count)
      fail(Errc::corrupt, iwhat + ": document lengths sum to " + std::to_string(sum));
  } else if (e.token_count > 0) {
    out.doc_lengths.push_back(static_cast<std::uint32_t>(e.token_count));
  }

  out.has_annotations = false;
  out.partners.clear();
  out.flags.clear();
  out.surprisal_bits.clear();
  if (load_annotations && !e.annotation_path.empty()) {
    const std::string awhat = "annotations " + e.annotation_path;
    const auto abytes = read_file(root_ / e.annotation_path, awhat);
    if (sha256_hex(abytes) != e.annotation_hash)
      fail(Errc::corrupt, awhat + ": content hash mismatch");
    const ShardHeader ah = decode_header(kAnnotationMagic, abytes, awhat);
    const std::uint64_t n = ah.token_count;
    if (n != e.token_count || abytes.size() != kShardHeaderBytes + 13 * n)
      fail(Errc::corrupt, awhat + ": size does not match token count");
    const std::uint8_t* p = abytes.data() + kShardHeaderBytes;
    out.partners.resize(n);
    out.flags.resize(n);
    out.surprisal_bits.resize(n);
    for (std::size_t i = 0; i < n; ++i)
      out.partners[i] = static_cast<std::int32_t>(get_u32(p + 4 * i));
    std::memcpy(out.flags.data(), p + 4 * n, n);
    for (std::size_t i = 0; i < n; ++i) {
      std::uint64_t raw = 0;
      for (int b = 0; b < 8; ++b)
        raw |= static_cast<std::uint64_t>(p[5 * n + 8 * i + b]) << (8 * b);
      std::memcpy(&out.surprisal_bits[i], &raw, 8);
    }
    out.has_annotations = true;
  }
  return true;
}

std::vector<TokenId> read_all_tokens(const fs::path& manifest_path) {
  CorpusReader reader(manifest_path);
  std::vector<TokenId> all;
  ShardData shard;
  while (reader.next_shard(shard))
    all.insert(all.end(), shard.tokens.begin(), shard.tokens.end());
  return all;
}

ChunkResult chunk(std::span<const TokenId> tokens, std::size_t seq_len) {
  ChunkResult r;
  SequenceChunker c(seq_len);
  c.feed(tokens, [&](std::span<const TokenId> s) { r.sequences.emplace_back(s.begin(), s.end()); });
  r.dropped = c.dropped();
  return r;
}

SequenceChunker::SequenceChunker(std::size_t seq_len) : seq_len_(seq_len) {
  if (seq_len == 0)
    fail(Errc::invalid_argument, "seq_len must be >= 1");
  buffer_.reserve(seq_len);
}

void SequenceChunker::feed(std::span<const TokenId> tokens, const std::function<void(std::span<const TokenId>)>& emit) {
  std::size_t pos = 0;
  if (!buffer_.empty()) {
    const std::size_t take = std::min(seq_len_ - buffer_.size(), tokens.size());
    buffer_.insert(buffer_.end(), tokens.begin(), tokens.begin() + static_cast<std::ptrdiff_t>(take));
    pos = take;
    if (buffer_.size() < seq_len_)
      return;
    emit(buffer_);
    ++sequences_;
    buffer_.clear();
  }
  while (tokens.size() - pos >= seq_len_) {
    emit(tokens.subspan(pos, seq_len_));
    ++sequences_;
    pos += seq_len_;
  }
  buffer_.assign(tokens.begin() + static_cast<std::ptrdiff_t>(pos), tokens.end());
}

std::string to_text(std::span<const TokenId> tokens, const Vocabulary& vocab, TextStyle style) {
  std::string out;
  out.reserve(tokens.size() * 5);
  char buf[16];
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const std::uint32_t id = tokens[i];
    if (!vocab.contains(id))
      fail(Errc::invalid_input, "token " + std::to_string(id) + " outside vocabulary");
    if (i > 0)
      out += ' ';
    int n;
    if (style == TextStyle::flat)
      n = std::snprintf(buf, sizeof buf, "%u", id);
    else if (vocab.is_open(id))
      n = std::snprintf(buf, sizeof buf, "%u_(", id);
    else
      n = std::snprintf(buf, sizeof buf, "%u_)", vocab.open_of(id));
    out.append(buf, static_cast<std::size_t>(n));
  }
  return out;
}

namespace {

void parse_line(std::string_view line, std::size_t line_no, const Vocabulary& vocab, std::vector<TokenId>& out) {
  std::size_t i = 0;
  auto error = [&](std::size_t col, const std::string& what) {
    fail(Errc::parse, "line " + std::to_string(line_no) + ", column " + std::to_string(col + 1) + ": " + what);
  };
  while (i < line.size()) {
    if (line[i] == ' ' || line[i] == '\t' || line[i] == '\r') {
      ++i;
      continue;
    }
    const std::size_t start = i;
    std::uint64_t value = 0;
    while (i < line.size() && line[i] >= '0' && line[i] <= '9') {
      value = value * 10 + static_cast<std::uint64_t>(line[i] - '0');
      if (value > 0xffffffffull)
        error(start, "token number too large");
      ++i;
    }
    if (i == start)
      error(start, std::string("expected a token, found '") + line[i] + "'");
    const bool end = i == line.size() || line[i] == ' ' || line[i] == '\t' || line[i] == '\r';
    if (end) {
      if (value >= vocab.total_size())
        error(start, "token " + std::to_string(value) + " outside vocabulary of " + std::to_string(vocab.total_size()));
      out.push_back(static_cast<TokenId>(value));
      continue;
    }
    if (i + 2 > line.size() || line[i] != '_' || (line[i + 1] != '(' && line[i + 1] != ')'))
      error(i, "expected '_(' or '_)' after the pair number");
    const bool open = line[i + 1] == '(';
    i += 2;
    if (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r')
      error(i, "unexpected character after token");
    if (value >= vocab.num_pairs())
      error(start, (open ? "open" : "close") + std::string(" pair type ") + std::to_string(value) +
                       " out of range (num_pairs " + std::to_string(vocab.num_pairs()) + ")");
    out.push_back(open ? static_cast<TokenId>(value) : vocab.close_of(static_cast<std::uint32_t>(value)));
  }
}

} // namespace

std::vector<TokenId> from_text(std::string_view text, const Vocabulary& vocab) {
  std::vector<TokenId> out;
  std::size_t line_no = 1;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos)
      end = text.size();
    parse_line(text.substr(start, end - start), line_no, vocab, out);
    start = end + 1;
    ++line_no;
  }
  return out;
}

std::vector<std::vector<TokenId>> from_text_lines(std::string_view text, const Vocabulary& vocab) {
  std::vector<std::vector<TokenId>> docs;
  std::size_t line_no = 1;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos)
      end = text.size();
    std::vector<TokenId> doc;
    parse_line(text.substr(start, end - start), line_no, vocab, doc);
    if (!doc.empty())
      docs.push_back(std::move(doc));
    start = end + 1;
    ++line_no;
  }
  return docs;
}

} // namespace flc
