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

#include "flc/corpusio.hpp"
#include "flc/spec_io.hpp"

#include <doctest.h>

#include <fstream>
#include <numeric>

using namespace flc;
namespace fs = std::filesystem;

namespace {

Language nest_language(std::uint64_t seed = 7) {
  LanguageSpec s;
  s.family = Family::nest;
  s.distribution = default_distribution(Family::nest, s.vocab);
  s.seed = seed;
  return Language::prepare(s);
}

std::vector<TokenId> generate_direct(const Language& lang, const CorpusParams& p) {
  std::vector<TokenId> all;
  const std::uint64_t shards = (p.n_tokens + p.shard_tokens - 1) / p.shard_tokens;
  Document d;
  for (std::uint64_t s = 0; s < shards; ++s) {
    Generator g(lang, std::min(p.shard_tokens, p.n_tokens - s * p.shard_tokens), s);
    while (g.next(d))
      all.insert(all.end(), d.ids.begin(), d.ids.end());
  }
  return all;
}

std::vector<std::uint8_t> slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const fs::path& p, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

} // namespace

TEST_CASE("shard header layout is bit exact") {
  const auto h = encode_header(kShardMagic, {1, 500, 0x01020304});
  const std::array<std::uint8_t, 16> want{'F', 'L', 'C', '1', 1, 0, 0, 0, 0xf4, 0x01, 0, 0, 4, 3, 2, 1};
  CHECK(h == want);
  const ShardHeader back = decode_header(kShardMagic, h, "x");
  CHECK(back.vocab_total_size == 500);
  CHECK(back.token_count == 0x01020304);
}

TEST_CASE("header decoding errors") {
  auto h = encode_header(kShardMagic, {1, 500, 3});
  CHECK(oracle::error_code_of([&] { decode_header(kShardMagic, std::span(h).first(10), "x"); }) == Errc::corrupt);
  CHECK(oracle::error_code_of([&] { decode_header(kIndexMagic, h, "x"); }) == Errc::corrupt);
  h[4] = 2;
  CHECK(oracle::error_code_of([&] { decode_header(kShardMagic, h, "x"); }) == Errc::unsupported_format);
}

TEST_CASE("sha256 of known inputs") {
  CHECK(sha256_hex({}) == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  const std::string abc = "abc";
  CHECK(sha256_hex(std::span(reinterpret_cast<const std::uint8_t*>(abc.data()), 3)) ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("generate_corpus writes shards whose bytes are header plus little-endian ids") {
  oracle::TempDir dir("layout");
  const Language lang = nest_language();
  CorpusParams p;
  p.n_tokens = 30'000;
  p.shard_tokens = 10'000;
  const CorpusManifest m = generate_corpus(lang, p, dir.path);
  CHECK(m.shards.size() == 3);
  std::uint64_t sum = 0;
  for (const ShardEntry& e : m.shards)
    sum += e.token_count;
  CHECK(sum == m.total_tokens);
  CHECK(m.total_tokens >= 30'000);
  const auto direct = generate_direct(lang, p);
  std::size_t pos = 0;
  for (const ShardEntry& e : m.shards) {
    const auto bytes = slurp(dir.path / e.path);
    REQUIRE(bytes.size() == 16 + 2 * e.token_count);
    CHECK(sha256_hex(bytes) == e.content_hash);
    CHECK(std::equal(bytes.begin(), bytes.begin() + 4, "FLC1"));
    CHECK(bytes[8] == 0xf4);
    CHECK(bytes[9] == 0x01);
    for (std::size_t i = 0; i < e.token_count; ++i) {
      const std::uint16_t id = static_cast<std::uint16_t>(bytes[16 + 2 * i] | (bytes[17 + 2 * i] << 8));
      REQUIRE(id == direct[pos++]);
    }
  }
  CHECK(pos == direct.size());
  CHECK(fs::exists(dir.path / "manifest.json"));
  for (const auto& entry : fs::directory_iterator(dir.path))
    CHECK(entry.path().extension() != ".tmp");
}

TEST_CASE("write then read is the identity, and the manifest round trips") {
  oracle::TempDir dir("roundtrip");
  const Language lang = nest_language(3);
  CorpusParams p;
  p.n_tokens = 25'000;
  p.shard_tokens = 7'000;
  p.write_annotations = true;
  const CorpusManifest m = generate_corpus(lang, p, dir.path, "{\"family\": \"nest\"}");
  CHECK(read_all_tokens(dir.path / "manifest.json") == generate_direct(lang, p));
  const CorpusManifest back = read_manifest(dir.path / "manifest.json");
  CHECK(back.total_tokens == m.total_tokens);
  CHECK(back.spec_source == "{\"family\": \"nest\"}");
  CHECK(back.shards.size() == m.shards.size());
  CHECK(back.shards[1].content_hash == m.shards[1].content_hash);
  CHECK(spec_to_json(spec_from_json(back.language_spec)) == spec_to_json(lang.spec()));

  CorpusReader reader(dir.path / "manifest.json");
  ShardData shard;
  Generator g(lang, std::min(p.shard_tokens, p.n_tokens), 0);
  REQUIRE(reader.next_shard(shard, true));
  CHECK(shard.has_annotations);
  Document d;
  std::size_t pos = 0;
  for (std::uint32_t len : shard.doc_lengths) {
    REQUIRE(g.next(d));
    REQUIRE(len == d.size());
    for (std::size_t i = 0; i < len; ++i) {
      REQUIRE(shard.partners[pos + i] == d.partners[i]);
      REQUIRE(shard.flags[pos + i] == d.flags[i]);
      REQUIRE(shard.surprisal_bits[pos + i] == d.surprisal_bits[i]);
    }
    pos += len;
  }
  CHECK_FALSE(g.next(d));
}

TEST_CASE("output does not depend on the worker count, and regeneration is byte identical") {
  oracle::TempDir a("w1"), b("w4");
  const Language lang = nest_language(11);
  CorpusParams p;
  p.n_tokens = 60'000;
  p.shard_tokens = 8'000;
  p.workers = 1;
  const CorpusManifest m1 = generate_corpus(lang, p, a.path);
  p.workers = 4;
  const CorpusManifest m4 = generate_corpus(lang, p, b.path);
  REQUIRE(m1.shards.size() == m4.shards.size());
  for (std::size_t s = 0; s < m1.shards.size(); ++s) {
    CHECK(m1.shards[s].content_hash == m4.shards[s].content_hash);
    CHECK(m1.shards[s].index_hash == m4.shards[s].index_hash);
  }
  // regenerating from the manifest's own spec
  oracle::TempDir c("regen");
  const Language again = Language::prepare(spec_from_json(m1.language_spec));
  const CorpusManifest m2 = generate_corpus(again, p, c.path);
  for (std::size_t s = 0; s < m1.shards.size(); ++s)
    CHECK(m1.shards[s].content_hash == m2.shards[s].content_hash);
}

TEST_CASE("flipped byte, truncation and version bumps are detected") {
  oracle::TempDir dir("corrupt");
  CorpusParams p;
  p.n_tokens = 5'000;
  generate_corpus(nest_language(), p, dir.path);
  const fs::path manifest = dir.path / "manifest.json";
  const fs::path shard = dir.path / read_manifest(manifest).shards[0].path;
  const auto original = slurp(shard);

  SUBCASE("flipped byte names the shard") {
    auto bytes = original;
    bytes[100] ^= 0x01;
    spit(shard, bytes);
    try {
      read_all_tokens(manifest);
      FAIL("expected corruption");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::corrupt);
      CHECK(std::string(e.what()).find("shard_00000.bin") != std::string::npos);
    }
  }
  SUBCASE("truncation reports expected and actual sizes") {
    auto bytes = original;
    bytes.resize(bytes.size() - 3);
    spit(shard, bytes);
    try {
      read_all_tokens(manifest);
      FAIL("expected corruption");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::corrupt);
      const std::string msg = e.what();
      CHECK(msg.find(std::to_string(original.size())) != std::string::npos);
      CHECK(msg.find(std::to_string(original.size() - 3)) != std::string::npos);
    }
  }
  SUBCASE("missing shard") {
    fs::remove(shard);
    CHECK(oracle::error_code_of([&] { read_all_tokens(manifest); }) == Errc::corrupt);
  }
  SUBCASE("shard version mismatch") {
    auto bytes = original;
    bytes[4] = 9;
    spit(shard, bytes);
    // keep the hash consistent so the version check is what fires
    std::string text(reinterpret_cast<const char*>(slurp(manifest).data()), slurp(manifest).size());
    const std::string old_hash = read_manifest(manifest).shards[0].content_hash;
    text.replace(text.find(old_hash), old_hash.size(), sha256_hex(bytes));
    spit(manifest, std::vector<std::uint8_t>(text.begin(), text.end()));
    CHECK(oracle::error_code_of([&] { read_all_tokens(manifest); }) == Errc::unsupported_format);
  }
  SUBCASE("manifest version mismatch") {
    std::string text(reinterpret_cast<const char*>(slurp(manifest).data()), slurp(manifest).size());
    const auto at = text.find("\"format_version\": 1");
    REQUIRE(at != std::string::npos);
    text.replace(at, 19, "\"format_version\": 2");
    spit(manifest, std::vector<std::uint8_t>(text.begin(), text.end()));
    CHECK(oracle::error_code_of([&] { read_manifest(manifest); }) == Errc::unsupported_format);
  }
  SUBCASE("manifest garbage") {
    spit(manifest, {'{', 'x'});
    CHECK(oracle::error_code_of([&] { read_manifest(manifest); }) == Errc::parse);
  }
}

TEST_CASE("write_shards: empty stream gives an empty manifest") {
  oracle::TempDir dir("empty");
  CorpusParams p;
  const CorpusManifest m = write_shards([](Document&) { return false; }, nest_language(), p, dir.path);
  CHECK(m.total_tokens == 0);
  CHECK(m.shards.empty());
  CHECK(read_manifest(dir.path / "manifest.json").shards.empty());
  CHECK(read_all_tokens(dir.path / "manifest.json").empty());
}

TEST_CASE("write_shards concatenates documents in order and cuts at document boundaries") {
  oracle::TempDir dir("stream");
  const Language lang = nest_language(5);
  Generator g(lang, 40'000);
  std::vector<TokenId> expected;
  std::vector<std::uint32_t> lengths;
  CorpusParams p;
  p.shard_tokens = 9'000;
  const CorpusManifest m = write_shards(
      [&](Document& d) {
        if (!g.next(d))
          return false;
        expected.insert(expected.end(), d.ids.begin(), d.ids.end());
        lengths.push_back(static_cast<std::uint32_t>(d.size()));
        return true;
      },
      lang, p, dir.path);
  CHECK(m.layout == "stream");
  CHECK(m.shards.size() > 1);
  CHECK(read_all_tokens(dir.path / "manifest.json") == expected);
  CorpusReader r(dir.path / "manifest.json");
  ShardData s;
  std::vector<std::uint32_t> got;
  std::size_t index = 0;
  while (r.next_shard(s)) {
    if (++index < m.shards.size())
      CHECK(s.tokens.size() >= 9'000);
    got.insert(got.end(), s.doc_lengths.begin(), s.doc_lengths.end());
  }
  CHECK(got == lengths);
}

TEST_CASE("unwritable target is an I/O error and leaves no manifest") {
  oracle::TempDir dir("io");
  const fs::path blocker = dir.path / "file";
  spit(blocker, {'x'});
  CorpusParams p;
  p.n_tokens = 1000;
  CHECK(oracle::error_code_of([&] { generate_corpus(nest_language(), p, blocker / "sub"); }) == Errc::io);
  CHECK_FALSE(fs::exists(blocker / "sub" / "manifest.json"));
}

TEST_CASE("abandoned shard writers clean up their temp files") {
  oracle::TempDir dir("abandon");
  {
    ShardWriter w(dir.path, "s", 500, true);
    Document d;
    Generator g(nest_language(), 100);
    g.next(d);
    w.append(d);
  }
  CHECK(fs::is_empty(dir.path));
}

TEST_CASE("shard writer rejects ids outside the vocabulary") {
  oracle::TempDir dir("range");
  ShardWriter w(dir.path, "s", 4, false);
  Document d;
  d.ids = {0, 7};
  d.partners = {-1, -1};
  d.surprisal_bits = {0, 0};
  d.flags = {0, 0};
  CHECK(oracle::error_code_of([&] { w.append(d); }) == Errc::invalid_input);
}

TEST_CASE("manifest batch arithmetic") {
  CorpusManifest m;
  m.total_tokens = 1'000'000'000;
  CHECK(m.full_sequences() == 1'953'125);
  CHECK(m.dropped_tokens() == 0);
  CHECK(m.full_batches() == 3814);
  m.total_tokens = 1030;
  CHECK(m.full_sequences() == 2);
  CHECK(m.dropped_tokens() == 6);
}

TEST_CASE("chunk examples") {
  auto make = [](std::size_t n) {
    std::vector<TokenId> v(n);
    std::iota(v.begin(), v.end(), TokenId{0});
    return v;
  };
  const ChunkResult a = chunk(make(1030), 512);
  CHECK(a.sequences.size() == 2);
  CHECK(a.dropped == 6);
  const ChunkResult b = chunk(make(512), 512);
  CHECK(b.sequences.size() == 1);
  CHECK(b.dropped == 0);
  const ChunkResult c = chunk(make(10), 512);
  CHECK(c.sequences.empty());
  CHECK(c.dropped == 10);
  CHECK(oracle::error_code_of([] { chunk({}, 0); }) == Errc::invalid_argument);
}

TEST_CASE("chunks plus the dropped tail rebuild the stream, across feed boundaries") {
  Rng rng(3);
  std::vector<TokenId> s(5000);
  for (auto& t : s)
    t = static_cast<TokenId>(rng.below(500));
  for (std::size_t L : {1u, 7u, 512u, 4999u, 5000u, 6000u}) {
    SequenceChunker c(L);
    std::vector<TokenId> rebuilt;
    std::size_t pos = 0;
    while (pos < s.size()) {
      const std::size_t n = std::min<std::size_t>(1 + rng.below(900), s.size() - pos);
      c.feed(std::span(s).subspan(pos, n), [&](std::span<const TokenId> seq) {
        REQUIRE(seq.size() == L);
        rebuilt.insert(rebuilt.end(), seq.begin(), seq.end());
      });
      pos += n;
    }
    CHECK(c.sequences() == s.size() / L);
    CHECK(c.dropped() == s.size() % L);
    rebuilt.insert(rebuilt.end(), s.end() - static_cast<std::ptrdiff_t>(c.dropped()), s.end());
    CHECK(rebuilt == s);
  }
}

TEST_CASE("text codec examples") {
  const Vocabulary v = make_vocab(250);
  CHECK(to_text(std::vector<TokenId>{1, 251}, v, TextStyle::paren) == "1_( 1_)");
  CHECK(to_text(std::vector<TokenId>{1, 251}, v, TextStyle::flat) == "1 251");
  CHECK(from_text("1_( 1_)", v) == std::vector<TokenId>{1, 251});
  CHECK(from_text("1 251", v) == std::vector<TokenId>{1, 251});
  CHECK(from_text("", v).empty());
  CHECK(from_text("  3_(\t3_)  \r\n", v) == std::vector<TokenId>{3, 253});
}

TEST_CASE("text codec parse errors carry line and column") {
  const Vocabulary v = make_vocab(250);
  auto message = [&](const std::string& text) {
    try {
      from_text(text, v);
    } catch (const Error& e) {
      CHECK(e.code() == Errc::parse);
      return std::string(e.what());
    }
    FAIL("expected parse error");
    return std::string();
  };
  CHECK(message("251_(").find("line 1, column 1") != std::string::npos);
  CHECK(message("1_( 1_)\n2_( 999_)").find("line 2, column 5") != std::string::npos);
  CHECK(message("500").find("outside vocabulary") != std::string::npos);
  CHECK(message("1_x").find("column 2") != std::string::npos);
  CHECK(message("abc").find("column 1") != std::string::npos);
  CHECK(message("1_(2_(").find("column 4") != std::string::npos);
  CHECK(oracle::error_code_of([&] { to_text(std::vector<TokenId>{500}, v, TextStyle::paren); }) ==
        Errc::invalid_input);
}

TEST_CASE("text codec round trips random tokens, one document per line") {
  const Vocabulary v = make_vocab(250);
  Rng rng(17);
  std::vector<std::vector<TokenId>> docs(50);
  std::string text_paren, text_flat;
  for (auto& d : docs) {
    d.resize(1 + rng.below(300));
    for (auto& t : d)
      t = static_cast<TokenId>(rng.below(500));
    text_paren += to_text(d, v, TextStyle::paren) + "\n";
    text_flat += to_text(d, v, TextStyle::flat) + "\n";
  }
  CHECK(from_text_lines(text_paren, v) == docs);
  CHECK(from_text_lines(text_flat, v) == docs);
  std::vector<TokenId> all;
  for (auto& d : docs)
    all.insert(all.end(), d.begin(), d.end());
  CHECK(from_text(text_paren, v) == all);
}
