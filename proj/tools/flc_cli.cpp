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

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailed = 1;
constexpr int kExitUsage = 2;
constexpr const char* kWorkersEnv = "FLC_WORKERS";

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid input from the caller is a usage error; everything else means the
// operation itself failed.
[[noreturn]] void raise(flc_status s) {
  const std::string msg = std::string(flc_status_name(s)) + ": " + flc_last_error();
  if (s == FLC_ERR_INVALID_ARGUMENT || s == FLC_ERR_INVALID_SPEC)
    throw UsageError(msg);
  throw RunError(msg);
}

void check(flc_status s) {
  if (s != FLC_OK)
    raise(s);
}

// Owns a string returned by the library.
struct LibString {
  char* p = nullptr;
  ~LibString() { flc_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

struct LanguageHandle {
  flc_language* p = nullptr;
  ~LanguageHandle() { flc_language_free(p); }
};

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw UsageError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct SpecFlags {
  std::string spec_file;
  std::optional<std::string> family;
  std::optional<std::int64_t> pairs;
  std::optional<double> p_open;
  std::optional<std::string> dist;
  std::optional<double> alpha;
  std::optional<double> beta;
  std::optional<std::uint64_t> permute_seed;
  std::optional<std::int64_t> rep_block;
  std::optional<double> p_mix;
  std::optional<std::string> distance_ref;
  std::optional<std::int64_t> doc_len;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> calibration_rounds;
  std::optional<std::uint64_t> calibration_tokens;

  void attach(CLI::App* app) {
    app->add_option("--spec", spec_file, "Language spec JSON file; flags below override its fields");
    app->add_option("--family", family, "nest, cross, rand, rep or nest_mix");
    app->add_option("--pairs", pairs, "Number of bracket pair types (vocabulary is twice this)");
    app->add_option("--p-open", p_open, "Open probability away from depth 0 (nest, nest_mix)");
    app->add_option("--dist", dist, "Token distribution: uniform or zipf");
    app->add_option("--alpha", alpha, "Zipf exponent");
    app->add_option("--beta", beta, "Zipf offset");
    app->add_option("--permute-seed", permute_seed, "Shuffle Zipf ranks with this seed");
    app->add_option("--rep-block", rep_block, "Repetition block length k (rep)");
    app->add_option("--p-mix", p_mix, "Per-open probability of a distance-scheduled arc (nest_mix)");
    app->add_option("--distance-ref", distance_ref, "Reference distance distribution JSON (cross, nest_mix)");
    app->add_option("--doc-len", doc_len, "Target document length");
    app->add_option("--seed", seed, "Random seed");
    app->add_option("--calibration-rounds", calibration_rounds, "Cross proposal calibration rounds (0 disables)");
    app->add_option("--calibration-tokens", calibration_tokens, "Tokens simulated per calibration round");
  }

  // Spec file text (may be empty), merged JSON, base directory for relative paths.
  struct Resolved {
    std::string source;
    std::string json_text;
    std::string base_dir;
  };

  Resolved resolve() const {
    Resolved r;
    json j = json::object();
    if (!spec_file.empty()) {
      r.source = read_text(spec_file);
      try {
        j = json::parse(r.source);
      } catch (const json::exception& e) {
        throw UsageError("spec file " + spec_file + " is not valid JSON: " + e.what());
      }
      if (!j.is_object())
        throw UsageError("spec file " + spec_file + " must hold a JSON object");
      r.base_dir = fs::absolute(fs::path(spec_file)).parent_path().string();
    }
    if (family)
      j["family"] = *family;
    if (pairs)
      j["num_pairs"] = *pairs;
    if (p_open)
      j["p_open"] = *p_open;
    if (dist || alpha || beta || permute_seed) {
      json& d = j["distribution"];
      if (!d.is_object())
        d = json::object();
      if (dist)
        d["kind"] = *dist;
      if (alpha)
        d["alpha"] = *alpha;
      if (beta)
        d["beta"] = *beta;
      if (permute_seed)
        d["permute_seed"] = *permute_seed;
    }
    if (rep_block)
      j["rep_block"] = *rep_block;
    if (p_mix)
      j["p_mix"] = *p_mix;
    if (distance_ref)
      j["distance_ref"] = fs::absolute(*distance_ref).string();
    if (doc_len)
      j["doc_target_len"] = *doc_len;
    if (seed)
      j["seed"] = *seed;
    if (calibration_rounds || calibration_tokens) {
      json& c = j["cross_calibration"];
      if (!c.is_object())
        c = json::object();
      if (calibration_rounds)
        c["rounds"] = *calibration_rounds;
      if (calibration_tokens)
        c["tokens_per_round"] = *calibration_tokens;
    }
    if (!j.contains("family"))
      throw UsageError("family: required (give --family or --spec)");
    r.json_text = j.dump();
    return r;
  }
};

unsigned default_workers() {
  const char* env = std::getenv(kWorkersEnv);
  if (!env || !*env)
    return 1;
  char* end = nullptr;
  const unsigned long v = std::strtoul(env, &end, 10);
  if (*end != '\0' || v == 0 || v > 1024)
    throw UsageError(std::string(kWorkersEnv) + " must be an integer in [1, 1024], got '" + env + "'");
  return static_cast<unsigned>(v);
}

std::string manifest_path(const std::string& arg) {
  const fs::path p(arg);
  if (fs::is_directory(p))
    return (p / "manifest.json").string();
  return p.string();
}

void print_report(const std::string& text) { std::cout << text << std::flush; }

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Formal-language corpus toolkit"};
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", std::string(flc_version()));

  bool machine = false;

  // generate
  auto* gen = app.add_subcommand("generate", "Generate a sharded corpus and its manifest");
  SpecFlags gen_spec;
  gen_spec.attach(gen);
  std::uint64_t n_tokens = 0;
  std::string out_dir;
  flc_corpus_params params;
  flc_corpus_params_default(&params);
  unsigned workers = 0;
  bool annotations = false;
  gen->add_option("--tokens", n_tokens, "Token budget (documents are kept whole)")->required();
  gen->add_option("--out", out_dir, "Output directory")->required();
  gen->add_option("--shard-tokens", params.shard_tokens, "Token budget per shard")->capture_default_str();
  gen->add_option("--seq-len", params.seq_len, "Sequence length for batch arithmetic")->capture_default_str();
  gen->add_option("--batch-size", params.batch_size, "Batch size for batch arithmetic")->capture_default_str();
  gen->add_option("--workers", workers, std::string("Worker threads (default $") + kWorkersEnv + " or 1)");
  gen->add_flag("--annotations", annotations, "Also write arc/surprisal annotation sidecars");
  gen->add_flag("--machine", machine, "key=value report");

  // validate
  auto* val = app.add_subcommand("validate", "Check every document against its family's invariants");
  std::string val_manifest;
  std::string val_family;
  val->add_option("manifest", val_manifest, "Manifest file or corpus directory")->required();
  val->add_option("--family", val_family, "Family to check against (default: the corpus family)");
  val->add_flag("--machine", machine, "key=value report");

  // stats
  auto* st = app.add_subcommand("stats", "Depth, arc, crossing, Zipf and batch statistics");
  std::string st_manifest;
  st->add_option("manifest", st_manifest, "Manifest file or corpus directory")->required();
  st->add_flag("--machine", machine, "key=value report");

  // compare-dist
  auto* cmp = app.add_subcommand("compare-dist", "KL divergence of arc distances against a reference");
  std::string cmp_manifest, cmp_other, cmp_ref;
  double threshold = 0.01;
  cmp->add_option("manifest", cmp_manifest, "Manifest file or corpus directory")->required();
  auto* against = cmp->add_option("--against", cmp_other, "Reference corpus (manifest or directory)");
  cmp->add_option("--reference", cmp_ref, "Reference distance distribution JSON")->excludes(against);
  cmp->add_option("--threshold", threshold, "Pass when KL (bits) is below this")->capture_default_str();
  cmp->add_flag("--machine", machine, "key=value report");

  // sample
  auto* smp = app.add_subcommand("sample", "Print documents of stream 0 as text");
  SpecFlags smp_spec;
  smp_spec.attach(smp);
  std::uint64_t n_docs = 5;
  smp->add_option("--docs", n_docs, "Number of documents")->capture_default_str();

  // extract-dist
  auto* ext = app.add_subcommand("extract-dist", "Write a corpus's arc-distance distribution as JSON");
  std::string ext_manifest, ext_out;
  ext->add_option("manifest", ext_manifest, "Manifest file or corpus directory")->required();
  ext->add_option("--out", ext_out, "Output file (default: standard output)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (gen->parsed()) {
      const SpecFlags::Resolved spec = gen_spec.resolve();
      params.n_tokens = n_tokens;
      params.workers = workers ? workers : default_workers();
      params.write_annotations = annotations ? 1 : 0;
      if (params.shard_tokens == 0 || params.seq_len == 0 || params.batch_size == 0)
        throw UsageError("--shard-tokens, --seq-len and --batch-size must be >= 1");
      LanguageHandle lang;
      check(flc_language_create(spec.json_text.c_str(), spec.base_dir.c_str(), &lang.p));
      LibString manifest;
      check(flc_generate_corpus(lang.p, &params, out_dir.c_str(), spec.source.c_str(), &manifest.p));
      const json m = json::parse(manifest.str());
      std::ostringstream r;
      const auto line = [&](const std::string& k, const std::string& v) {
        r << k << (machine ? "=" : ": ") << v << "\n";
      };
      line("manifest", (fs::path(out_dir) / "manifest.json").string());
      line("family", m["language_spec"]["family"].get<std::string>());
      line("total_tokens", std::to_string(m["total_tokens"].get<std::uint64_t>()));
      line("shards", std::to_string(m["shards"].size()));
      line("workers", std::to_string(params.workers));
      line("full_sequences", std::to_string(m["full_sequences"].get<std::uint64_t>()));
      line("dropped_tokens", std::to_string(m["dropped_tokens"].get<std::uint64_t>()));
      line("full_batches", std::to_string(m["full_batches"].get<std::uint64_t>()));
      print_report(r.str());
      return kExitOk;
    }
    if (val->parsed()) {
      int passed = 0;
      LibString report;
      check(flc_validate_corpus(manifest_path(val_manifest).c_str(), val_family.empty() ? nullptr : val_family.c_str(),
                                machine, &passed, &report.p));
      print_report(report.str());
      return passed ? kExitOk : kExitFailed;
    }
    if (st->parsed()) {
      LibString report;
      check(flc_corpus_stats(manifest_path(st_manifest).c_str(), machine, &report.p));
      print_report(report.str());
      return kExitOk;
    }
    if (cmp->parsed()) {
      const std::string other = cmp_other.empty() ? std::string{} : manifest_path(cmp_other);
      double kl = 0;
      int within = 0;
      LibString report;
      check(flc_compare_dist(manifest_path(cmp_manifest).c_str(), other.empty() ? nullptr : other.c_str(),
                             cmp_ref.empty() ? nullptr : cmp_ref.c_str(), threshold, machine, &kl, &within,
                             &report.p));
      print_report(report.str());
      return within ? kExitOk : kExitFailed;
    }
    if (smp->parsed()) {
      const SpecFlags::Resolved spec = smp_spec.resolve();
      LanguageHandle lang;
      check(flc_language_create(spec.json_text.c_str(), spec.base_dir.c_str(), &lang.p));
      LibString text;
      check(flc_sample_text(lang.p, n_docs, &text.p));
      std::cout << text.str() << std::flush;
      return kExitOk;
    }
    if (ext->parsed()) {
      LibString pmf;
      check(flc_extract_dist(manifest_path(ext_manifest).c_str(), &pmf.p));
      if (ext_out.empty()) {
        std::cout << pmf.str() << "\n";
      } else {
        const fs::path tmp = ext_out + ".tmp";
        {
          std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
          out << pmf.str() << "\n";
          if (!out)
            throw RunError("cannot write " + tmp.string());
        }
        std::error_code ec;
        fs::rename(tmp, ext_out, ec);
        if (ec)
          throw RunError("cannot write " + ext_out + ": " + ec.message());
      }
      return kExitOk;
    }
  } catch (const UsageError& e) {
    std::cerr << "flc: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "flc: " << e.what() << "\n";
    return kExitFailed;
  }
  return kExitUsage;
}
