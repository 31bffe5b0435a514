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

#include "flc/spec_io.hpp"

#include "flc/error.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace flc {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& field, const std::string& why) { fail(Errc::invalid_spec, field + ": " + why); }

template <typename T>
T get_field(const json& j, const char* key, T fallback) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null())
    return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    bad(key, std::string("wrong type (") + e.what() + ")");
  }
}

std::uint64_t get_u64(const json& j, const char* key, std::uint64_t fallback) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null())
    return fallback;
  if (!it->is_number_integer() || (it->is_number_integer() && !it->is_number_unsigned() && it->get<std::int64_t>() < 0))
    bad(key, "must be a non-negative integer");
  return it->get<std::uint64_t>();
}

std::int64_t get_i64(const json& j, const char* key, std::int64_t fallback) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null())
    return fallback;
  if (!it->is_number_integer())
    bad(key, "must be an integer");
  return it->get<std::int64_t>();
}

DistributionWeights parse_distribution(const json& j, Family family, const Vocabulary& vocab) {
  if (!j.is_object())
    bad("distribution", "must be an object");
  const std::size_t support = is_paren_family(family) ? vocab.num_pairs() : vocab.total_size();
  const auto kind_name = get_field<std::string>(j, "kind", "uniform");
  const auto kind = parse_dist_kind(kind_name);
  if (!kind)
    bad("distribution.kind", "unknown kind '" + kind_name + "' (expected uniform, zipf or explicit)");
  if (j.contains("support_size") && get_u64(j, "support_size", 0) != support)
    bad("distribution.support_size", "is " + std::to_string(get_u64(j, "support_size", 0)) + ", family " +
                                         std::string(family_name(family)) + " needs " + std::to_string(support));
  try {
    switch (*kind) {
    case DistKind::uniform: return make_distribution(DistKind::uniform, support);
    case DistKind::zipf: {
      std::optional<std::uint64_t> permute;
      if (j.contains("permute_seed") && !j.at("permute_seed").is_null())
        permute = get_u64(j, "permute_seed", 0);
      return make_distribution(DistKind::zipf, support, get_field<double>(j, "alpha", 1.0),
                               get_field<double>(j, "beta", 2.7), permute);
    }
    case DistKind::explicit_weights: {
      auto weights = get_field<std::vector<double>>(j, "weights", {});
      if (weights.size() != support)
        bad("distribution.weights", "has " + std::to_string(weights.size()) + " entries, family needs " +
                                        std::to_string(support));
      return make_explicit_distribution(std::move(weights));
    }
    }
  } catch (const Error& e) {
    if (e.code() == Errc::invalid_spec)
      throw;
    bad("distribution", e.what());
  }
  bad("distribution", "unreachable");
}

DistanceDistribution parse_distance_ref(const json& j, const std::filesystem::path& base_dir) {
  try {
    if (j.is_string()) {
      std::filesystem::path p = j.get<std::string>();
      if (p.is_relative() && !base_dir.empty())
        p = base_dir / p;
      std::ifstream in(p, std::ios::binary);
      if (!in)
        bad("distance_ref", "cannot open '" + p.string() + "'");
      std::stringstream buf;
      buf << in.rdbuf();
      return DistanceDistribution::from_json(buf.str());
    }
    if (j.is_object())
      return DistanceDistribution::from_json(j.dump());
  } catch (const Error& e) {
    if (e.code() == Errc::invalid_spec)
      throw;
    bad("distance_ref", e.what());
  }
  bad("distance_ref", "must be a file path or an object with a pmf");
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{"family", "num_pairs", "distribution", "p_open", "rep_block",
                                          "p_mix", "distance_ref", "doc_target_len", "seed", "cross_calibration"};
  return keys;
}

} // namespace

LanguageSpec spec_from_json(std::string_view text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(Errc::invalid_spec, std::string("spec is not valid JSON: ") + e.what());
  }
  if (!j.is_object())
    fail(Errc::invalid_spec, "spec must be a JSON object");
  for (const auto& [key, value] : j.items())
    if (!known_keys().count(key))
      bad(key, "unknown field");

  LanguageSpec spec;
  if (!j.contains("family"))
    bad("family", "required");
  const auto fam = get_field<std::string>(j, "family", "");
  const auto family = parse_family(fam);
  if (!family)
    bad("family", "unknown family '" + fam + "' (expected nest, cross, rand, rep or nest_mix)");
  spec.family = *family;

  const std::int64_t pairs = get_i64(j, "num_pairs", 250);
  try {
    spec.vocab = make_vocab(pairs);
  } catch (const Error& e) {
    bad("num_pairs", e.what());
  }

  if (j.contains("distribution") && !j.at("distribution").is_null())
    spec.distribution = parse_distribution(j.at("distribution"), spec.family, spec.vocab);
  else
    spec.distribution = default_distribution(spec.family, spec.vocab);

  spec.p_open = get_field<double>(j, "p_open", 0.49);
  const std::int64_t rep_block = get_i64(j, "rep_block", 10);
  if (rep_block < 1 || rep_block > (1 << 24))
    bad("rep_block", "must be in [1, 2^24]");
  spec.rep_block = static_cast<std::uint32_t>(rep_block);
  spec.p_mix = get_field<double>(j, "p_mix", 0.0);
  const std::int64_t target = get_i64(j, "doc_target_len", 480);
  if (target < 1 || target > (1 << 30))
    bad("doc_target_len", "must be in [1, 2^30]");
  spec.doc_target_len = static_cast<std::uint32_t>(target);
  spec.seed = get_u64(j, "seed", 0);
  if (j.contains("distance_ref") && !j.at("distance_ref").is_null())
    spec.distance_ref = parse_distance_ref(j.at("distance_ref"), base_dir);
  if (j.contains("cross_calibration") && !j.at("cross_calibration").is_null()) {
    const json& c = j.at("cross_calibration");
    if (!c.is_object())
      bad("cross_calibration", "must be an object");
    const std::uint64_t rounds = get_u64(c, "rounds", spec.calibration.rounds);
    if (rounds > 64)
      bad("cross_calibration.rounds", "must be <= 64");
    spec.calibration.rounds = static_cast<std::uint32_t>(rounds);
    spec.calibration.tokens_per_round = get_u64(c, "tokens_per_round", spec.calibration.tokens_per_round);
  }
  spec.validate();
  return spec;
}

std::string spec_to_json(const LanguageSpec& spec, bool pretty) {
  nlohmann::ordered_json j;
  j["family"] = std::string(family_name(spec.family));
  j["num_pairs"] = spec.vocab.num_pairs();
  j["seed"] = spec.seed;
  if (spec.distribution) {
    const DistributionWeights& d = *spec.distribution;
    nlohmann::ordered_json dist;
    dist["kind"] = std::string(dist_kind_name(d.kind()));
    dist["support_size"] = d.size();
    if (d.kind() == DistKind::zipf) {
      dist["alpha"] = d.alpha();
      dist["beta"] = d.beta();
      if (d.permute_seed())
        dist["permute_seed"] = *d.permute_seed();
    }
    if (d.kind() == DistKind::explicit_weights)
      dist["weights"] = std::vector<double>(d.raw_weights().begin(), d.raw_weights().end());
    j["distribution"] = std::move(dist);
  }
  j["p_open"] = spec.p_open;
  j["rep_block"] = spec.rep_block;
  j["p_mix"] = spec.p_mix;
  j["doc_target_len"] = spec.doc_target_len;
  if (spec.distance_ref)
    j["distance_ref"] = nlohmann::ordered_json::parse(spec.distance_ref->to_json());
  j["cross_calibration"] = {{"rounds", spec.calibration.rounds},
                            {"tokens_per_round", spec.calibration.tokens_per_round}};
  return pretty ? j.dump(2) : j.dump();
}

} // namespace flc
