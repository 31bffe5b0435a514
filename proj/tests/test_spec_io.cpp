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

#include "flc/spec_io.hpp"

#include <doctest.h>

#include <fstream>

using namespace flc;

namespace {
std::string spec_error(const std::string& json, const std::filesystem::path& base = {}) {
  try {
    spec_from_json(json, base);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::invalid_spec);
    return e.what();
  }
  FAIL("expected invalid spec for " << json);
  return {};
}
} // namespace

TEST_CASE("minimal spec fills defaults") {
  const LanguageSpec s = spec_from_json(R"({"family": "nest"})");
  CHECK(s.family == Family::nest);
  CHECK(s.vocab.num_pairs() == 250);
  CHECK(s.p_open == 0.49);
  CHECK(s.doc_target_len == 480);
  CHECK(s.seed == 0);
  REQUIRE(s.distribution.has_value());
  CHECK(s.distribution->kind() == DistKind::uniform);
  CHECK(s.distribution->size() == 250);
  const LanguageSpec r = spec_from_json(R"({"family": "rand", "num_pairs": 10})");
  CHECK(r.distribution->size() == 20);
}

TEST_CASE("full spec round trips through the resolved form") {
  const std::string text = R"({"family": "nest_mix", "num_pairs": 40, "seed": 99,
    "distribution": {"kind": "zipf", "alpha": 1.2, "beta": 2.7, "permute_seed": 4},
    "p_open": 0.45, "p_mix": 0.1, "doc_target_len": 100,
    "distance_ref": {"sample_count": 10, "pmf": [[1, 0.5], [3, 0.5]]}})";
  const LanguageSpec s = spec_from_json(text);
  CHECK(s.p_mix == 0.1);
  CHECK(s.distribution->permute_seed() == 4u);
  CHECK(s.distance_ref->probability(3) == 0.5);
  const std::string resolved = spec_to_json(s);
  const LanguageSpec again = spec_from_json(resolved);
  CHECK(spec_to_json(again) == resolved);
  CHECK(again.distribution->probabilities()[7] == s.distribution->probabilities()[7]);
  CHECK(spec_to_json(s, true).find('\n') != std::string::npos);
}

TEST_CASE("explicit weights survive the round trip") {
  const LanguageSpec s =
      spec_from_json(R"({"family": "rand", "num_pairs": 2, "distribution": {"kind": "explicit", "weights": [0, 1, 3, 0]}})");
  CHECK(s.distribution->probability(2) == 0.75);
  CHECK(spec_to_json(spec_from_json(spec_to_json(s))) == spec_to_json(s));
}

TEST_CASE("distance_ref given as a path resolves against the base directory") {
  oracle::TempDir dir("specref");
  {
    std::ofstream out(dir.path / "ref.json");
    out << oracle::small_reference().to_json();
  }
  const LanguageSpec s = spec_from_json(R"({"family": "cross", "distance_ref": "ref.json"})", dir.path);
  CHECK(s.distance_ref->pmf() == oracle::small_reference().pmf());
  CHECK(spec_error(R"({"family": "cross", "distance_ref": "missing.json"})", dir.path).find("distance_ref") == 0);
}

TEST_CASE("field-level spec errors") {
  CHECK(spec_error("[1]").find("spec") != std::string::npos);
  CHECK(spec_error("{").size() > 0);
  CHECK(spec_error(R"({})").find("family") == 0);
  CHECK(spec_error(R"({"family": "dyck"})").find("family") == 0);
  CHECK(spec_error(R"({"family": "nest", "colour": 1})").find("colour") != std::string::npos);
  CHECK(spec_error(R"({"family": "nest", "num_pairs": 0})").find("num_pairs") == 0);
  CHECK(spec_error(R"({"family": "nest", "num_pairs": "many"})").find("num_pairs") == 0);
  CHECK(spec_error(R"({"family": "nest", "p_open": 0.5})").find("p_open") == 0);
  CHECK(spec_error(R"({"family": "rep", "rep_block": 0})").find("rep_block") == 0);
  CHECK(spec_error(R"({"family": "nest_mix", "p_mix": 2, "distance_ref": {"sample_count": 1, "pmf": [[1, 1]]}})")
            .find("p_mix") == 0);
  CHECK(spec_error(R"({"family": "cross"})").find("distance_ref") == 0);
  CHECK(spec_error(R"({"family": "cross", "distance_ref": {"sample_count": 1, "pmf": [[0, 1]]}})")
            .find("distance_ref") == 0);
  CHECK(spec_error(R"({"family": "cross", "distance_ref": {"sample_count": 1, "pmf": [[-2, 1]]}})")
            .find("distance_ref") == 0);
  CHECK(spec_error(R"({"family": "nest", "distribution": {"kind": "zipf", "alpha": -1}})").find("distribution") == 0);
  CHECK(spec_error(R"({"family": "nest", "distribution": {"kind": "normal"}})").find("distribution") == 0);
  CHECK(spec_error(R"({"family": "nest", "distribution": {"kind": "uniform", "support_size": 500}})")
            .find("distribution") == 0);
  CHECK(spec_error(R"({"family": "nest", "doc_target_len": 0})").find("doc_target_len") == 0);
  CHECK(spec_error(R"({"family": "cross", "cross_calibration": {"rounds": 1000},
                      "distance_ref": {"sample_count": 1, "pmf": [[1, 1]]}})")
            .find("cross_calibration") == 0);
}
