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

#include "flc/error.hpp"
#include "flc/rng.hpp"

namespace flc {

const char* errc_name(Errc code) noexcept {
  switch (code) {
  case Errc::invalid_argument: return "invalid-argument";
  case Errc::invalid_spec: return "invalid-spec";
  case Errc::invalid_input: return "invalid-input";
  case Errc::io: return "io-error";
  case Errc::corrupt: return "corruption";
  case Errc::unsupported_format: return "unsupported-format";
  case Errc::parse: return "parse-error";
  case Errc::match_failure: return "match-failure";
  case Errc::ambiguous: return "ambiguity";
  }
  return "unknown";
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n <= 1)
    return 0;
  unsigned __int128 m = static_cast<unsigned __int128>(engine_()) * n;
  auto low = static_cast<std::uint64_t>(m);
  if (low < n) {
    const std::uint64_t threshold = (0 - n) % n;
    while (low < threshold) {
      m = static_cast<unsigned __int128>(engine_()) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

namespace {
std::uint64_t splitmix(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}
} // namespace

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  return splitmix(splitmix(seed) ^ (stream * 0xd1b54a32d192ed03ull + 0x8cb92ba72f3d8dd7ull));
}

} // namespace flc
