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

#ifndef FLC_RNG_HPP
#define FLC_RNG_HPP

#include <cstdint>
#include <random>

namespace flc {

// Platform-independent random stream. The engine's output sequence is fixed by
// the standard; all derived draws are computed here rather than through
// <random> distributions, whose algorithms differ between standard libraries.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n), unbiased (Lemire's multiply-and-reject).
  std::uint64_t below(std::uint64_t n);

private:
  std::mt19937_64 engine_;
};

// Derives an independent seed for sub-stream `stream` of a master seed
// (splitmix64 finalizer over both words).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

} // namespace flc

#endif // FLC_RNG_HPP
