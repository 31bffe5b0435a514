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

#ifndef FLC_TESTS_ORACLES_HPP
#define FLC_TESTS_ORACLES_HPP

#include "oracles_core.hpp"

#include "flc/error.hpp"

#include <doctest.h>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>

namespace oracle {

inline flc::Errc error_code_of(const auto& fn) {
  try {
    fn();
  } catch (const flc::Error& e) {
    return e.code();
  }
  FAIL("expected flc::Error");
  return flc::Errc::invalid_argument;
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() /
           ("flc_test_" + tag + "_" + std::to_string(std::hash<std::string>{}(tag) ^ reinterpret_cast<std::uintptr_t>(this)));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
};

} // namespace oracle

#endif // FLC_TESTS_ORACLES_HPP
