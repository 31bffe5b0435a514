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

#ifndef FLC_ERROR_HPP
#define FLC_ERROR_HPP

#include <stdexcept>
#include <string>

namespace flc {

enum class Errc {
  invalid_argument = 1,
  invalid_spec,
  invalid_input,
  io,
  corrupt,
  unsupported_format,
  parse,
  match_failure,
  ambiguous,
};

const char* errc_name(Errc code) noexcept;

// All failures in the core library are reported through this exception; the C
// API translates the code into an flc_status.
class Error : public std::runtime_error {
public:
  Error(Errc code, const std::string& message) : std::runtime_error(message), code_(code) {}
  Errc code() const noexcept { return code_; }

private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message) { throw Error(code, message); }

} // namespace flc

#endif // FLC_ERROR_HPP
