// Copyright 2026 The RAMAVT Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace ramavt {

enum class ErrorKind {
  kInvalidArgument,
  kShape,
  kDegenerate,
  kEmpty,
  kNumeric,
  kIo,
  kParse,
  kBadMagic,
  kVersion,
  kTruncated,
  kSpecMismatch,
};

const char* error_kind_name(ErrorKind kind);

// Every failure inside the core is reported through this one exception type;
// the C API maps `kind()` onto a status code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) throw Error(kind, message);
}

}  // namespace ramavt

// Like require(), but the message is only built when the check fails. Used on
// hot paths where messages are assembled from shapes.
#define RAMAVT_REQUIRE(cond, kind, ...) \
  do {                                  \
    if (!(cond)) ::ramavt::fail((kind), (__VA_ARGS__)); \
  } while (0)
