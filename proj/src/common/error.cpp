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

#include "common/error.hpp"

namespace ramavt {

const char* error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "invalid argument";
    case ErrorKind::kShape: return "shape error";
    case ErrorKind::kDegenerate: return "degenerate input";
    case ErrorKind::kEmpty: return "empty input";
    case ErrorKind::kNumeric: return "numeric fault";
    case ErrorKind::kIo: return "i/o error";
    case ErrorKind::kParse: return "parse error";
    case ErrorKind::kBadMagic: return "bad magic";
    case ErrorKind::kVersion: return "version mismatch";
    case ErrorKind::kTruncated: return "truncated file";
    case ErrorKind::kSpecMismatch: return "spec mismatch";
  }
  return "unknown error";
}

}  // namespace ramavt
