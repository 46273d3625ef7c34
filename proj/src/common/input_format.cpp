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

#include "common/input_format.hpp"

#include "common/error.hpp"

namespace ramavt {

int input_channels(InputFormat format) {
  switch (format) {
    case InputFormat::kDepth: return 1;
    case InputFormat::kColor: return 3;
    case InputFormat::kRgbd: return 4;
  }
  return 0;
}

std::string input_format_name(InputFormat format) {
  switch (format) {
    case InputFormat::kDepth: return "depth";
    case InputFormat::kColor: return "color";
    case InputFormat::kRgbd: return "rgbd";
  }
  return "unknown";
}

InputFormat parse_input_format(const std::string& name) {
  if (name == "depth") return InputFormat::kDepth;
  if (name == "color") return InputFormat::kColor;
  if (name == "rgbd") return InputFormat::kRgbd;
  fail(ErrorKind::kParse, "unknown input format '" + name + "' (expected depth, color or rgbd)");
}

}  // namespace ramavt
