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

#include <string>

namespace ramavt {

// Observation channel layouts: depth (1), color (3) or color+depth (4).
enum class InputFormat { kDepth, kColor, kRgbd };

int input_channels(InputFormat format);
std::string input_format_name(InputFormat format);
InputFormat parse_input_format(const std::string& name);

}  // namespace ramavt
