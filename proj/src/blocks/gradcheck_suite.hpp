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

#include <functional>
#include <string>
#include <vector>

#include "diffnet/gradcheck.hpp"

namespace ramavt::blocks {

struct GradCheckCase {
  std::string name;
  double tolerance;
  std::function<diffnet::GradCheckReport()> run;
};

// Every differentiable primitive, the network blocks, and the full recurrent
// network at 16x16, each with the tolerance it must meet.
std::vector<GradCheckCase> gradcheck_registry();

}  // namespace ramavt::blocks
