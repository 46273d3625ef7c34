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

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "diffnet/tape.hpp"
#include "diffnet/tensor.hpp"

namespace ramavt::diffnet {

// Builds a scalar loss from tensors it has captured. Called once with a tape
// for the analytic pass and repeatedly with nullptr for the numeric pass.
using LossClosure = std::function<TensorPtr(Tape*)>;

struct GradCheckOptions {
  // 2^-10: the power of two nearest 1e-3, so x +- h is exact for dyadic x.
  double step = 0x1.0p-10;
  // Entries probed per input; 0 probes every entry.
  std::size_t max_entries_per_input = 0;
  std::uint64_t seed = 7;
};

struct GradCheckReport {
  // Per input: RMS of (analytic - numeric) over the probed entries divided
  // by the larger RMS of the two gradients, i.e. the norm-wise relative
  // error. The divisor is floored at 10% of the largest RMS gradient across
  // all inputs.
  std::vector<double> deviations;
  double max_deviation = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

// Compares reverse-mode gradients against central differences.
GradCheckReport grad_check(const LossClosure& loss, const std::vector<TensorPtr>& inputs,
                           double tolerance, const GradCheckOptions& options = {});

}  // namespace ramavt::diffnet
