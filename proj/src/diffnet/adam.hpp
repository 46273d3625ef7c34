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
#include <vector>

#include "diffnet/tensor.hpp"

namespace ramavt::diffnet {

struct AdamConfig {
  float learning_rate = 1e-4f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float epsilon = 1e-8f;
};

// Per-parameter moment accumulators, index-aligned with the parameter list
// handed to adam_step.
struct OptimizerState {
  explicit OptimizerState(AdamConfig config = {}) : config(config) {}

  AdamConfig config;
  std::vector<std::vector<float>> first_moment;
  std::vector<std::vector<float>> second_moment;
  std::uint64_t step_count = 0;
};

// Bias-corrected Adam update reading each parameter's gradient buffer.
void adam_step(const std::vector<TensorPtr>& params, OptimizerState& state);

// Rescales all gradients so their joint L2 norm is at most `max_norm`.
// Returns the norm before clipping.
double clip_grad_norm(const std::vector<TensorPtr>& params, double max_norm);

}  // namespace ramavt::diffnet
