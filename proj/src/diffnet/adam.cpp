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

#include "diffnet/adam.hpp"

#include <cmath>

#include "common/error.hpp"

namespace ramavt::diffnet {

void adam_step(const std::vector<TensorPtr>& params, OptimizerState& state) {
  if (state.first_moment.empty()) {
    for (const auto& p : params) {
      state.first_moment.emplace_back(p->size(), 0.0f);
      state.second_moment.emplace_back(p->size(), 0.0f);
    }
  }
  require(state.first_moment.size() == params.size(), ErrorKind::kShape,
          "adam_step: optimizer state tracks a different parameter list");
  const AdamConfig& cfg = state.config;
  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const float bc1 = static_cast<float>(1.0 - std::pow(cfg.beta1, t));
  const float bc2 = static_cast<float>(1.0 - std::pow(cfg.beta2, t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    require(m.size() == p.size(), ErrorKind::kShape,
            "adam_step: moment shape differs from parameter " + std::to_string(i));
    if (!p.has_grad()) continue;
    const auto& g = p.grad();
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = cfg.beta1 * m[j] + (1.0f - cfg.beta1) * g[j];
      v[j] = cfg.beta2 * v[j] + (1.0f - cfg.beta2) * g[j] * g[j];
      const float mhat = m[j] / bc1;
      const float vhat = v[j] / bc2;
      p[j] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.epsilon);
    }
  }
}

double clip_grad_norm(const std::vector<TensorPtr>& params, double max_norm) {
  double sq = 0.0;
  for (const auto& p : params)
    if (p->has_grad())
      for (float g : p->grad()) sq += static_cast<double>(g) * g;
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const float factor = static_cast<float>(max_norm / norm);
    for (const auto& p : params)
      if (p->has_grad())
        for (float& g : p->grad()) g *= factor;
  }
  return norm;
}

}  // namespace ramavt::diffnet
