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

#include "blocks/attention_map.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "common/error.hpp"

namespace ramavt::blocks {

diffnet::Tensor attention_map(const diffnet::Tensor& activation) {
  require(activation.rank() == 4, ErrorKind::kShape,
          "attention_map expects [N, C, H, W], got " + diffnet::shape_string(activation.shape()));
  const int n = activation.dim(0), c = activation.dim(1), h = activation.dim(2), w = activation.dim(3);
  const std::size_t p = static_cast<std::size_t>(h) * w;
  diffnet::Tensor out({n, h, w});
  std::vector<double> energy(p);
  for (int img = 0; img < n; ++img) {
    std::fill(energy.begin(), energy.end(), 0.0);
    for (int ch = 0; ch < c; ++ch) {
      const float* a = activation.data().data() + (static_cast<std::size_t>(img) * c + ch) * p;
      for (std::size_t i = 0; i < p; ++i) energy[i] += static_cast<double>(a[i]) * a[i];
    }
    const double peak = *std::max_element(energy.begin(), energy.end());
    double total = 0.0;
    for (auto& e : energy) total += (e = std::exp(e - peak));
    for (std::size_t i = 0; i < p; ++i) out[img * p + i] = static_cast<float>(energy[i] / total);
  }
  return out;
}

}  // namespace ramavt::blocks
