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

#include "diffnet/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "common/error.hpp"
#include "common/rng.hpp"

namespace ramavt::diffnet {

GradCheckReport grad_check(const LossClosure& loss, const std::vector<TensorPtr>& inputs,
                           double tolerance, const GradCheckOptions& options) {
  std::vector<bool> saved_flags;
  for (const auto& in : inputs) {
    saved_flags.push_back(in->requires_grad());
    in->set_requires_grad(true);
  }

  Tape tape;
  TensorPtr value = loss(&tape);
  require(value && value->size() == 1, ErrorKind::kShape, "grad_check: closure must return a scalar");
  tape.backward(value);
  std::vector<std::vector<float>> analytic;
  for (const auto& in : inputs) analytic.push_back(in->has_grad() ? in->to_grad_vector() : std::vector<float>(in->size(), 0.0f));

  Rng rng(options.seed);
  GradCheckReport report;
  report.tolerance = tolerance;
  std::vector<double> errors, scales;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    Tensor& x = *inputs[k];
    std::vector<std::size_t> probe(x.size());
    std::iota(probe.begin(), probe.end(), 0);
    if (options.max_entries_per_input > 0 && probe.size() > options.max_entries_per_input) {
      for (std::size_t i = 0; i < options.max_entries_per_input; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(uniform_int(rng, static_cast<int>(probe.size() - i)));
        std::swap(probe[i], probe[j]);
      }
      probe.resize(options.max_entries_per_input);
    }
    double err_sq = 0.0, a_sq = 0.0, n_sq = 0.0;
    for (std::size_t idx : probe) {
      const float original = x[idx];
      const float up = static_cast<float>(original + options.step);
      const float down = static_cast<float>(original - options.step);
      x[idx] = up;
      const double lp = loss(nullptr)->scalar();
      x[idx] = down;
      const double lm = loss(nullptr)->scalar();
      x[idx] = original;
      const double numeric = (lp - lm) / (static_cast<double>(up) - static_cast<double>(down));
      const double a = analytic[k][idx];
      err_sq += (a - numeric) * (a - numeric);
      a_sq += a * a;
      n_sq += numeric * numeric;
    }
    const double count = static_cast<double>(std::max<std::size_t>(probe.size(), 1));
    errors.push_back(std::sqrt(err_sq / count));
    scales.push_back(std::sqrt(std::max(a_sq, n_sq) / count));
  }
  // Inputs whose true gradient vanishes (a bias ahead of a batch norm) are
  // judged against a tenth of the largest RMS gradient in the check.
  const double global_scale = scales.empty() ? 0.0 : *std::max_element(scales.begin(), scales.end());
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const double denom = std::max({scales[k], 0.1 * global_scale, 1e-12});
    report.deviations.push_back(errors[k] / denom);
    report.max_deviation = std::max(report.max_deviation, errors[k] / denom);
  }
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    inputs[k]->set_requires_grad(saved_flags[k]);
  }
  report.passed = report.max_deviation < tolerance;
  return report;
}

}  // namespace ramavt::diffnet
