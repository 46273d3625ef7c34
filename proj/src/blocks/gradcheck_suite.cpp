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

#include "blocks/gradcheck_suite.hpp"

#include <cmath>
#include <memory>

#include "blocks/layers.hpp"
#include "blocks/network.hpp"
#include "common/rng.hpp"

namespace ramavt::blocks {

using namespace diffnet;

namespace {

constexpr double kOpTolerance = 1e-3;
constexpr double kNetworkTolerance = 1e-2;

// Random tensor with entries at least `gap` away from zero, so relu kinks
// stay outside the finite-difference stencil.
TensorPtr random_tensor(Rng& rng, Shape shape, double scale = 1.0, double gap = 0.0) {
  std::vector<float> v(shape_numel(shape));
  for (auto& x : v) {
    double r = normal(rng) * scale;
    if (gap > 0.0 && std::fabs(r) < gap) r = r < 0 ? r - gap : r + gap;
    x = static_cast<float>(r);
  }
  return make_param(std::move(shape), std::move(v));
}

// Reduces any output to a scalar through a fixed random weighting.
TensorPtr project(Tape* tape, const TensorPtr& y, const TensorPtr& weights) {
  return sum(tape, mul(tape, y, weights));
}

GradCheckCase unary_case(std::string name, Shape shape, double gap,
                         std::function<TensorPtr(Tape*, const TensorPtr&)> op) {
  return {name, kOpTolerance, [=] {
            Rng rng(derive_seed(11, std::hash<std::string>{}(name)));
            auto x = random_tensor(rng, shape, 1.0, gap);
            auto probe = op(nullptr, x);
            auto w = make_tensor(probe->shape(), random_tensor(rng, probe->shape())->values());
            return grad_check([=](Tape* t) { return project(t, op(t, x), w); }, {x}, kOpTolerance);
          }};
}

// Loss over a tape-recorded closure with arbitrary inputs.
GradCheckCase multi_case(std::string name, double tolerance,
                         std::function<std::pair<LossClosure, std::vector<TensorPtr>>(Rng&)> make,
                         std::size_t max_entries = 0) {
  return {name, tolerance, [=] {
            Rng rng(derive_seed(13, std::hash<std::string>{}(name)));
            auto [loss, inputs] = make(rng);
            GradCheckOptions options;
            options.max_entries_per_input = max_entries;
            return grad_check(loss, inputs, tolerance, options);
          }};
}

TensorPtr fixed_weights(Rng& rng, const Shape& shape) {
  auto w = random_tensor(rng, shape);
  w->set_requires_grad(false);
  return w;
}

}  // namespace

std::vector<GradCheckCase> gradcheck_registry() {
  std::vector<GradCheckCase> cases;
  cases.push_back(unary_case("relu", {4, 6}, 1e-2, [](Tape* t, const TensorPtr& x) { return relu(t, x); }));
  cases.push_back(unary_case("sigmoid", {4, 6}, 0.0, [](Tape* t, const TensorPtr& x) { return sigmoid(t, x); }));
  cases.push_back(unary_case("tanh", {4, 6}, 0.0, [](Tape* t, const TensorPtr& x) { return tanh(t, x); }));
  cases.push_back(unary_case("softmax", {3, 5}, 0.0, [](Tape* t, const TensorPtr& x) { return softmax(t, x, 1); }));
  cases.push_back(unary_case("scale", {3, 4}, 0.0, [](Tape* t, const TensorPtr& x) { return scale(t, x, -1.5f); }));
  cases.push_back(unary_case("mean", {3, 4}, 0.0, [](Tape* t, const TensorPtr& x) { return mean(t, mul(t, x, x)); }));
  cases.push_back(
      unary_case("global_avg_pool", {2, 3, 4, 4}, 0.0, [](Tape* t, const TensorPtr& x) { return global_avg_pool(t, x); }));
  cases.push_back(unary_case("tokens", {2, 3, 2, 3}, 0.0, [](Tape* t, const TensorPtr& x) {
    return from_tokens(t, scale(t, to_tokens(t, x), 2.0f), 2, 3);
  }));
  cases.push_back(unary_case("flatten", {2, 3, 2, 2}, 0.0, [](Tape* t, const TensorPtr& x) { return flatten(t, x); }));
  cases.push_back(
      unary_case("mean_tokens", {2, 5, 3}, 0.0, [](Tape* t, const TensorPtr& x) { return mean_tokens(t, x); }));
  cases.push_back(multi_case("add_sub_mul", kOpTolerance, [](Rng& rng) {
    auto a = random_tensor(rng, {3, 4}), b = random_tensor(rng, {3, 4});
    auto w = fixed_weights(rng, {3, 4});
    LossClosure f = [=](Tape* t) { return project(t, mul(t, add(t, a, b), sub(t, a, b)), w); };
    return std::pair{f, std::vector{a, b}};
  }));
  cases.push_back(multi_case("dense", kOpTolerance, [](Rng& rng) {
    auto x = random_tensor(rng, {4, 5}), w = random_tensor(rng, {5, 3}), b = random_tensor(rng, {3});
    auto r = fixed_weights(rng, {4, 3});
    LossClosure f = [=](Tape* t) { return project(t, dense(t, x, w, b), r); };
    return std::pair{f, std::vector{x, w, b}};
  }));
  cases.push_back(multi_case("matmul", kOpTolerance, [](Rng& rng) {
    auto x = random_tensor(rng, {2, 3, 4}), w = random_tensor(rng, {4, 5});
    auto r = fixed_weights(rng, {2, 3, 5});
    LossClosure f = [=](Tape* t) { return project(t, matmul(t, x, w), r); };
    return std::pair{f, std::vector{x, w}};
  }));
  cases.push_back(multi_case("conv2d", kOpTolerance, [](Rng& rng) {
    auto x = random_tensor(rng, {2, 3, 7, 7}), k = random_tensor(rng, {4, 3, 3, 3}), b = random_tensor(rng, {4});
    auto r = fixed_weights(rng, {2, 4, 4, 4});
    LossClosure f = [=](Tape* t) { return project(t, conv2d(t, x, k, b, {2, 1}), r); };
    return std::pair{f, std::vector{x, k, b}};
  }));
  for (NormMode mode : {NormMode::kTrain, NormMode::kEval}) {
    const std::string name = mode == NormMode::kTrain ? "batchnorm2d_train" : "batchnorm2d_eval";
    cases.push_back(multi_case(name, kOpTolerance, [mode](Rng& rng) {
      auto x = random_tensor(rng, {3, 2, 3, 3}), g = random_tensor(rng, {2}), b = random_tensor(rng, {2});
      auto stats = std::make_shared<BatchNormStats>();
      stats->running_mean = make_tensor({2}, std::vector<float>{0.3f, -0.2f});
      stats->running_var = make_tensor({2}, std::vector<float>{1.5f, 0.7f});
      auto r = fixed_weights(rng, {3, 2, 3, 3});
      LossClosure f = [=](Tape* t) { return project(t, batchnorm2d(t, x, g, b, *stats, mode), r); };
      return std::pair{f, std::vector{x, g, b}};
    }));
  }
  cases.push_back(multi_case("channel_scale", kOpTolerance, [](Rng& rng) {
    auto x = random_tensor(rng, {2, 3, 2, 2}), s = random_tensor(rng, {2, 3});
    auto r = fixed_weights(rng, {2, 3, 2, 2});
    LossClosure f = [=](Tape* t) { return project(t, channel_scale(t, x, s), r); };
    return std::pair{f, std::vector{x, s}};
  }));
  cases.push_back(multi_case("rows", kOpTolerance, [](Rng& rng) {
    auto x = random_tensor(rng, {4, 3}), y = random_tensor(rng, {2, 3});
    auto r = fixed_weights(rng, {4, 3});
    LossClosure f = [=](Tape* t) { return project(t, concat_rows(t, {slice_rows(t, x, 1, 2), y}), r); };
    return std::pair{f, std::vector{x, y}};
  }));
  cases.push_back(multi_case("attention", kOpTolerance, [](Rng& rng) {
    auto q = random_tensor(rng, {2, 5, 8}), k = random_tensor(rng, {2, 5, 8}), v = random_tensor(rng, {2, 5, 8});
    auto r = fixed_weights(rng, {2, 5, 8});
    LossClosure f = [=](Tape* t) { return project(t, multi_head_attention(t, q, k, v, 2), r); };
    return std::pair{f, std::vector{q, k, v}};
  }));
  cases.push_back(multi_case("lstm_step", kOpTolerance, [](Rng& rng) {
    auto x = random_tensor(rng, {2, 3}), h = random_tensor(rng, {2, 4}), c = random_tensor(rng, {2, 4});
    LstmParams p{random_tensor(rng, {3, 16}, 0.5), random_tensor(rng, {4, 16}, 0.5), random_tensor(rng, {16}, 0.5)};
    auto rh = fixed_weights(rng, {2, 4}), rc = fixed_weights(rng, {2, 4});
    LossClosure f = [=](Tape* t) {
      auto [h1, c1] = lstm_step(t, x, h, c, p);
      auto [h2, c2] = lstm_step(t, x, h1, c1, p);
      return add(t, project(t, h2, rh), project(t, c2, rc));
    };
    return std::pair{f, std::vector{x, h, c, p.w_input, p.w_hidden, p.bias}};
  }));
  cases.push_back(multi_case("gather_masked_mse", kOpTolerance, [](Rng& rng) {
    auto q = random_tensor(rng, {5, 4});
    std::vector<int> index{0, 3, 1, 2, 3};
    std::vector<float> target{0.5f, -1.0f, 2.0f, 0.0f, 1.0f}, mask{1, 1, 0, 1, 1};
    LossClosure f = [=](Tape* t) { return masked_squared_error(t, gather(t, q, index), target, mask); };
    return std::pair{f, std::vector{q}};
  }));
  cases.push_back(multi_case("se_layer", kOpTolerance, [](Rng& rng) {
    auto x = random_tensor(rng, {2, 8, 3, 3});
    SELayerParams p{random_tensor(rng, {8, 2}), random_tensor(rng, {2}, 1.0, 1e-1), random_tensor(rng, {2, 8}),
                    random_tensor(rng, {8}), 4};
    auto r = fixed_weights(rng, {2, 8, 3, 3});
    LossClosure f = [=](Tape* t) { return project(t, se_forward(t, x, p), r); };
    return std::pair{f, std::vector{x, p.reduce_weight, p.reduce_bias, p.expand_weight, p.expand_bias}};
  }));
  cases.push_back(multi_case("mha_layer", kOpTolerance, [](Rng& rng) {
    auto x = random_tensor(rng, {2, 5, 16});
    MHAParams p{random_tensor(rng, {16, 16}, 0.25), random_tensor(rng, {16, 16}, 0.25),
                random_tensor(rng, {16, 16}, 0.25), random_tensor(rng, {16, 16}, 0.25), 8, 2};
    auto r = fixed_weights(rng, {2, 5, 16});
    LossClosure f = [=](Tape* t) { return project(t, mha_forward(t, x, p), r); };
    return std::pair{f, std::vector{x, p.w_q, p.w_k, p.w_v, p.w_o}};
  }));
  // The frame-stack network is covered piecewise (conv blocks, flatten,
  // dense): its wide relu layer puts kinks inside the difference stencil.
  for (Variant variant : {Variant::kRamavt, Variant::kOrigin}) {
    const std::string name = "network_" + variant_name(variant);
    cases.push_back(multi_case(
        name, kNetworkTolerance,
        [variant](Rng& rng) {
          auto net = std::shared_ptr<QNetwork>(
              new QNetwork(QNetworkSpec::make(variant, InputFormat::kDepth, 16), rng()));
          const int batch = 2, steps = 2;
          const int rows = batch * steps;
          auto frames = random_tensor(rng, {rows, net->spec().input_channels(), 16, 16});
          frames->set_requires_grad(false);
          std::vector<float> target(static_cast<std::size_t>(rows) * net->spec().action_count);
          for (auto& v : target) v = static_cast<float>(normal(rng));
          LossClosure f = [=](Tape* t) {
              return mse(t, net->forward_sequence(t, frames, batch, steps, NormMode::kTrain), target);
          };
          return std::pair{f, net->params().trainable()};
        },
        24));
  }
  return cases;
}

}  // namespace ramavt::blocks
