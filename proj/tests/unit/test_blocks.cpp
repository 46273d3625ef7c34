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

// Tests for the network blocks and the two full architectures.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "blocks/attention_map.hpp"
#include "blocks/gradcheck_suite.hpp"
#include "blocks/layers.hpp"
#include "blocks/network.hpp"
#include "common/error.hpp"
#include "common/rng.hpp"
#include "doctest.h"

using namespace ramavt;
using namespace ramavt::blocks;
using namespace ramavt::diffnet;

namespace {

TensorPtr random_tensor(Rng& rng, Shape shape, double lo = -1.0, double hi = 1.0) {
  std::vector<float> v(shape_numel(shape));
  for (auto& x : v) x = static_cast<float>(uniform(rng, lo, hi));
  return make_tensor(std::move(shape), std::move(v));
}

TensorPtr identity(int d) {
  auto t = make_tensor({d, d}, 0.0f);
  for (int i = 0; i < d; ++i) (*t)[static_cast<std::size_t>(i) * d + i] = 1.0f;
  return t;
}

SELayerParams random_se(Rng& rng, int c, int r) {
  return {random_tensor(rng, {c, c / r}), random_tensor(rng, {c / r}), random_tensor(rng, {c / r, c}),
          random_tensor(rng, {c}), r};
}

MHAParams random_mha(Rng& rng, int d, int heads) {
  const int w = d;
  return {random_tensor(rng, {d, w}, -0.3, 0.3), random_tensor(rng, {d, w}, -0.3, 0.3),
          random_tensor(rng, {d, w}, -0.3, 0.3), random_tensor(rng, {w, d}, -0.3, 0.3), heads, w / heads};
}

// Explicit per-head, per-position attention in double precision.
std::vector<double> naive_mha(const Tensor& x, const MHAParams& p) {
  const int n = x.dim(0), d = x.dim(1), hk = p.heads * p.key_dim;
  auto project = [&](const Tensor& w) {
    std::vector<double> out(static_cast<std::size_t>(n) * hk, 0.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < hk; ++j)
        for (int k = 0; k < d; ++k) out[i * hk + j] += double(x[i * d + k]) * w[k * hk + j];
    return out;
  };
  const auto q = project(*p.w_q), k = project(*p.w_k), v = project(*p.w_v);
  std::vector<double> concat(static_cast<std::size_t>(n) * hk, 0.0);
  for (int h = 0; h < p.heads; ++h) {
    for (int i = 0; i < n; ++i) {
      std::vector<double> score(n);
      for (int j = 0; j < n; ++j) {
        double dot = 0.0;
        for (int e = 0; e < p.key_dim; ++e) dot += q[i * hk + h * p.key_dim + e] * k[j * hk + h * p.key_dim + e];
        score[j] = dot / std::sqrt(double(p.key_dim));
      }
      const double peak = *std::max_element(score.begin(), score.end());
      double total = 0.0;
      for (auto& s : score) total += (s = std::exp(s - peak));
      for (int j = 0; j < n; ++j)
        for (int e = 0; e < p.key_dim; ++e)
          concat[i * hk + h * p.key_dim + e] += score[j] / total * v[j * hk + h * p.key_dim + e];
    }
  }
  std::vector<double> out(static_cast<std::size_t>(n) * d, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < hk; ++k) out[i * d + j] += concat[i * hk + k] * (*p.w_o)[k * d + j];
  return out;
}

Tensor random_observation(Rng& rng, int c, int side) {
  return *random_tensor(rng, {c, side, side}, 0.0, 1.0);
}

// Moves batch-norm running statistics off their initial values so eval-mode
// passes exercise them.
void warm_running_stats(QNetwork& net, Rng& rng) {
  const auto& spec = net.spec();
  const int rows = spec.recurrent() ? 4 : 2;
  auto x = random_tensor(rng, {rows, spec.input_channels(), spec.resolution, spec.resolution}, 0.0, 1.0);
  for (int i = 0; i < 3; ++i) {
    if (spec.recurrent()) net.forward_sequence(nullptr, x, 2, 2, NormMode::kTrain);
    else net.forward_stacked(nullptr, x, NormMode::kTrain);
  }
}

}  // namespace

TEST_CASE("se_forward saturated gates") {
  Rng rng(1);
  auto x = random_tensor(rng, {2, 16, 3, 3});
  auto p = random_se(rng, 16, 4);
  std::fill(p.expand_weight->values().begin(), p.expand_weight->values().end(), 0.0f);
  std::fill(p.expand_bias->values().begin(), p.expand_bias->values().end(), 100.0f);
  auto open = se_forward(nullptr, x, p);
  for (std::size_t i = 0; i < x->size(); ++i) CHECK(std::fabs((*open)[i] - (*x)[i]) < 1e-4);
  std::fill(p.expand_bias->values().begin(), p.expand_bias->values().end(), -100.0f);
  auto shut = se_forward(nullptr, x, p);
  for (std::size_t i = 0; i < x->size(); ++i) CHECK(std::fabs((*shut)[i]) < 1e-4);
}

TEST_CASE("se_forward equals a per-channel scalar multiply") {
  Rng rng(2);
  auto x = random_tensor(rng, {3, 16, 4, 4});
  auto p = random_se(rng, 16, 4);
  auto gate = se_gate(nullptr, x, p);
  auto y = se_forward(nullptr, x, p);
  for (int n = 0; n < 3; ++n)
    for (int c = 0; c < 16; ++c) {
      const float s = (*gate)[n * 16 + c];
      CHECK(s > 0.0f);
      CHECK(s < 1.0f);
      for (int i = 0; i < 16; ++i) {
        const std::size_t at = (static_cast<std::size_t>(n) * 16 + c) * 16 + i;
        CHECK((*y)[at] == (*x)[at] * s);
        // Strictly positive gates keep the sign pattern.
        CHECK((((*y)[at] > 0) == ((*x)[at] > 0)));
      }
    }
}

TEST_CASE("se_forward rejects a channel mismatch") {
  Rng rng(3);
  auto x = random_tensor(rng, {1, 8, 2, 2});
  auto p = random_se(rng, 16, 4);
  try {
    se_forward(nullptr, x, p);
    FAIL("expected a shape error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kShape);
  }
}

TEST_CASE("mha single token with identity projections is the identity") {
  Rng rng(4);
  const int d = 6;
  auto x = random_tensor(rng, {1, d});
  MHAParams p{identity(d), identity(d), identity(d), identity(d), 1, d};
  auto y = mha_forward(nullptr, x, p);
  for (int i = 0; i < d; ++i) CHECK((*y)[i] == (*x)[i]);
}

TEST_CASE("mha score scaling") {
  // Token 0 is all ones, token 1 all zeros: row 0 scores are 4/sqrt(4) = 2
  // and 0, so the weights are e^2/(e^2+1) and 1/(e^2+1).
  auto x = make_tensor({2, 4}, std::vector<float>{1, 1, 1, 1, 0, 0, 0, 0});
  MHAParams p{identity(4), identity(4), identity(4), identity(4), 1, 4};
  Tensor weights;
  mha_forward(nullptr, x, p, &weights);
  const double e2 = std::exp(2.0);
  CHECK(std::fabs(weights[0] - e2 / (e2 + 1.0)) < 1e-6);
  CHECK(std::fabs(weights[1] - 1.0 / (e2 + 1.0)) < 1e-6);
  CHECK(std::fabs(weights[2] - 0.5) < 1e-6);
}

TEST_CASE("mha matches the naive per-head oracle") {
  Rng rng(5);
  const int d = 64;
  auto x = random_tensor(rng, {5, d});
  auto p = random_mha(rng, d, 8);
  auto y = mha_forward(nullptr, x, p);
  const auto expected = naive_mha(*x, p);
  double worst = 0.0;
  for (std::size_t i = 0; i < expected.size(); ++i) worst = std::max(worst, std::fabs((*y)[i] - expected[i]));
  CHECK(worst < 1e-5);
}

TEST_CASE("mha attention rows are stochastic") {
  Rng rng(6);
  auto x = random_tensor(rng, {3, 7, 16}, -3.0, 3.0);
  auto p = random_mha(rng, 16, 8);
  Tensor weights;
  mha_forward(nullptr, x, p, &weights);
  REQUIRE(weights.shape() == Shape{3, 8, 7, 7});
  for (std::size_t row = 0; row < weights.size() / 7; ++row) {
    double total = 0.0;
    for (int j = 0; j < 7; ++j) {
      CHECK(weights[row * 7 + j] >= 0.0f);
      total += weights[row * 7 + j];
    }
    CHECK(std::fabs(total - 1.0) < 1e-6);
  }
}

TEST_CASE("mha is permutation equivariant over tokens") {
  Rng rng(7);
  const int p_count = 9, d = 16;
  auto x = random_tensor(rng, {p_count, d});
  auto p = random_mha(rng, d, 8);
  std::vector<int> perm(p_count);
  for (int i = 0; i < p_count; ++i) perm[i] = (i * 4 + 3) % p_count;
  auto xp = make_tensor({p_count, d});
  for (int i = 0; i < p_count; ++i)
    for (int j = 0; j < d; ++j) (*xp)[i * d + j] = (*x)[perm[i] * d + j];
  auto y = mha_forward(nullptr, x, p);
  auto yp = mha_forward(nullptr, xp, p);
  for (int i = 0; i < p_count; ++i)
    for (int j = 0; j < d; ++j) CHECK(std::fabs((*yp)[i * d + j] - (*y)[perm[i] * d + j]) < 1e-5);
}

TEST_CASE("mha rejects an empty sequence") {
  Rng rng(8);
  auto p = random_mha(rng, 16, 8);
  try {
    mha_forward(nullptr, make_tensor({0, 16}), p);
    FAIL("expected an empty-sequence error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kEmpty);
  }
}

TEST_CASE("conv_block examples") {
  Rng rng(9);
  QNetwork net(QNetworkSpec::make(Variant::kRamavt, InputFormat::kDepth), 3);
  auto& blocks = net.conv_blocks();

  SUBCASE("zero input in eval mode with zero biases gives zero output") {
    auto y = conv_block(nullptr, make_tensor({1, 1, 64, 64}), blocks[0], true, NormMode::kEval);
    // SE scales zeros by a positive gate; the result stays zero.
    for (float v : y->values()) CHECK(v == 0.0f);
  }

  SUBCASE("saturated SE equals the plain block") {
    auto x = random_tensor(rng, {2, 1, 64, 64}, 0.0, 1.0);
    auto& se = *blocks[0].se;
    std::fill(se.expand_weight->values().begin(), se.expand_weight->values().end(), 0.0f);
    std::fill(se.expand_bias->values().begin(), se.expand_bias->values().end(), 100.0f);
    auto plain = conv_block(nullptr, x, blocks[0], false, NormMode::kEval);
    auto gated = conv_block(nullptr, x, blocks[0], true, NormMode::kEval);
    for (std::size_t i = 0; i < plain->size(); ++i) CHECK(std::fabs((*plain)[i] - (*gated)[i]) < 1e-4);
  }

  SUBCASE("spatial extents follow conv arithmetic") {
    TensorPtr y = random_tensor(rng, {1, 1, 64, 64});
    int side = 64;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      const auto& layer = net.spec().conv[i];
      side = (side + 2 * layer.padding - layer.kernel) / layer.stride + 1;
      y = conv_block(nullptr, y, blocks[i], true, NormMode::kEval);
      CHECK(y->shape() == Shape{1, layer.out_channels, side, side});
    }
    CHECK(side == 4);
  }
}

TEST_CASE("every default plan ends on a 4x4 grid") {
  for (int side : {16, 32, 64}) {
    CHECK(QNetworkSpec::make(Variant::kRamavt, InputFormat::kColor, side).grid_side() == 4);
  }
  CHECK_THROWS_AS(default_conv_plan(48), Error);
}

TEST_CASE("parameter counts") {
  // origin, depth input at 64x64:
  //   conv1 32*1*8*8 + 32 + 2*32 = 2144
  //   conv2 64*32*4*4 + 64 + 128 = 32960
  //   conv3 64*64*3*3 + 64 + 128 = 37056, conv4 the same
  //   lstm  64*512 + 128*512 + 512 = 98816
  //   head  128*7 + 7 = 903
  const std::size_t origin = 2144 + 32960 + 37056 + 37056 + 98816 + 903;
  // SE with r = 16 on blocks 1..3: 32*2+2+2*32+32 = 162, 64*4+4+4*64+64 = 580 twice.
  const std::size_t se = 162 + 580 + 580;
  const std::size_t mha = 4 * 64 * 64;
  const std::size_t drlavt = 32 * 4 * 64 + 96 + 32960 + 37056 + 37056 + 1024 * 256 + 256 + 256 * 7 + 7;

  auto count = [](Variant v) {
    QNetwork net(QNetworkSpec::make(v, InputFormat::kDepth), 1);
    CHECK(net.params().trainable_scalar_count() == expected_parameter_count(net.spec()));
    return net.params().trainable_scalar_count();
  };
  CHECK(count(Variant::kOrigin) == origin);
  CHECK(count(Variant::kOriginSe) == origin + se);
  CHECK(count(Variant::kOriginMha) == origin + mha);
  CHECK(count(Variant::kRamavt) == origin + se + mha);
  CHECK(count(Variant::kDrlavt) == drlavt);
  const double overhead = double(se + mha) / double(origin);
  MESSAGE("SE + MHA overhead over origin: " << overhead);
  CHECK(overhead < 0.10);
}

TEST_CASE("ramavt_forward") {
  Rng rng(10);
  QNetwork net(QNetworkSpec::make(Variant::kRamavt, InputFormat::kDepth), 11);
  warm_running_stats(net, rng);
  const auto zero = RecurrentState::zeros(1, 128);
  const auto o1 = random_observation(rng, 1, 64), o2 = random_observation(rng, 1, 64);

  SUBCASE("deterministic with seven outputs") {
    const auto a = net.ramavt_forward(o1, zero);
    const auto b = net.ramavt_forward(o1, zero);
    CHECK(a.q.size() == 7);
    CHECK(a.q == b.q);
    CHECK(a.state.h.values() == b.state.h.values());
  }

  SUBCASE("different observations give different states") {
    const auto a = net.ramavt_forward(o1, zero);
    const auto b = net.ramavt_forward(o2, zero);
    CHECK(a.state.h.values() != b.state.h.values());
  }

  SUBCASE("state carries information") {
    const auto first = net.ramavt_forward(o1, zero);
    const auto again = net.ramavt_forward(o2, first.state);
    const auto fresh = net.ramavt_forward(o2, zero);
    CHECK(again.q != fresh.q);
  }

  SUBCASE("a closed recurrence forgets its state") {
    // Zero recurrent weights, input and forget gates shut: c' = 0 and the
    // output depends on the current observation alone.
    auto& lstm = net.lstm();
    std::fill(lstm.w_hidden->values().begin(), lstm.w_hidden->values().end(), 0.0f);
    for (int j = 0; j < 2 * 128; ++j) (*lstm.bias)[j] = -100.0f;
    Rng srng(12);
    RecurrentState other{*random_tensor(srng, {1, 128}), *random_tensor(srng, {1, 128})};
    const auto a = net.ramavt_forward(o1, zero);
    const auto b = net.ramavt_forward(o1, other);
    for (int i = 0; i < 7; ++i) CHECK(std::fabs(a.q[i] - b.q[i]) < 1e-5);
  }

  SUBCASE("shape errors") {
    CHECK_THROWS_AS(net.ramavt_forward(random_observation(rng, 3, 64), zero), Error);
    CHECK_THROWS_AS(net.ramavt_forward(o1, RecurrentState::zeros(1, 64)), Error);
  }

  SUBCASE("non-finite activations name the layer") {
    (*net.conv_blocks()[0].kernel)[0] = std::nanf("");
    try {
      net.ramavt_forward(o1, zero);
      FAIL("expected a numeric fault");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kNumeric);
      CHECK(std::string(e.what()).find("conv1") != std::string::npos);
    }
  }
}

TEST_CASE("ramavt_forward agrees with the batched sequence pass") {
  Rng rng(13);
  QNetwork net(QNetworkSpec::make(Variant::kRamavt, InputFormat::kRgbd, 32), 14);
  warm_running_stats(net, rng);
  const int steps = 3;
  auto frames = random_tensor(rng, {steps, 4, 32, 32}, 0.0, 1.0);
  auto q = net.forward_sequence(nullptr, frames, 1, steps, NormMode::kEval);
  auto state = RecurrentState::zeros(1, 128);
  for (int t = 0; t < steps; ++t) {
    Tensor obs({4, 32, 32}, std::vector<float>(frames->values().begin() + t * 4 * 32 * 32,
                                               frames->values().begin() + (t + 1) * 4 * 32 * 32));
    auto step = net.ramavt_forward(obs, state);
    state = step.state;
    for (int a = 0; a < 7; ++a) CHECK(std::fabs(step.q[a] - (*q)[t * 7 + a]) < 1e-5);
  }
}

TEST_CASE("drlavt_forward") {
  Rng rng(15);
  QNetwork net(QNetworkSpec::make(Variant::kDrlavt, InputFormat::kDepth), 16);
  warm_running_stats(net, rng);
  const auto stack = random_observation(rng, 4, 64);
  const auto q = net.drlavt_forward(stack);
  CHECK(q.size() == 7);
  CHECK(net.drlavt_forward(stack) == q);

  Tensor swapped({4, 64, 64});
  const std::size_t frame = 64 * 64;
  const int order[4] = {2, 0, 3, 1};
  for (int f = 0; f < 4; ++f)
    std::copy_n(stack.values().begin() + order[f] * frame, frame, swapped.values().begin() + f * frame);
  CHECK(net.drlavt_forward(swapped) != q);

  try {
    net.drlavt_forward(random_observation(rng, 3, 64));
    FAIL("expected a shape error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kShape);
  }
}

TEST_CASE("origin variants contain only their components") {
  QNetwork origin(QNetworkSpec::make(Variant::kOrigin, InputFormat::kDepth), 1);
  CHECK(origin.mha() == nullptr);
  for (auto& b : origin.conv_blocks()) CHECK(!b.se);
  QNetwork full(QNetworkSpec::make(Variant::kRamavt, InputFormat::kDepth), 1);
  CHECK(full.mha() != nullptr);
  CHECK(full.conv_blocks()[2].se);
  CHECK(!full.conv_blocks()[3].se);
}

TEST_CASE("clone copies values bit-exactly") {
  Rng rng(17);
  QNetwork net(QNetworkSpec::make(Variant::kRamavt, InputFormat::kColor, 32), 18);
  warm_running_stats(net, rng);
  auto copy = net.clone();
  REQUIRE(copy->params().congruent(net.params()));
  for (std::size_t i = 0; i < net.params().entries().size(); ++i) {
    CHECK(copy->params().entries()[i].tensor->values() == net.params().entries()[i].tensor->values());
    CHECK(copy->params().entries()[i].tensor != net.params().entries()[i].tensor);
  }
  const auto obs = random_observation(rng, 3, 32);
  CHECK(copy->ramavt_forward(obs, RecurrentState::zeros(1, 128)).q ==
        net.ramavt_forward(obs, RecurrentState::zeros(1, 128)).q);
}

TEST_CASE("seeded construction is reproducible") {
  QNetwork a(QNetworkSpec::make(Variant::kRamavt, InputFormat::kDepth), 5);
  QNetwork b(QNetworkSpec::make(Variant::kRamavt, InputFormat::kDepth), 5);
  QNetwork c(QNetworkSpec::make(Variant::kRamavt, InputFormat::kDepth), 6);
  CHECK(a.params().get("conv1.kernel")->values() == b.params().get("conv1.kernel")->values());
  CHECK(a.params().get("conv1.kernel")->values() != c.params().get("conv1.kernel")->values());
}

TEST_CASE("captures expose every conv layer and the attention output") {
  Rng rng(19);
  QNetwork net(QNetworkSpec::make(Variant::kRamavt, InputFormat::kDepth), 20);
  Captures captures;
  net.ramavt_forward(random_observation(rng, 1, 64), RecurrentState::zeros(1, 128), &captures);
  for (const char* name : {"conv1", "conv2", "conv3", "conv4", "mha"}) REQUIRE(captures.find(name) != nullptr);
  CHECK(captures.find("conv1")->shape() == Shape{1, 32, 16, 16});
  CHECK(captures.find("mha")->shape() == Shape{1, 64, 4, 4});
}

TEST_CASE("attention_map") {
  SUBCASE("constant activation is uniform") {
    Tensor a({2, 3, 4, 5}, 0.7f);
    auto m = attention_map(a);
    REQUIRE(m.shape() == Shape{2, 4, 5});
    for (float v : m.values()) CHECK(std::fabs(v - 1.0f / 20.0f) < 1e-6);
  }
  SUBCASE("a single strong position takes the mass") {
    Tensor a({1, 2, 3, 3}, 0.0f);
    a[4] = 5.0f;
    auto m = attention_map(a);
    CHECK(m[4] > 0.99f);
  }
  SUBCASE("matches the square-sum then softmax oracle") {
    Rng rng(21);
    auto a = random_tensor(rng, {2, 5, 3, 4}, -1.5, 1.5);
    auto m = attention_map(*a);
    for (int n = 0; n < 2; ++n) {
      std::vector<double> e(12, 0.0);
      for (int c = 0; c < 5; ++c)
        for (int i = 0; i < 12; ++i) e[i] += std::pow((*a)[(n * 5 + c) * 12 + i], 2.0);
      double z = 0.0;
      for (double v : e) z += std::exp(v);
      double total = 0.0;
      for (int i = 0; i < 12; ++i) {
        CHECK(std::fabs(m[n * 12 + i] - std::exp(e[i]) / z) < 1e-6);
        CHECK(m[n * 12 + i] >= 0.0f);
        total += m[n * 12 + i];
      }
      CHECK(std::fabs(total - 1.0) < 1e-6);
    }
  }
}

TEST_CASE("gradient check registry") {
  for (const auto& c : gradcheck_registry()) {
    const auto report = c.run();
    INFO(c.name << " deviation " << report.max_deviation << " tolerance " << c.tolerance);
    CHECK(report.passed);
  }
}
