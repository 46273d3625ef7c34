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

#include <algorithm>
#include <cmath>
#include <vector>

#include "augment/augment.hpp"
#include "common/error.hpp"
#include "common/rng.hpp"
#include "doctest.h"

using namespace ramavt;
using namespace ramavt::augment;

namespace {

Tensor random_images(Rng& rng, diffnet::Shape shape) {
  Tensor t(std::move(shape));
  for (auto& v : t.values()) v = static_cast<float>(uniform01(rng));
  return t;
}

bool same(const Tensor& a, const Tensor& b) { return a.shape() == b.shape() && a.to_vector() == b.to_vector(); }

}  // namespace

TEST_CASE("disabled augmentation is the identity") {
  Rng rng(1);
  const Tensor x = random_images(rng, {8, 1, 16, 16});
  CHECK(same(augment_sequence(x, AugmentConfig{}, rng), x));
}

TEST_CASE("flip is an involution and mirrors columns") {
  Rng rng(2);
  const Tensor x = random_images(rng, {2, 3, 5, 7});
  CHECK(same(flip(flip(x)), x));
  const Tensor f = flip(x);
  CHECK(f.values()[0] == x.values()[6]);
  CHECK(f.values()[7 + 2] == x.values()[7 + 4]);
}

TEST_CASE("rotation by quarter turns") {
  Rng rng(3);
  const Tensor x = random_images(rng, {2, 1, 6, 6});
  CHECK(same(rotate(x, 0), x));
  CHECK(same(rotate(rotate(rotate(rotate(x, 90), 90), 90), 90), x));
  CHECK(same(rotate(rotate(x, 90), 270), x));
  CHECK(same(rotate(rotate(x, 90), 90), rotate(x, 180)));
  CHECK(same(rotate(x, -90), rotate(x, 270)));
  // [[1, 2], [3, 4]] turned a quarter counter-clockwise is [[2, 4], [1, 3]].
  const Tensor small({1, 2, 2}, std::vector<float>{1, 2, 3, 4});
  CHECK(rotate(small, 90).to_vector() == std::vector<float>{2, 4, 1, 3});
  CHECK(rotate(small, 180).to_vector() == std::vector<float>{4, 3, 2, 1});
  CHECK_THROWS_AS(rotate(small, 45), Error);
  CHECK_THROWS_AS(rotate(Tensor({1, 2, 3}, 0.0f), 90), Error);
}

TEST_CASE("cutout zeroes exactly size squared pixels per channel") {
  Tensor x({2, 3, 32, 32}, 0.5f);
  const Tensor y = cutout(x, 12, 5, 9);
  for (int plane = 0; plane < 6; ++plane) {
    int zeros = 0;
    for (int i = 0; i < 32 * 32; ++i) {
      const float v = y.values()[plane * 1024 + i];
      const int r = i / 32, c = i % 32;
      const bool inside = r >= 9 && r < 21 && c >= 5 && c < 17;
      CHECK(v == (inside ? 0.0f : 0.5f));
      zeros += v == 0.0f ? 1 : 0;
    }
    CHECK(zeros == 144);
  }
  Rng rng(4);
  for (int i = 0; i < 100; ++i) {
    const Tensor z = cutout(Tensor({1, 16, 16}, 1.0f), 12, rng);
    CHECK(std::count(z.values().begin(), z.values().end(), 0.0f) == 144);
  }
  CHECK_THROWS_AS(cutout(x, 12, 25, 0), Error);
}

TEST_CASE("crop is a translated view") {
  Rng rng(5);
  const int side = 32, pad = 4;
  const Tensor x = random_images(rng, {1, side, side});
  for (int trial = 0; trial < 20; ++trial) {
    const int ox = uniform_int(rng, 2 * pad + 1), oy = uniform_int(rng, 2 * pad + 1);
    const Tensor y = crop(x, pad, ox, oy);
    // Recover the shift as the cross-correlation peak over interior pixels.
    double best = -1e30;
    int bx = 0, by = 0;
    for (int dy = -pad; dy <= pad; ++dy)
      for (int dx = -pad; dx <= pad; ++dx) {
        double score = 0.0;
        for (int r = pad; r < side - pad; ++r)
          for (int c = pad; c < side - pad; ++c)
            score -= std::abs(y.values()[r * side + c] - x.values()[(r + dy) * side + c + dx]);
        if (score > best) {
          best = score;
          bx = dx;
          by = dy;
        }
      }
    CHECK(bx == ox - pad);
    CHECK(by == oy - pad);
    CHECK(best == 0.0);
  }
  CHECK(same(crop(x, pad, pad, pad), x));
  // Replicated border.
  const Tensor corner = crop(x, pad, 0, 0);
  CHECK(corner.values()[0] == x.values()[0]);
  CHECK(corner.values()[5 * side + 5] == x.values()[side + 1]);
}

TEST_CASE("sequence augmentation keeps shape, range and per-sequence draws") {
  Rng rng(6);
  const auto cfg = AugmentConfig::all();
  for (int trial = 0; trial < 30; ++trial) {
    // Identical frames stay identical under one shared draw.
    const Tensor frame = random_images(rng, {1, 1, 16, 16});
    Tensor seq({8, 1, 16, 16});
    for (int t = 0; t < 8; ++t) std::copy_n(frame.values().begin(), 256, seq.values().begin() + t * 256);
    AugmentConfig c = cfg;
    c.cutout_size = 6;
    const Tensor out = augment_sequence(seq, c, rng);
    CHECK(out.shape() == seq.shape());
    for (int t = 1; t < 8; ++t)
      CHECK(std::equal(out.values().begin(), out.values().begin() + 256, out.values().begin() + t * 256));
    CHECK(*std::min_element(out.values().begin(), out.values().end()) >= 0.0f);
    CHECK(*std::max_element(out.values().begin(), out.values().end()) <= 1.0f);
  }
}

TEST_CASE("augmentation is deterministic under a seeded rng") {
  Rng data(7);
  const Tensor x = random_images(data, {4, 1, 16, 16});
  AugmentConfig cfg = AugmentConfig::all();
  cfg.cutout_size = 5;
  Rng a(99), b(99);
  for (int i = 0; i < 10; ++i) CHECK(same(augment_sequence(x, cfg, a), augment_sequence(x, cfg, b)));
}

TEST_CASE("probability one always applies, zero never does") {
  Rng rng(8);
  AugmentConfig cfg = AugmentConfig::all();
  cfg.apply_probability = 1.0;
  for (int i = 0; i < 50; ++i) {
    const auto p = draw_params(cfg, 16, 16, rng);
    CHECK(p.crop);
    CHECK(p.flip);
    CHECK(p.cutout);
    CHECK(p.quarter_turns != 0);
  }
  cfg.apply_probability = 0.0;
  const Tensor x = random_images(rng, {2, 1, 16, 16});
  CHECK(same(augment_sequence(x, cfg, rng), x));
}

TEST_CASE("batch augmentation transforms observations and successors alike") {
  Rng rng(9);
  replay::SequenceBatch batch;
  batch.observations = random_images(rng, {3, 4, 1, 16, 16});
  batch.next_observations = batch.observations;
  AugmentConfig cfg = AugmentConfig::all();
  cfg.apply_probability = 1.0;
  cfg.cutout_size = 4;
  const Tensor before = batch.observations;
  augment_batch(batch, cfg, rng);
  CHECK(same(batch.observations, batch.next_observations));
  CHECK_FALSE(same(batch.observations, before));
}

TEST_CASE("config validation") {
  AugmentConfig cfg;
  cfg.cutout_size = 16;
  CHECK_THROWS_AS(cfg.validate(16), Error);
  cfg.cutout_size = 12;
  CHECK_NOTHROW(cfg.validate(16));
  cfg.apply_probability = 1.5;
  CHECK_THROWS_AS(cfg.validate(16), Error);
}
