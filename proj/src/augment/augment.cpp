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

#include "augment/augment.hpp"

#include <algorithm>
#include <cstring>

#include "common/error.hpp"

namespace ramavt::augment {

namespace {

struct Planes {
  std::size_t count;
  int h;
  int w;
};

Planes planes_of(const Tensor& t) {
  require(t.rank() >= 2, ErrorKind::kShape, "augmentations need an image tensor [..., H, W]");
  const int h = t.dim(t.rank() - 2), w = t.dim(t.rank() - 1);
  const std::size_t hw = static_cast<std::size_t>(h) * w;
  return {hw == 0 ? 0 : t.size() / hw, h, w};
}

}  // namespace

AugmentConfig AugmentConfig::all() {
  AugmentConfig c;
  c.crop = c.flip = c.cutout = c.rotation = true;
  return c;
}

void AugmentConfig::validate(int side) const {
  require(crop_pad >= 0, ErrorKind::kInvalidArgument, "crop pad must be non-negative");
  require(cutout_size >= 1 && cutout_size < side, ErrorKind::kInvalidArgument,
          "cutout size " + std::to_string(cutout_size) + " must lie in [1, " + std::to_string(side) + ")");
  require(apply_probability >= 0.0 && apply_probability <= 1.0, ErrorKind::kInvalidArgument,
          "augment probability outside [0, 1]");
}

AugmentParams draw_params(const AugmentConfig& cfg, int height, int width, Rng& rng) {
  // Every field is drawn regardless of the enabled set so that toggling one
  // transform does not shift the others' random streams.
  AugmentParams p;
  const double coins[4] = {uniform01(rng), uniform01(rng), uniform01(rng), uniform01(rng)};
  p.crop_x = uniform_int(rng, 2 * cfg.crop_pad + 1);
  p.crop_y = uniform_int(rng, 2 * cfg.crop_pad + 1);
  p.cutout_x = uniform_int(rng, std::max(1, width - cfg.cutout_size + 1));
  p.cutout_y = uniform_int(rng, std::max(1, height - cfg.cutout_size + 1));
  p.quarter_turns = 1 + uniform_int(rng, 3);
  p.crop = cfg.crop && coins[0] < cfg.apply_probability;
  p.flip = cfg.flip && coins[1] < cfg.apply_probability;
  p.cutout = cfg.cutout && coins[2] < cfg.apply_probability;
  if (!(cfg.rotation && coins[3] < cfg.apply_probability)) p.quarter_turns = 0;
  return p;
}

Tensor crop(const Tensor& obs, int pad, int x, int y) {
  require(pad >= 0 && x >= 0 && y >= 0 && x <= 2 * pad && y <= 2 * pad, ErrorKind::kInvalidArgument,
          "crop window outside the padded image");
  const auto [n, h, w] = planes_of(obs);
  Tensor out(obs.shape());
  const float* src = obs.values().data();
  float* dst = out.values().data();
  for (std::size_t p = 0; p < n; ++p) {
    const float* s = src + p * h * w;
    float* d = dst + p * h * w;
    for (int r = 0; r < h; ++r) {
      const int sr = std::clamp(r + y - pad, 0, h - 1);
      for (int c = 0; c < w; ++c) d[r * w + c] = s[sr * w + std::clamp(c + x - pad, 0, w - 1)];
    }
  }
  return out;
}

Tensor crop(const Tensor& obs, int pad, Rng& rng) {
  const int x = uniform_int(rng, 2 * pad + 1);
  const int y = uniform_int(rng, 2 * pad + 1);
  return crop(obs, pad, x, y);
}

Tensor flip(const Tensor& obs) {
  const auto [n, h, w] = planes_of(obs);
  Tensor out(obs.shape());
  const float* src = obs.values().data();
  float* dst = out.values().data();
  for (std::size_t row = 0; row < n * h; ++row)
    for (int c = 0; c < w; ++c) dst[row * w + c] = src[row * w + (w - 1 - c)];
  return out;
}

Tensor cutout(const Tensor& obs, int size, int x, int y) {
  const auto [n, h, w] = planes_of(obs);
  require(size >= 1 && x >= 0 && y >= 0 && x + size <= w && y + size <= h, ErrorKind::kInvalidArgument,
          "cutout square outside the image");
  Tensor out = obs;
  float* dst = out.values().data();
  for (std::size_t p = 0; p < n; ++p)
    for (int r = y; r < y + size; ++r) std::fill_n(dst + p * h * w + r * w + x, size, 0.0f);
  return out;
}

Tensor cutout(const Tensor& obs, int size, Rng& rng) {
  const auto [n, h, w] = planes_of(obs);
  (void)n;
  require(size >= 1 && size <= std::min(h, w), ErrorKind::kInvalidArgument, "cutout larger than the image");
  const int x = uniform_int(rng, w - size + 1);
  const int y = uniform_int(rng, h - size + 1);
  return cutout(obs, size, x, y);
}

Tensor rotate(const Tensor& obs, int degrees) {
  require(degrees % 90 == 0, ErrorKind::kInvalidArgument, "rotation must be a multiple of 90 degrees");
  const int turns = ((degrees / 90) % 4 + 4) % 4;
  if (turns == 0) return obs;
  const auto [n, h, w] = planes_of(obs);
  require(h == w, ErrorKind::kShape, "rotation needs square images");
  Tensor out(obs.shape());
  const float* src = obs.values().data();
  float* dst = out.values().data();
  const int s = h;
  for (std::size_t p = 0; p < n; ++p) {
    const float* a = src + p * s * s;
    float* b = dst + p * s * s;
    for (int r = 0; r < s; ++r)
      for (int c = 0; c < s; ++c) {
        // Counter-clockwise on screen: output (r, c) reads the source pixel
        // that lands there after `turns` quarter turns.
        int sr = r, sc = c;
        for (int k = 0; k < turns; ++k) {
          const int nr = sc, nc = s - 1 - sr;
          sr = nr;
          sc = nc;
        }
        b[r * s + c] = a[sr * s + sc];
      }
  }
  return out;
}

Tensor apply(const Tensor& obs, const AugmentParams& params, const AugmentConfig& cfg) {
  Tensor out = obs;
  if (params.crop) out = crop(out, cfg.crop_pad, params.crop_x, params.crop_y);
  if (params.flip) out = flip(out);
  if (params.quarter_turns != 0) out = rotate(out, 90 * params.quarter_turns);
  if (params.cutout) out = cutout(out, cfg.cutout_size, params.cutout_x, params.cutout_y);
  return out;
}

Tensor augment_sequence(const Tensor& obs, const AugmentConfig& cfg, Rng& rng) {
  require(obs.rank() == 4, ErrorKind::kShape, "augment_sequence expects [L, C, H, W]");
  cfg.validate(std::min(obs.dim(2), obs.dim(3)));
  if (!cfg.any()) return obs;
  return apply(obs, draw_params(cfg, obs.dim(2), obs.dim(3), rng), cfg);
}

namespace {

// Applies one draw per leading index of the [B, ...] tensors in `group`.
void augment_rows(std::initializer_list<Tensor*> group, const AugmentConfig& cfg, Rng& rng) {
  Tensor& first = **group.begin();
  const int rows = first.dim(0);
  const int h = first.dim(first.rank() - 2), w = first.dim(first.rank() - 1);
  cfg.validate(std::min(h, w));
  if (!cfg.any()) return;
  diffnet::Shape row_shape(first.shape().begin() + 1, first.shape().end());
  const std::size_t row = diffnet::shape_numel(row_shape);
  for (int b = 0; b < rows; ++b) {
    const auto params = draw_params(cfg, h, w, rng);
    for (Tensor* t : group) {
      float* base = t->values().data() + b * row;
      Tensor slice(row_shape);
      std::memcpy(slice.values().data(), base, row * sizeof(float));
      const Tensor done = apply(slice, params, cfg);
      std::memcpy(base, done.values().data(), row * sizeof(float));
    }
  }
}

}  // namespace

void augment_batch(replay::SequenceBatch& batch, const AugmentConfig& cfg, Rng& rng) {
  augment_rows({&batch.observations, &batch.next_observations}, cfg, rng);
}

void augment_batch(replay::StackBatch& batch, const AugmentConfig& cfg, Rng& rng) {
  augment_rows({&batch.stacks, &batch.next_stacks}, cfg, rng);
}

}  // namespace ramavt::augment
