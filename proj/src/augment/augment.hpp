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

#include "common/rng.hpp"
#include "diffnet/tensor.hpp"
#include "replay/replay.hpp"

namespace ramavt::augment {

using diffnet::Tensor;

struct AugmentConfig {
  bool crop = false;
  bool flip = false;
  bool cutout = false;
  bool rotation = false;
  int crop_pad = 4;
  int cutout_size = 12;
  double apply_probability = 0.5;  // per transform, per sequence

  static AugmentConfig all();
  bool any() const { return crop || flip || cutout || rotation; }
  // `side` is the image side the config will be applied to.
  void validate(int side) const;
};

// One draw of transform parameters, shared by every frame of a sequence.
struct AugmentParams {
  bool crop = false;
  int crop_x = 0;  // window origin in the padded image, in [0, 2 * pad]
  int crop_y = 0;
  bool flip = false;
  bool cutout = false;
  int cutout_x = 0;
  int cutout_y = 0;
  int quarter_turns = 0;  // 0..3, counter-clockwise
};

AugmentParams draw_params(const AugmentConfig& cfg, int height, int width, Rng& rng);

// Transforms act on [..., H, W]; every leading index is treated the same.
// Replicate-pads by `pad` and takes the H x W window at (x, y) of the padded image.
Tensor crop(const Tensor& obs, int pad, int x, int y);
Tensor crop(const Tensor& obs, int pad, Rng& rng);
Tensor flip(const Tensor& obs);
Tensor cutout(const Tensor& obs, int size, int x, int y);
Tensor cutout(const Tensor& obs, int size, Rng& rng);
// Exact grid rotation by a multiple of 90 degrees (square images only).
Tensor rotate(const Tensor& obs, int degrees);

Tensor apply(const Tensor& obs, const AugmentParams& params, const AugmentConfig& cfg);

// `obs` is [L, C, H, W]; one draw applies to all L frames.
Tensor augment_sequence(const Tensor& obs, const AugmentConfig& cfg, Rng& rng);

// Augments each sequence of a batch, using the same draw for its
// observations and next observations.
void augment_batch(replay::SequenceBatch& batch, const AugmentConfig& cfg, Rng& rng);
void augment_batch(replay::StackBatch& batch, const AugmentConfig& cfg, Rng& rng);

}  // namespace ramavt::augment
