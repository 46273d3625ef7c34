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

#include <optional>

#include "diffnet/ops.hpp"

namespace ramavt::blocks {

using diffnet::NormMode;
using diffnet::Tape;
using diffnet::Tensor;
using diffnet::TensorPtr;

// Squeeze-and-excitation gate: s = sigmoid(W2 relu(W1 gap(x) + b1) + b2),
// output = x scaled per channel by s.
struct SELayerParams {
  TensorPtr reduce_weight;  // [C, C/r]
  TensorPtr reduce_bias;    // [C/r]
  TensorPtr expand_weight;  // [C/r, C]
  TensorPtr expand_bias;    // [C]
  int reduction = 16;
};

// Excitation factors s[N,C] for x[N,C,H,W].
TensorPtr se_gate(Tape* tape, const TensorPtr& x, const SELayerParams& p);
TensorPtr se_forward(Tape* tape, const TensorPtr& x, const SELayerParams& p);

// Multi-head self-attention. Head i uses columns [i*d_k, (i+1)*d_k) of the
// packed projections.
struct MHAParams {
  TensorPtr w_q;  // [D, N*d_k]
  TensorPtr w_k;  // [D, N*d_k]
  TensorPtr w_v;  // [D, N*d_k]
  TensorPtr w_o;  // [N*d_k, D]
  int heads = 8;
  int key_dim = 8;
};

// x is [P, D] or [B, P, D]; output has the same shape. `weights` receives the
// per-head attention matrices [B, heads, P, P] when requested.
TensorPtr mha_forward(Tape* tape, const TensorPtr& x, const MHAParams& p, Tensor* weights = nullptr);

struct ConvBlockParams {
  TensorPtr kernel;  // [F, C, k, k]
  TensorPtr bias;    // [F]
  TensorPtr gamma;   // [F]
  TensorPtr beta;    // [F]
  diffnet::BatchNormStats stats;
  diffnet::Conv2dGeometry geometry;
  std::optional<SELayerParams> se;
};

// relu(batchnorm(conv2d(x))), followed by the SE gate when `with_se` is set
// and the block carries SE parameters.
TensorPtr conv_block(Tape* tape, const TensorPtr& x, ConvBlockParams& p, bool with_se, NormMode mode);

}  // namespace ramavt::blocks
