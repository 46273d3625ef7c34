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

#include "blocks/layers.hpp"

#include "common/error.hpp"

namespace ramavt::blocks {

using namespace diffnet;

TensorPtr se_gate(Tape* tape, const TensorPtr& x, const SELayerParams& p) {
  RAMAVT_REQUIRE(x->rank() == 4 && p.reduce_weight->rank() == 2 && x->dim(1) == p.reduce_weight->dim(0),
          ErrorKind::kShape,
          "se_forward: input " + shape_string(x->shape()) + " does not match SE weight " +
              shape_string(p.reduce_weight->shape()));
  auto squeezed = global_avg_pool(tape, x);
  auto hidden = relu(tape, dense(tape, squeezed, p.reduce_weight, p.reduce_bias));
  return sigmoid(tape, dense(tape, hidden, p.expand_weight, p.expand_bias));
}

TensorPtr se_forward(Tape* tape, const TensorPtr& x, const SELayerParams& p) {
  return channel_scale(tape, x, se_gate(tape, x, p));
}

TensorPtr mha_forward(Tape* tape, const TensorPtr& x, const MHAParams& p, Tensor* weights) {
  RAMAVT_REQUIRE(x->rank() == 2 || x->rank() == 3, ErrorKind::kShape,
          "mha_forward: expected [P, D] or [B, P, D], got " + shape_string(x->shape()));
  RAMAVT_REQUIRE(x->dim(-2) >= 1, ErrorKind::kEmpty, "mha_forward: empty token sequence");
  RAMAVT_REQUIRE(p.w_q->dim(0) == x->dim(-1), ErrorKind::kShape,
          "mha_forward: token width " + std::to_string(x->dim(-1)) + " != projection input " +
              std::to_string(p.w_q->dim(0)));
  RAMAVT_REQUIRE(p.heads * p.key_dim == p.w_q->dim(1), ErrorKind::kShape,
          "mha_forward: heads * key_dim must equal the projection width");
  const bool batched = x->rank() == 3;
  TensorPtr tokens = batched ? x : reshape(tape, x, {1, x->dim(0), x->dim(1)});
  auto q = matmul(tape, tokens, p.w_q);
  auto k = matmul(tape, tokens, p.w_k);
  auto v = matmul(tape, tokens, p.w_v);
  auto heads = multi_head_attention(tape, q, k, v, p.heads, weights);
  auto out = matmul(tape, heads, p.w_o);
  return batched ? out : reshape(tape, out, {x->dim(0), out->dim(2)});
}

TensorPtr conv_block(Tape* tape, const TensorPtr& x, ConvBlockParams& p, bool with_se, NormMode mode) {
  auto y = conv2d(tape, x, p.kernel, p.bias, p.geometry);
  y = relu(tape, batchnorm2d(tape, y, p.gamma, p.beta, p.stats, mode));
  if (with_se && p.se) y = se_forward(tape, y, *p.se);
  return y;
}

}  // namespace ramavt::blocks
