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

#include <utility>
#include <vector>

#include "diffnet/tape.hpp"
#include "diffnet/tensor.hpp"

// Differentiable primitives. Every op takes an optional tape; when the tape is
// non-null and some operand requires a gradient the op is recorded, otherwise
// it runs as plain inference.
namespace ramavt::diffnet {

enum class Activation { kRelu, kSigmoid, kTanh };
enum class NormMode { kTrain, kEval };

struct Conv2dGeometry {
  int stride = 1;
  int padding = 0;
};

// Output extent of a convolution along one axis.
int conv_output_extent(int extent, int kernel, int stride, int padding);

// Running statistics owned by a batch-norm layer.
struct BatchNormStats {
  TensorPtr running_mean;
  TensorPtr running_var;
  float momentum = 0.1f;
  float epsilon = 1e-5f;
};

TensorPtr add(Tape* tape, const TensorPtr& a, const TensorPtr& b);
TensorPtr sub(Tape* tape, const TensorPtr& a, const TensorPtr& b);
TensorPtr mul(Tape* tape, const TensorPtr& a, const TensorPtr& b);
TensorPtr scale(Tape* tape, const TensorPtr& a, float factor);
TensorPtr sum(Tape* tape, const TensorPtr& a);
TensorPtr mean(Tape* tape, const TensorPtr& a);

TensorPtr activation(Tape* tape, const TensorPtr& x, Activation kind);
inline TensorPtr relu(Tape* t, const TensorPtr& x) { return activation(t, x, Activation::kRelu); }
inline TensorPtr sigmoid(Tape* t, const TensorPtr& x) { return activation(t, x, Activation::kSigmoid); }
inline TensorPtr tanh(Tape* t, const TensorPtr& x) { return activation(t, x, Activation::kTanh); }

// Softmax along `axis` with max subtraction.
TensorPtr softmax(Tape* tape, const TensorPtr& x, int axis);

// x[..., D] · w[D, E] -> [..., E]
TensorPtr matmul(Tape* tape, const TensorPtr& x, const TensorPtr& w);
// x[..., D] · w[D, E] + b[E]
TensorPtr dense(Tape* tape, const TensorPtr& x, const TensorPtr& w, const TensorPtr& b);

// Cross-correlation of x[N,C,H,W] with kernel[F,C,kH,kW] plus bias[F].
TensorPtr conv2d(Tape* tape, const TensorPtr& x, const TensorPtr& kernel, const TensorPtr& bias,
                 Conv2dGeometry geometry);

// Per-channel normalisation over N,H,W. Train mode updates `stats`.
TensorPtr batchnorm2d(Tape* tape, const TensorPtr& x, const TensorPtr& gamma, const TensorPtr& beta,
                      BatchNormStats& stats, NormMode mode);

// [N,C,H,W] -> [N,C] spatial mean.
TensorPtr global_avg_pool(Tape* tape, const TensorPtr& x);
// x[N,C,H,W] scaled per channel by s[N,C].
TensorPtr channel_scale(Tape* tape, const TensorPtr& x, const TensorPtr& s);
// [N,C,H,W] -> [N,H*W,C]
TensorPtr to_tokens(Tape* tape, const TensorPtr& x);
// [N,P,D] -> [N,D,H,W] with P = H*W; inverse of to_tokens.
TensorPtr from_tokens(Tape* tape, const TensorPtr& tokens, int height, int width);
// [N,P,D] -> [N,D] mean over positions.
TensorPtr mean_tokens(Tape* tape, const TensorPtr& tokens);
// Copying reshape.
TensorPtr reshape(Tape* tape, const TensorPtr& x, Shape shape);
// [N, ...] -> [N, prod(...)]
TensorPtr flatten(Tape* tape, const TensorPtr& x);

// Rows [start, start+count) of the leading axis.
TensorPtr slice_rows(Tape* tape, const TensorPtr& x, int start, int count);
// Concatenation along the leading axis.
TensorPtr concat_rows(Tape* tape, const std::vector<TensorPtr>& parts);

// q[N,A] -> [N] picking q[n, index[n]].
TensorPtr gather(Tape* tape, const TensorPtr& q, const std::vector<int>& index);
// sum(mask * (pred - target)^2) / sum(mask); target is treated as a constant.
TensorPtr masked_squared_error(Tape* tape, const TensorPtr& pred, const std::vector<float>& target,
                               const std::vector<float>& mask);
// mean((pred - target)^2) with a constant target.
TensorPtr mse(Tape* tape, const TensorPtr& pred, const std::vector<float>& target);

// Scaled dot-product attention split across `heads` column blocks of width
// D/heads. q,k,v are [N,P,D]. When `weights` is non-null it receives the
// row-stochastic attention matrices as [N,heads,P,P].
TensorPtr multi_head_attention(Tape* tape, const TensorPtr& q, const TensorPtr& k,
                               const TensorPtr& v, int heads, Tensor* weights = nullptr);

struct LstmParams {
  TensorPtr w_input;   // [D, 4S], gate blocks i, f, g, o
  TensorPtr w_hidden;  // [S, 4S]
  TensorPtr bias;      // [4S]
};

// One LSTM cell step. Returns (h', c').
std::pair<TensorPtr, TensorPtr> lstm_step(Tape* tape, const TensorPtr& x, const TensorPtr& h,
                                          const TensorPtr& c, const LstmParams& params);

}  // namespace ramavt::diffnet
