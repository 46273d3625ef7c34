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

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "blocks/layers.hpp"
#include "common/input_format.hpp"

namespace ramavt::blocks {

// RAMAVT is the full recurrent net with SE and attention; the origin
// variants drop SE and/or attention; DRLAVT is the stateless frame-stack net.
enum class Variant { kRamavt, kDrlavt, kOrigin, kOriginSe, kOriginMha };

std::string variant_name(Variant variant);
Variant parse_variant(const std::string& name);

struct ConvLayerSpec {
  int out_channels = 0;
  int kernel = 0;
  int stride = 1;
  int padding = 0;
};

// Conv plans that reduce a square input of the given side to a 4x4 grid.
// Supported sides: 16, 32, 64.
std::vector<ConvLayerSpec> default_conv_plan(int resolution);

struct QNetworkSpec {
  Variant variant = Variant::kRamavt;
  InputFormat input_format = InputFormat::kDepth;
  int resolution = 64;
  std::vector<ConvLayerSpec> conv;
  int lstm_size = 128;
  int action_count = 7;
  int heads = 8;
  int se_reduction = 16;
  int se_blocks = 3;      // SE follows the first `se_blocks` conv blocks
  int fc_size = 256;      // DRLAVT hidden layer
  int frame_stack = 4;    // DRLAVT stack depth

  static QNetworkSpec make(Variant variant, InputFormat format, int resolution = 64);

  bool has_se() const { return variant == Variant::kRamavt || variant == Variant::kOriginSe; }
  bool has_mha() const { return variant == Variant::kRamavt || variant == Variant::kOriginMha; }
  bool recurrent() const { return variant != Variant::kDrlavt; }
  // Channels of one network input (stacked channels for DRLAVT).
  int input_channels() const;
  // Side of the token grid after the conv backbone.
  int grid_side() const;
  int feature_width() const { return conv.back().out_channels; }

  void validate() const;
};

// Named tensors of one network (NetworkParams). Running batch-norm statistics
// are stored alongside trainable tensors so that checkpoints and target-copies
// carry them.
class ParamSet {
 public:
  struct Entry {
    std::string name;
    TensorPtr tensor;
    bool trainable;
  };

  void add(std::string name, TensorPtr tensor, bool trainable);
  const TensorPtr& get(const std::string& name) const;
  bool contains(const std::string& name) const;
  const std::vector<Entry>& entries() const { return entries_; }
  std::vector<TensorPtr> trainable() const;
  std::size_t trainable_scalar_count() const;

  // Bit-exact value copy from a shape-congruent set.
  void copy_from(const ParamSet& other);
  bool congruent(const ParamSet& other) const;

 private:
  std::vector<Entry> entries_;
};

struct RecurrentState {
  Tensor h;
  Tensor c;

  static RecurrentState zeros(int batch, int size);
};

// Activations recorded during a forward pass, keyed by layer name
// (conv1..conv4, mha), each shaped [N, C, H, W].
struct Captures {
  std::vector<std::pair<std::string, Tensor>> layers;
  const Tensor* find(const std::string& name) const;
};

class QNetwork {
 public:
  QNetwork(QNetworkSpec spec, std::uint64_t seed);

  QNetwork(const QNetwork&) = delete;
  QNetwork& operator=(const QNetwork&) = delete;

  // Deep copy with identical parameter values.
  std::unique_ptr<QNetwork> clone() const;

  const QNetworkSpec& spec() const { return spec_; }
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }

  // Recurrent variants. `frames` is [steps*batch, C, H, W] in time-major
  // order; the recurrence starts from a zero state. Returns Q [steps*batch, A].
  TensorPtr forward_sequence(Tape* tape, const TensorPtr& frames, int batch, int steps, NormMode mode,
                             Captures* captures = nullptr);

  // DRLAVT. `stacks` is [N, frame_stack*C, H, W]. Returns Q [N, A].
  TensorPtr forward_stacked(Tape* tape, const TensorPtr& stacks, NormMode mode, Captures* captures = nullptr);

  struct StepResult {
    std::vector<float> q;
    RecurrentState state;
  };

  // Single-observation inference with running statistics; no tape, no
  // parameter mutation. `observation` is [C, H, W].
  StepResult ramavt_forward(const Tensor& observation, const RecurrentState& state,
                            Captures* captures = nullptr) const;
  // `stack` is [frame_stack*C, H, W].
  std::vector<float> drlavt_forward(const Tensor& stack, Captures* captures = nullptr) const;

  // Direct access to the building blocks (used by tests and grad checks).
  std::vector<ConvBlockParams>& conv_blocks() { return conv_blocks_; }
  const MHAParams* mha() const { return mha_ ? &*mha_ : nullptr; }
  const diffnet::LstmParams& lstm() const { return lstm_; }

 private:
  TensorPtr backbone(Tape* tape, const TensorPtr& x, std::vector<ConvBlockParams>& blocks, NormMode mode,
                     Captures* captures, bool check_finite) const;
  TensorPtr recurrent_head(Tape* tape, const TensorPtr& features, int batch, int steps,
                           const TensorPtr& h0, const TensorPtr& c0, TensorPtr* h_last, TensorPtr* c_last) const;

  QNetworkSpec spec_;
  ParamSet params_;
  std::vector<ConvBlockParams> conv_blocks_;
  std::optional<MHAParams> mha_;
  diffnet::LstmParams lstm_;
  TensorPtr fc_weight_, fc_bias_;
  TensorPtr head_weight_, head_bias_;
};

// Expected trainable parameter count of a QNetworkSpec, from layer arithmetic alone.
std::size_t expected_parameter_count(const QNetworkSpec& spec);

}  // namespace ramavt::blocks
