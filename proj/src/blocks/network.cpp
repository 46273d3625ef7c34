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

#include "blocks/network.hpp"

#include <cmath>

#include "common/error.hpp"
#include "common/rng.hpp"

namespace ramavt::blocks {

using namespace diffnet;

std::string variant_name(Variant variant) {
  switch (variant) {
    case Variant::kRamavt: return "ramavt";
    case Variant::kDrlavt: return "drlavt";
    case Variant::kOrigin: return "origin";
    case Variant::kOriginSe: return "origin+se";
    case Variant::kOriginMha: return "origin+mha";
  }
  return "?";
}

Variant parse_variant(const std::string& name) {
  for (Variant v : {Variant::kRamavt, Variant::kDrlavt, Variant::kOrigin, Variant::kOriginSe, Variant::kOriginMha}) {
    if (variant_name(v) == name) return v;
  }
  fail(ErrorKind::kParse, "unknown network variant '" + name +
                              "' (expected ramavt, drlavt, origin, origin+se or origin+mha)");
}

std::vector<ConvLayerSpec> default_conv_plan(int resolution) {
  switch (resolution) {
    case 64: return {{32, 8, 4, 2}, {64, 4, 2, 1}, {64, 3, 1, 0}, {64, 3, 1, 0}};
    case 32: return {{32, 4, 2, 1}, {64, 4, 2, 1}, {64, 3, 1, 0}, {64, 3, 1, 0}};
    case 16: return {{32, 3, 2, 1}, {64, 3, 1, 1}, {64, 3, 1, 0}, {64, 3, 1, 0}};
    default:
      fail(ErrorKind::kInvalidArgument,
           "no conv plan for resolution " + std::to_string(resolution) + " (supported: 16, 32, 64)");
  }
}

QNetworkSpec QNetworkSpec::make(Variant variant, InputFormat format, int resolution) {
  QNetworkSpec spec;
  spec.variant = variant;
  spec.input_format = format;
  spec.resolution = resolution;
  spec.conv = default_conv_plan(resolution);
  return spec;
}

int QNetworkSpec::input_channels() const {
  const int c = ramavt::input_channels(input_format);
  return variant == Variant::kDrlavt ? c * frame_stack : c;
}

int QNetworkSpec::grid_side() const {
  int side = resolution;
  for (const auto& layer : conv) side = conv_output_extent(side, layer.kernel, layer.stride, layer.padding);
  return side;
}

void QNetworkSpec::validate() const {
  RAMAVT_REQUIRE(!conv.empty(), ErrorKind::kInvalidArgument, "network spec has no conv layers");
  RAMAVT_REQUIRE(grid_side() >= 1, ErrorKind::kShape,
          "conv plan collapses a " + std::to_string(resolution) + "px input to nothing");
  RAMAVT_REQUIRE(lstm_size > 0 && action_count > 0 && fc_size > 0 && frame_stack > 0, ErrorKind::kInvalidArgument,
          "network sizes must be positive");
  if (has_mha()) {
    RAMAVT_REQUIRE(heads > 0 && feature_width() % heads == 0, ErrorKind::kShape,
            "feature width " + std::to_string(feature_width()) + " is not divisible by " +
                std::to_string(heads) + " heads");
  }
  if (has_se()) {
    RAMAVT_REQUIRE(se_blocks >= 0 && se_blocks <= static_cast<int>(conv.size()), ErrorKind::kInvalidArgument,
            "se_blocks out of range");
    for (int i = 0; i < se_blocks; ++i) {
      RAMAVT_REQUIRE(conv[i].out_channels % se_reduction == 0, ErrorKind::kShape,
              "conv" + std::to_string(i + 1) + " channels not divisible by SE reduction");
    }
  }
}

void ParamSet::add(std::string name, TensorPtr tensor, bool trainable) {
  RAMAVT_REQUIRE(!contains(name), ErrorKind::kInvalidArgument, "duplicate parameter " + name);
  tensor->set_requires_grad(trainable);
  entries_.push_back({std::move(name), std::move(tensor), trainable});
}

const TensorPtr& ParamSet::get(const std::string& name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return e.tensor;
  }
  fail(ErrorKind::kInvalidArgument, "no parameter named " + name);
}

bool ParamSet::contains(const std::string& name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return true;
  }
  return false;
}

std::vector<TensorPtr> ParamSet::trainable() const {
  std::vector<TensorPtr> out;
  for (const auto& e : entries_) {
    if (e.trainable) out.push_back(e.tensor);
  }
  return out;
}

std::size_t ParamSet::trainable_scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) {
    if (e.trainable) n += e.tensor->size();
  }
  return n;
}

bool ParamSet::congruent(const ParamSet& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].name != other.entries_[i].name) return false;
    if (entries_[i].tensor->shape() != other.entries_[i].tensor->shape()) return false;
  }
  return true;
}

void ParamSet::copy_from(const ParamSet& other) {
  RAMAVT_REQUIRE(congruent(other), ErrorKind::kShape, "parameter sets differ in layout");
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    entries_[i].tensor->values() = other.entries_[i].tensor->values();
  }
}

RecurrentState RecurrentState::zeros(int batch, int size) {
  return {Tensor({batch, size}), Tensor({batch, size})};
}

const Tensor* Captures::find(const std::string& name) const {
  for (const auto& [n, t] : layers) {
    if (n == name) return &t;
  }
  return nullptr;
}

namespace {

// Uniform(-b, b) with b = sqrt(6 / fan_in) for layers feeding a relu and
// b = 1 / sqrt(fan_in) otherwise.
TensorPtr init_uniform(Rng& rng, Shape shape, double bound) {
  std::vector<float> v(shape_numel(shape));
  for (auto& x : v) x = static_cast<float>(uniform(rng, -bound, bound));
  return make_param(std::move(shape), std::move(v));
}

TensorPtr init_const(Shape shape, float value) {
  return make_param(shape, std::vector<float>(shape_numel(shape), value));
}

void check_finite(const TensorPtr& t, const std::string& layer) {
  RAMAVT_REQUIRE(t->all_finite(), ErrorKind::kNumeric, "non-finite activation in layer " + layer);
}

}  // namespace

QNetwork::QNetwork(QNetworkSpec spec, std::uint64_t seed) : spec_(std::move(spec)) {
  spec_.validate();
  Rng rng(seed);
  int channels = spec_.input_channels();
  for (std::size_t i = 0; i < spec_.conv.size(); ++i) {
    const auto& layer = spec_.conv[i];
    const std::string prefix = "conv" + std::to_string(i + 1);
    const int fan_in = channels * layer.kernel * layer.kernel;
    ConvBlockParams block;
    block.kernel = init_uniform(rng, {layer.out_channels, channels, layer.kernel, layer.kernel},
                                std::sqrt(6.0 / fan_in));
    block.bias = init_const({layer.out_channels}, 0.0f);
    block.gamma = init_const({layer.out_channels}, 1.0f);
    block.beta = init_const({layer.out_channels}, 0.0f);
    block.stats.running_mean = make_tensor({layer.out_channels}, 0.0f);
    block.stats.running_var = make_tensor({layer.out_channels}, 1.0f);
    block.geometry = {layer.stride, layer.padding};
    params_.add(prefix + ".kernel", block.kernel, true);
    params_.add(prefix + ".bias", block.bias, true);
    params_.add(prefix + ".gamma", block.gamma, true);
    params_.add(prefix + ".beta", block.beta, true);
    params_.add(prefix + ".running_mean", block.stats.running_mean, false);
    params_.add(prefix + ".running_var", block.stats.running_var, false);
    if (spec_.has_se() && static_cast<int>(i) < spec_.se_blocks) {
      const int c = layer.out_channels;
      const int hidden = c / spec_.se_reduction;
      SELayerParams se;
      se.reduction = spec_.se_reduction;
      se.reduce_weight = init_uniform(rng, {c, hidden}, std::sqrt(6.0 / c));
      se.reduce_bias = init_const({hidden}, 0.0f);
      se.expand_weight = init_uniform(rng, {hidden, c}, 1.0 / std::sqrt(hidden));
      se.expand_bias = init_const({c}, 0.0f);
      params_.add(prefix + ".se.reduce_weight", se.reduce_weight, true);
      params_.add(prefix + ".se.reduce_bias", se.reduce_bias, true);
      params_.add(prefix + ".se.expand_weight", se.expand_weight, true);
      params_.add(prefix + ".se.expand_bias", se.expand_bias, true);
      block.se = std::move(se);
    }
    conv_blocks_.push_back(std::move(block));
    channels = layer.out_channels;
  }

  const int d = spec_.feature_width();
  const int side = spec_.grid_side();
  if (spec_.has_mha()) {
    MHAParams mha;
    mha.heads = spec_.heads;
    mha.key_dim = d / spec_.heads;
    const double b = 1.0 / std::sqrt(d);
    mha.w_q = init_uniform(rng, {d, d}, b);
    mha.w_k = init_uniform(rng, {d, d}, b);
    mha.w_v = init_uniform(rng, {d, d}, b);
    mha.w_o = init_uniform(rng, {d, d}, b);
    params_.add("mha.w_q", mha.w_q, true);
    params_.add("mha.w_k", mha.w_k, true);
    params_.add("mha.w_v", mha.w_v, true);
    params_.add("mha.w_o", mha.w_o, true);
    mha_ = std::move(mha);
  }

  int head_in = 0;
  if (spec_.recurrent()) {
    const int s = spec_.lstm_size;
    const double b = 1.0 / std::sqrt(s);
    lstm_.w_input = init_uniform(rng, {d, 4 * s}, b);
    lstm_.w_hidden = init_uniform(rng, {s, 4 * s}, b);
    lstm_.bias = init_const({4 * s}, 0.0f);
    // Forget-gate bias 1 keeps early gradients flowing through the cell.
    for (int j = s; j < 2 * s; ++j) (*lstm_.bias)[j] = 1.0f;
    params_.add("lstm.w_input", lstm_.w_input, true);
    params_.add("lstm.w_hidden", lstm_.w_hidden, true);
    params_.add("lstm.bias", lstm_.bias, true);
    head_in = s;
  } else {
    const int flat = d * side * side;
    fc_weight_ = init_uniform(rng, {flat, spec_.fc_size}, std::sqrt(6.0 / flat));
    fc_bias_ = init_const({spec_.fc_size}, 0.0f);
    params_.add("fc.weight", fc_weight_, true);
    params_.add("fc.bias", fc_bias_, true);
    head_in = spec_.fc_size;
  }
  head_weight_ = init_uniform(rng, {head_in, spec_.action_count}, 1.0 / std::sqrt(head_in));
  head_bias_ = init_const({spec_.action_count}, 0.0f);
  params_.add("head.weight", head_weight_, true);
  params_.add("head.bias", head_bias_, true);
}

std::unique_ptr<QNetwork> QNetwork::clone() const {
  auto copy = std::make_unique<QNetwork>(spec_, 0);
  copy->params_.copy_from(params_);
  return copy;
}

TensorPtr QNetwork::backbone(Tape* tape, const TensorPtr& x, std::vector<ConvBlockParams>& blocks, NormMode mode,
                             Captures* captures, bool finite_checks) const {
  RAMAVT_REQUIRE(x->rank() == 4 && x->dim(1) == spec_.input_channels() && x->dim(2) == spec_.resolution &&
              x->dim(3) == spec_.resolution,
          ErrorKind::kShape,
          "network input " + shape_string(x->shape()) + " does not match [N, " +
              std::to_string(spec_.input_channels()) + ", " + std::to_string(spec_.resolution) + ", " +
              std::to_string(spec_.resolution) + "]");
  TensorPtr y = x;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const bool with_se = spec_.has_se() && static_cast<int>(i) < spec_.se_blocks;
    y = conv_block(tape, y, blocks[i], with_se, mode);
    const std::string name = "conv" + std::to_string(i + 1);
    if (finite_checks) check_finite(y, name);
    if (captures) captures->layers.emplace_back(name, *y);
  }
  return y;
}

TensorPtr QNetwork::recurrent_head(Tape* tape, const TensorPtr& features, int batch, int steps,
                                   const TensorPtr& h0, const TensorPtr& c0, TensorPtr* h_last,
                                   TensorPtr* c_last) const {
  TensorPtr h = h0;
  TensorPtr c = c0;
  std::vector<TensorPtr> outputs;
  outputs.reserve(steps);
  for (int t = 0; t < steps; ++t) {
    auto x = steps == 1 ? features : slice_rows(tape, features, t * batch, batch);
    std::tie(h, c) = lstm_step(tape, x, h, c, lstm_);
    outputs.push_back(h);
  }
  if (h_last) *h_last = h;
  if (c_last) *c_last = c;
  auto hidden = steps == 1 ? outputs[0] : concat_rows(tape, outputs);
  return dense(tape, hidden, head_weight_, head_bias_);
}

TensorPtr QNetwork::forward_sequence(Tape* tape, const TensorPtr& frames, int batch, int steps, NormMode mode,
                                     Captures* captures) {
  RAMAVT_REQUIRE(spec_.recurrent(), ErrorKind::kInvalidArgument, "forward_sequence needs a recurrent variant");
  RAMAVT_REQUIRE(batch >= 1 && steps >= 1 && frames->rank() == 4 && frames->dim(0) == batch * steps,
          ErrorKind::kShape,
          "forward_sequence: " + shape_string(frames->shape()) + " is not " + std::to_string(steps) + " x " +
              std::to_string(batch) + " frames");
  auto y = backbone(tape, frames, conv_blocks_, mode, captures, false);
  const int side = y->dim(2);
  auto tokens = to_tokens(tape, y);
  if (mha_) {
    tokens = mha_forward(tape, tokens, *mha_);
    if (captures) captures->layers.emplace_back("mha", *from_tokens(nullptr, tokens, side, side));
  }
  auto pooled = mean_tokens(tape, tokens);
  auto zero = make_tensor({batch, spec_.lstm_size}, 0.0f);
  return recurrent_head(tape, pooled, batch, steps, zero, zero, nullptr, nullptr);
}

TensorPtr QNetwork::forward_stacked(Tape* tape, const TensorPtr& stacks, NormMode mode, Captures* captures) {
  RAMAVT_REQUIRE(!spec_.recurrent(), ErrorKind::kInvalidArgument, "forward_stacked needs the frame-stack variant");
  auto y = backbone(tape, stacks, conv_blocks_, mode, captures, false);
  auto hidden = relu(tape, dense(tape, flatten(tape, y), fc_weight_, fc_bias_));
  return dense(tape, hidden, head_weight_, head_bias_);
}

QNetwork::StepResult QNetwork::ramavt_forward(const Tensor& observation, const RecurrentState& state,
                                              Captures* captures) const {
  RAMAVT_REQUIRE(spec_.recurrent(), ErrorKind::kInvalidArgument, "ramavt_forward needs a recurrent variant");
  RAMAVT_REQUIRE(observation.rank() == 3, ErrorKind::kShape,
          "observation must be [C, H, W], got " + shape_string(observation.shape()));
  const Shape state_shape{1, spec_.lstm_size};
  RAMAVT_REQUIRE(state.h.shape() == state_shape && state.c.shape() == state_shape, ErrorKind::kShape,
          "recurrent state must be " + shape_string(state_shape));
  auto x = make_tensor({1, observation.dim(0), observation.dim(1), observation.dim(2)}, observation.values());
  // Eval-mode batch norm only reads the running statistics.
  auto& blocks = const_cast<std::vector<ConvBlockParams>&>(conv_blocks_);
  auto y = backbone(nullptr, x, blocks, NormMode::kEval, captures, true);
  const int side = y->dim(2);
  auto tokens = to_tokens(nullptr, y);
  if (mha_) {
    tokens = mha_forward(nullptr, tokens, *mha_);
    check_finite(tokens, "mha");
    if (captures) captures->layers.emplace_back("mha", *from_tokens(nullptr, tokens, side, side));
  }
  auto pooled = mean_tokens(nullptr, tokens);
  TensorPtr h, c;
  auto q = recurrent_head(nullptr, pooled, 1, 1, make_tensor(state_shape, state.h.values()),
                          make_tensor(state_shape, state.c.values()), &h, &c);
  check_finite(h, "lstm");
  check_finite(q, "head");
  return {q->to_vector(), {*h, *c}};
}

std::vector<float> QNetwork::drlavt_forward(const Tensor& stack, Captures* captures) const {
  RAMAVT_REQUIRE(!spec_.recurrent(), ErrorKind::kInvalidArgument, "drlavt_forward needs the frame-stack variant");
  RAMAVT_REQUIRE(stack.rank() == 3 && stack.dim(0) == spec_.input_channels(), ErrorKind::kShape,
          "frame stack must be [" + std::to_string(spec_.input_channels()) + ", H, W] (" +
              std::to_string(spec_.frame_stack) + " frames), got " + shape_string(stack.shape()));
  auto x = make_tensor({1, stack.dim(0), stack.dim(1), stack.dim(2)}, stack.values());
  auto& blocks = const_cast<std::vector<ConvBlockParams>&>(conv_blocks_);
  auto y = backbone(nullptr, x, blocks, NormMode::kEval, captures, true);
  auto hidden = relu(nullptr, dense(nullptr, flatten(nullptr, y), fc_weight_, fc_bias_));
  check_finite(hidden, "fc");
  auto q = dense(nullptr, hidden, head_weight_, head_bias_);
  check_finite(q, "head");
  return q->to_vector();
}

std::size_t expected_parameter_count(const QNetworkSpec& spec) {
  std::size_t n = 0;
  std::size_t channels = spec.input_channels();
  for (std::size_t i = 0; i < spec.conv.size(); ++i) {
    const auto& l = spec.conv[i];
    const std::size_t f = l.out_channels;
    n += f * channels * l.kernel * l.kernel + f;  // kernel + bias
    n += 2 * f;                                   // gamma + beta
    if (spec.has_se() && static_cast<int>(i) < spec.se_blocks) {
      const std::size_t r = f / spec.se_reduction;
      n += f * r + r + r * f + f;
    }
    channels = f;
  }
  const std::size_t d = spec.feature_width();
  if (spec.has_mha()) n += 4 * d * d;
  std::size_t head_in;
  if (spec.recurrent()) {
    const std::size_t s = spec.lstm_size;
    n += d * 4 * s + s * 4 * s + 4 * s;
    head_in = s;
  } else {
    const std::size_t side = spec.grid_side();
    n += d * side * side * spec.fc_size + spec.fc_size;
    head_in = spec.fc_size;
  }
  n += head_in * spec.action_count + spec.action_count;
  return n;
}

}  // namespace ramavt::blocks
