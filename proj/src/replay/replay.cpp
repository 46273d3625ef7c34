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

#include "replay/replay.hpp"

#include <algorithm>
#include <cmath>

#include "common/error.hpp"

namespace ramavt::replay {

namespace {

constexpr float kScale = 65535.0f;

std::uint16_t encode(float v) {
  return static_cast<std::uint16_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * kScale));
}

float decode(std::uint16_t v) { return static_cast<float>(v) / kScale; }

}  // namespace

EpisodeRecord::EpisodeRecord(Shape frame_shape)
    : frame_shape_(std::move(frame_shape)), frame_size_(diffnet::shape_numel(frame_shape_)) {}

float EpisodeRecord::quantize(float v) { return decode(encode(v)); }

void EpisodeRecord::begin(const Tensor& first) {
  require(first.shape() == frame_shape_, ErrorKind::kShape,
          "episode frame " + diffnet::shape_string(first.shape()) + " != " + diffnet::shape_string(frame_shape_));
  require(frames_.empty(), ErrorKind::kInvalidArgument, "episode already started");
  for (float v : first.values()) frames_.push_back(encode(v));
}

void EpisodeRecord::append(int action, float reward, bool terminal, const Tensor& next) {
  require(!frames_.empty(), ErrorKind::kInvalidArgument, "episode not started");
  require(next.shape() == frame_shape_, ErrorKind::kShape, "episode frame shape changed mid-episode");
  require(!ends_terminal(), ErrorKind::kInvalidArgument, "episode already ended in a terminal transition");
  actions_.push_back(action);
  rewards_.push_back(reward);
  terminals_.push_back(terminal ? 1 : 0);
  for (float v : next.values()) frames_.push_back(encode(v));
}

void EpisodeRecord::read_frame(int t, float* dst) const {
  require(t >= 0 && t <= length(), ErrorKind::kInvalidArgument, "frame index outside the episode");
  const std::uint16_t* src = frames_.data() + static_cast<std::size_t>(t) * frame_size_;
  for (std::size_t i = 0; i < frame_size_; ++i) dst[i] = decode(src[i]);
}

Tensor EpisodeRecord::frame(int t) const {
  Tensor out(frame_shape_);
  read_frame(t, out.data().data());
  return out;
}

ReplayPool::ReplayPool(std::size_t capacity) : capacity_(capacity) {
  require(capacity > 0, ErrorKind::kInvalidArgument, "replay capacity must be positive");
}

void ReplayPool::push_episode(EpisodeRecord episode) {
  require(!episode.empty(), ErrorKind::kEmpty, "cannot store an empty episode");
  if (!episodes_.empty()) {
    require(episode.frame_shape() == episodes_.front().record.frame_shape(), ErrorKind::kShape,
            "episode frame shape differs from the pool");
  }
  total_ += static_cast<std::size_t>(episode.length());
  episodes_.push_back({next_id_++, std::move(episode)});
  // The newest episode is kept even when it alone exceeds the capacity.
  while (total_ > capacity_ && episodes_.size() > 1) {
    total_ -= static_cast<std::size_t>(episodes_.front().record.length());
    episodes_.pop_front();
  }
}

SequenceBatch ReplayPool::sample_sequences(int batch, int steps, Rng& rng) const {
  require(!episodes_.empty(), ErrorKind::kEmpty, "cannot sample from an empty replay pool");
  require(batch > 0 && steps > 0, ErrorKind::kInvalidArgument, "batch and sequence length must be positive");
  const Shape& fs = episodes_.front().record.frame_shape();
  const std::size_t frame = diffnet::shape_numel(fs);
  Shape shape{batch, steps};
  shape.insert(shape.end(), fs.begin(), fs.end());

  SequenceBatch out;
  out.batch = batch;
  out.steps = steps;
  out.observations = Tensor(shape);
  out.next_observations = Tensor(shape);
  const std::size_t cells = static_cast<std::size_t>(batch) * steps;
  out.actions.resize(cells);
  out.rewards.resize(cells);
  out.terminals.resize(cells);
  out.mask.resize(cells);
  for (int b = 0; b < batch; ++b) {
    const std::size_t which = static_cast<std::size_t>(uniform_int(rng, static_cast<int>(episodes_.size())));
    const auto& ep = episodes_[which].record;
    const int len = ep.length();
    const int start = len >= steps ? uniform_int(rng, len - steps + 1) : 0;
    out.episode_ids.push_back(episodes_[which].id);
    out.starts.push_back(start);
    for (int t = 0; t < steps; ++t) {
      const bool real = start + t < len;
      const int s = real ? start + t : len - 1;
      const std::size_t cell = static_cast<std::size_t>(b) * steps + t;
      ep.read_frame(s, out.observations.data().data() + cell * frame);
      ep.read_frame(s + 1, out.next_observations.data().data() + cell * frame);
      out.actions[cell] = ep.action(s);
      out.rewards[cell] = ep.reward(s);
      out.terminals[cell] = ep.terminal(s) ? 1.0f : 0.0f;
      out.mask[cell] = real ? 1.0f : 0.0f;
    }
  }
  return out;
}

StackBatch ReplayPool::sample_stacks(int batch, int stack, Rng& rng) const {
  require(!episodes_.empty(), ErrorKind::kEmpty, "cannot sample from an empty replay pool");
  require(batch > 0 && stack > 0, ErrorKind::kInvalidArgument, "batch and stack depth must be positive");
  const Shape& fs = episodes_.front().record.frame_shape();
  const std::size_t frame = diffnet::shape_numel(fs);
  const Shape shape{batch, stack * fs[0], fs[1], fs[2]};
  StackBatch out;
  out.batch = batch;
  out.stacks = Tensor(shape);
  out.next_stacks = Tensor(shape);
  for (int b = 0; b < batch; ++b) {
    const std::size_t which = static_cast<std::size_t>(uniform_int(rng, static_cast<int>(episodes_.size())));
    const auto& ep = episodes_[which].record;
    const int t = uniform_int(rng, ep.length());
    float* dst = out.stacks.data().data() + static_cast<std::size_t>(b) * stack * frame;
    float* next = out.next_stacks.data().data() + static_cast<std::size_t>(b) * stack * frame;
    // Oldest frame first; the newest frame sits in the last slot.
    for (int k = 0; k < stack; ++k) {
      ep.read_frame(std::max(0, t - (stack - 1) + k), dst + k * frame);
      ep.read_frame(std::max(0, t + 1 - (stack - 1) + k), next + k * frame);
    }
    out.actions.push_back(ep.action(t));
    out.rewards.push_back(ep.reward(t));
    out.terminals.push_back(ep.terminal(t) ? 1.0f : 0.0f);
    out.episode_ids.push_back(episodes_[which].id);
    out.steps.push_back(t);
  }
  return out;
}

}  // namespace ramavt::replay
