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
#include <deque>
#include <vector>

#include "common/rng.hpp"
#include "diffnet/tensor.hpp"

namespace ramavt::replay {

using diffnet::Shape;
using diffnet::Tensor;

// One episode: observations o_0..o_T (T + 1 frames) and the T transitions
// taken from them. Frames are kept as 16-bit fixed point over [0, 1].
class EpisodeRecord {
 public:
  explicit EpisodeRecord(Shape frame_shape);

  // Starts the episode with o_0.
  void begin(const Tensor& first_observation);
  // Appends (a_t, r_t, terminal_t) and o_{t+1}.
  void append(int action, float reward, bool terminal, const Tensor& next_observation);

  int length() const { return static_cast<int>(actions_.size()); }
  bool empty() const { return actions_.empty(); }
  const Shape& frame_shape() const { return frame_shape_; }
  std::size_t frame_size() const { return frame_size_; }

  // Decodes frame t (0 <= t <= length) into `dst`.
  void read_frame(int t, float* dst) const;
  Tensor frame(int t) const;
  int action(int t) const { return actions_[t]; }
  float reward(int t) const { return rewards_[t]; }
  bool terminal(int t) const { return terminals_[t] != 0; }
  // True when the final transition ends in loss rather than a time limit.
  bool ends_terminal() const { return !terminals_.empty() && terminals_.back() != 0; }

  // Value a float pixel takes after a round trip through storage.
  static float quantize(float v);

 private:
  Shape frame_shape_;
  std::size_t frame_size_;
  std::vector<std::uint16_t> frames_;
  std::vector<int> actions_;
  std::vector<float> rewards_;
  std::vector<std::uint8_t> terminals_;
};

// Batch of B sequences of L steps. Steps past the end of a short episode
// repeat its final transition and carry mask 0.
struct SequenceBatch {
  int batch = 0;
  int steps = 0;
  Tensor observations;       // [B, L, C, H, W]
  Tensor next_observations;  // [B, L, C, H, W]
  std::vector<int> actions;  // [B * L], row-major by sequence
  std::vector<float> rewards;
  std::vector<float> terminals;  // 1 where the transition ends the episode in loss
  std::vector<float> mask;       // 0 on padding
  std::vector<std::uint64_t> episode_ids;
  std::vector<int> starts;
};

// Frame-stack transitions for the stateless network. Stacks repeat the first
// frame of the episode where history is missing.
struct StackBatch {
  int batch = 0;
  Tensor stacks;       // [B, K*C, H, W]
  Tensor next_stacks;  // [B, K*C, H, W]
  std::vector<int> actions;
  std::vector<float> rewards;
  std::vector<float> terminals;
  std::vector<std::uint64_t> episode_ids;
  std::vector<int> steps;
};

struct PoolStats {
  std::size_t episode_count = 0;
  std::size_t total_transitions = 0;
  std::size_t capacity = 0;
};

class ReplayPool {
 public:
  explicit ReplayPool(std::size_t capacity_transitions = 50000);

  // Appends the episode and evicts the oldest whole episodes until the
  // transition count fits the capacity.
  void push_episode(EpisodeRecord episode);

  // Uniform over stored episodes, then uniform over start offsets.
  SequenceBatch sample_sequences(int batch, int steps, Rng& rng) const;
  StackBatch sample_stacks(int batch, int stack, Rng& rng) const;

  PoolStats stats() const { return {episodes_.size(), total_, capacity_}; }
  std::size_t total_transitions() const { return total_; }
  std::size_t episode_count() const { return episodes_.size(); }
  const EpisodeRecord& episode(std::size_t i) const { return episodes_[i].record; }
  std::uint64_t episode_id(std::size_t i) const { return episodes_[i].id; }

 private:
  struct Stored {
    std::uint64_t id;
    EpisodeRecord record;
  };
  std::size_t capacity_;
  std::size_t total_ = 0;
  std::uint64_t next_id_ = 0;
  std::deque<Stored> episodes_;
};

}  // namespace ramavt::replay
