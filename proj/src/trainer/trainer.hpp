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
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "augment/augment.hpp"
#include "blocks/network.hpp"
#include "common/rng.hpp"
#include "diffnet/adam.hpp"
#include "env/env.hpp"
#include "replay/replay.hpp"

namespace ramavt::trainer {

using blocks::QNetwork;
using diffnet::Tape;
using diffnet::TensorPtr;

struct TrainConfig {
  std::size_t replay_capacity = 50000;
  std::size_t initial_buffer = 10000;  // warm-up transitions collected with epsilon = 1
  int episodes = 300;
  int target_update_interval = 10;  // episodes
  double gamma = 0.99;
  int batch = 32;    // sequences per update
  int seq_len = 8;
  int train_every = 4;  // env steps per update
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  int epsilon_decay_steps = 50000;  // counted from the end of warm-up
  double learning_rate = 1e-4;
  double grad_clip = 10.0;
  int checkpoint_interval = 50;  // episodes
  std::uint64_t seed = 0;
  augment::AugmentConfig augment;

  void validate() const;
};

// Seed of the freshly initialised network for a run seed.
inline std::uint64_t network_seed(std::uint64_t run_seed) { return derive_seed(run_seed, 2); }

// Linear schedule over post-warm-up steps.
double epsilon_at(const TrainConfig& cfg, std::int64_t step);

// With probability epsilon a uniform action, else the lowest-index argmax.
int act_epsilon_greedy(const std::vector<float>& q, double epsilon, Rng& rng);
int argmax(const std::vector<float>& q);

// y = r + gamma * (1 - terminal) * max_next.
inline double td_target(double reward, double gamma, bool terminal, double max_next) {
  return reward + (terminal ? 0.0 : gamma * max_next);
}

// TD targets for a batch laid out as [B, L] (sequence-major), from the target
// network's Q over the next observations (time-major [L * B, A]).
std::vector<float> batch_td_targets(const replay::SequenceBatch& batch, const diffnet::Tensor& next_q, double gamma);

// Masked mean over the batch of (y - Q(o, a; online))^2. The target network
// runs without a tape, so no gradient can reach it.
TensorPtr compute_td_loss(Tape* tape, QNetwork& online, QNetwork& target, const replay::SequenceBatch& batch,
                          double gamma);
TensorPtr compute_td_loss(Tape* tape, QNetwork& online, QNetwork& target, const replay::StackBatch& batch,
                          double gamma);

// Bit-exact copy of online parameters (and running statistics) into target.
void update_target(const QNetwork& online, QNetwork& target);

// Rearranges [B, L, ...] into time-major [L * B, ...].
TensorPtr time_major(const diffnet::Tensor& sequences);

struct LogRow {
  int episode = 0;
  int length = 0;
  double reward = 0.0;
  double epsilon = 0.0;
  double mean_loss = 0.0;  // exponential moving average of update losses
};

void write_log_csv(const std::vector<LogRow>& rows, const std::string& path);

struct TrainCallbacks {
  std::function<void(const LogRow&)> on_episode;
  // Called every checkpoint_interval episodes and after the last one.
  std::function<void(int episode, const QNetwork& online)> on_checkpoint;
};

struct TrainResult {
  std::vector<LogRow> log;
  std::int64_t env_steps = 0;
  std::int64_t warmup_steps = 0;
  std::int64_t updates = 0;
};

// Keeps the frame history used by the stateless stacked network.
class FrameStacker {
 public:
  FrameStacker(int depth, diffnet::Shape frame_shape);
  void reset(const diffnet::Tensor& first);
  void push(const diffnet::Tensor& frame);
  diffnet::Tensor stack() const;  // oldest first

 private:
  int depth_;
  diffnet::Shape frame_shape_;
  std::vector<diffnet::Tensor> frames_;
};

class Trainer {
 public:
  Trainer(TrainConfig config, env::EnvConfig env_config, std::unique_ptr<QNetwork> online);

  TrainResult run(const TrainCallbacks& callbacks = {});

  QNetwork& online() { return *online_; }
  QNetwork& target() { return *target_; }
  const replay::ReplayPool& pool() const { return pool_; }
  std::int64_t updates() const { return updates_; }

 private:
  struct EpisodeOutcome {
    int length = 0;
    double reward = 0.0;
  };
  EpisodeOutcome run_episode(std::uint64_t env_seed, bool warmup, double* loss_ema);
  double train_step();

  TrainConfig config_;
  env::Environment env_;
  std::unique_ptr<QNetwork> online_;
  std::unique_ptr<QNetwork> target_;
  replay::ReplayPool pool_;
  diffnet::OptimizerState optimizer_;
  Rng act_rng_;
  Rng sample_rng_;
  Rng augment_rng_;
  std::int64_t steps_ = 0;  // post-warm-up env steps
  std::int64_t updates_ = 0;
};

}  // namespace ramavt::trainer
