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

#include "trainer/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "common/error.hpp"
#include "diffnet/ops.hpp"
#include "diffnet/tape.hpp"

namespace ramavt::trainer {

using diffnet::NormMode;
using diffnet::Shape;
using diffnet::Tensor;

namespace {

// Stream ids under the run seed.
constexpr std::uint64_t kActStream = 3, kSampleStream = 4, kAugmentStream = 5;
constexpr std::uint64_t kEpisodeStream = 100, kWarmupStream = 1000000;
constexpr double kLossSmoothing = 0.05;

}  // namespace

void TrainConfig::validate() const {
  require(replay_capacity > 0 && initial_buffer <= replay_capacity, ErrorKind::kInvalidArgument,
          "initial_buffer must not exceed replay_capacity");
  require(episodes >= 0, ErrorKind::kInvalidArgument, "episode count must be non-negative");
  require(gamma > 0.0 && gamma < 1.0, ErrorKind::kInvalidArgument, "gamma must lie in (0, 1)");
  require(batch >= 1 && seq_len >= 1 && train_every >= 1 && target_update_interval >= 1 && checkpoint_interval >= 1,
          ErrorKind::kInvalidArgument, "batch, seq_len and intervals must be positive");
  require(epsilon_start >= 0.0 && epsilon_start <= 1.0 && epsilon_end >= 0.0 && epsilon_end <= 1.0 &&
              epsilon_decay_steps >= 0,
          ErrorKind::kInvalidArgument, "epsilon schedule outside [0, 1]");
  require(learning_rate > 0.0 && grad_clip > 0.0, ErrorKind::kInvalidArgument,
          "learning rate and gradient clip must be positive");
}

double epsilon_at(const TrainConfig& cfg, std::int64_t step) {
  if (cfg.epsilon_decay_steps == 0 || step >= cfg.epsilon_decay_steps) return cfg.epsilon_end;
  const double frac = static_cast<double>(step) / cfg.epsilon_decay_steps;
  return cfg.epsilon_start + (cfg.epsilon_end - cfg.epsilon_start) * frac;
}

int argmax(const std::vector<float>& q) {
  require(!q.empty(), ErrorKind::kEmpty, "argmax of an empty Q vector");
  return static_cast<int>(std::max_element(q.begin(), q.end()) - q.begin());
}

int act_epsilon_greedy(const std::vector<float>& q, double epsilon, Rng& rng) {
  require(epsilon >= 0.0 && epsilon <= 1.0, ErrorKind::kInvalidArgument, "epsilon outside [0, 1]");
  require(!q.empty(), ErrorKind::kEmpty, "no actions to choose from");
  // The coin is drawn every call so the stream does not depend on epsilon.
  const double coin = uniform01(rng);
  const int random_action = uniform_int(rng, static_cast<int>(q.size()));
  return coin < epsilon ? random_action : argmax(q);
}

TensorPtr time_major(const Tensor& seq) {
  require(seq.rank() >= 2, ErrorKind::kShape, "time_major expects [B, L, ...]");
  const int b = seq.dim(0), l = seq.dim(1);
  Shape shape{l * b};
  shape.insert(shape.end(), seq.shape().begin() + 2, seq.shape().end());
  const std::size_t item = diffnet::shape_numel(shape) / std::max(1, l * b);
  auto out = diffnet::make_tensor(shape, 0.0f);
  const float* src = seq.values().data();
  float* dst = out->values().data();
  for (int i = 0; i < b; ++i)
    for (int t = 0; t < l; ++t)
      std::memcpy(dst + (static_cast<std::size_t>(t) * b + i) * item, src + (static_cast<std::size_t>(i) * l + t) * item,
                  item * sizeof(float));
  return out;
}

std::vector<float> batch_td_targets(const replay::SequenceBatch& batch, const Tensor& next_q, double gamma) {
  const int b = batch.batch, l = batch.steps;
  require(next_q.rank() == 2 && next_q.dim(0) == b * l, ErrorKind::kShape, "next Q must be [L * B, A]");
  const int actions = next_q.dim(1);
  std::vector<float> y(static_cast<std::size_t>(b) * l);
  for (int t = 0; t < l; ++t)
    for (int i = 0; i < b; ++i) {
      const std::size_t row = static_cast<std::size_t>(t) * b + i, cell = static_cast<std::size_t>(i) * l + t;
      const float* q = next_q.values().data() + row * actions;
      const double best = *std::max_element(q, q + actions);
      y[row] = static_cast<float>(td_target(batch.rewards[cell], gamma, batch.terminals[cell] != 0.0f, best));
    }
  return y;  // time-major
}

namespace {

void require_finite_loss(const TensorPtr& loss) {
  require(std::isfinite(loss->values()[0]), ErrorKind::kNumeric,
          "TD loss is not finite; training aborted (check learning rate and gradient clipping)");
}

}  // namespace

TensorPtr compute_td_loss(Tape* tape, QNetwork& online, QNetwork& target, const replay::SequenceBatch& batch,
                          double gamma) {
  const int b = batch.batch, l = batch.steps;
  const auto next_q = target.forward_sequence(nullptr, time_major(batch.next_observations), b, l, NormMode::kEval);
  const auto y = batch_td_targets(batch, *next_q, gamma);
  std::vector<int> actions(static_cast<std::size_t>(b) * l);
  std::vector<float> mask(actions.size());
  for (int t = 0; t < l; ++t)
    for (int i = 0; i < b; ++i) {
      actions[static_cast<std::size_t>(t) * b + i] = batch.actions[static_cast<std::size_t>(i) * l + t];
      mask[static_cast<std::size_t>(t) * b + i] = batch.mask[static_cast<std::size_t>(i) * l + t];
    }
  auto q = online.forward_sequence(tape, time_major(batch.observations), b, l, NormMode::kTrain);
  auto loss = diffnet::masked_squared_error(tape, diffnet::gather(tape, q, actions), y, mask);
  require_finite_loss(loss);
  return loss;
}

TensorPtr compute_td_loss(Tape* tape, QNetwork& online, QNetwork& target, const replay::StackBatch& batch,
                          double gamma) {
  const auto next = diffnet::make_tensor(batch.next_stacks.shape(), batch.next_stacks.values());
  const auto next_q = target.forward_stacked(nullptr, next, NormMode::kEval);
  const int actions = next_q->dim(1);
  std::vector<float> y(batch.batch);
  for (int i = 0; i < batch.batch; ++i) {
    const float* row = next_q->values().data() + static_cast<std::size_t>(i) * actions;
    y[i] = static_cast<float>(
        td_target(batch.rewards[i], gamma, batch.terminals[i] != 0.0f, *std::max_element(row, row + actions)));
  }
  auto q = online.forward_stacked(tape, diffnet::make_tensor(batch.stacks.shape(), batch.stacks.values()),
                                  NormMode::kTrain);
  auto loss = diffnet::masked_squared_error(tape, diffnet::gather(tape, q, batch.actions), y,
                                            std::vector<float>(batch.batch, 1.0f));
  require_finite_loss(loss);
  return loss;
}

void update_target(const QNetwork& online, QNetwork& target) {
  require(online.params().congruent(target.params()), ErrorKind::kShape,
          "online and target networks are not shape-congruent");
  target.params().copy_from(online.params());
}

void write_log_csv(const std::vector<LogRow>& rows, const std::string& path) {
  std::ofstream out(path);
  require(out.good(), ErrorKind::kIo, "cannot write training log " + path);
  out << "episode,length,reward,epsilon,mean_loss\n";
  out.precision(9);
  for (const auto& r : rows)
    out << r.episode << ',' << r.length << ',' << r.reward << ',' << r.epsilon << ',' << r.mean_loss << "\n";
  require(out.good(), ErrorKind::kIo, "failed writing training log " + path);
}

FrameStacker::FrameStacker(int depth, Shape frame_shape) : depth_(depth), frame_shape_(std::move(frame_shape)) {
  require(depth >= 1, ErrorKind::kInvalidArgument, "stack depth must be positive");
}

void FrameStacker::reset(const Tensor& first) {
  require(first.shape() == frame_shape_, ErrorKind::kShape, "frame shape differs from the stacker");
  frames_.assign(depth_, first);
}

void FrameStacker::push(const Tensor& frame) {
  require(!frames_.empty(), ErrorKind::kInvalidArgument, "frame stacker used before reset");
  require(frame.shape() == frame_shape_, ErrorKind::kShape, "frame shape differs from the stacker");
  frames_.erase(frames_.begin());
  frames_.push_back(frame);
}

Tensor FrameStacker::stack() const {
  require(!frames_.empty(), ErrorKind::kInvalidArgument, "frame stacker used before reset");
  const std::size_t n = diffnet::shape_numel(frame_shape_);
  Tensor out({depth_ * frame_shape_[0], frame_shape_[1], frame_shape_[2]});
  for (int k = 0; k < depth_; ++k)
    std::copy(frames_[k].values().begin(), frames_[k].values().end(), out.values().begin() + k * n);
  return out;
}

Trainer::Trainer(TrainConfig config, env::EnvConfig env_config, std::unique_ptr<QNetwork> online)
    : config_(std::move(config)),
      env_(std::move(env_config)),
      online_(std::move(online)),
      pool_(config_.replay_capacity),
      optimizer_(diffnet::AdamConfig{static_cast<float>(config_.learning_rate)}),
      act_rng_(derive_seed(config_.seed, kActStream)),
      sample_rng_(derive_seed(config_.seed, kSampleStream)),
      augment_rng_(derive_seed(config_.seed, kAugmentStream)) {
  config_.validate();
  require(online_ != nullptr, ErrorKind::kInvalidArgument, "trainer needs a network");
  const auto& spec = online_->spec();
  require(spec.input_format == env_.config().input_format && spec.resolution == env_.config().resolution,
          ErrorKind::kSpecMismatch, "network input does not match the environment observations");
  require(spec.action_count == env_.action_count(), ErrorKind::kSpecMismatch,
          "network action count does not match the environment");
  config_.augment.validate(spec.resolution);
  target_ = online_->clone();
}

double Trainer::train_step() {
  Tape tape;
  TensorPtr loss;
  if (online_->spec().recurrent()) {
    auto batch = pool_.sample_sequences(config_.batch, config_.seq_len, sample_rng_);
    if (config_.augment.any()) augment::augment_batch(batch, config_.augment, augment_rng_);
    loss = compute_td_loss(&tape, *online_, *target_, batch, config_.gamma);
  } else {
    // Same number of transitions per update as the recurrent batch.
    auto batch = pool_.sample_stacks(config_.batch * config_.seq_len, online_->spec().frame_stack, sample_rng_);
    if (config_.augment.any()) augment::augment_batch(batch, config_.augment, augment_rng_);
    loss = compute_td_loss(&tape, *online_, *target_, batch, config_.gamma);
  }
  tape.backward(loss);
  const auto params = online_->params().trainable();
  diffnet::clip_grad_norm(params, config_.grad_clip);
  diffnet::adam_step(params, optimizer_);
  ++updates_;
  return loss->values()[0];
}

Trainer::EpisodeOutcome Trainer::run_episode(std::uint64_t env_seed, bool warmup, double* loss_ema) {
  const bool recurrent = online_->spec().recurrent();
  Tensor obs = env_.reset(env_seed, env::EnvMode::kTrain);
  replay::EpisodeRecord record(obs.shape());
  record.begin(obs);
  auto state = blocks::RecurrentState::zeros(1, online_->spec().lstm_size);
  FrameStacker stacker(online_->spec().frame_stack, obs.shape());
  stacker.reset(obs);
  EpisodeOutcome outcome;
  while (!env_.done()) {
    int action;
    if (warmup) {
      action = uniform_int(act_rng_, env_.action_count());
    } else {
      std::vector<float> q;
      if (recurrent) {
        auto step = online_->ramavt_forward(obs, state);
        state = std::move(step.state);
        q = std::move(step.q);
      } else {
        q = online_->drlavt_forward(stacker.stack());
      }
      action = act_epsilon_greedy(q, epsilon_at(config_, steps_), act_rng_);
    }
    auto result = env_.step(action);
    record.append(action, static_cast<float>(result.reward), result.lost, result.observation);
    obs = std::move(result.observation);
    if (!recurrent) stacker.push(obs);
    outcome.reward += result.reward;
    ++outcome.length;
    if (!warmup) {
      ++steps_;
      if (steps_ % config_.train_every == 0 && pool_.total_transitions() >= config_.initial_buffer &&
          pool_.episode_count() > 0) {
        const double loss = train_step();
        *loss_ema = updates_ == 1 ? loss : (1.0 - kLossSmoothing) * *loss_ema + kLossSmoothing * loss;
      }
    }
  }
  pool_.push_episode(std::move(record));
  return outcome;
}

TrainResult Trainer::run(const TrainCallbacks& callbacks) {
  TrainResult result;
  if (config_.episodes == 0) return result;
  double loss_ema = 0.0;
  for (std::uint64_t w = 0; pool_.total_transitions() < config_.initial_buffer; ++w) {
    result.warmup_steps += run_episode(derive_seed(config_.seed, kWarmupStream + w), true, &loss_ema).length;
  }
  for (int ep = 1; ep <= config_.episodes; ++ep) {
    const double eps = epsilon_at(config_, steps_);
    const auto outcome = run_episode(derive_seed(config_.seed, kEpisodeStream + ep), false, &loss_ema);
    LogRow row{ep, outcome.length, outcome.reward, eps, loss_ema};
    result.log.push_back(row);
    if (callbacks.on_episode) callbacks.on_episode(row);
    if (ep % config_.target_update_interval == 0) update_target(*online_, *target_);
    if (callbacks.on_checkpoint && (ep % config_.checkpoint_interval == 0 || ep == config_.episodes))
      callbacks.on_checkpoint(ep, *online_);
  }
  result.env_steps = steps_;
  result.updates = updates_;
  return result;
}

}  // namespace ramavt::trainer
