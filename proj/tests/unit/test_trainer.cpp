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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "common/error.hpp"
#include "common/rng.hpp"
#include "diffnet/tape.hpp"
#include "doctest.h"
#include "trainer/trainer.hpp"

using namespace ramavt;
using namespace ramavt::trainer;
using blocks::QNetworkSpec;
using blocks::Variant;
using diffnet::Tensor;

namespace {

QNetworkSpec small_spec(Variant v = Variant::kRamavt) { return QNetworkSpec::make(v, InputFormat::kDepth, 16); }

// Makes every Q value equal `value` by zeroing the head weights.
void constant_q(blocks::QNetwork& net, float value) {
  auto& w = net.params().get("head.weight")->values();
  std::fill(w.begin(), w.end(), 0.0f);
  auto& b = net.params().get("head.bias")->values();
  std::fill(b.begin(), b.end(), value);
}

replay::SequenceBatch single_transition(float reward, bool terminal, int action = 2) {
  replay::SequenceBatch batch;
  batch.batch = 1;
  batch.steps = 1;
  Rng rng(5);
  batch.observations = Tensor({1, 1, 1, 16, 16});
  batch.next_observations = Tensor({1, 1, 1, 16, 16});
  for (auto& v : batch.observations.values()) v = static_cast<float>(uniform01(rng));
  for (auto& v : batch.next_observations.values()) v = static_cast<float>(uniform01(rng));
  batch.actions = {action};
  batch.rewards = {reward};
  batch.terminals = {terminal ? 1.0f : 0.0f};
  batch.mask = {1.0f};
  batch.episode_ids = {0};
  batch.starts = {0};
  return batch;
}

replay::SequenceBatch random_batch(Rng& rng, int b, int l) {
  replay::SequenceBatch batch;
  batch.batch = b;
  batch.steps = l;
  batch.observations = Tensor({b, l, 1, 16, 16});
  batch.next_observations = Tensor({b, l, 1, 16, 16});
  for (auto& v : batch.observations.values()) v = static_cast<float>(uniform01(rng));
  for (auto& v : batch.next_observations.values()) v = static_cast<float>(uniform01(rng));
  for (int i = 0; i < b * l; ++i) {
    batch.actions.push_back(uniform_int(rng, 7));
    batch.rewards.push_back(static_cast<float>(uniform(rng, -1, 0.5)));
    batch.terminals.push_back(0.0f);
    batch.mask.push_back(1.0f);
  }
  return batch;
}

std::vector<float> q_of(blocks::QNetwork& net, const Tensor& frames, int b, int l) {
  return net.forward_sequence(nullptr, diffnet::make_tensor(frames.shape(), frames.values()), b, l,
                              diffnet::NormMode::kEval)
      ->to_vector();
}

TrainConfig smoke_config() {
  TrainConfig cfg;
  cfg.episodes = 5;
  cfg.initial_buffer = 200;
  cfg.replay_capacity = 5000;
  cfg.batch = 4;
  cfg.seq_len = 4;
  cfg.train_every = 8;
  cfg.epsilon_decay_steps = 500;
  cfg.target_update_interval = 2;
  cfg.checkpoint_interval = 2;
  cfg.seed = 17;
  return cfg;
}

env::EnvConfig smoke_env() {
  env::EnvConfig e;
  e.resolution = 16;
  e.max_episode_len = 60;
  return e;
}

}  // namespace

TEST_CASE("epsilon-greedy examples") {
  Rng rng(1);
  CHECK(act_epsilon_greedy({1, 3, 2, 0, 0, 0, 0}, 0.0, rng) == 1);
  CHECK(act_epsilon_greedy({5, 5, 0, 0, 0, 0, 0}, 0.0, rng) == 0);
  CHECK(argmax({0, 0, 0, 0, 0, 0, 9}) == 6);
  CHECK_THROWS_AS(act_epsilon_greedy({1, 2}, 1.5, rng), Error);
  CHECK_THROWS_AS(act_epsilon_greedy({}, 0.5, rng), Error);
}

TEST_CASE("epsilon one is uniform over actions") {
  Rng rng(2);
  const int draws = 10000;
  std::vector<int> counts(7, 0);
  for (int i = 0; i < draws; ++i) ++counts[act_epsilon_greedy({1, 3, 2, 0, 0, 0, 0}, 1.0, rng)];
  const double p = 1.0 / 7.0, sd = std::sqrt(draws * p * (1 - p));
  for (int c : counts) CHECK(std::abs(c - draws * p) < 4 * sd);
}

TEST_CASE("epsilon schedule") {
  TrainConfig cfg;
  CHECK(epsilon_at(cfg, 0) == 1.0);
  CHECK(epsilon_at(cfg, 25000) == doctest::Approx(0.525));
  CHECK(epsilon_at(cfg, 50000) == 0.05);
  CHECK(epsilon_at(cfg, 900000) == 0.05);
}

TEST_CASE("TD target arithmetic") {
  CHECK(td_target(1.0, 0.99, false, 2.0) == doctest::Approx(2.98));
  CHECK(td_target(1.0, 0.99, true, 2.0) == 1.0);
  CHECK(td_target(-0.3, 1e-300, false, 7.0) == doctest::Approx(-0.3));
}

TEST_CASE("TD loss examples") {
  blocks::QNetwork online(small_spec(), 3);
  auto target = online.clone();
  constant_q(online, 0.0f);
  constant_q(*target, 0.0f);

  SUBCASE("reward-free fixed point") {
    auto batch = single_transition(0.0f, false);
    diffnet::Tape tape;
    CHECK(compute_td_loss(&tape, online, *target, batch, 0.99)->values()[0] == 0.0f);
  }
  SUBCASE("terminal transition") {
    auto batch = single_transition(1.0f, true);
    diffnet::Tape tape;
    CHECK(compute_td_loss(&tape, online, *target, batch, 0.99)->values()[0] == doctest::Approx(1.0));
  }
  SUBCASE("bootstrapped transition") {
    constant_q(*target, 2.0f);
    auto batch = single_transition(1.0f, false);
    diffnet::Tape tape;
    CHECK(compute_td_loss(&tape, online, *target, batch, 0.99)->values()[0] == doctest::Approx(8.8804));
  }
}

TEST_CASE("gamma zero reduces the target to the reward") {
  Rng rng(4);
  auto batch = random_batch(rng, 2, 3);
  Tensor next_q({6, 7});
  for (auto& v : next_q.values()) v = static_cast<float>(uniform(rng, -5, 5));
  const auto y = batch_td_targets(batch, next_q, 1e-300);
  for (int t = 0; t < 3; ++t)
    for (int b = 0; b < 2; ++b) CHECK(y[t * 2 + b] == doctest::Approx(batch.rewards[b * 3 + t]));
}

TEST_CASE("TD targets follow time-major rows") {
  replay::SequenceBatch batch;
  batch.batch = 2;
  batch.steps = 2;
  batch.rewards = {1, 2, 3, 4};  // [b0t0, b0t1, b1t0, b1t1]
  batch.terminals = {0, 1, 0, 0};
  Tensor next_q({4, 2}, std::vector<float>{10, 0, 20, 0, 30, 0, 40, 0});  // rows t0b0, t0b1, t1b0, t1b1
  const auto y = batch_td_targets(batch, next_q, 0.5);
  CHECK(y[0] == doctest::Approx(1 + 5));   // t0 b0
  CHECK(y[1] == doctest::Approx(3 + 10));  // t0 b1
  CHECK(y[2] == doctest::Approx(2));       // t1 b0, terminal
  CHECK(y[3] == doctest::Approx(4 + 20));  // t1 b1
}

TEST_CASE("time-major rearrangement") {
  Tensor seq({2, 3, 1}, std::vector<float>{0, 1, 2, 10, 11, 12});
  CHECK(time_major(seq)->to_vector() == std::vector<float>{0, 10, 1, 11, 2, 12});
}

TEST_CASE("no gradient reaches the target network") {
  Rng rng(6);
  blocks::QNetwork online(small_spec(), 7);
  auto target = online.clone();
  auto batch = random_batch(rng, 2, 3);
  diffnet::Tape tape;
  auto loss = compute_td_loss(&tape, online, *target, batch, 0.99);
  CHECK(loss->values()[0] >= 0.0f);
  tape.backward(loss);
  double online_norm = 0.0;
  for (const auto& p : online.params().trainable())
    for (float g : p->grad()) online_norm += g * g;
  CHECK(online_norm > 0.0);
  for (const auto& e : target->params().entries())
    for (float g : e.tensor->grad()) CHECK(g == 0.0f);
}

TEST_CASE("target updates copy bit-exactly") {
  Rng rng(8);
  blocks::QNetwork online(small_spec(), 9);
  blocks::QNetwork target(small_spec(), 10);
  const auto batch = random_batch(rng, 2, 2);
  const Tensor frames({4, 1, 16, 16}, batch.observations.to_vector());
  CHECK(q_of(online, frames, 2, 2) != q_of(target, frames, 2, 2));
  update_target(online, target);
  const auto q_online = q_of(online, frames, 2, 2);
  CHECK(q_online == q_of(target, frames, 2, 2));

  // Three updates equal one.
  update_target(online, target);
  update_target(online, target);
  CHECK(q_online == q_of(target, frames, 2, 2));

  // Later changes to the online network do not leak.
  auto& w = online.params().get("head.bias")->values();
  w[0] += 1.0f;
  CHECK(q_of(target, frames, 2, 2) == q_online);
  CHECK(q_of(online, frames, 2, 2) != q_online);

  blocks::QNetwork other(small_spec(Variant::kOrigin), 1);
  CHECK_THROWS_AS(update_target(online, other), Error);
}

TEST_CASE("frame stacker") {
  FrameStacker s(3, {1, 1, 2});
  s.reset(Tensor({1, 1, 2}, std::vector<float>{1, 2}));
  CHECK(s.stack().to_vector() == std::vector<float>{1, 2, 1, 2, 1, 2});
  s.push(Tensor({1, 1, 2}, std::vector<float>{3, 4}));
  CHECK(s.stack().to_vector() == std::vector<float>{1, 2, 1, 2, 3, 4});
  CHECK_THROWS_AS(s.push(Tensor({1, 2, 2}, 0.0f)), Error);
}

TEST_CASE("zero episodes leave the network untouched") {
  auto net = std::make_unique<blocks::QNetwork>(small_spec(), 11);
  const auto before = net->params().get("conv1.kernel")->to_vector();
  auto cfg = smoke_config();
  cfg.episodes = 0;
  Trainer t(cfg, smoke_env(), std::move(net));
  const auto result = t.run();
  CHECK(result.log.empty());
  CHECK(t.updates() == 0);
  CHECK(t.online().params().get("conv1.kernel")->to_vector() == before);
}

TEST_CASE("smoke run: five logged episodes, finite loss, reproducible") {
  auto run = [](std::vector<int>* checkpoints) {
    Trainer t(smoke_config(), smoke_env(), std::make_unique<blocks::QNetwork>(small_spec(), 12));
    TrainCallbacks cb;
    cb.on_checkpoint = [checkpoints](int ep, const blocks::QNetwork&) { checkpoints->push_back(ep); };
    auto result = t.run(cb);
    CHECK(result.warmup_steps >= 200);
    CHECK(t.updates() > 0);
    return result;
  };
  std::vector<int> cp1, cp2;
  const auto a = run(&cp1);
  const auto b = run(&cp2);
  REQUIRE(a.log.size() == 5);
  CHECK(cp1 == std::vector<int>{2, 4, 5});
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    CHECK(a.log[i].episode == static_cast<int>(i) + 1);
    CHECK(std::isfinite(a.log[i].mean_loss));
    CHECK(a.log[i].length >= 1);
    CHECK(a.log[i].length <= 60);
    CHECK(a.log[i].length == b.log[i].length);
    CHECK(a.log[i].reward == b.log[i].reward);
    CHECK(a.log[i].mean_loss == b.log[i].mean_loss);
  }
  CHECK(a.log.back().mean_loss > 0.0);
}

TEST_CASE("stacked-frame variant trains too") {
  auto cfg = smoke_config();
  cfg.episodes = 2;
  Trainer t(cfg, smoke_env(), std::make_unique<blocks::QNetwork>(small_spec(Variant::kDrlavt), 13));
  const auto result = t.run();
  CHECK(result.log.size() == 2);
  CHECK(t.updates() > 0);
}

TEST_CASE("no update happens before the warm-up buffer fills") {
  auto cfg = smoke_config();
  cfg.episodes = 1;
  cfg.initial_buffer = 5000;
  cfg.replay_capacity = 5000;
  auto env = smoke_env();
  env.max_episode_len = 20;
  Trainer t(cfg, env, std::make_unique<blocks::QNetwork>(small_spec(), 14));
  const auto result = t.run();
  CHECK(result.warmup_steps >= 5000);
  CHECK(t.pool().total_transitions() >= 5000);
}

TEST_CASE("mismatched network and environment are rejected") {
  auto env = smoke_env();
  env.resolution = 32;
  CHECK_THROWS_AS(Trainer(smoke_config(), env, std::make_unique<blocks::QNetwork>(small_spec(), 1)), Error);
  auto cfg = smoke_config();
  cfg.initial_buffer = cfg.replay_capacity + 1;
  CHECK_THROWS_AS(Trainer(cfg, smoke_env(), std::make_unique<blocks::QNetwork>(small_spec(), 1)), Error);
}

TEST_CASE("training log csv") {
  const std::string path = "test_trainer_log.csv";
  write_log_csv({{1, 10, 2.5, 1.0, 0.0}}, path);
  std::ifstream in(path);
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  CHECK(header == "episode,length,reward,epsilon,mean_loss");
  CHECK(row == "1,10,2.5,1,0");
  std::remove(path.c_str());
}
