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

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "cli/checkpoint.hpp"
#include "cli/config.hpp"
#include "common/error.hpp"
#include "doctest.h"

using namespace ramavt;
using namespace ramavt::cli;
using blocks::QNetwork;
using blocks::QNetworkSpec;
using blocks::Variant;

namespace {

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "ramavt_test_cli";
  std::filesystem::create_directories(dir);
  return dir / name;
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an Error");
  return ErrorKind::kInvalidArgument;
}

struct SeedEnvGuard {
  explicit SeedEnvGuard(const char* value) {
    if (value)
      setenv("RAMAVT_SEED", value, 1);
    else
      unsetenv("RAMAVT_SEED");
  }
  ~SeedEnvGuard() { unsetenv("RAMAVT_SEED"); }
};

std::vector<char> read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void write_bytes(const std::filesystem::path& p, const std::vector<char>& bytes) {
  std::ofstream(p, std::ios::binary).write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_CASE("defaults match the training and environment defaults") {
  SeedEnvGuard guard(nullptr);
  const RunConfig c = parse_config({"train"});
  CHECK(c.command == "train");
  CHECK(c.train.replay_capacity == 50000);
  CHECK(c.train.initial_buffer == 10000);
  CHECK(c.train.episodes == 300);
  CHECK(c.train.target_update_interval == 10);
  CHECK(c.train.gamma == doctest::Approx(0.99));
  CHECK(c.input_format == InputFormat::kDepth);
  CHECK(c.variant == Variant::kRamavt);
  CHECK(c.env.resolution == 64);
  CHECK_FALSE(c.augment.any());
}

TEST_CASE("every key round-trips through its text form") {
  RunConfig c;
  for (const auto& key : config_keys()) {
    const std::string text = get_config_value(c, key);
    RunConfig d;
    set_config_value(d, key, text);
    CHECK_MESSAGE(get_config_value(d, key) == text, key);
  }
}

TEST_CASE("command line beats RAMAVT_SEED beats the file") {
  const auto path = scratch("prec.cfg");
  write_text(path, "# run settings\nseed = 11\ngamma = 0.9  # discount\nepisodes = 7\n");
  {
    SeedEnvGuard guard(nullptr);
    const RunConfig c = parse_config({"train", "--config", path.string()});
    CHECK(c.seed == 11);
    CHECK(c.train.gamma == doctest::Approx(0.9));
    CHECK(c.train.episodes == 7);
  }
  {
    SeedEnvGuard guard("23");
    const RunConfig c = parse_config({"train", "--config", path.string()});
    CHECK(c.seed == 23);
    const RunConfig d = parse_config({"train", "--config", path.string(), "--seed", "5", "--episodes=9"});
    CHECK(d.seed == 5);
    CHECK(d.train.episodes == 9);
    CHECK(d.train.gamma == doctest::Approx(0.9));
  }
}

TEST_CASE("a bad value names the file, the line and the key") {
  SeedEnvGuard guard(nullptr);
  const auto path = scratch("bad.cfg");
  write_text(path, "episodes = 3\n\ngamma = banana\n");
  try {
    parse_config({"train", "--config", path.string()});
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kParse);
    const std::string msg = e.what();
    CHECK(msg.find(path.string() + ":3") != std::string::npos);
    CHECK(msg.find("banana") != std::string::npos);
    CHECK(msg.find("gamma") != std::string::npos);
  }
}

TEST_CASE("unknown keys and malformed arguments are rejected") {
  SeedEnvGuard guard(nullptr);
  CHECK(kind_of([] { parse_config({"train", "--gama", "0.9"}); }) == ErrorKind::kParse);
  CHECK(kind_of([] { parse_config({"train", "--episodes"}); }) == ErrorKind::kParse);
  CHECK(kind_of([] { parse_config({"train", "eval"}); }) == ErrorKind::kParse);
  CHECK(kind_of([] { parse_config({"train", "--episodes", "-3x"}); }) == ErrorKind::kParse);
  const auto path = scratch("nokey.cfg");
  write_text(path, "just words\n");
  CHECK(kind_of([&] { parse_config({"train", "--config", path.string()}); }) == ErrorKind::kParse);
}

TEST_CASE("finalize propagates shared fields and validates") {
  SeedEnvGuard guard(nullptr);
  RunConfig c = parse_config({"train", "--seed", "42", "--input_format", "rgbd", "--augment_crop", "true"});
  c.finalize();
  CHECK(c.train.seed == 42);
  CHECK(c.env.input_format == InputFormat::kRgbd);
  CHECK(c.train.augment.crop);
  RunConfig bad = parse_config({"train", "--gamma", "1.5"});
  CHECK_THROWS_AS(bad.finalize(), Error);
}

TEST_CASE("checkpoint round trip is bit exact, running statistics included") {
  QNetwork net(QNetworkSpec::make(Variant::kRamavt, InputFormat::kDepth, 16), 9);
  // Perturb every tensor so that defaults (zeros, ones) cannot hide a bug.
  float v = 0.001f;
  for (const auto& e : net.params().entries())
    for (auto& x : e.tensor->values()) x += (v += 0.37f) - static_cast<float>(static_cast<int>(v));
  const auto path = scratch("net.ckpt");
  save_checkpoint(net, meta_for(net, 17, 99), path.string());
  const auto loaded = load_checkpoint(path.string());
  CHECK(loaded.meta.episode == 17);
  CHECK(loaded.meta.seed == 99);
  CHECK(loaded.meta.resolution == 16);
  const auto& a = net.params().entries();
  const auto& b = loaded.network->params().entries();
  REQUIRE(a.size() == b.size());
  bool saw_running = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].name == b[i].name);
    saw_running = saw_running || !a[i].trainable;
    REQUIRE(a[i].tensor->size() == b[i].tensor->size());
    CHECK(std::memcmp(a[i].tensor->values().data(), b[i].tensor->values().data(),
                      a[i].tensor->size() * sizeof(float)) == 0);
  }
  CHECK(saw_running);
}

TEST_CASE("corrupt checkpoints fail with distinct errors") {
  QNetwork net(QNetworkSpec::make(Variant::kOrigin, InputFormat::kDepth, 16), 1);
  const auto path = scratch("corrupt.ckpt");
  save_checkpoint(net, meta_for(net, 0, 0), path.string());
  const auto good = read_bytes(path);

  auto truncated = good;
  truncated.pop_back();
  write_bytes(path, truncated);
  CHECK(kind_of([&] { load_checkpoint(path.string()); }) == ErrorKind::kTruncated);

  auto magic = good;
  magic[0] = 'X';
  write_bytes(path, magic);
  CHECK(kind_of([&] { load_checkpoint(path.string()); }) == ErrorKind::kBadMagic);

  auto version = good;
  version[8] = 7;
  write_bytes(path, version);
  CHECK(kind_of([&] { load_checkpoint(path.string()); }) == ErrorKind::kVersion);

  auto trailing = good;
  trailing.push_back(0);
  write_bytes(path, trailing);
  CHECK(kind_of([&] { load_checkpoint(path.string()); }) == ErrorKind::kSpecMismatch);

  CHECK(kind_of([&] { load_checkpoint(scratch("missing.ckpt").string()); }) == ErrorKind::kIo);
}

TEST_CASE("a checkpoint for another input format is a spec mismatch") {
  QNetwork net(QNetworkSpec::make(Variant::kRamavt, InputFormat::kDepth, 16), 1);
  const auto path = scratch("depth.ckpt");
  save_checkpoint(net, meta_for(net, 0, 0), path.string());
  const auto rgbd = QNetworkSpec::make(Variant::kRamavt, InputFormat::kRgbd, 16);
  CHECK(kind_of([&] { load_checkpoint(path.string(), rgbd); }) == ErrorKind::kSpecMismatch);
  CHECK_NOTHROW(load_checkpoint(path.string(), net.spec()));
}

TEST_CASE("a loaded network computes the same Q-values") {
  QNetwork net(QNetworkSpec::make(Variant::kRamavt, InputFormat::kDepth, 16), 4);
  const auto path = scratch("q.ckpt");
  save_checkpoint(net, meta_for(net, 0, 0), path.string());
  const auto loaded = load_checkpoint(path.string());
  diffnet::Tensor obs({1, 16, 16});
  for (int i = 0; i < obs.size(); ++i) obs.values()[i] = static_cast<float>(i % 13) / 13.0f;
  const auto state = blocks::RecurrentState::zeros(1, 128);
  CHECK(net.ramavt_forward(obs, state).q == loaded.network->ramavt_forward(obs, state).q);
}
