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
#include <string>
#include <vector>

#include "augment/augment.hpp"
#include "blocks/network.hpp"
#include "common/input_format.hpp"
#include "env/env.hpp"
#include "evalkit/evalkit.hpp"
#include "trainer/trainer.hpp"

namespace ramavt::cli {

struct RunConfig {
  std::string command;
  InputFormat input_format = InputFormat::kDepth;
  blocks::Variant variant = blocks::Variant::kRamavt;
  trainer::TrainConfig train;
  env::EnvConfig env;
  env::PerturbationConfig perturb;
  augment::AugmentConfig augment;
  int eval_episodes = 20;
  int viz_steps = 20;  // decisions taken before the attention maps are exported
  std::uint64_t eval_seed = 0;
  std::string checkpoint_dir = "checkpoints";
  std::string report_dir = "reports";
  std::string checkpoint;  // checkpoint to load (eval, perturb, viz)
  std::uint64_t seed = 0;

  // Copies the shared fields (seed, input format, augmentation) into the
  // nested configs and validates them.
  void finalize();
  evalkit::EvalOptions eval_options() const;
};

// Every key accepted in config files and as --key on the command line.
std::vector<std::string> config_keys();

// Sets one key from its text form. `where` prefixes diagnostics (file:line).
void set_config_value(RunConfig& config, const std::string& key, const std::string& value,
                      const std::string& where = "");
std::string get_config_value(const RunConfig& config, const std::string& key);

// Line-based "key = value" file with # comments.
void apply_config_file(RunConfig& config, const std::string& path);

// Precedence: command line > RAMAVT_SEED > config file (--config path) > defaults.
// The first argument not starting with "--" is the command.
RunConfig parse_config(const std::vector<std::string>& args);

}  // namespace ramavt::cli
