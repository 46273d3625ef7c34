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
#include <string>
#include <utility>
#include <vector>

#include "augment/augment.hpp"
#include "blocks/network.hpp"
#include "env/env.hpp"
#include "trainer/trainer.hpp"

namespace ramavt::evalkit {

using blocks::QNetwork;

struct EvalReport {
  std::string label;
  std::vector<std::uint64_t> seeds;
  std::vector<int> lengths;
  std::vector<double> rewards;
  double ael = 0.0, min_el = 0.0, max_el = 0.0;
  double aer = 0.0, min_er = 0.0, max_er = 0.0;
  // Controller decisions per second of decision time (rendering excluded).
  // Wall-clock dependent, so it is left out of report equality.
  double speed_hz = 0.0;

  int episodes() const { return static_cast<int>(lengths.size()); }
  // Same seeds, lengths and rewards (bit-exact).
  bool same_outcomes(const EvalReport& other) const;
};

// Aggregates per-episode vectors into a report.
EvalReport summarize(std::string label, std::vector<std::uint64_t> seeds, std::vector<int> lengths,
                     std::vector<double> rewards, double decision_seconds, std::int64_t decisions);

struct EvalOptions {
  int episodes = 20;
  std::uint64_t seed = 0;
  env::PerturbationConfig perturb;
  env::EnvMode mode = env::EnvMode::kEval;
};

// Paired seed list: every agent evaluated with the same options sees the same
// targets and trajectories.
std::vector<std::uint64_t> evaluation_seeds(std::uint64_t base, int count);
// Episode i of an evaluation uses catalog target i modulo the split size.
int evaluation_target(int episode, env::EnvMode mode);

// Greedy rollouts with the recurrent state reset per episode.
EvalReport evaluate(const QNetwork& net, const env::EnvConfig& env_config, const EvalOptions& options,
                    std::string label = "agent");

// Uniform-random actions on the same seeds. `histogram`, when given, receives
// the count of each action taken.
EvalReport random_baseline(const env::EnvConfig& env_config, const EvalOptions& options,
                           std::vector<std::int64_t>* histogram = nullptr);

// Per-episode CSV: episode,seed,length,reward.
void write_episode_csv(const EvalReport& report, const std::string& path);
// File stem eval_<agent>_<input>_<perturb>.csv.
std::string report_file_name(const std::string& agent, InputFormat format, const env::PerturbationConfig& perturb);
std::string perturbation_tag(const env::PerturbationConfig& perturb);

struct PerturbationRow {
  std::string name;
  env::PerturbationConfig config;
  EvalReport report;
};

// Rows: noise, delay, blur, all three, none.
std::vector<env::PerturbationConfig> perturbation_rows(const env::PerturbationConfig& magnitudes = {});
std::vector<PerturbationRow> perturbation_suite(const QNetwork& net, const env::EnvConfig& env_config,
                                                const EvalOptions& options);
// Columns: name,actuator_noise,time_delay,image_blur,AEL,AER.
void write_perturbation_csv(const std::vector<PerturbationRow>& rows, const std::string& path);

struct MapExport {
  std::string layer;
  diffnet::Tensor map;  // [H, W], sums to 1
  std::string image_path;
  std::string csv_path;
};

// Attention maps ([H, W], summing to 1) of every capture point for one
// observation: [C, H, W] for the recurrent variants (from a zero state), the
// frame stack for DRLAVT.
std::vector<std::pair<std::string, diffnet::Tensor>> attention_maps(const QNetwork& net,
                                                                    const diffnet::Tensor& observation);
// Same maps, written as one 8-bit PGM (min-max scaled) and one CSV of raw
// values per capture point.
std::vector<MapExport> export_attention_maps(const QNetwork& net, const diffnet::Tensor& observation,
                                             const std::string& out_dir);
void write_pgm(const diffnet::Tensor& map, const std::string& path);
void write_map_csv(const diffnet::Tensor& map, const std::string& path);
// Centre of mass of an [H, W] map in the pixel coordinates of an image of
// side `image_side`.
std::pair<double, double> map_center_of_mass(const diffnet::Tensor& map, int image_side);

// The evaluation target of `target_index` placed at `relative` in the chaser
// frame, seen from a freshly seeded episode.
struct OnAxisView {
  diffnet::Tensor observation;  // [C, H, W]
  double centroid_x = -1.0;     // projected target centroid, pixels
  double centroid_y = -1.0;
};
OnAxisView target_view(const env::EnvConfig& env_config, std::uint64_t seed, int target_index,
                       const env::Vec3& relative);
// Target exactly at the setpoint on the optical axis.
OnAxisView on_axis_view(const env::EnvConfig& env_config, std::uint64_t seed, int target_index);

struct FocusReport {
  std::string layer;
  double com_x = 0.0, com_y = 0.0;
  // Distance from the map's centre of mass to the target centroid, as a
  // fraction of the image diagonal.
  double diagonal_fraction = 0.0;
};
// DRLAVT sees the view repeated across its frame stack.
FocusReport attention_focus(const QNetwork& net, const OnAxisView& view, const std::string& layer);

struct AblationVariant {
  std::string name;
  blocks::Variant variant;
  bool augment;
};

// Origin, Augment, SE, MHA, RAMAVT. Each row adds augmentation to Origin, and
// the SE and MHA rows add one block on top of that.
std::vector<AblationVariant> ablation_variants();

struct AblationRow {
  std::string name;
  std::size_t parameters = 0;
  EvalReport report;
};

struct AblationCallbacks {
  std::function<void(const std::string& variant, const trainer::LogRow&)> on_episode;
  std::function<void(const std::string& variant, const QNetwork&)> on_trained;
};

// Trains every variant from scratch with the same configuration and network
// seed, then evaluates it on the shared seed list.
std::vector<AblationRow> run_ablation(const std::vector<AblationVariant>& variants,
                                      const trainer::TrainConfig& train_config, const env::EnvConfig& env_config,
                                      const EvalOptions& options, const AblationCallbacks& callbacks = {});
// Columns: name,parameters,AEL,AER,speed_hz.
void write_ablation_csv(const std::vector<AblationRow>& rows, const std::string& path);

}  // namespace ramavt::evalkit
