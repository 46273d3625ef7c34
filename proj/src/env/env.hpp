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
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Geometry>

#include "common/input_format.hpp"
#include "common/rng.hpp"
#include "diffnet/tensor.hpp"
#include "env/target_model.hpp"

namespace ramavt::env {

using Quat = Eigen::Quaterniond;
using diffnet::Tensor;

struct EnvConfig {
  Vec3 setpoint{0.0, 0.0, 5.0};  // desired target position in the chaser frame
  double dt = 0.1;
  double fov_deg = 60.0;
  double max_depth = 20.0;
  int resolution = 64;
  InputFormat input_format = InputFormat::kDepth;
  int max_episode_len = 1000;
  int lose_patience = 5;         // consecutive invisible frames before loss
  double lose_distance = 15.0;   // error beyond which the episode is lost
  double action_speed = 0.5;
  double reset_offset = 1.0;     // per-axis half-width of the initial offset
  double target_speed = 0.3;     // per-axis bound on target velocity
  double target_spin = 0.5;      // per-axis bound on target angular rate

  void validate() const;
};

struct WorldState {
  Vec3 chaser_pos = Vec3::Zero();
  Vec3 chaser_vel = Vec3::Zero();
  Vec3 target_pos = Vec3::Zero();
  Vec3 target_vel = Vec3::Zero();
  Quat target_orientation = Quat::Identity();
  Vec3 target_angular_vel = Vec3::Zero();
  int step_index = 0;

  bool operator==(const WorldState& o) const;
};

struct PerturbationConfig {
  struct ActuatorNoise {
    bool enabled = false;
    double sigma = 0.1;
  } actuator_noise;
  struct TimeDelay {
    bool enabled = false;
    int max_delay_steps = 3;
  } time_delay;
  struct ImageBlur {
    bool enabled = false;
    int kernel = 3;
  } image_blur;

  static PerturbationConfig none() { return {}; }
  static PerturbationConfig all();
  bool any() const { return actuator_noise.enabled || time_delay.enabled || image_blur.enabled; }
  void validate() const;
};

// Axis-aligned velocity commands {+-v e_x, +-v e_y, +-v e_z, 0}.
std::vector<Vec3> default_action_table(double speed);

// Target position relative to the chaser, in the chaser body frame (the
// chaser does not rotate, so the body frame is the inertial frame).
Vec3 relative_position(const WorldState& state);
// Distance between the relative target position and the setpoint.
double compute_error(const WorldState& state, const Vec3& setpoint = Vec3(0.0, 0.0, 5.0));

struct RewardTerms {
  double r_vis = 0.0;
  double r_dist = 0.0;
  double error = 0.0;
  double total() const { return r_vis + r_dist; }
};

struct RewardOutcome {
  double reward = 0.0;
  bool terminal = false;  // target lost
  RewardTerms terms;
};

// Visible frames score 0.5 - 0.1 e clamped to [-2, 0.5]. A target that has
// been invisible for `lose_patience` frames, or is further than
// `lose_distance` from the setpoint, ends the episode with -10. Invisible
// frames short of that score the distance term alone.
RewardOutcome compute_reward(double error, bool visible, int invisible_streak, const EnvConfig& config);

struct RenderResult {
  Tensor pixels;          // [C, H, W], values in [0, 1]
  int target_pixels = 0;  // pixels covered by the target
  // Mean pixel-centre coordinates of the covered pixels; (-1, -1) when the
  // target is not in view.
  double centroid_x = -1.0;
  double centroid_y = -1.0;
};

// Pinhole camera at the chaser looking along +z (x right, y down). Points
// are splatted over 3x3 pixels with a z-buffer.
RenderResult render(const WorldState& state, const TargetModel& model, InputFormat format, int resolution,
                    double fov_deg, double max_depth);

// Box filter of odd width over each channel, clamping at the borders.
void box_blur(Tensor& pixels, int kernel);

enum class EnvMode { kTrain, kEval };

struct StepResult {
  Tensor observation;
  double reward = 0.0;
  bool done = false;       // lost or time limit
  bool lost = false;       // terminal for bootstrapping purposes
  bool visible = false;
  RewardTerms terms;
};

class Environment {
 public:
  explicit Environment(EnvConfig config = {}, PerturbationConfig perturb = {});

  // `target_index` picks a catalog entry of the mode's split; otherwise the
  // target is drawn from the split with the episode seed.
  Tensor reset(std::uint64_t seed, EnvMode mode = EnvMode::kTrain, std::optional<int> target_index = {});
  // Same, with a caller-supplied target model.
  Tensor reset_with_model(std::uint64_t seed, const TargetModel& model);

  StepResult step(int action_index);

  const WorldState& state() const { return state_; }
  const TargetModel& target() const { return model_; }
  const EnvConfig& config() const { return config_; }
  const PerturbationConfig& perturbations() const { return perturb_; }
  void set_perturbations(const PerturbationConfig& perturb);
  const std::vector<Vec3>& action_table() const { return actions_; }
  int action_count() const { return static_cast<int>(actions_.size()); }
  bool done() const { return done_; }
  // Velocity actually applied at the last step.
  const Vec3& applied_velocity() const { return state_.chaser_vel; }

  RenderResult observe() const;

 private:
  void start(std::uint64_t seed, Rng& rng);
  Tensor finish_observation(RenderResult frame) const;

  EnvConfig config_;
  PerturbationConfig perturb_;
  std::vector<Vec3> actions_;
  WorldState state_;
  TargetModel model_;
  Rng perturb_rng_;
  std::deque<Vec3> command_history_;
  int invisible_streak_ = 0;
  bool done_ = true;
};

// Rows of an episode trace CSV.
struct TraceRow {
  int step;
  Vec3 error_vector;  // relative position minus setpoint
  double error;
  int action;
  double reward;
  bool visible;
};

void write_trace_csv(const std::vector<TraceRow>& rows, const std::string& path);

}  // namespace ramavt::env
