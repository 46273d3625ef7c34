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

#include "env/env.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "common/error.hpp"

namespace ramavt::env {

void EnvConfig::validate() const {
  require(dt > 0.0 && fov_deg > 0.0 && fov_deg < 180.0 && max_depth > 0.0, ErrorKind::kInvalidArgument,
          "environment dt, fov and max depth must be positive (fov below 180 degrees)");
  require(resolution >= 4, ErrorKind::kInvalidArgument, "render resolution must be at least 4");
  require(max_episode_len >= 1 && lose_patience >= 1, ErrorKind::kInvalidArgument,
          "episode length and lose patience must be positive");
  require(action_speed > 0.0 && reset_offset >= 0.0 && target_speed >= 0.0 && target_spin >= 0.0,
          ErrorKind::kInvalidArgument, "environment speeds and offsets must be non-negative");
}

bool WorldState::operator==(const WorldState& o) const {
  return chaser_pos == o.chaser_pos && chaser_vel == o.chaser_vel && target_pos == o.target_pos &&
         target_vel == o.target_vel && target_orientation.coeffs() == o.target_orientation.coeffs() &&
         target_angular_vel == o.target_angular_vel && step_index == o.step_index;
}

PerturbationConfig PerturbationConfig::all() {
  PerturbationConfig p;
  p.actuator_noise.enabled = true;
  p.time_delay.enabled = true;
  p.image_blur.enabled = true;
  return p;
}

void PerturbationConfig::validate() const {
  require(actuator_noise.sigma >= 0.0, ErrorKind::kInvalidArgument, "actuator noise sigma must be non-negative");
  require(time_delay.max_delay_steps >= 0, ErrorKind::kInvalidArgument, "max delay steps must be non-negative");
  require(image_blur.kernel >= 1 && image_blur.kernel % 2 == 1, ErrorKind::kInvalidArgument,
          "blur kernel must be a positive odd integer");
}

std::vector<Vec3> default_action_table(double speed) {
  return {Vec3(speed, 0, 0), Vec3(-speed, 0, 0), Vec3(0, speed, 0), Vec3(0, -speed, 0),
          Vec3(0, 0, speed), Vec3(0, 0, -speed), Vec3(0, 0, 0)};
}

Vec3 relative_position(const WorldState& state) { return state.target_pos - state.chaser_pos; }

double compute_error(const WorldState& state, const Vec3& setpoint) {
  return (relative_position(state) - setpoint).norm();
}

RewardOutcome compute_reward(double error, bool visible, int invisible_streak, const EnvConfig& config) {
  RewardOutcome out;
  out.terms.error = error;
  if (invisible_streak >= config.lose_patience || error > config.lose_distance) {
    out.terms.r_vis = -10.0;
    out.reward = -10.0;
    out.terminal = true;
    return out;
  }
  out.terms.r_vis = visible ? 0.5 : 0.0;
  out.terms.r_dist = std::max(-0.1 * error, -2.0 - out.terms.r_vis);
  out.reward = std::clamp(out.terms.total(), -2.0, 0.5);
  return out;
}

RenderResult render(const WorldState& state, const TargetModel& model, InputFormat format, int resolution,
                    double fov_deg, double max_depth) {
  const int n = resolution;
  const std::size_t plane = static_cast<std::size_t>(n) * n;
  const double focal = (n / 2.0) / std::tan(fov_deg * M_PI / 360.0);
  const double centre = n / 2.0;
  std::vector<double> zbuf(plane, std::numeric_limits<double>::infinity());
  std::vector<double> shade(plane, 0.0);

  const Eigen::Matrix3d rot = state.target_orientation.toRotationMatrix();
  const Vec3 light = Vec3(-0.3, -0.4, -1.0).normalized();  // direction towards the light
  const Vec3 origin = relative_position(state);
  for (const auto& p : model.points) {
    const Vec3 rel = origin + rot * p.offset;
    if (rel.z() <= 1e-3) continue;
    const double u = centre + focal * rel.x() / rel.z();
    const double v = centre + focal * rel.y() / rel.z();
    if (!(u > -2.0 && u < n + 2.0 && v > -2.0 && v < n + 2.0)) continue;
    const int px = static_cast<int>(std::floor(u)), py = static_cast<int>(std::floor(v));
    const double norm = p.offset.norm();
    const Vec3 normal = norm > 1e-9 ? Vec3(rot * (p.offset / norm)) : Vec3(0, 0, -1);
    const double lit = p.albedo * std::max(0.0, normal.dot(light));
    for (int dy = -1; dy <= 1; ++dy) {
      const int y = py + dy;
      if (y < 0 || y >= n) continue;
      for (int dx = -1; dx <= 1; ++dx) {
        const int x = px + dx;
        if (x < 0 || x >= n) continue;
        const std::size_t at = static_cast<std::size_t>(y) * n + x;
        if (rel.z() < zbuf[at]) {
          zbuf[at] = rel.z();
          shade[at] = lit;
        }
      }
    }
  }

  RenderResult out;
  const int channels = input_channels(format);
  out.pixels = Tensor({channels, n, n}, 0.0f);
  auto& px = out.pixels.values();
  static const double kLightColor[3] = {1.0, 0.92, 0.8};
  double sum_x = 0.0, sum_y = 0.0;
  for (std::size_t i = 0; i < plane; ++i) {
    const bool hit = std::isfinite(zbuf[i]);
    if (hit) {
      ++out.target_pixels;
      sum_x += static_cast<double>(i % n) + 0.5;
      sum_y += static_cast<double>(i / n) + 0.5;
    }
    const float depth = hit ? static_cast<float>(std::clamp(zbuf[i] / max_depth, 0.0, 1.0)) : 1.0f;
    if (format == InputFormat::kDepth) {
      px[i] = depth;
      continue;
    }
    for (int c = 0; c < 3; ++c) px[c * plane + i] = static_cast<float>(std::clamp(shade[i] * kLightColor[c], 0.0, 1.0));
    if (format == InputFormat::kRgbd) px[3 * plane + i] = depth;
  }
  if (out.target_pixels > 0) {
    out.centroid_x = sum_x / out.target_pixels;
    out.centroid_y = sum_y / out.target_pixels;
  }
  return out;
}

void box_blur(Tensor& pixels, int kernel) {
  require(kernel >= 1 && kernel % 2 == 1, ErrorKind::kInvalidArgument, "blur kernel must be odd");
  require(pixels.rank() == 3, ErrorKind::kShape, "box_blur expects [C, H, W]");
  if (kernel == 1) return;
  const int c = pixels.dim(0), h = pixels.dim(1), w = pixels.dim(2), r = kernel / 2;
  std::vector<double> tmp(static_cast<std::size_t>(h) * w);
  for (int ch = 0; ch < c; ++ch) {
    float* img = pixels.data().data() + static_cast<std::size_t>(ch) * h * w;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double s = 0.0;
        for (int k = -r; k <= r; ++k) s += img[y * w + std::clamp(x + k, 0, w - 1)];
        tmp[y * w + x] = s / kernel;
      }
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double s = 0.0;
        for (int k = -r; k <= r; ++k) s += tmp[std::clamp(y + k, 0, h - 1) * w + x];
        img[y * w + x] = static_cast<float>(std::clamp(s / kernel, 0.0, 1.0));
      }
  }
}

Environment::Environment(EnvConfig config, PerturbationConfig perturb)
    : config_(std::move(config)), perturb_(perturb), actions_(default_action_table(config_.action_speed)) {
  config_.validate();
  perturb_.validate();
}

void Environment::set_perturbations(const PerturbationConfig& perturb) {
  perturb.validate();
  perturb_ = perturb;
}

Tensor Environment::reset(std::uint64_t seed, EnvMode mode, std::optional<int> target_index) {
  const auto& catalog = target_catalog(mode == EnvMode::kTrain ? TargetSplit::kTrain : TargetSplit::kEval);
  Rng rng(derive_seed(seed, 0));
  int index;
  if (target_index) {
    require(*target_index >= 0 && *target_index < static_cast<int>(catalog.size()), ErrorKind::kInvalidArgument,
            "target index " + std::to_string(*target_index) + " outside the catalog");
    index = *target_index;
  } else {
    index = uniform_int(rng, static_cast<int>(catalog.size()));
  }
  model_ = catalog[index];
  start(seed, rng);
  return finish_observation(observe());
}

Tensor Environment::reset_with_model(std::uint64_t seed, const TargetModel& model) {
  model.validate();
  model_ = model;
  Rng rng(derive_seed(seed, 0));
  start(seed, rng);
  return finish_observation(observe());
}

void Environment::start(std::uint64_t seed, Rng& rng) {
  auto box = [&rng](double half) { return Vec3(uniform(rng, -half, half), uniform(rng, -half, half), uniform(rng, -half, half)); };
  state_ = WorldState{};
  state_.target_pos = config_.setpoint + box(config_.reset_offset);
  state_.target_vel = box(config_.target_speed);
  state_.target_angular_vel = box(config_.target_spin);
  // Uniform random rotation (Shoemake).
  const double u1 = uniform01(rng), u2 = uniform(rng, 0, 2 * M_PI), u3 = uniform(rng, 0, 2 * M_PI);
  state_.target_orientation = Quat(std::sqrt(u1) * std::cos(u3), std::sqrt(1 - u1) * std::sin(u2),
                                   std::sqrt(1 - u1) * std::cos(u2), std::sqrt(u1) * std::sin(u3));
  state_.target_orientation.normalize();
  perturb_rng_.seed(derive_seed(seed, 1));
  command_history_.clear();
  invisible_streak_ = 0;
  done_ = false;
}

RenderResult Environment::observe() const {
  return render(state_, model_, config_.input_format, config_.resolution, config_.fov_deg, config_.max_depth);
}

Tensor Environment::finish_observation(RenderResult frame) const {
  if (perturb_.image_blur.enabled) box_blur(frame.pixels, perturb_.image_blur.kernel);
  return std::move(frame.pixels);
}

StepResult Environment::step(int action_index) {
  require(!done_, ErrorKind::kInvalidArgument, "episode is over; call reset first");
  require(action_index >= 0 && action_index < action_count(), ErrorKind::kInvalidArgument,
          "action index " + std::to_string(action_index) + " outside [0, " + std::to_string(action_count()) + ")");
  Vec3 applied = actions_[action_index];
  if (perturb_.time_delay.enabled) {
    const int max_delay = perturb_.time_delay.max_delay_steps;
    command_history_.push_back(applied);
    while (static_cast<int>(command_history_.size()) > max_delay + 1) command_history_.pop_front();
    const int delay = uniform_int(perturb_rng_, max_delay + 1);
    const int available = static_cast<int>(command_history_.size());
    // Commands from before the episode started are zero.
    applied = delay < available ? command_history_[available - 1 - delay] : Vec3::Zero();
  }
  if (perturb_.actuator_noise.enabled) {
    for (int k = 0; k < 3; ++k) applied[k] *= 1.0 + perturb_.actuator_noise.sigma * normal(perturb_rng_);
  }
  const double dt = config_.dt;
  state_.chaser_vel = applied;
  state_.chaser_pos += applied * dt;
  state_.target_pos += state_.target_vel * dt;
  const Vec3 spin = state_.target_angular_vel * dt;
  const double angle = spin.norm();
  if (angle > 0.0) {
    state_.target_orientation = state_.target_orientation * Quat(Eigen::AngleAxisd(angle, spin / angle));
    state_.target_orientation.normalize();
  }
  ++state_.step_index;

  RenderResult frame = observe();
  StepResult out;
  out.visible = frame.target_pixels > 0;
  invisible_streak_ = out.visible ? 0 : invisible_streak_ + 1;
  const auto outcome = compute_reward(compute_error(state_, config_.setpoint), out.visible, invisible_streak_, config_);
  out.reward = outcome.reward;
  out.terms = outcome.terms;
  out.lost = outcome.terminal;
  out.done = out.lost || state_.step_index >= config_.max_episode_len;
  done_ = out.done;
  out.observation = finish_observation(std::move(frame));
  return out;
}

void write_trace_csv(const std::vector<TraceRow>& rows, const std::string& path) {
  std::ofstream out(path);
  require(out.good(), ErrorKind::kIo, "cannot write trace " + path);
  out << "step,ex,ey,ez,e_t,action,reward,visible\n";
  for (const auto& r : rows) {
    out << r.step << ',' << r.error_vector.x() << ',' << r.error_vector.y() << ',' << r.error_vector.z() << ','
        << r.error << ',' << r.action << ',' << r.reward << ',' << (r.visible ? 1 : 0) << "\n";
  }
  require(out.good(), ErrorKind::kIo, "failed writing trace " + path);
}

}  // namespace ramavt::env
