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

#include "evalkit/evalkit.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "blocks/attention_map.hpp"
#include "common/error.hpp"

namespace ramavt::evalkit {

using diffnet::Tensor;
using Clock = std::chrono::steady_clock;

namespace {

constexpr std::uint64_t kEvalSeedStream = 10000;
constexpr std::uint64_t kRandomActionStream = 7;

std::ofstream open_for_write(const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorKind::kIo, "cannot write " + path);
  return out;
}

}  // namespace

bool EvalReport::same_outcomes(const EvalReport& o) const {
  return seeds == o.seeds && lengths == o.lengths && rewards == o.rewards;
}

EvalReport summarize(std::string label, std::vector<std::uint64_t> seeds, std::vector<int> lengths,
                     std::vector<double> rewards, double decision_seconds, std::int64_t decisions) {
  require(!lengths.empty() && lengths.size() == rewards.size(), ErrorKind::kEmpty,
          "a report needs at least one episode and one reward per episode");
  EvalReport r;
  r.label = std::move(label);
  r.seeds = std::move(seeds);
  r.lengths = std::move(lengths);
  r.rewards = std::move(rewards);
  const double n = static_cast<double>(r.lengths.size());
  r.ael = std::accumulate(r.lengths.begin(), r.lengths.end(), 0.0) / n;
  r.min_el = *std::min_element(r.lengths.begin(), r.lengths.end());
  r.max_el = *std::max_element(r.lengths.begin(), r.lengths.end());
  r.aer = std::accumulate(r.rewards.begin(), r.rewards.end(), 0.0) / n;
  r.min_er = *std::min_element(r.rewards.begin(), r.rewards.end());
  r.max_er = *std::max_element(r.rewards.begin(), r.rewards.end());
  r.speed_hz = static_cast<double>(std::max<std::int64_t>(decisions, 1)) / std::max(decision_seconds, 1e-9);
  return r;
}

std::vector<std::uint64_t> evaluation_seeds(std::uint64_t base, int count) {
  require(count >= 1, ErrorKind::kInvalidArgument, "evaluation needs at least one episode");
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < count; ++i) seeds.push_back(derive_seed(base, kEvalSeedStream + i));
  return seeds;
}

int evaluation_target(int episode, env::EnvMode mode) {
  const auto& catalog =
      env::target_catalog(mode == env::EnvMode::kEval ? env::TargetSplit::kEval : env::TargetSplit::kTrain);
  return episode % static_cast<int>(catalog.size());
}

EvalReport evaluate(const QNetwork& net, const env::EnvConfig& env_config, const EvalOptions& options,
                    std::string label) {
  const auto& spec = net.spec();
  require(spec.input_format == env_config.input_format && spec.resolution == env_config.resolution,
          ErrorKind::kSpecMismatch, "network input does not match the environment observations");
  env::Environment env(env_config, options.perturb);
  const auto seeds = evaluation_seeds(options.seed, options.episodes);
  std::vector<int> lengths;
  std::vector<double> rewards;
  double seconds = 0.0;
  std::int64_t decisions = 0;
  for (int i = 0; i < options.episodes; ++i) {
    Tensor obs = env.reset(seeds[i], options.mode, evaluation_target(i, options.mode));
    auto state = blocks::RecurrentState::zeros(1, spec.lstm_size);
    trainer::FrameStacker stacker(spec.frame_stack, obs.shape());
    stacker.reset(obs);
    int length = 0;
    double total = 0.0;
    while (!env.done()) {
      const auto start = Clock::now();
      int action;
      if (spec.recurrent()) {
        auto step = net.ramavt_forward(obs, state);
        state = std::move(step.state);
        action = trainer::argmax(step.q);
      } else {
        action = trainer::argmax(net.drlavt_forward(stacker.stack()));
      }
      seconds += std::chrono::duration<double>(Clock::now() - start).count();
      ++decisions;
      auto out = env.step(action);
      obs = std::move(out.observation);
      if (!spec.recurrent()) stacker.push(obs);
      total += out.reward;
      ++length;
    }
    lengths.push_back(length);
    rewards.push_back(total);
  }
  return summarize(std::move(label), seeds, std::move(lengths), std::move(rewards), seconds, decisions);
}

EvalReport random_baseline(const env::EnvConfig& env_config, const EvalOptions& options,
                           std::vector<std::int64_t>* histogram) {
  env::Environment env(env_config, options.perturb);
  const auto seeds = evaluation_seeds(options.seed, options.episodes);
  if (histogram) histogram->assign(env.action_count(), 0);
  std::vector<int> lengths;
  std::vector<double> rewards;
  double seconds = 0.0;
  std::int64_t decisions = 0;
  for (int i = 0; i < options.episodes; ++i) {
    env.reset(seeds[i], options.mode, evaluation_target(i, options.mode));
    Rng rng(derive_seed(seeds[i], kRandomActionStream));
    int length = 0;
    double total = 0.0;
    while (!env.done()) {
      const auto start = Clock::now();
      const int action = uniform_int(rng, env.action_count());
      seconds += std::chrono::duration<double>(Clock::now() - start).count();
      ++decisions;
      if (histogram) ++(*histogram)[action];
      total += env.step(action).reward;
      ++length;
    }
    lengths.push_back(length);
    rewards.push_back(total);
  }
  return summarize("random", seeds, std::move(lengths), std::move(rewards), seconds, decisions);
}

void write_episode_csv(const EvalReport& report, const std::string& path) {
  auto out = open_for_write(path);
  out.precision(17);
  out << "episode,seed,length,reward\n";
  for (int i = 0; i < report.episodes(); ++i)
    out << i << ',' << report.seeds[i] << ',' << report.lengths[i] << ',' << report.rewards[i] << "\n";
  require(out.good(), ErrorKind::kIo, "failed writing " + path);
}

std::string perturbation_tag(const env::PerturbationConfig& p) {
  if (!p.any()) return "none";
  std::string tag;
  auto add = [&tag](const char* part) { tag += tag.empty() ? part : std::string("+") + part; };
  if (p.actuator_noise.enabled) add("noise");
  if (p.time_delay.enabled) add("delay");
  if (p.image_blur.enabled) add("blur");
  return tag;
}

std::string report_file_name(const std::string& agent, InputFormat format, const env::PerturbationConfig& perturb) {
  return "eval_" + agent + "_" + input_format_name(format) + "_" + perturbation_tag(perturb) + ".csv";
}

std::vector<env::PerturbationConfig> perturbation_rows(const env::PerturbationConfig& magnitudes) {
  auto only = [&magnitudes](bool noise, bool delay, bool blur) {
    env::PerturbationConfig p = magnitudes;
    p.actuator_noise.enabled = noise;
    p.time_delay.enabled = delay;
    p.image_blur.enabled = blur;
    return p;
  };
  return {only(true, false, false), only(false, true, false), only(false, false, true), only(true, true, true),
          only(false, false, false)};
}

std::vector<PerturbationRow> perturbation_suite(const QNetwork& net, const env::EnvConfig& env_config,
                                                const EvalOptions& options) {
  std::vector<PerturbationRow> rows;
  for (const auto& p : perturbation_rows(options.perturb)) {
    EvalOptions o = options;
    o.perturb = p;
    const std::string name = perturbation_tag(p);
    rows.push_back({name, p, evaluate(net, env_config, o, name)});
  }
  return rows;
}

void write_perturbation_csv(const std::vector<PerturbationRow>& rows, const std::string& path) {
  auto out = open_for_write(path);
  out.precision(10);
  out << "name,actuator_noise,time_delay,image_blur,AEL,AER\n";
  for (const auto& r : rows)
    out << r.name << ',' << r.config.actuator_noise.enabled << ',' << r.config.time_delay.enabled << ','
        << r.config.image_blur.enabled << ',' << r.report.ael << ',' << r.report.aer << "\n";
  require(out.good(), ErrorKind::kIo, "failed writing " + path);
}

void write_pgm(const Tensor& map, const std::string& path) {
  require(map.rank() == 2, ErrorKind::kShape, "map images must be [H, W]");
  const auto& v = map.values();
  const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
  const double lo = *lo_it, range = *hi_it - *lo_it;
  auto out = open_for_write(path);
  out << "P5\n" << map.dim(1) << ' ' << map.dim(0) << "\n255\n";
  for (float x : v) {
    // A flat map has no contrast to stretch; it is drawn mid-gray.
    const double scaled = range > 0.0 ? (x - lo) / range * 255.0 : 128.0;
    out.put(static_cast<char>(static_cast<unsigned char>(std::lround(scaled))));
  }
  require(out.good(), ErrorKind::kIo, "failed writing " + path);
}

void write_map_csv(const Tensor& map, const std::string& path) {
  require(map.rank() == 2, ErrorKind::kShape, "maps must be [H, W]");
  auto out = open_for_write(path);
  out.precision(9);
  for (int r = 0; r < map.dim(0); ++r) {
    for (int c = 0; c < map.dim(1); ++c) out << (c ? "," : "") << map.values()[r * map.dim(1) + c];
    out << "\n";
  }
  require(out.good(), ErrorKind::kIo, "failed writing " + path);
}

std::pair<double, double> map_center_of_mass(const Tensor& map, int image_side) {
  require(map.rank() == 2, ErrorKind::kShape, "maps must be [H, W]");
  const int h = map.dim(0), w = map.dim(1);
  double sx = 0.0, sy = 0.0, total = 0.0;
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      const double m = map.values()[r * w + c];
      sx += m * (c + 0.5) * image_side / w;
      sy += m * (r + 0.5) * image_side / h;
      total += m;
    }
  require(total > 0.0, ErrorKind::kDegenerate, "map has no mass");
  return {sx / total, sy / total};
}

std::vector<std::pair<std::string, Tensor>> attention_maps(const QNetwork& net, const Tensor& observation) {
  blocks::Captures captures;
  if (net.spec().recurrent()) {
    net.ramavt_forward(observation, blocks::RecurrentState::zeros(1, net.spec().lstm_size), &captures);
  } else {
    net.drlavt_forward(observation, &captures);
  }
  std::vector<std::pair<std::string, Tensor>> maps;
  for (const auto& [name, activation] : captures.layers) {
    const Tensor batch_map = blocks::attention_map(activation);
    maps.emplace_back(name, Tensor({batch_map.dim(1), batch_map.dim(2)}, batch_map.to_vector()));
  }
  return maps;
}

std::vector<MapExport> export_attention_maps(const QNetwork& net, const Tensor& observation,
                                             const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::vector<MapExport> maps;
  for (auto& [name, map] : attention_maps(net, observation)) {
    MapExport e{name, std::move(map), (std::filesystem::path(out_dir) / (name + ".pgm")).string(),
                (std::filesystem::path(out_dir) / (name + ".csv")).string()};
    write_pgm(e.map, e.image_path);
    write_map_csv(e.map, e.csv_path);
    maps.push_back(std::move(e));
  }
  return maps;
}

OnAxisView target_view(const env::EnvConfig& env_config, std::uint64_t seed, int target_index,
                       const env::Vec3& relative) {
  env::Environment environment(env_config);
  environment.reset(seed, env::EnvMode::kEval, target_index);
  env::WorldState state = environment.state();
  state.target_pos = state.chaser_pos + relative;
  auto frame = env::render(state, environment.target(), env_config.input_format, env_config.resolution,
                           env_config.fov_deg, env_config.max_depth);
  require(frame.target_pixels > 0, ErrorKind::kDegenerate, "target is not visible from the chaser");
  return {std::move(frame.pixels), frame.centroid_x, frame.centroid_y};
}

OnAxisView on_axis_view(const env::EnvConfig& env_config, std::uint64_t seed, int target_index) {
  return target_view(env_config, seed, target_index, env_config.setpoint);
}

FocusReport attention_focus(const QNetwork& net, const OnAxisView& view, const std::string& layer) {
  Tensor input = view.observation;
  if (!net.spec().recurrent()) {
    const int k = net.spec().frame_stack;
    const int c = view.observation.dim(0), h = view.observation.dim(1), w = view.observation.dim(2);
    input = Tensor({k * c, h, w});
    for (int i = 0; i < k; ++i)
      std::copy(view.observation.values().begin(), view.observation.values().end(),
                input.values().begin() + static_cast<std::ptrdiff_t>(i) * c * h * w);
  }
  const int side = view.observation.dim(2);
  for (const auto& [name, map] : attention_maps(net, input)) {
    if (name != layer) continue;
    const auto [x, y] = map_center_of_mass(map, side);
    const double diagonal = std::sqrt(2.0) * side;
    return {name, x, y, std::hypot(x - view.centroid_x, y - view.centroid_y) / diagonal};
  }
  fail(ErrorKind::kInvalidArgument, "network has no capture point named '" + layer + "'");
}

std::vector<AblationVariant> ablation_variants() {
  return {{"Origin", blocks::Variant::kOrigin, false},
          {"Augment", blocks::Variant::kOrigin, true},
          {"SE", blocks::Variant::kOriginSe, true},
          {"MHA", blocks::Variant::kOriginMha, true},
          {"RAMAVT", blocks::Variant::kRamavt, true}};
}

std::vector<AblationRow> run_ablation(const std::vector<AblationVariant>& variants,
                                      const trainer::TrainConfig& train_config, const env::EnvConfig& env_config,
                                      const EvalOptions& options, const AblationCallbacks& callbacks) {
  std::vector<AblationRow> rows;
  for (const auto& v : variants) {
    auto cfg = train_config;
    cfg.augment = v.augment ? augment::AugmentConfig::all() : augment::AugmentConfig{};
    if (v.augment) cfg.augment.cutout_size = std::min(cfg.augment.cutout_size, env_config.resolution / 4);
    const auto spec = blocks::QNetworkSpec::make(v.variant, env_config.input_format, env_config.resolution);
    trainer::Trainer t(cfg, env_config, std::make_unique<QNetwork>(spec, trainer::network_seed(cfg.seed)));
    trainer::TrainCallbacks cb;
    if (callbacks.on_episode) cb.on_episode = [&](const trainer::LogRow& row) { callbacks.on_episode(v.name, row); };
    t.run(cb);
    if (callbacks.on_trained) callbacks.on_trained(v.name, t.online());
    rows.push_back({v.name, t.online().params().trainable_scalar_count(), evaluate(t.online(), env_config, options, v.name)});
  }
  return rows;
}

void write_ablation_csv(const std::vector<AblationRow>& rows, const std::string& path) {
  auto out = open_for_write(path);
  out.precision(10);
  out << "name,parameters,AEL,AER,speed_hz\n";
  for (const auto& r : rows)
    out << r.name << ',' << r.parameters << ',' << r.report.ael << ',' << r.report.aer << ',' << r.report.speed_hz
        << "\n";
  require(out.good(), ErrorKind::kIo, "failed writing " + path);
}

}  // namespace ramavt::evalkit
