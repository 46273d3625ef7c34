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

#include "ramavt/ramavt.h"

#include <cstring>
#include <exception>
#include <filesystem>
#include <memory>
#include <new>
#include <optional>
#include <string>
#include <vector>

#include "blocks/gradcheck_suite.hpp"
#include "cli/checkpoint.hpp"
#include "cli/config.hpp"
#include "common/error.hpp"
#include "env/env.hpp"
#include "evalkit/evalkit.hpp"
#include "trainer/trainer.hpp"

using ramavt::Error;
using ramavt::ErrorKind;
using ramavt::blocks::QNetwork;
using ramavt::diffnet::Tensor;

struct ramavt_config {
  ramavt::cli::RunConfig run;
};

struct ramavt_agent {
  std::unique_ptr<QNetwork> net;
  int episode = 0;
  std::uint64_t seed = 0;
  std::string variant, input_format;
  std::optional<ramavt::blocks::RecurrentState> state;
  std::optional<ramavt::trainer::FrameStacker> stacker;
};

struct ramavt_env {
  ramavt::env::Environment env;
  Tensor observation;
};

struct ramavt_report {
  enum class Kind { kEvaluation, kPerturbation, kAblation } kind = Kind::kEvaluation;
  std::vector<ramavt::evalkit::EvalReport> rows;
  std::vector<ramavt::env::PerturbationConfig> perturb;  // perturbation rows
  std::vector<std::size_t> parameters;                   // ablation rows
  std::vector<ramavt::evalkit::PerturbationRow> perturbation_rows;
  std::vector<ramavt::evalkit::AblationRow> ablation_rows;
};

namespace {

thread_local std::string last_error;

ramavt_status status_of(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return RAMAVT_ERR_INVALID_ARGUMENT;
    case ErrorKind::kShape: return RAMAVT_ERR_SHAPE;
    case ErrorKind::kDegenerate: return RAMAVT_ERR_DEGENERATE;
    case ErrorKind::kEmpty: return RAMAVT_ERR_EMPTY;
    case ErrorKind::kNumeric: return RAMAVT_ERR_NUMERIC;
    case ErrorKind::kIo: return RAMAVT_ERR_IO;
    case ErrorKind::kParse: return RAMAVT_ERR_PARSE;
    case ErrorKind::kBadMagic: return RAMAVT_ERR_BAD_MAGIC;
    case ErrorKind::kVersion: return RAMAVT_ERR_VERSION;
    case ErrorKind::kTruncated: return RAMAVT_ERR_TRUNCATED;
    case ErrorKind::kSpecMismatch: return RAMAVT_ERR_SPEC_MISMATCH;
  }
  return RAMAVT_ERR_INTERNAL;
}

// Runs `fn`, translating every exception into a status and a message.
template <class Fn>
ramavt_status guarded(Fn&& fn) {
  try {
    fn();
    last_error.clear();
    return RAMAVT_OK;
  } catch (const Error& e) {
    last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
  } catch (const std::filesystem::filesystem_error& e) {
    last_error = e.what();
    return RAMAVT_ERR_IO;
  } catch (const std::exception& e) {
    last_error = e.what();
  } catch (...) {
    last_error = "unknown error";
  }
  return RAMAVT_ERR_INTERNAL;
}

template <class T>
void need(const T* p, const char* what) {
  if (p == nullptr) ramavt::fail(ErrorKind::kInvalidArgument, std::string(what) + " must not be NULL");
}

// The configuration with its nested parts filled in and validated.
ramavt::cli::RunConfig finalized(const ramavt_config* config) {
  need(config, "config");
  auto run = config->run;
  run.finalize();
  return run;
}

ramavt_agent* wrap_agent(std::unique_ptr<QNetwork> net, int episode, std::uint64_t seed) {
  auto agent = std::make_unique<ramavt_agent>();
  agent->variant = ramavt::blocks::variant_name(net->spec().variant);
  agent->input_format = ramavt::input_format_name(net->spec().input_format);
  agent->net = std::move(net);
  agent->episode = episode;
  agent->seed = seed;
  return agent.release();
}

void check_agent_matches(const ramavt_agent* agent, const ramavt::cli::RunConfig& run) {
  const auto& s = agent->net->spec();
  ramavt::require(s.input_format == run.env.input_format && s.resolution == run.env.resolution,
                  ErrorKind::kSpecMismatch,
                  "agent expects " + agent->input_format + " input at " + std::to_string(s.resolution) +
                      " px but the configuration renders " + ramavt::input_format_name(run.env.input_format) +
                      " at " + std::to_string(run.env.resolution) +
                      " px; pass --input_format and --resolution to match the checkpoint");
}

std::string run_stem(const ramavt::cli::RunConfig& run) {
  return ramavt::blocks::variant_name(run.variant) + "_" + ramavt::input_format_name(run.input_format);
}

ramavt_episode episode_row(const std::string& variant, const ramavt::trainer::LogRow& row) {
  return {variant.c_str(), row.episode, row.length, row.reward, row.epsilon, row.mean_loss};
}

}  // namespace

extern "C" {

const char* ramavt_version(void) { return "0.1.0"; }

const char* ramavt_status_name(ramavt_status status) {
  switch (status) {
    case RAMAVT_OK: return "ok";
    case RAMAVT_ERR_INVALID_ARGUMENT: return "invalid argument";
    case RAMAVT_ERR_SHAPE: return "shape mismatch";
    case RAMAVT_ERR_DEGENERATE: return "degenerate input";
    case RAMAVT_ERR_EMPTY: return "empty";
    case RAMAVT_ERR_NUMERIC: return "non-finite value";
    case RAMAVT_ERR_IO: return "i/o error";
    case RAMAVT_ERR_PARSE: return "parse error";
    case RAMAVT_ERR_BAD_MAGIC: return "bad magic";
    case RAMAVT_ERR_VERSION: return "unsupported version";
    case RAMAVT_ERR_TRUNCATED: return "truncated file";
    case RAMAVT_ERR_SPEC_MISMATCH: return "spec mismatch";
    case RAMAVT_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* ramavt_last_error(void) { return last_error.c_str(); }

// ---- configuration

ramavt_status ramavt_config_create(ramavt_config** out) {
  return guarded([&] {
    need(out, "out");
    *out = new ramavt_config{};
  });
}

void ramavt_config_destroy(ramavt_config* config) { delete config; }

ramavt_status ramavt_config_parse_args(ramavt_config* config, int argc, const char* const* argv) {
  return guarded([&] {
    need(config, "config");
    if (argc > 0) need(argv, "argv");
    std::vector<std::string> args;
    for (int i = 0; i < argc; ++i) {
      need(argv[i], "argument");
      args.emplace_back(argv[i]);
    }
    config->run = ramavt::cli::parse_config(args);
  });
}

ramavt_status ramavt_config_load_file(ramavt_config* config, const char* path) {
  return guarded([&] {
    need(config, "config");
    need(path, "path");
    ramavt::cli::apply_config_file(config->run, path);
  });
}

ramavt_status ramavt_config_set(ramavt_config* config, const char* key, const char* value) {
  return guarded([&] {
    need(config, "config");
    need(key, "key");
    need(value, "value");
    ramavt::cli::set_config_value(config->run, key, value);
  });
}

ramavt_status ramavt_config_get(const ramavt_config* config, const char* key, char* buffer, size_t capacity,
                                size_t* needed) {
  return guarded([&] {
    need(config, "config");
    need(key, "key");
    const std::string value = ramavt::cli::get_config_value(config->run, key);
    if (needed) *needed = value.size() + 1;
    if (capacity > 0) {
      need(buffer, "buffer");
      const std::size_t n = std::min(value.size(), capacity - 1);
      std::memcpy(buffer, value.data(), n);
      buffer[n] = '\0';
    }
  });
}

const char* ramavt_config_command(const ramavt_config* config) {
  return config ? config->run.command.c_str() : "";
}

size_t ramavt_config_key_count(void) { return ramavt::cli::config_keys().size(); }

const char* ramavt_config_key(size_t index) {
  static const std::vector<std::string> keys = ramavt::cli::config_keys();
  return index < keys.size() ? keys[index].c_str() : nullptr;
}

ramavt_status ramavt_config_validate(const ramavt_config* config) {
  return guarded([&] { finalized(config); });
}

// ---- agents

ramavt_status ramavt_agent_create(const ramavt_config* config, ramavt_agent** out) {
  return guarded([&] {
    need(out, "out");
    const auto run = finalized(config);
    const auto spec = ramavt::blocks::QNetworkSpec::make(run.variant, run.input_format, run.env.resolution);
    *out = wrap_agent(std::make_unique<QNetwork>(spec, ramavt::trainer::network_seed(run.seed)), 0, run.seed);
  });
}

ramavt_status ramavt_agent_load(const char* path, ramavt_agent** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    auto loaded = ramavt::cli::load_checkpoint(path);
    *out = wrap_agent(std::move(loaded.network), loaded.meta.episode, loaded.meta.seed);
  });
}

ramavt_status ramavt_agent_save(const ramavt_agent* agent, const char* path) {
  return guarded([&] {
    need(agent, "agent");
    need(path, "path");
    ramavt::cli::save_checkpoint(*agent->net, ramavt::cli::meta_for(*agent->net, agent->episode, agent->seed), path);
  });
}

void ramavt_agent_destroy(ramavt_agent* agent) { delete agent; }

ramavt_status ramavt_agent_info_get(const ramavt_agent* agent, ramavt_agent_info* info) {
  return guarded([&] {
    need(agent, "agent");
    need(info, "info");
    const auto& s = agent->net->spec();
    info->variant = agent->variant.c_str();
    info->input_format = agent->input_format.c_str();
    info->resolution = s.resolution;
    info->action_count = s.action_count;
    info->observation_channels = ramavt::input_channels(s.input_format);
    info->parameters = agent->net->params().trainable_scalar_count();
    info->episode = agent->episode;
    info->seed = agent->seed;
  });
}

ramavt_status ramavt_agent_reset(ramavt_agent* agent) {
  return guarded([&] {
    need(agent, "agent");
    agent->state.reset();
    agent->stacker.reset();
  });
}

ramavt_status ramavt_agent_act(ramavt_agent* agent, const float* observation, size_t count, int* action, float* q,
                               size_t q_capacity) {
  return guarded([&] {
    need(agent, "agent");
    need(observation, "observation");
    need(action, "action");
    const auto& s = agent->net->spec();
    const int channels = ramavt::input_channels(s.input_format);
    const std::size_t expected = static_cast<std::size_t>(channels) * s.resolution * s.resolution;
    ramavt::require(count == expected, ErrorKind::kShape,
                    "observation has " + std::to_string(count) + " values, the agent expects " +
                        std::to_string(expected));
    if (q) ramavt::require(q_capacity >= static_cast<std::size_t>(s.action_count), ErrorKind::kInvalidArgument,
                           "q buffer holds fewer values than there are actions");
    Tensor obs({channels, s.resolution, s.resolution}, std::vector<float>(observation, observation + count));
    std::vector<float> values;
    if (s.recurrent()) {
      if (!agent->state) agent->state = ramavt::blocks::RecurrentState::zeros(1, s.lstm_size);
      auto step = agent->net->ramavt_forward(obs, *agent->state);
      agent->state = std::move(step.state);
      values = std::move(step.q);
    } else {
      if (!agent->stacker) {
        agent->stacker.emplace(s.frame_stack, obs.shape());
        agent->stacker->reset(obs);
      } else {
        agent->stacker->push(obs);
      }
      values = agent->net->drlavt_forward(agent->stacker->stack());
    }
    *action = ramavt::trainer::argmax(values);
    if (q) std::copy(values.begin(), values.end(), q);
  });
}

// ---- environment

ramavt_status ramavt_env_create(const ramavt_config* config, ramavt_env** out) {
  return guarded([&] {
    need(out, "out");
    const auto run = finalized(config);
    *out = new ramavt_env{ramavt::env::Environment(run.env, run.perturb), Tensor()};
  });
}

void ramavt_env_destroy(ramavt_env* env) { delete env; }

ramavt_status ramavt_env_reset(ramavt_env* env, uint64_t seed, int evaluation, int target_index) {
  return guarded([&] {
    need(env, "env");
    std::optional<int> target;
    if (target_index >= 0) target = target_index;
    env->observation =
        env->env.reset(seed, evaluation ? ramavt::env::EnvMode::kEval : ramavt::env::EnvMode::kTrain, target);
  });
}

size_t ramavt_env_observation_size(const ramavt_env* env) {
  if (!env) return 0;
  const auto& c = env->env.config();
  return static_cast<size_t>(ramavt::input_channels(c.input_format)) * c.resolution * c.resolution;
}

int ramavt_env_action_count(const ramavt_env* env) { return env ? env->env.action_count() : 0; }

ramavt_status ramavt_env_observe(const ramavt_env* env, float* buffer, size_t count) {
  return guarded([&] {
    need(env, "env");
    need(buffer, "buffer");
    ramavt::require(env->observation.size() > 0, ErrorKind::kInvalidArgument, "call ramavt_env_reset first");
    ramavt::require(count >= static_cast<size_t>(env->observation.size()), ErrorKind::kShape,
                    "buffer holds fewer values than one observation");
    std::copy(env->observation.values().begin(), env->observation.values().end(), buffer);
  });
}

ramavt_status ramavt_env_step(ramavt_env* env, int action, ramavt_step* out) {
  return guarded([&] {
    need(env, "env");
    need(out, "out");
    ramavt::require(env->observation.size() > 0, ErrorKind::kInvalidArgument, "call ramavt_env_reset first");
    auto r = env->env.step(action);
    env->observation = std::move(r.observation);
    *out = {r.reward, r.done ? 1 : 0, r.lost ? 1 : 0, r.visible ? 1 : 0};
  });
}

// ---- training

ramavt_status ramavt_train(const ramavt_config* config, ramavt_episode_fn on_episode, void* user,
                           ramavt_agent** out) {
  return guarded([&] {
    const auto run = finalized(config);
    const auto spec = ramavt::blocks::QNetworkSpec::make(run.variant, run.input_format, run.env.resolution);
    ramavt::trainer::Trainer t(run.train, run.env,
                               std::make_unique<QNetwork>(spec, ramavt::trainer::network_seed(run.seed)));
    const std::string stem = run_stem(run);
    const std::filesystem::path ckpt_dir(run.checkpoint_dir);
    const std::string variant = ramavt::blocks::variant_name(run.variant);
    ramavt::trainer::TrainCallbacks cb;
    if (on_episode) cb.on_episode = [&](const ramavt::trainer::LogRow& row) {
      const auto r = episode_row(variant, row);
      on_episode(&r, user);
    };
    cb.on_checkpoint = [&](int episode, const QNetwork& net) {
      const auto meta = ramavt::cli::meta_for(net, episode, run.seed);
      ramavt::cli::save_checkpoint(net, meta, (ckpt_dir / (stem + "_ep" + std::to_string(episode) + ".ckpt")).string());
      if (episode == run.train.episodes)
        ramavt::cli::save_checkpoint(net, meta, (ckpt_dir / (stem + ".ckpt")).string());
    };
    const auto result = t.run(cb);
    std::filesystem::create_directories(run.report_dir);
    ramavt::trainer::write_log_csv(result.log,
                                   (std::filesystem::path(run.report_dir) / ("train_" + stem + ".csv")).string());
    if (out) {
      auto copy = std::make_unique<QNetwork>(spec, 0);
      copy->params().copy_from(t.online().params());
      *out = wrap_agent(std::move(copy), run.train.episodes, run.seed);
    }
  });
}

// ---- reports

ramavt_status ramavt_evaluate(const ramavt_agent* agent, const ramavt_config* config, ramavt_report** out) {
  return guarded([&] {
    need(agent, "agent");
    need(out, "out");
    const auto run = finalized(config);
    check_agent_matches(agent, run);
    auto report = std::make_unique<ramavt_report>();
    report->rows.push_back(ramavt::evalkit::evaluate(*agent->net, run.env, run.eval_options(), agent->variant));
    report->perturb.push_back(run.perturb);
    report->parameters.push_back(0);
    *out = report.release();
  });
}

ramavt_status ramavt_random_baseline(const ramavt_config* config, ramavt_report** out) {
  return guarded([&] {
    need(out, "out");
    const auto run = finalized(config);
    auto report = std::make_unique<ramavt_report>();
    report->rows.push_back(ramavt::evalkit::random_baseline(run.env, run.eval_options()));
    report->perturb.push_back(run.perturb);
    report->parameters.push_back(0);
    *out = report.release();
  });
}

ramavt_status ramavt_perturbation_suite(const ramavt_agent* agent, const ramavt_config* config,
                                        ramavt_report** out) {
  return guarded([&] {
    need(agent, "agent");
    need(out, "out");
    const auto run = finalized(config);
    check_agent_matches(agent, run);
    auto options = run.eval_options();
    options.perturb = run.perturb;
    auto report = std::make_unique<ramavt_report>();
    report->kind = ramavt_report::Kind::kPerturbation;
    report->perturbation_rows = ramavt::evalkit::perturbation_suite(*agent->net, run.env, options);
    for (const auto& row : report->perturbation_rows) {
      report->rows.push_back(row.report);
      report->rows.back().label = row.name;
      report->perturb.push_back(row.config);
      report->parameters.push_back(0);
    }
    *out = report.release();
  });
}

ramavt_status ramavt_ablation(const ramavt_config* config, ramavt_episode_fn on_episode, void* user,
                              ramavt_report** out) {
  return guarded([&] {
    need(out, "out");
    const auto run = finalized(config);
    ramavt::evalkit::AblationCallbacks cb;
    if (on_episode) cb.on_episode = [&](const std::string& name, const ramavt::trainer::LogRow& row) {
      const auto r = episode_row(name, row);
      on_episode(&r, user);
    };
    auto report = std::make_unique<ramavt_report>();
    report->kind = ramavt_report::Kind::kAblation;
    report->ablation_rows =
        ramavt::evalkit::run_ablation(ramavt::evalkit::ablation_variants(), run.train, run.env, run.eval_options(), cb);
    for (const auto& row : report->ablation_rows) {
      report->rows.push_back(row.report);
      report->rows.back().label = row.name;
      report->perturb.push_back(run.perturb);
      report->parameters.push_back(row.parameters);
    }
    *out = report.release();
  });
}

void ramavt_report_destroy(ramavt_report* report) { delete report; }

size_t ramavt_report_row_count(const ramavt_report* report) { return report ? report->rows.size() : 0; }

ramavt_status ramavt_report_row(const ramavt_report* report, size_t row, ramavt_summary* out) {
  return guarded([&] {
    need(report, "report");
    need(out, "out");
    ramavt::require(row < report->rows.size(), ErrorKind::kInvalidArgument, "row index out of range");
    const auto& r = report->rows[row];
    const auto& p = report->perturb[row];
    *out = {r.label.c_str(), r.episodes(), r.ael, r.min_el, r.max_el, r.aer, r.min_er, r.max_er, r.speed_hz,
            report->parameters[row], p.actuator_noise.enabled ? 1 : 0, p.time_delay.enabled ? 1 : 0,
            p.image_blur.enabled ? 1 : 0};
  });
}

ramavt_status ramavt_report_episode(const ramavt_report* report, size_t row, size_t episode, uint64_t* seed,
                                    int* length, double* reward) {
  return guarded([&] {
    need(report, "report");
    ramavt::require(row < report->rows.size(), ErrorKind::kInvalidArgument, "row index out of range");
    const auto& r = report->rows[row];
    ramavt::require(episode < r.lengths.size(), ErrorKind::kInvalidArgument, "episode index out of range");
    if (seed) *seed = r.seeds[episode];
    if (length) *length = r.lengths[episode];
    if (reward) *reward = r.rewards[episode];
  });
}

ramavt_status ramavt_report_same_outcomes(const ramavt_report* a, const ramavt_report* b, int* same) {
  return guarded([&] {
    need(a, "a");
    need(b, "b");
    need(same, "same");
    bool equal = a->rows.size() == b->rows.size();
    for (std::size_t i = 0; equal && i < a->rows.size(); ++i) equal = a->rows[i].same_outcomes(b->rows[i]);
    *same = equal ? 1 : 0;
  });
}

ramavt_status ramavt_report_write_csv(const ramavt_report* report, const char* path) {
  return guarded([&] {
    need(report, "report");
    need(path, "path");
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    switch (report->kind) {
      case ramavt_report::Kind::kEvaluation:
        ramavt::require(report->rows.size() == 1, ErrorKind::kInvalidArgument, "evaluation report has no rows");
        ramavt::evalkit::write_episode_csv(report->rows.front(), path);
        break;
      case ramavt_report::Kind::kPerturbation:
        ramavt::evalkit::write_perturbation_csv(report->perturbation_rows, path);
        break;
      case ramavt_report::Kind::kAblation:
        ramavt::evalkit::write_ablation_csv(report->ablation_rows, path);
        break;
    }
  });
}

// ---- interpretability

ramavt_status ramavt_export_attention_maps(const ramavt_agent* agent, const ramavt_config* config, int steps,
                                           const char* out_dir, size_t* map_count) {
  return guarded([&] {
    need(agent, "agent");
    need(out_dir, "out_dir");
    ramavt::require(steps >= 0, ErrorKind::kInvalidArgument, "steps must be non-negative");
    const auto run = finalized(config);
    check_agent_matches(agent, run);
    const auto& net = *agent->net;
    const auto& s = net.spec();
    ramavt::env::Environment env(run.env, run.perturb);
    const auto seed = ramavt::evalkit::evaluation_seeds(run.eval_seed, 1).front();
    Tensor obs = env.reset(seed, ramavt::env::EnvMode::kEval, ramavt::evalkit::evaluation_target(0, ramavt::env::EnvMode::kEval));
    auto state = ramavt::blocks::RecurrentState::zeros(1, s.lstm_size);
    ramavt::trainer::FrameStacker stacker(s.frame_stack, obs.shape());
    stacker.reset(obs);
    for (int i = 0; i < steps && !env.done(); ++i) {
      int action;
      if (s.recurrent()) {
        auto step = net.ramavt_forward(obs, state);
        state = std::move(step.state);
        action = ramavt::trainer::argmax(step.q);
      } else {
        action = ramavt::trainer::argmax(net.drlavt_forward(stacker.stack()));
      }
      auto r = env.step(action);
      obs = std::move(r.observation);
      stacker.push(obs);
    }
    const auto maps = ramavt::evalkit::export_attention_maps(net, s.recurrent() ? obs : stacker.stack(), out_dir);
    if (map_count) *map_count = maps.size();
  });
}

ramavt_status ramavt_attention_focus(const ramavt_agent* agent, const ramavt_config* config, const char* layer,
                                     int target_index, double* diagonal_fraction) {
  return guarded([&] {
    need(agent, "agent");
    need(layer, "layer");
    need(diagonal_fraction, "diagonal_fraction");
    const auto run = finalized(config);
    check_agent_matches(agent, run);
    const auto seed = ramavt::evalkit::evaluation_seeds(run.eval_seed, 1).front();
    const auto view = ramavt::evalkit::on_axis_view(run.env, seed, target_index);
    *diagonal_fraction = ramavt::evalkit::attention_focus(*agent->net, view, layer).diagonal_fraction;
  });
}

// ---- gradient checks

ramavt_status ramavt_grad_check(ramavt_gradcheck_fn on_case, void* user, int* all_passed) {
  return guarded([&] {
    need(all_passed, "all_passed");
    bool ok = true;
    for (const auto& c : ramavt::blocks::gradcheck_registry()) {
      const auto report = c.run();
      ok = ok && report.passed;
      if (on_case) on_case(c.name.c_str(), report.max_deviation, report.tolerance, report.passed ? 1 : 0, user);
    }
    *all_passed = ok ? 1 : 0;
  });
}

}  // extern "C"
