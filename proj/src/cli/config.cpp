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

#include "cli/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "common/error.hpp"

namespace ramavt::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const std::string& expected,
                            const std::string& where) {
  fail(ErrorKind::kParse, (where.empty() ? "" : where + ": ") + "invalid value '" + value + "' for " + key +
                              " (expected " + expected + ")");
}

template <class T>
T parse_number(const std::string& key, const std::string& value, const std::string& where) {
  T out{};
  const char* end = value.data() + value.size();
  const auto res = std::from_chars(value.data(), end, out);
  if (value.empty() || res.ec != std::errc() || res.ptr != end)
    bad_value(key, value, std::is_floating_point_v<T> ? "a number" : "an integer", where);
  return out;
}

bool parse_bool(const std::string& key, const std::string& value, const std::string& where) {
  if (value == "true" || value == "1" || value == "on" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "off" || value == "no") return false;
  bad_value(key, value, "true or false", where);
}

template <class T>
std::string to_text(T v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

struct Field {
  std::function<void(RunConfig&, const std::string&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <class T>
Field number(T RunConfig::*member) {
  return {[member](RunConfig& c, const std::string& k, const std::string& v, const std::string& w) {
            c.*member = parse_number<T>(k, v, w);
          },
          [member](const RunConfig& c) { return to_text(c.*member); }};
}

// Field reached through an accessor into a nested config.
template <class T, class Access>
Field nested_number(Access access) {
  return {[access](RunConfig& c, const std::string& k, const std::string& v, const std::string& w) {
            access(c) = parse_number<T>(k, v, w);
          },
          [access](const RunConfig& c) { return to_text(access(const_cast<RunConfig&>(c))); }};
}

template <class Access>
Field nested_bool(Access access) {
  return {[access](RunConfig& c, const std::string& k, const std::string& v, const std::string& w) {
            access(c) = parse_bool(k, v, w);
          },
          [access](const RunConfig& c) { return std::string(access(const_cast<RunConfig&>(c)) ? "true" : "false"); }};
}

template <class Access>
Field text(Access access) {
  return {[access](RunConfig& c, const std::string&, const std::string& v, const std::string&) { access(c) = v; },
          [access](const RunConfig& c) { return access(const_cast<RunConfig&>(c)); }};
}

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = [] {
    std::map<std::string, Field> t;
    t["input_format"] = {[](RunConfig& c, const std::string& k, const std::string& v, const std::string& w) {
                           try {
                             c.input_format = parse_input_format(v);
                           } catch (const Error&) {
                             bad_value(k, v, "depth, color or rgbd", w);
                           }
                         },
                         [](const RunConfig& c) { return input_format_name(c.input_format); }};
    t["variant"] = {[](RunConfig& c, const std::string& k, const std::string& v, const std::string& w) {
                      try {
                        c.variant = blocks::parse_variant(v);
                      } catch (const Error&) {
                        bad_value(k, v, "ramavt, drlavt, origin, origin+se or origin+mha", w);
                      }
                    },
                    [](const RunConfig& c) { return blocks::variant_name(c.variant); }};
    t["seed"] = number(&RunConfig::seed);
    t["eval_episodes"] = number(&RunConfig::eval_episodes);
    t["viz_steps"] = number(&RunConfig::viz_steps);
    t["eval_seed"] = number(&RunConfig::eval_seed);
    t["checkpoint_dir"] = text([](RunConfig& c) -> std::string& { return c.checkpoint_dir; });
    t["report_dir"] = text([](RunConfig& c) -> std::string& { return c.report_dir; });
    t["checkpoint"] = text([](RunConfig& c) -> std::string& { return c.checkpoint; });

    t["episodes"] = nested_number<int>([](RunConfig& c) -> int& { return c.train.episodes; });
    t["replay_capacity"] =
        nested_number<std::size_t>([](RunConfig& c) -> std::size_t& { return c.train.replay_capacity; });
    t["initial_buffer"] =
        nested_number<std::size_t>([](RunConfig& c) -> std::size_t& { return c.train.initial_buffer; });
    t["target_update_interval"] =
        nested_number<int>([](RunConfig& c) -> int& { return c.train.target_update_interval; });
    t["gamma"] = nested_number<double>([](RunConfig& c) -> double& { return c.train.gamma; });
    t["batch"] = nested_number<int>([](RunConfig& c) -> int& { return c.train.batch; });
    t["seq_len"] = nested_number<int>([](RunConfig& c) -> int& { return c.train.seq_len; });
    t["train_every"] = nested_number<int>([](RunConfig& c) -> int& { return c.train.train_every; });
    t["epsilon_start"] = nested_number<double>([](RunConfig& c) -> double& { return c.train.epsilon_start; });
    t["epsilon_end"] = nested_number<double>([](RunConfig& c) -> double& { return c.train.epsilon_end; });
    t["epsilon_decay_steps"] = nested_number<int>([](RunConfig& c) -> int& { return c.train.epsilon_decay_steps; });
    t["learning_rate"] = nested_number<double>([](RunConfig& c) -> double& { return c.train.learning_rate; });
    t["grad_clip"] = nested_number<double>([](RunConfig& c) -> double& { return c.train.grad_clip; });
    t["checkpoint_interval"] = nested_number<int>([](RunConfig& c) -> int& { return c.train.checkpoint_interval; });

    t["resolution"] = nested_number<int>([](RunConfig& c) -> int& { return c.env.resolution; });
    t["max_episode_len"] = nested_number<int>([](RunConfig& c) -> int& { return c.env.max_episode_len; });
    t["dt"] = nested_number<double>([](RunConfig& c) -> double& { return c.env.dt; });
    t["fov_deg"] = nested_number<double>([](RunConfig& c) -> double& { return c.env.fov_deg; });
    t["max_depth"] = nested_number<double>([](RunConfig& c) -> double& { return c.env.max_depth; });
    t["action_speed"] = nested_number<double>([](RunConfig& c) -> double& { return c.env.action_speed; });
    t["lose_patience"] = nested_number<int>([](RunConfig& c) -> int& { return c.env.lose_patience; });
    t["lose_distance"] = nested_number<double>([](RunConfig& c) -> double& { return c.env.lose_distance; });

    t["actuator_noise"] = nested_bool([](RunConfig& c) -> bool& { return c.perturb.actuator_noise.enabled; });
    t["noise_sigma"] = nested_number<double>([](RunConfig& c) -> double& { return c.perturb.actuator_noise.sigma; });
    t["time_delay"] = nested_bool([](RunConfig& c) -> bool& { return c.perturb.time_delay.enabled; });
    t["max_delay_steps"] =
        nested_number<int>([](RunConfig& c) -> int& { return c.perturb.time_delay.max_delay_steps; });
    t["image_blur"] = nested_bool([](RunConfig& c) -> bool& { return c.perturb.image_blur.enabled; });
    t["blur_kernel"] = nested_number<int>([](RunConfig& c) -> int& { return c.perturb.image_blur.kernel; });

    t["augment_crop"] = nested_bool([](RunConfig& c) -> bool& { return c.augment.crop; });
    t["augment_flip"] = nested_bool([](RunConfig& c) -> bool& { return c.augment.flip; });
    t["augment_cutout"] = nested_bool([](RunConfig& c) -> bool& { return c.augment.cutout; });
    t["augment_rotation"] = nested_bool([](RunConfig& c) -> bool& { return c.augment.rotation; });
    t["crop_pad"] = nested_number<int>([](RunConfig& c) -> int& { return c.augment.crop_pad; });
    t["cutout_size"] = nested_number<int>([](RunConfig& c) -> int& { return c.augment.cutout_size; });
    t["augment_probability"] =
        nested_number<double>([](RunConfig& c) -> double& { return c.augment.apply_probability; });
    return t;
  }();
  return table;
}

const Field& field(const std::string& key, const std::string& where) {
  const auto it = fields().find(key);
  if (it == fields().end())
    fail(ErrorKind::kParse, (where.empty() ? "" : where + ": ") + "unknown key '" + key + "'");
  return it->second;
}

}  // namespace

void RunConfig::finalize() {
  env.input_format = input_format;
  train.seed = seed;
  train.augment = augment;
  env.validate();
  perturb.validate();
  train.validate();
  augment.validate(env.resolution);
  require(eval_episodes >= 1, ErrorKind::kInvalidArgument, "eval_episodes must be positive");
  require(viz_steps >= 0, ErrorKind::kInvalidArgument, "viz_steps must be non-negative");
  (void)blocks::QNetworkSpec::make(variant, input_format, env.resolution);
}

evalkit::EvalOptions RunConfig::eval_options() const {
  evalkit::EvalOptions o;
  o.episodes = eval_episodes;
  o.seed = eval_seed;
  o.perturb = perturb;
  return o;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, f] : fields()) keys.push_back(k);
  return keys;
}

void set_config_value(RunConfig& config, const std::string& key, const std::string& value, const std::string& where) {
  field(key, where).set(config, key, value, where);
}

std::string get_config_value(const RunConfig& config, const std::string& key) { return field(key, "").get(config); }

void apply_config_file(RunConfig& config, const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::kIo, "cannot open config file " + path);
  std::string line;
  for (int number = 1; std::getline(in, line); ++number) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(number);
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(ErrorKind::kParse, where + ": expected 'key = value'");
    set_config_value(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)), where);
  }
}

RunConfig parse_config(const std::vector<std::string>& args) {
  RunConfig config;
  std::vector<std::pair<std::string, std::string>> overrides;
  std::string file;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a.rfind("--", 0) != 0) {
      require(config.command.empty(), ErrorKind::kParse, "unexpected argument '" + a + "'");
      config.command = a;
      continue;
    }
    std::string key = a.substr(2), value;
    const auto eq = key.find('=');
    if (eq != std::string::npos) {
      value = key.substr(eq + 1);
      key.resize(eq);
    } else {
      require(i + 1 < args.size(), ErrorKind::kParse, "missing value for --" + key);
      value = args[++i];
    }
    if (key == "config") {
      file = value;
    } else {
      field(key, "--" + key);  // reject unknown keys before any file is read
      overrides.emplace_back(key, value);
    }
  }
  if (!file.empty()) apply_config_file(config, file);
  if (const char* env_seed = std::getenv("RAMAVT_SEED"); env_seed && *env_seed)
    set_config_value(config, "seed", env_seed, "RAMAVT_SEED");
  for (const auto& [k, v] : overrides) set_config_value(config, k, v, "--" + k);
  return config;
}

}  // namespace ramavt::cli
