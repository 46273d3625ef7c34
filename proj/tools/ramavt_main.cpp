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

// Command-line front end. Talks to the tracker exclusively through the C API.

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "ramavt/ramavt.h"

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

const char* const kUsage =
    "usage: ramavt <command> [--key value ...] [--config file]\n"
    "\n"
    "commands:\n"
    "  train        train an agent; writes checkpoints and a per-episode log\n"
    "  eval         evaluate --checkpoint against the random baseline on paired seeds\n"
    "  perturb      evaluate --checkpoint under noise, delay, blur, all three and none\n"
    "  ablate       train and evaluate Origin, Augment, SE, MHA and RAMAVT from scratch\n"
    "  viz          export attention maps of --checkpoint on a seeded episode\n"
    "  grad-check   compare every differentiable op against finite differences\n"
    "  keys         list every configuration key with its default\n"
    "\n"
    "Any configuration key may be given as --key value or --key=value; RAMAVT_SEED\n"
    "overrides the seed from a config file. Run 'ramavt keys' for the full list.\n";

struct UsageError {
  std::string message;
};

// Thin RAII owner for C handles.
template <class T, void (*Destroy)(T*)>
class Handle {
 public:
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  Handle(Handle&& other) noexcept : ptr_(other.ptr_) { other.ptr_ = nullptr; }
  ~Handle() { Destroy(ptr_); }
  T** out() { return &ptr_; }
  T* get() const { return ptr_; }

 private:
  T* ptr_ = nullptr;
};

using Config = Handle<ramavt_config, ramavt_config_destroy>;
using Agent = Handle<ramavt_agent, ramavt_agent_destroy>;
using Report = Handle<ramavt_report, ramavt_report_destroy>;

struct Failure {
  ramavt_status status;
  std::string message;
};

void check(ramavt_status status) {
  if (status != RAMAVT_OK) throw Failure{status, ramavt_last_error()};
}

std::string get(const Config& config, const char* key) {
  std::size_t needed = 0;
  check(ramavt_config_get(config.get(), key, nullptr, 0, &needed));
  std::string value(needed, '\0');
  check(ramavt_config_get(config.get(), key, value.data(), value.size(), nullptr));
  value.resize(needed - 1);
  return value;
}

std::filesystem::path report_path(const Config& config, const std::string& name) {
  return std::filesystem::path(get(config, "report_dir")) / name;
}

std::string perturbation_tag(const ramavt_summary& s) {
  std::string tag;
  auto add = [&](int on, const char* name) {
    if (!on) return;
    if (!tag.empty()) tag += "+";
    tag += name;
  };
  add(s.actuator_noise, "noise");
  add(s.time_delay, "delay");
  add(s.image_blur, "blur");
  return tag.empty() ? "none" : tag;
}

ramavt_summary row(const Report& report, std::size_t i) {
  ramavt_summary s{};
  check(ramavt_report_row(report.get(), i, &s));
  return s;
}

void print_summary_header() {
  std::printf("%-18s %8s %8s %8s %10s %10s %10s %10s\n", "name", "AEL", "minEL", "maxEL", "AER", "minER", "maxER",
              "speed_hz");
}

void print_summary(const ramavt_summary& s) {
  std::printf("%-18s %8.1f %8.0f %8.0f %10.1f %10.1f %10.1f %10.1f\n", s.label, s.ael, s.min_el, s.max_el, s.aer,
              s.min_er, s.max_er, s.speed_hz);
}

void print_episode(const ramavt_episode* e, void*) {
  std::printf("[%s] episode %4d  length %5d  reward %9.2f  epsilon %.3f  loss %.5f\n", e->variant, e->episode,
              e->length, e->reward, e->epsilon, e->mean_loss);
  std::fflush(stdout);
}

Agent load_checkpoint(const Config& config, const char* command) {
  const std::string path = get(config, "checkpoint");
  if (path.empty()) throw UsageError{std::string(command) + " needs a trained agent: pass --checkpoint <file>"};
  Agent agent;
  check(ramavt_agent_load(path.c_str(), agent.out()));
  return agent;
}

ramavt_agent_info info(const Agent& agent) {
  ramavt_agent_info i{};
  check(ramavt_agent_info_get(agent.get(), &i));
  return i;
}

int cmd_train(const Config& config) {
  Agent agent;
  check(ramavt_train(config.get(), print_episode, nullptr, agent.out()));
  const auto i = info(agent);
  const std::string stem = std::string(i.variant) + "_" + i.input_format;
  std::printf("checkpoint: %s\n",
              (std::filesystem::path(get(config, "checkpoint_dir")) / (stem + ".ckpt")).string().c_str());
  std::printf("log: %s\n", report_path(config, "train_" + stem + ".csv").string().c_str());
  return 0;
}

int cmd_eval(const Config& config) {
  Agent agent = load_checkpoint(config, "eval");
  const auto i = info(agent);
  Report trained, random;
  check(ramavt_evaluate(agent.get(), config.get(), trained.out()));
  check(ramavt_random_baseline(config.get(), random.out()));
  const auto t = row(trained, 0), r = row(random, 0);
  const std::string tag = perturbation_tag(t);
  const auto trained_csv = report_path(config, "eval_" + std::string(i.variant) + "_" + i.input_format + "_" + tag + ".csv");
  const auto random_csv = report_path(config, "eval_random_" + std::string(i.input_format) + "_" + tag + ".csv");
  check(ramavt_report_write_csv(trained.get(), trained_csv.string().c_str()));
  check(ramavt_report_write_csv(random.get(), random_csv.string().c_str()));
  std::printf("%d paired episodes, perturbation: %s\n", t.episodes, tag.c_str());
  print_summary_header();
  print_summary(t);
  print_summary(r);
  if (r.ael > 0) std::printf("AEL ratio vs random: %.2f\n", t.ael / r.ael);
  std::printf("reports: %s, %s\n", trained_csv.string().c_str(), random_csv.string().c_str());
  return 0;
}

int cmd_perturb(const Config& config) {
  Agent agent = load_checkpoint(config, "perturb");
  const auto i = info(agent);
  Report suite;
  check(ramavt_perturbation_suite(agent.get(), config.get(), suite.out()));
  const auto csv = report_path(config, "perturb_" + std::string(i.variant) + "_" + i.input_format + ".csv");
  check(ramavt_report_write_csv(suite.get(), csv.string().c_str()));
  std::printf("%-18s %6s %6s %6s %8s %10s\n", "name", "noise", "delay", "blur", "AEL", "AER");
  for (std::size_t k = 0; k < ramavt_report_row_count(suite.get()); ++k) {
    const auto s = row(suite, k);
    std::printf("%-18s %6s %6s %6s %8.1f %10.1f\n", s.label, s.actuator_noise ? "yes" : "no",
                s.time_delay ? "yes" : "no", s.image_blur ? "yes" : "no", s.ael, s.aer);
  }
  std::printf("report: %s\n", csv.string().c_str());
  return 0;
}

int cmd_ablate(const Config& config) {
  Report table;
  check(ramavt_ablation(config.get(), print_episode, nullptr, table.out()));
  const auto csv = report_path(config, "ablation_" + get(config, "input_format") + ".csv");
  check(ramavt_report_write_csv(table.get(), csv.string().c_str()));
  // AELs of the original ablation study (RGBD input), for ordering only.
  const double reference[] = {368.5, 419.3, 625.8, 731.1, 952.4};
  std::printf("%-10s %10s %8s %10s %10s %10s\n", "name", "params", "AEL", "AER", "speed_hz", "ref_AEL");
  const std::size_t n = ramavt_report_row_count(table.get());
  std::vector<double> ael;
  std::size_t origin_params = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const auto s = row(table, k);
    if (k == 0) origin_params = s.parameters;
    ael.push_back(s.ael);
    std::printf("%-10s %10zu %8.1f %10.1f %10.1f %10.1f\n", s.label, s.parameters, s.ael, s.aer, s.speed_hz,
                k < 5 ? reference[k] : 0.0);
  }
  int agree = 0, pairs = 0;
  for (std::size_t a = 0; a < n && a < 5; ++a)
    for (std::size_t b = a + 1; b < n && b < 5; ++b, ++pairs) agree += (ael[a] < ael[b]) == (reference[a] < reference[b]);
  if (n == 5 && origin_params > 0)
    std::printf("parameter overhead of RAMAVT over Origin: %.2f%%\n",
                100.0 * (static_cast<double>(row(table, 4).parameters) / origin_params - 1.0));
  std::printf("AEL pairwise ordering agrees with the reference on %d of %d pairs\n", agree, pairs);
  std::printf("report: %s\n", csv.string().c_str());
  return 0;
}

int cmd_viz(const Config& config) {
  Agent agent = load_checkpoint(config, "viz");
  const auto i = info(agent);
  const auto dir = report_path(config, "maps_" + std::string(i.variant) + "_" + i.input_format);
  std::size_t count = 0;
  const int steps = std::stoi(get(config, "viz_steps"));
  check(ramavt_export_attention_maps(agent.get(), config.get(), steps, dir.string().c_str(), &count));
  std::printf("wrote %zu attention maps (PGM + CSV) after %d steps to %s\n", count, steps, dir.string().c_str());
  const char* layer = std::strcmp(i.variant, "ramavt") == 0 || std::strcmp(i.variant, "origin+mha") == 0 ? "mha" : "conv4";
  double fraction = 0.0;
  check(ramavt_attention_focus(agent.get(), config.get(), layer, 0, &fraction));
  std::printf("on-axis target: %s centre of mass lies %.1f%% of the image diagonal from the target centroid\n", layer,
              100.0 * fraction);
  return 0;
}

void print_case(const char* name, double deviation, double tolerance, int passed, void*) {
  std::printf("%-28s max deviation %.3e  tolerance %.0e  %s\n", name, deviation, tolerance, passed ? "ok" : "FAILED");
  std::fflush(stdout);
}

int cmd_grad_check() {
  int all = 0;
  check(ramavt_grad_check(print_case, nullptr, &all));
  std::printf(all ? "all gradient checks passed\n" : "gradient checks FAILED\n");
  return all ? 0 : kExitFailure;
}

int cmd_keys(const Config& config) {
  for (std::size_t k = 0; k < ramavt_config_key_count(); ++k) {
    const char* key = ramavt_config_key(k);
    std::printf("%-24s %s\n", key, get(config, key).c_str());
  }
  return 0;
}

int run(int argc, char** argv) {
  if (argc < 2) throw UsageError{"missing command"};
  const std::string first = argv[1];
  if (first == "help" || first == "--help" || first == "-h") {
    std::fputs(kUsage, stdout);
    return 0;
  }
  Config config;
  check(ramavt_config_create(config.out()));
  check(ramavt_config_parse_args(config.get(), argc - 1, argv + 1));
  const std::string command = ramavt_config_command(config.get());
  if (command.empty()) throw UsageError{"missing command"};
  if (command == "train") return cmd_train(config);
  if (command == "eval") return cmd_eval(config);
  if (command == "perturb") return cmd_perturb(config);
  if (command == "ablate") return cmd_ablate(config);
  if (command == "viz") return cmd_viz(config);
  if (command == "grad-check") return cmd_grad_check();
  if (command == "keys") return cmd_keys(config);
  throw UsageError{"unknown command '" + command + "'"};
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "ramavt: %s\n\n%s", e.message.c_str(), kUsage);
    return kExitUsage;
  } catch (const Failure& f) {
    std::fprintf(stderr, "ramavt: %s: %s\n", ramavt_status_name(f.status), f.message.c_str());
    return f.status == RAMAVT_ERR_PARSE ? kExitUsage : kExitFailure;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "ramavt: %s\n", e.what());
    return kExitFailure;
  }
}
