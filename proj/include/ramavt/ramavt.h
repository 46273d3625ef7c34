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

/*
 * C interface to the RAMAVT tracker: configuration, training, evaluation,
 * robustness and ablation reports, attention maps and gradient checks.
 *
 * Every function returns a ramavt_status. On failure, ramavt_last_error()
 * describes the problem; the message belongs to the calling thread and stays
 * valid until its next call into the library. Handles are opaque and must be
 * released with their matching *_destroy function (which accepts NULL).
 */
#ifndef RAMAVT_RAMAVT_H_
#define RAMAVT_RAMAVT_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define RAMAVT_API __declspec(dllexport)
#else
#define RAMAVT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ramavt_status {
  RAMAVT_OK = 0,
  RAMAVT_ERR_INVALID_ARGUMENT = 1,
  RAMAVT_ERR_SHAPE = 2,
  RAMAVT_ERR_DEGENERATE = 3,
  RAMAVT_ERR_EMPTY = 4,
  RAMAVT_ERR_NUMERIC = 5,
  RAMAVT_ERR_IO = 6,
  RAMAVT_ERR_PARSE = 7,
  RAMAVT_ERR_BAD_MAGIC = 8,
  RAMAVT_ERR_VERSION = 9,
  RAMAVT_ERR_TRUNCATED = 10,
  RAMAVT_ERR_SPEC_MISMATCH = 11,
  RAMAVT_ERR_INTERNAL = 12
} ramavt_status;

typedef struct ramavt_config ramavt_config;
typedef struct ramavt_agent ramavt_agent;
typedef struct ramavt_env ramavt_env;
typedef struct ramavt_report ramavt_report;

RAMAVT_API const char* ramavt_version(void);
RAMAVT_API const char* ramavt_status_name(ramavt_status status);
RAMAVT_API const char* ramavt_last_error(void);

/* ---- configuration ---------------------------------------------------- */

/* A configuration holding every default. */
RAMAVT_API ramavt_status ramavt_config_create(ramavt_config** out);
RAMAVT_API void ramavt_config_destroy(ramavt_config* config);
/* Replaces `config` with the result of parsing command-line style arguments
 * (command, "--key value", "--key=value", "--config file"). Precedence:
 * arguments, then RAMAVT_SEED, then the file, then defaults. */
RAMAVT_API ramavt_status ramavt_config_parse_args(ramavt_config* config, int argc, const char* const* argv);
RAMAVT_API ramavt_status ramavt_config_load_file(ramavt_config* config, const char* path);
RAMAVT_API ramavt_status ramavt_config_set(ramavt_config* config, const char* key, const char* value);
/* Copies the value of `key` into `buffer` (always NUL-terminated when
 * `capacity` > 0). `needed`, when non-NULL, receives the full length + 1. */
RAMAVT_API ramavt_status ramavt_config_get(const ramavt_config* config, const char* key, char* buffer,
                                           size_t capacity, size_t* needed);
/* The command word, "" when none was given. */
RAMAVT_API const char* ramavt_config_command(const ramavt_config* config);
RAMAVT_API size_t ramavt_config_key_count(void);
RAMAVT_API const char* ramavt_config_key(size_t index);
RAMAVT_API ramavt_status ramavt_config_validate(const ramavt_config* config);

/* ---- agents ------------------------------------------------------------- */

typedef struct ramavt_agent_info {
  const char* variant;       /* ramavt, origin, origin+se, origin+mha, drlavt */
  const char* input_format;  /* depth, color, rgbd */
  int resolution;
  int action_count;
  int observation_channels;
  size_t parameters;  /* trainable scalars */
  int episode;        /* training episode reached */
  uint64_t seed;
} ramavt_agent_info;

/* Fresh network for the configured variant, input format and resolution. */
RAMAVT_API ramavt_status ramavt_agent_create(const ramavt_config* config, ramavt_agent** out);
RAMAVT_API ramavt_status ramavt_agent_load(const char* path, ramavt_agent** out);
RAMAVT_API ramavt_status ramavt_agent_save(const ramavt_agent* agent, const char* path);
RAMAVT_API void ramavt_agent_destroy(ramavt_agent* agent);
/* Strings in `info` live as long as the agent. */
RAMAVT_API ramavt_status ramavt_agent_info_get(const ramavt_agent* agent, ramavt_agent_info* info);
/* Clears the recurrent state (or frame stack) before a new episode. */
RAMAVT_API ramavt_status ramavt_agent_reset(ramavt_agent* agent);
/* Greedy action for one [C, H, W] observation. `q`, when non-NULL, receives
 * action_count Q-values. */
RAMAVT_API ramavt_status ramavt_agent_act(ramavt_agent* agent, const float* observation, size_t count,
                                          int* action, float* q, size_t q_capacity);

/* ---- environment -------------------------------------------------------- */

typedef struct ramavt_step {
  double reward;
  int done;     /* lost or time limit */
  int lost;     /* target lost: terminal for bootstrapping */
  int visible;
} ramavt_step;

/* Environment with the configured perturbations. */
RAMAVT_API ramavt_status ramavt_env_create(const ramavt_config* config, ramavt_env** out);
RAMAVT_API void ramavt_env_destroy(ramavt_env* env);
/* `evaluation` selects the held-out target split; `target_index` < 0 draws a
 * target from the seed. */
RAMAVT_API ramavt_status ramavt_env_reset(ramavt_env* env, uint64_t seed, int evaluation, int target_index);
RAMAVT_API size_t ramavt_env_observation_size(const ramavt_env* env);
RAMAVT_API int ramavt_env_action_count(const ramavt_env* env);
RAMAVT_API ramavt_status ramavt_env_observe(const ramavt_env* env, float* buffer, size_t count);
RAMAVT_API ramavt_status ramavt_env_step(ramavt_env* env, int action, ramavt_step* out);

/* ---- training ----------------------------------------------------------- */

typedef struct ramavt_episode {
  const char* variant;  /* ablation row name, or the variant being trained */
  int episode;
  int length;
  double reward;
  double epsilon;
  double mean_loss;
} ramavt_episode;

typedef void (*ramavt_episode_fn)(const ramavt_episode* row, void* user);

/* Trains the configured variant. Checkpoints go to checkpoint_dir
 * (<variant>_<input>_ep<N>.ckpt every checkpoint_interval episodes, plus
 * <variant>_<input>.ckpt at the end) and the per-episode log to
 * report_dir/train_<variant>_<input>.csv. `out`, when non-NULL, receives the
 * trained agent. */
RAMAVT_API ramavt_status ramavt_train(const ramavt_config* config, ramavt_episode_fn on_episode, void* user,
                                      ramavt_agent** out);

/* ---- reports ------------------------------------------------------------ */

typedef struct ramavt_summary {
  const char* label;
  int episodes;
  double ael, min_el, max_el;
  double aer, min_er, max_er;
  double speed_hz;
  size_t parameters;  /* ablation rows only, else 0 */
  int actuator_noise, time_delay, image_blur;
} ramavt_summary;

/* Greedy evaluation on eval_episodes paired seeds derived from eval_seed. */
RAMAVT_API ramavt_status ramavt_evaluate(const ramavt_agent* agent, const ramavt_config* config,
                                         ramavt_report** out);
/* Uniform-random actions on the same seeds. */
RAMAVT_API ramavt_status ramavt_random_baseline(const ramavt_config* config, ramavt_report** out);
/* Rows: noise, delay, blur, noise+delay+blur, none. */
RAMAVT_API ramavt_status ramavt_perturbation_suite(const ramavt_agent* agent, const ramavt_config* config,
                                                   ramavt_report** out);
/* Rows: Origin, Augment, SE, MHA, RAMAVT, each trained from scratch. */
RAMAVT_API ramavt_status ramavt_ablation(const ramavt_config* config, ramavt_episode_fn on_episode, void* user,
                                         ramavt_report** out);
RAMAVT_API void ramavt_report_destroy(ramavt_report* report);
RAMAVT_API size_t ramavt_report_row_count(const ramavt_report* report);
/* Strings in `out` live as long as the report. */
RAMAVT_API ramavt_status ramavt_report_row(const ramavt_report* report, size_t row, ramavt_summary* out);
RAMAVT_API ramavt_status ramavt_report_episode(const ramavt_report* report, size_t row, size_t episode,
                                               uint64_t* seed, int* length, double* reward);
/* Seeds, lengths and rewards equal in every row (timing excluded). */
RAMAVT_API ramavt_status ramavt_report_same_outcomes(const ramavt_report* a, const ramavt_report* b, int* same);
/* Evaluation reports write per-episode rows; perturbation and ablation
 * reports write their summary tables. */
RAMAVT_API ramavt_status ramavt_report_write_csv(const ramavt_report* report, const char* path);

/* ---- interpretability --------------------------------------------------- */

/* Runs the agent greedily for `steps` decisions of the seeded evaluation
 * episode (eval_seed, first evaluation target) and writes one PGM and one CSV
 * attention map per capture point of the final observation to `out_dir`. */
RAMAVT_API ramavt_status ramavt_export_attention_maps(const ramavt_agent* agent, const ramavt_config* config,
                                                      int steps, const char* out_dir, size_t* map_count);
/* Distance between the `layer` map's centre of mass and the projected
 * centroid of an on-axis evaluation target, as a fraction of the image
 * diagonal. */
RAMAVT_API ramavt_status ramavt_attention_focus(const ramavt_agent* agent, const ramavt_config* config,
                                                const char* layer, int target_index, double* diagonal_fraction);

/* ---- gradient checks ---------------------------------------------------- */

typedef void (*ramavt_gradcheck_fn)(const char* name, double max_deviation, double tolerance, int passed,
                                    void* user);

/* Runs every registered gradient check; `all_passed` is 1 when each met its
 * tolerance. */
RAMAVT_API ramavt_status ramavt_grad_check(ramavt_gradcheck_fn on_case, void* user, int* all_passed);

#ifdef __cplusplus
}
#endif

#endif  /* RAMAVT_RAMAVT_H_ */
