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

/* Exercises the C API from C, so the header is also checked as C code. */

#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "ramavt/ramavt.h"

static int failures = 0;

#define EXPECT(cond)                                                 \
  do {                                                               \
    if (!(cond)) {                                                   \
      fprintf(stderr, "%s:%d: expected %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                    \
    }                                                                \
  } while (0)

#define OK(call)                                                                                 \
  do {                                                                                           \
    ramavt_status s_ = (call);                                                                   \
    if (s_ != RAMAVT_OK) {                                                                       \
      fprintf(stderr, "%s:%d: %s -> %s: %s\n", __FILE__, __LINE__, #call, ramavt_status_name(s_), \
              ramavt_last_error());                                                              \
      exit(1);                                                                                   \
    }                                                                                            \
  } while (0)

static char scratch[4096];

static const char* path_in(const char* dir, const char* name) {
  snprintf(scratch, sizeof scratch, "%s/%s", dir, name);
  return scratch;
}

static int episodes_seen = 0;
static void count_episode(const ramavt_episode* row, void* user) {
  (void)user;
  EXPECT(row->episode == episodes_seen + 1);
  EXPECT(row->length > 0);
  ++episodes_seen;
}

static ramavt_config* small_config(void) {
  ramavt_config* config = NULL;
  OK(ramavt_config_create(&config));
  OK(ramavt_config_set(config, "resolution", "16"));
  OK(ramavt_config_set(config, "max_episode_len", "60"));
  OK(ramavt_config_set(config, "eval_episodes", "3"));
  OK(ramavt_config_set(config, "eval_seed", "11"));
  return config;
}

static void test_config(void) {
  ramavt_config* config = NULL;
  char buffer[64];
  size_t needed = 0;
  OK(ramavt_config_create(&config));
  OK(ramavt_config_get(config, "gamma", buffer, sizeof buffer, &needed));
  EXPECT(atof(buffer) == 0.99);
  EXPECT(needed == strlen(buffer) + 1);
  OK(ramavt_config_get(config, "replay_capacity", buffer, sizeof buffer, NULL));
  EXPECT(strcmp(buffer, "50000") == 0);
  /* A short buffer is truncated but terminated. */
  OK(ramavt_config_get(config, "input_format", buffer, 3, &needed));
  EXPECT(strcmp(buffer, "de") == 0 && needed == 6);

  EXPECT(ramavt_config_set(config, "gamma", "banana") == RAMAVT_ERR_PARSE);
  EXPECT(strstr(ramavt_last_error(), "gamma") != NULL);
  EXPECT(ramavt_config_set(config, "no_such_key", "1") == RAMAVT_ERR_PARSE);
  EXPECT(ramavt_config_set(NULL, "gamma", "1") == RAMAVT_ERR_INVALID_ARGUMENT);

  {
    const char* argv[] = {"eval", "--gamma", "0.5", "--episodes=7"};
    char value[32];
    OK(ramavt_config_parse_args(config, 4, argv));
    EXPECT(strcmp(ramavt_config_command(config), "eval") == 0);
    OK(ramavt_config_get(config, "episodes", value, sizeof value, NULL));
    EXPECT(strcmp(value, "7") == 0);
  }
  OK(ramavt_config_set(config, "gamma", "1.5"));
  EXPECT(ramavt_config_validate(config) == RAMAVT_ERR_INVALID_ARGUMENT);

  EXPECT(ramavt_config_key_count() > 40);
  EXPECT(ramavt_config_key(0) != NULL);
  EXPECT(ramavt_config_key(ramavt_config_key_count()) == NULL);
  EXPECT(strcmp(ramavt_status_name(RAMAVT_ERR_TRUNCATED), "truncated file") == 0);
  ramavt_config_destroy(config);
  ramavt_config_destroy(NULL);
}

static void test_agent_and_env(const char* dir) {
  ramavt_config* config = small_config();
  ramavt_agent* agent = NULL;
  ramavt_agent* loaded = NULL;
  ramavt_env* env = NULL;
  ramavt_agent_info info;
  ramavt_step step;
  float* obs;
  float q1[7], q2[7];
  int a1 = -1, a2 = -2, t;
  size_t n;

  OK(ramavt_agent_create(config, &agent));
  OK(ramavt_agent_info_get(agent, &info));
  EXPECT(strcmp(info.variant, "ramavt") == 0);
  EXPECT(strcmp(info.input_format, "depth") == 0);
  EXPECT(info.resolution == 16 && info.action_count == 7 && info.observation_channels == 1);
  EXPECT(info.parameters > 0);

  OK(ramavt_env_create(config, &env));
  n = ramavt_env_observation_size(env);
  EXPECT(n == 256);
  EXPECT(ramavt_env_action_count(env) == 7);
  obs = (float*)malloc(n * sizeof(float));
  EXPECT(ramavt_env_observe(env, obs, n) == RAMAVT_ERR_INVALID_ARGUMENT);
  OK(ramavt_env_reset(env, 5, 1, 0));
  OK(ramavt_env_observe(env, obs, n));

  OK(ramavt_agent_save(agent, path_in(dir, "agent.ckpt")));
  OK(ramavt_agent_load(scratch, &loaded));
  /* Same weights and same fresh state: identical Q-values over a rollout. */
  for (t = 0; t < 10; ++t) {
    OK(ramavt_agent_act(agent, obs, n, &a1, q1, 7));
    OK(ramavt_agent_act(loaded, obs, n, &a2, q2, 7));
    EXPECT(a1 == a2);
    EXPECT(memcmp(q1, q2, sizeof q1) == 0);
    OK(ramavt_env_step(env, a1, &step));
    if (step.done) break;
    OK(ramavt_env_observe(env, obs, n));
  }
  EXPECT(ramavt_agent_act(agent, obs, n - 1, &a1, NULL, 0) == RAMAVT_ERR_SHAPE);
  EXPECT(ramavt_agent_act(agent, obs, n, &a1, q1, 3) == RAMAVT_ERR_INVALID_ARGUMENT);
  OK(ramavt_agent_reset(agent));
  EXPECT(ramavt_env_step(env, 99, &step) == RAMAVT_ERR_INVALID_ARGUMENT);

  {
    /* Truncated and foreign files map onto distinct status codes. */
    FILE* f = fopen(path_in(dir, "agent.ckpt"), "rb");
    char* bytes;
    long size;
    ramavt_agent* bad = NULL;
    fseek(f, 0, SEEK_END);
    size = ftell(f);
    fseek(f, 0, SEEK_SET);
    bytes = (char*)malloc((size_t)size);
    EXPECT(fread(bytes, 1, (size_t)size, f) == (size_t)size);
    fclose(f);
    f = fopen(path_in(dir, "short.ckpt"), "wb");
    fwrite(bytes, 1, (size_t)size - 1, f);
    fclose(f);
    EXPECT(ramavt_agent_load(scratch, &bad) == RAMAVT_ERR_TRUNCATED);
    bytes[0] = 'Z';
    f = fopen(path_in(dir, "magic.ckpt"), "wb");
    fwrite(bytes, 1, (size_t)size, f);
    fclose(f);
    EXPECT(ramavt_agent_load(scratch, &bad) == RAMAVT_ERR_BAD_MAGIC);
    EXPECT(bad == NULL);
    free(bytes);
  }

  {
    /* A reloaded agent reproduces its evaluation report. */
    ramavt_report* r1 = NULL;
    ramavt_report* r2 = NULL;
    ramavt_report* rnd = NULL;
    ramavt_summary s;
    uint64_t seed1, seed2;
    int same = 0, len;
    double reward;
    OK(ramavt_evaluate(agent, config, &r1));
    OK(ramavt_evaluate(loaded, config, &r2));
    OK(ramavt_report_same_outcomes(r1, r2, &same));
    EXPECT(same == 1);
    OK(ramavt_random_baseline(config, &rnd));
    OK(ramavt_report_row(rnd, 0, &s));
    EXPECT(s.episodes == 3);
    EXPECT(strcmp(s.label, "random") == 0);
    OK(ramavt_report_episode(r1, 0, 2, &seed1, &len, &reward));
    OK(ramavt_report_episode(rnd, 0, 2, &seed2, NULL, NULL));
    EXPECT(seed1 == seed2);
    EXPECT(len >= 1 && len <= 60);
    EXPECT(ramavt_report_episode(r1, 0, 3, NULL, NULL, NULL) == RAMAVT_ERR_INVALID_ARGUMENT);
    OK(ramavt_report_write_csv(r1, path_in(dir, "reports/eval.csv")));
    ramavt_report_destroy(r1);
    ramavt_report_destroy(r2);
    ramavt_report_destroy(rnd);
  }

  {
    ramavt_report* suite = NULL;
    ramavt_summary s;
    OK(ramavt_perturbation_suite(agent, config, &suite));
    EXPECT(ramavt_report_row_count(suite) == 5);
    OK(ramavt_report_row(suite, 3, &s));
    EXPECT(strcmp(s.label, "noise+delay+blur") == 0);
    EXPECT(s.actuator_noise && s.time_delay && s.image_blur);
    OK(ramavt_report_row(suite, 4, &s));
    EXPECT(strcmp(s.label, "none") == 0);
    EXPECT(!s.actuator_noise && !s.time_delay && !s.image_blur);
    OK(ramavt_report_write_csv(suite, path_in(dir, "reports/perturb.csv")));
    ramavt_report_destroy(suite);
  }

  {
    size_t maps = 0;
    double fraction = -1.0;
    OK(ramavt_export_attention_maps(agent, config, 5, path_in(dir, "maps"), &maps));
    EXPECT(maps == 5);
    OK(ramavt_attention_focus(agent, config, "mha", 0, &fraction));
    EXPECT(fraction >= 0.0 && fraction <= 1.0);
    EXPECT(ramavt_attention_focus(agent, config, "nope", 0, &fraction) == RAMAVT_ERR_INVALID_ARGUMENT);
  }

  {
    ramavt_config* rgbd = small_config();
    ramavt_report* r = NULL;
    OK(ramavt_config_set(rgbd, "input_format", "rgbd"));
    EXPECT(ramavt_evaluate(agent, rgbd, &r) == RAMAVT_ERR_SPEC_MISMATCH);
    EXPECT(r == NULL);
    ramavt_config_destroy(rgbd);
  }

  free(obs);
  ramavt_env_destroy(env);
  ramavt_agent_destroy(agent);
  ramavt_agent_destroy(loaded);
  ramavt_config_destroy(config);
}

static void test_train(const char* dir) {
  ramavt_config* config = small_config();
  ramavt_agent* agent = NULL;
  ramavt_agent_info info;
  FILE* log;
  char line[256];
  int rows = 0;
  OK(ramavt_config_set(config, "episodes", "3"));
  OK(ramavt_config_set(config, "initial_buffer", "50"));
  OK(ramavt_config_set(config, "batch", "2"));
  OK(ramavt_config_set(config, "seq_len", "4"));
  OK(ramavt_config_set(config, "checkpoint_interval", "2"));
  OK(ramavt_config_set(config, "checkpoint_dir", path_in(dir, "ckpt")));
  OK(ramavt_config_set(config, "report_dir", path_in(dir, "reports")));
  OK(ramavt_train(config, count_episode, NULL, &agent));
  EXPECT(episodes_seen == 3);
  OK(ramavt_agent_info_get(agent, &info));
  EXPECT(info.episode == 3);

  log = fopen(path_in(dir, "reports/train_ramavt_depth.csv"), "r");
  EXPECT(log != NULL);
  if (log) {
    while (fgets(line, sizeof line, log)) ++rows;
    fclose(log);
  }
  EXPECT(rows == 4); /* header + 3 episodes */
  {
    ramavt_agent* a = NULL;
    OK(ramavt_agent_load(path_in(dir, "ckpt/ramavt_depth_ep2.ckpt"), &a));
    ramavt_agent_destroy(a);
    OK(ramavt_agent_load(path_in(dir, "ckpt/ramavt_depth.ckpt"), &a));
    ramavt_agent_destroy(a);
  }
  ramavt_agent_destroy(agent);
  ramavt_config_destroy(config);
}

int main(int argc, char** argv) {
  const char* dir = argc > 1 ? argv[1] : ".";
  printf("ramavt %s\n", ramavt_version());
  test_config();
  test_agent_and_env(dir);
  test_train(dir);
  if (failures) {
    fprintf(stderr, "%d expectation(s) failed\n", failures);
    return 1;
  }
  printf("all C API checks passed\n");
  return 0;
}
