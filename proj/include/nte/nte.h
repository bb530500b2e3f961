#ifndef NTE_NTE_H
#define NTE_NTE_H

/* C interface to the nte library. Every call returns an nte_status; on
 * failure nte_last_error() describes the problem (thread-local, valid until
 * the next failing call on the same thread). Strings handed out through
 * char** parameters must be released with nte_string_free. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define NTE_API __declspec(dllexport)
#else
#define NTE_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum nte_status {
  NTE_OK = 0,
  NTE_ERR_DOMAIN = 1,   /* legitimate failure: infeasible game, unreadable file, ... */
  NTE_ERR_CONFIG = 2,   /* invalid configuration or argument value */
  NTE_ERR_CONTRACT = 3, /* precondition violated (terminal state, bad index, ...) */
  NTE_ERR_NULL = 4,     /* required pointer argument was NULL */
  NTE_ERR_INTERNAL = 5
} nte_status;

typedef struct nte_config nte_config;
typedef struct nte_game nte_game;

typedef void (*nte_progress_fn)(const char* message, void* user);

NTE_API const char* nte_version(void);
NTE_API const char* nte_last_error(void);
NTE_API void nte_string_free(char* s);

/* Configuration. profile is "paper_defaults" or "desk_scale". */
NTE_API nte_status nte_config_default(const char* profile, nte_config** out);
NTE_API nte_status nte_config_parse(const char* json_text, nte_config** out);
NTE_API nte_status nte_config_load(const char* path, nte_config** out);
NTE_API void nte_config_free(nte_config* cfg);
NTE_API nte_status nte_config_to_json(const nte_config* cfg, char** out_json);
NTE_API nte_status nte_config_hash(const nte_config* cfg, char** out_hex);

/* Runs the self-improvement loop, writing artifacts under out_dir. */
NTE_API nte_status nte_train(const nte_config* cfg, const char* out_dir, uint64_t seed, nte_progress_fn progress,
                             void* user);

/* Tournament. variants_json is {"attackers": [...], "defenders": [...]} or
 * NULL to use the configuration's eval section; games <= 0 uses the
 * configured count; checkpoint_dir NULL uses the configured path. Writes the
 * per-match table to results_csv and, when given, plot statistics to plot_csv
 * and the match log (JSON lines) to log_jsonl. */
NTE_API nte_status nte_eval(const nte_config* cfg, const char* variants_json, const char* checkpoint_dir, int games,
                            uint64_t seed, const char* results_csv, const char* plot_csv, const char* log_jsonl);

/* One game between two variants, trajectory written as JSON lines. */
NTE_API nte_status nte_rollout(const nte_config* cfg, const char* attacker, const char* defender,
                               const char* checkpoint_dir, uint64_t seed, const char* out_jsonl);

/* Manifest of a checkpoint or dataset, with a consistency summary. */
NTE_API nte_status nte_inspect(const char* path, char** out_json);

/* Invariant fuzz suite. *passed is set to 1 when every check held. */
NTE_API nte_status nte_selftest(uint64_t seed, int scale, char** out_report, int* passed);

/* Games. */
NTE_API nte_status nte_game_create(const nte_config* cfg, uint64_t seed, nte_game** out);
NTE_API void nte_game_free(nte_game* game);
NTE_API nte_status nte_game_robot_count(const nte_game* game, int* out);
NTE_API nte_status nte_game_action_dim(const nte_game* game, int* out);
NTE_API nte_status nte_game_state_json(const nte_game* game, char** out_json);
/* actions holds robot_count * action_dim values. */
NTE_API nte_status nte_game_step(nte_game* game, const double* actions, size_t count, int* terminal);
/* Centralized search for team 0 (attackers) or 1 (defenders); fills
 * robot_count * action_dim values and, when requested, root statistics. */
NTE_API nte_status nte_game_search(const nte_game* game, int team, int budget, uint64_t seed, double* out_actions,
                                   size_t count, char** out_stats_json);
NTE_API nte_status nte_game_terminal_value(const nte_game* game, int* out);

#ifdef __cplusplus
}
#endif

#endif
