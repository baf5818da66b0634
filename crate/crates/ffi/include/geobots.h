#ifndef GEOBOTS_H
#define GEOBOTS_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stdint.h>

/**
 * Status codes returned by every function.
 */
typedef enum GbStatus {
  GB_STATUS_OK = 0,
  GB_STATUS_NULL_ARGUMENT = 1,
  GB_STATUS_INVALID_ARGUMENT = 2,
  GB_STATUS_INVALID_JSON = 3,
  GB_STATUS_GENERATION_FAILED = 4,
  GB_STATUS_INFEASIBLE = 5,
  GB_STATUS_SESSION_FINISHED = 6,
  GB_STATUS_INTERNAL = 7,
} GbStatus;

/**
 * A generated or loaded level.
 */
typedef struct GbLevel GbLevel;

/**
 * A running simulation over one level and build.
 */
typedef struct GbSession GbSession;

/**
 * Generates a level with the standard profile for `difficulty`.
 *
 * # Safety
 * `theme` and `difficulty` must be NUL-terminated strings; `out` must be writable.
 */
enum GbStatus gb_level_generate(uint64_t seed,
                                const char *theme,
                                const char *difficulty,
                                struct GbLevel **out);

/**
 * Parses a level document.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum GbStatus gb_level_from_json(const char *json, struct GbLevel **out);

/**
 * Writes the canonical JSON of a level.
 *
 * # Safety
 * `level` must come from this library; `out` must be writable.
 */
enum GbStatus gb_level_to_json(const struct GbLevel *level, char **out);

/**
 * # Safety
 * `level` must come from this library; `out` must be writable.
 */
enum GbStatus gb_level_fingerprint(const struct GbLevel *level, uint64_t *out);

/**
 * Writes the validation report as JSON and sets `solvable`.
 *
 * # Safety
 * `level` must come from this library; `solvable` and `report` must be writable.
 */
enum GbStatus gb_level_validate(const struct GbLevel *level, bool *solvable, char **report);

/**
 * Plans the level for a build; `GB_STATUS_INFEASIBLE` when no plan exists.
 *
 * # Safety
 * `level` must come from this library; `build_json` must be a NUL-terminated
 * string; `out` must be writable.
 */
enum GbStatus gb_level_solve(const struct GbLevel *level, const char *build_json, char **out);

/**
 * # Safety
 * `level` must come from this library and not be used afterwards. Null is ignored.
 */
void gb_level_free(struct GbLevel *level);

/**
 * Starts a session on a copy of `level` with a complete build
 * (`{"slots": {"motor": "motor-t1", ...}}`).
 *
 * # Safety
 * `level` must come from this library; `build_json` must be a NUL-terminated
 * string; `out` must be writable.
 */
enum GbStatus gb_session_new(const struct GbLevel *level,
                             const char *build_json,
                             struct GbSession **out);

/**
 * Applies one command (a letter such as `"U"` or a name such as `"wait"`)
 * and writes the tick outcome as JSON.
 *
 * # Safety
 * `session` must come from this library; `command` must be a NUL-terminated
 * string; `outcome` must be writable.
 */
enum GbStatus gb_session_step(struct GbSession *session, const char *command, char **outcome);

/**
 * Writes the session state as JSON.
 *
 * # Safety
 * `session` must come from this library; `out` must be writable.
 */
enum GbStatus gb_session_state_json(const struct GbSession *session, char **out);

/**
 * Writes the level result once the session has finished.
 *
 * # Safety
 * `session` must come from this library; `out` must be writable.
 */
enum GbStatus gb_session_result_json(const struct GbSession *session, char **out);

/**
 * # Safety
 * `session` must come from this library and not be used afterwards. Null is ignored.
 */
void gb_session_free(struct GbSession *session);

/**
 * Generates a repair problem and writes the player-facing view as JSON.
 *
 * # Safety
 * `difficulty` must be a NUL-terminated string; `out` must be writable.
 */
enum GbStatus gb_repair_generate(uint64_t seed, const char *difficulty, char **out);

/**
 * Grades a submission against the problem for `seed` and `difficulty`;
 * sets `fixed` and writes both verdicts as JSON.
 *
 * # Safety
 * `difficulty` and `submission_json` must be NUL-terminated strings; `fixed`
 * and `out` must be writable.
 */
enum GbStatus gb_repair_grade(uint64_t seed,
                              const char *difficulty,
                              const char *submission_json,
                              bool *fixed,
                              char **out);

/**
 * # Safety
 * `s` must be a string returned by this library and not be used afterwards.
 * Null is ignored.
 */
void gb_string_free(char *s);

/**
 * Message for the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *gb_last_error_message(void);

#endif  /* GEOBOTS_H */
