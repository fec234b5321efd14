#ifndef RACEGAME_H
#define RACEGAME_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RgStatus {
  RG_STATUS_OK = 0,
  RG_STATUS_NULL_POINTER = 1,
  RG_STATUS_INVALID_UTF8 = 2,
  RG_STATUS_INVALID_ARGUMENT = 3,
  RG_STATUS_CONFIG = 4,
  RG_STATUS_TRACK = 5,
  RG_STATUS_REPLAY = 6,
  RG_STATUS_IO = 7,
  /**
   * The call panicked; the handle arguments should be considered lost.
   */
  RG_STATUS_INTERNAL = 8,
} RgStatus;

/**
 * Race configuration.
 */
typedef struct RgConfig RgConfig;

/**
 * One finished race with its replay.
 */
typedef struct RgRace RgRace;

/**
 * A finished series.
 */
typedef struct RgSeries RgSeries;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, statically allocated.
 */
const char *rg_version(void);

/**
 * Message for the last failed call on this thread, or NULL. Free with
 * [`rg_string_free`].
 */
char *rg_last_error(void);

/**
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void rg_string_free(char *s);

/**
 * Default configuration: MCTS-LQNG against Fixed-LQNG on the complex track.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum RgStatus rg_config_default(struct RgConfig **out);

/**
 * Parses a TOML configuration. Relative paths inside it resolve against
 * the working directory.
 *
 * # Safety
 * `toml` must be a NUL-terminated string and `out` a valid pointer.
 */
enum RgStatus rg_config_from_toml(const char *toml, struct RgConfig **out);

/**
 * # Safety
 * `cfg` must be a valid handle.
 */
enum RgStatus rg_config_set_seed(struct RgConfig *cfg, uint64_t seed);

/**
 * # Safety
 * `cfg` must be a valid handle.
 */
enum RgStatus rg_config_set_series_size(struct RgConfig *cfg, size_t races);

/**
 * Serialized configuration as TOML. Free with [`rg_string_free`].
 *
 * # Safety
 * `cfg` must be a valid handle.
 */
char *rg_config_to_toml(const struct RgConfig *cfg);

/**
 * # Safety
 * `cfg` must be NULL or a handle not yet freed.
 */
void rg_config_free(struct RgConfig *cfg);

/**
 * Runs race `index` of the configured series and keeps its replay.
 *
 * # Safety
 * `cfg` must be a valid handle and `out` a valid pointer.
 */
enum RgStatus rg_race_run(const struct RgConfig *cfg, size_t index, struct RgRace **out);

/**
 * Winning player (0 or 1), or -1 for a draw. -2 on a NULL handle.
 *
 * # Safety
 * `race` must be NULL or a valid handle.
 */
int32_t rg_race_winner(const struct RgRace *race);

/**
 * Finish time of `player` in seconds; `*finished` is false (and `*time`
 * untouched) when the player did not finish.
 *
 * # Safety
 * `race` must be a valid handle; `finished` and `time` valid pointers.
 */
enum RgStatus rg_race_finish_time(const struct RgRace *race,
                                  size_t player,
                                  bool *finished,
                                  double *time);

/**
 * Number of rule violations recorded in the race.
 *
 * # Safety
 * `race` must be NULL or a valid handle.
 */
size_t rg_race_violation_count(const struct RgRace *race);

/**
 * The race replay as JSON lines. Free with [`rg_string_free`].
 *
 * # Safety
 * `race` must be a valid handle.
 */
char *rg_race_replay(const struct RgRace *race);

/**
 * # Safety
 * `race` must be NULL or a handle not yet freed.
 */
void rg_race_free(struct RgRace *race);

/**
 * Runs the whole series. When `out_dir` is non-NULL, replays and
 * `metrics.csv` are written there.
 *
 * # Safety
 * `cfg` must be a valid handle, `out_dir` NULL or a NUL-terminated path,
 * and `out` a valid pointer.
 */
enum RgStatus rg_series_run(const struct RgConfig *cfg, const char *out_dir, struct RgSeries **out);

/**
 * Races won by `player` (0 or 1); 0 on a NULL handle or bad index.
 *
 * # Safety
 * `series` must be NULL or a valid handle.
 */
size_t rg_series_wins(const struct RgSeries *series, size_t player);

/**
 * Series metrics as CSV with a header row. Free with [`rg_string_free`].
 *
 * # Safety
 * `series` must be a valid handle.
 */
char *rg_series_metrics_csv(const struct RgSeries *series);

/**
 * # Safety
 * `series` must be NULL or a handle not yet freed.
 */
void rg_series_free(struct RgSeries *series);

/**
 * Re-derives violations (and rewards, when recorded) from a replay
 * document and reports whether they agree with what was recorded.
 *
 * # Safety
 * `replay` must be a NUL-terminated string and `matches` a valid pointer.
 */
enum RgStatus rg_rescore(const char *replay, bool *matches);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RACEGAME_H */
