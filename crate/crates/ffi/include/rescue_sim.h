#ifndef RESCUE_SIM_H
#define RESCUE_SIM_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stdint.h>
#include <stddef.h>

#define RS_OK 0

/**
 * A required pointer argument was null.
 */
#define RS_ERR_NULL -1

/**
 * An argument was out of range or not valid UTF-8.
 */
#define RS_ERR_INVALID_ARG -2

/**
 * Input text or file could not be read or parsed.
 */
#define RS_ERR_PARSE -3

/**
 * Inverse kinematics did not converge.
 */
#define RS_ERR_UNREACHABLE -4

/**
 * A query fell outside the terrain.
 */
#define RS_ERR_OUT_OF_BOUNDS -5

/**
 * A metric had a zero denominator.
 */
#define RS_ERR_UNDEFINED -6

/**
 * The caller's buffer is too small; the required size is returned via `len`.
 */
#define RS_ERR_BUFFER -7

/**
 * A Rust panic was caught at the boundary.
 */
#define RS_ERR_PANIC -99

#define RS_STATUS_RUNNING 0

#define RS_STATUS_SUCCESS 1

#define RS_STATUS_FAILED 2

#define RS_FAIL_NONE 0

#define RS_FAIL_TIP_OVER 1

#define RS_FAIL_CLIMB_LIMIT 2

#define RS_FAIL_OUT_OF_BOUNDS 3

#define RS_FAIL_GOALS_UNMET 4

#define RS_AXIS_PITCH 0

#define RS_AXIS_ROLL 1

/**
 * Heightmap handle.
 */
typedef struct RsTerrain RsTerrain;

/**
 * Simulation handle.
 */
typedef struct RsWorld RsWorld;

typedef struct RsMetrics {
  double recall;
  double precision;
  double map;
  double f1;
} RsMetrics;

typedef struct RsWorldState {
  uint64_t tick;
  /**
   * One of the `RS_STATUS_*` values.
   */
  int32_t status;
  /**
   * One of the `RS_FAIL_*` values.
   */
  int32_t fail_reason;
  /**
   * Tick at which the status became terminal, 0 while running.
   */
  uint64_t status_tick;
  double x;
  double y;
  double z;
  double heading_deg;
  double pitch_deg;
  double roll_deg;
  double stability_margin_m;
  bool safe_stop;
} RsWorldState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` as a
 * NUL-terminated string. On entry `*len` is the buffer size; on return it is
 * the message length without the terminator. Returns `RS_ERR_BUFFER` when the
 * buffer is too small.
 *
 * # Safety
 * `buf` must be valid for `*len` bytes and `len` must be a valid pointer.
 */
int32_t rs_last_error(char *buf, size_t *len);

/**
 * Parses a terrain file's text into a new handle.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` a valid pointer.
 */
int32_t rs_terrain_from_text(const char *text, struct RsTerrain **out);

/**
 * Bilinear height at `(x, y)`.
 *
 * # Safety
 * `terrain` must come from `rs_terrain_from_text`; `out` a valid pointer.
 */
int32_t rs_terrain_height_at(const struct RsTerrain *terrain, double x, double y, double *out);

/**
 * Slope in degrees at `(x, y)`.
 *
 * # Safety
 * `terrain` must come from `rs_terrain_from_text`; `out` a valid pointer.
 */
int32_t rs_terrain_slope_at(const struct RsTerrain *terrain, double x, double y, double *out);

/**
 * # Safety
 * `terrain` must come from `rs_terrain_from_text` and not be used afterwards.
 * Null is ignored.
 */
void rs_terrain_free(struct RsTerrain *terrain);

/**
 * Climb gate for the default chassis.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
int32_t rs_check_climbable(double slope_deg, double flipper_max_deg, double payload_kg, bool *out);

/**
 * Static tip-over angle of the default chassis about `axis`
 * (`RS_AXIS_PITCH` or `RS_AXIS_ROLL`), degrees.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
int32_t rs_tip_over_angle(int32_t axis, double *out);

/**
 * Gripper pose of the default arm for joint angles in degrees. Writes the
 * position (3 values) and the row-major rotation (9 values).
 *
 * # Safety
 * `angles_deg` must point to 6 doubles, `position` to 3, `rotation` to 9.
 */
int32_t rs_arm_forward(const double *angles_deg, double *position, double *rotation);

/**
 * Joint angles in degrees reaching the given gripper pose, starting from
 * `seed_deg`. Returns `RS_ERR_UNREACHABLE` when no solution converges.
 *
 * # Safety
 * `position` must point to 3 doubles, `rotation` to 9 (row-major),
 * `seed_deg` and `out_deg` to 6.
 */
int32_t rs_arm_inverse(const double *position,
                       const double *rotation,
                       const double *seed_deg,
                       double *out_deg);

/**
 * Detection metrics from confusion counts.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
int32_t rs_metrics(uint64_t tp, uint64_t fp, uint64_t fn_, uint64_t tn, struct RsMetrics *out);

/**
 * Loads a scenario file and builds a world from it.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` a valid pointer.
 */
int32_t rs_world_load(const char *path, struct RsWorld **out);

/**
 * Advances one tick applying an operator command (6 channels in [-1, 1]).
 *
 * # Safety
 * `world` must come from `rs_world_load`; `channels` must point to 6 doubles.
 */
int32_t rs_world_step_command(struct RsWorld *world,
                              uint64_t seq,
                              uint64_t timestamp_ms,
                              const double *channels);

/**
 * Advances one tick with a heartbeat (`heartbeat != 0`) or no input at all.
 *
 * # Safety
 * `world` must come from `rs_world_load`.
 */
int32_t rs_world_step(struct RsWorld *world,
                      int32_t heartbeat,
                      uint64_t seq,
                      uint64_t timestamp_ms);

/**
 * Marks the operator stream as finished; a running mission fails with
 * unmet goals.
 *
 * # Safety
 * `world` must come from `rs_world_load`.
 */
int32_t rs_world_end_of_stream(struct RsWorld *world);

/**
 * Snapshot of the world.
 *
 * # Safety
 * `world` must come from `rs_world_load`; `out` a valid pointer.
 */
int32_t rs_world_state(const struct RsWorld *world, struct RsWorldState *out);

/**
 * Current telemetry as one protocol frame (JSON, no trailing newline).
 * Buffer handling follows `rs_last_error`.
 *
 * # Safety
 * `world` must come from `rs_world_load`; `buf` valid for `*len` bytes.
 */
int32_t rs_world_telemetry_json(const struct RsWorld *world, char *buf, size_t *len);

/**
 * # Safety
 * `world` must come from `rs_world_load` and not be used afterwards.
 * Null is ignored.
 */
void rs_world_free(struct RsWorld *world);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RESCUE_SIM_H */
