#ifndef FOOTANDBALL_FOOTANDBALL_H
#define FOOTANDBALL_FOOTANDBALL_H

/* C interface of the FootAndBall detector library.
 *
 * Every fallible call returns an fnb_status. On failure a description is
 * available from fnb_last_error() until the next call on the same thread.
 * Objects are opaque and must be released with their _free function. */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define FNB_API __declspec(dllexport)
#else
#define FNB_API __attribute__((visibility("default")))
#endif

typedef enum fnb_status {
  FNB_OK = 0,
  FNB_ERR_CONFIG = 2,
  FNB_ERR_IO = 3,
  FNB_ERR_FORMAT = 4,
  FNB_ERR_SHAPE = 5,
  FNB_ERR_NUMERIC = 6,
  FNB_ERR_INTERNAL = 7,
  FNB_ERR_INVALID_ARGUMENT = 8,
  /* The command finished but some items (e.g. frames) failed. */
  FNB_ERR_PARTIAL = 9
} fnb_status;

FNB_API const char* fnb_last_error(void);
FNB_API const char* fnb_status_name(fnb_status status);
FNB_API const char* fnb_version(void);

/* Kernel worker threads (default: FNB_NUM_THREADS or all cores). */
FNB_API void fnb_set_num_threads(int n);
FNB_API int fnb_num_threads(void);

/* Strings returned by the library are released with fnb_string_free. */
FNB_API void fnb_string_free(char* s);

/* ---- model ---------------------------------------------------------- */

typedef struct fnb_model fnb_model;

/* model_config_json: NULL or an object with optional keys
 * "lateral_channels", "head_hidden_channels", "topdown_enabled". */
FNB_API fnb_status fnb_model_create(const char* model_config_json, uint64_t seed, fnb_model** out);
FNB_API fnb_status fnb_model_load(const char* path, fnb_model** out);
FNB_API fnb_status fnb_model_save(const fnb_model* model, const char* path);
FNB_API void fnb_model_free(fnb_model* model);
FNB_API size_t fnb_model_parameter_count(const fnb_model* model);

/* ---- detection ------------------------------------------------------ */

typedef struct fnb_detections fnb_detections;

/* decoder_json: NULL or an object with optional keys "theta_ball",
 * "theta_player", "nms_window", "ball_mode" ("single-best" or
 * "all-candidates"). `rgb` is planar (3 x height x width) in [0, 1]. The
 * frame is zero-padded internally; coordinates refer to the input frame. */
FNB_API fnb_status fnb_detect_rgb(fnb_model* model, const float* rgb, int width, int height,
                                  const char* decoder_json, fnb_detections** out);
FNB_API fnb_status fnb_detect_image(fnb_model* model, const char* path, const char* decoder_json,
                                    fnb_detections** out);
FNB_API size_t fnb_detections_ball_count(const fnb_detections* d);
FNB_API fnb_status fnb_detections_ball(const fnb_detections* d, size_t i, double* x, double* y, double* score);
FNB_API size_t fnb_detections_player_count(const fnb_detections* d);
/* Player boxes are center format, clipped to the frame. */
FNB_API fnb_status fnb_detections_player(const fnb_detections* d, size_t i, double* cx, double* cy, double* bw,
                                         double* bh, double* score);
/* One JSON line in the detect output format. */
FNB_API fnb_status fnb_detections_to_json(const fnb_detections* d, const char* frame_name, char** out);
FNB_API void fnb_detections_free(fnb_detections* d);

/* ---- commands ------------------------------------------------------- */

typedef void (*fnb_log_fn)(const char* line, void* user);

/* Runs "synth", "train", "detect", "eval" or "bench" with a JSON run config.
 * Progress lines go to `log` (may be NULL). When `summary` is non-NULL it
 * receives the command's JSON report (eval, bench, train with a held-out
 * split) or NULL. */
FNB_API fnb_status fnb_run_command(const char* command, const char* config_json, fnb_log_fn log, void* user,
                                   char** summary);

/* Fully resolved run config (defaults filled in) for the given input. */
FNB_API fnb_status fnb_resolve_config(const char* command, const char* config_json, char** out);

#ifdef __cplusplus
}
#endif

#endif
