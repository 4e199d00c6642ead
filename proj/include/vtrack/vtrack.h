/* Copyright 2026 the vtrack authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* C interface to the vtrack LADAR vehicle tracking library.
 *
 * All functions return vt_status; on failure vt_last_error() carries a
 * human-readable message (thread-local). Handles are opaque and must be
 * released with their matching *_free function. Strings returned through
 * out parameters are owned by the caller and released with vt_string_free.
 */

#ifndef VTRACK_VTRACK_H
#define VTRACK_VTRACK_H

#ifdef __cplusplus
extern "C" {
#endif

typedef enum vt_status {
  VT_OK = 0,
  VT_ERR_INVALID_ARGUMENT = 1,
  VT_ERR_IO = 2,
  VT_ERR_PARSE = 3,
  VT_ERR_RUNTIME = 4
} vt_status;

const char* vt_version(void);

/* Message for the most recent failure on this thread, or "". */
const char* vt_last_error(void);

void vt_string_free(char* s);

/* ---- Scenario / simulation ---- */

typedef struct vt_scenario vt_scenario;

vt_status vt_scenario_load(const char* path, vt_scenario** out);
vt_status vt_scenario_parse(const char* json_text, vt_scenario** out);
void vt_scenario_free(vt_scenario* scenario);

/* Number of frames the scenario will produce, or -1 on a null handle. */
int vt_scenario_frame_count(const vt_scenario* scenario);

/* Renders the scenario to a line-delimited JSON scan log. A negative
 * seed_override keeps the scenario's own seed. */
vt_status vt_simulate(const vt_scenario* scenario, long long seed_override,
                      const char* out_log_path);

/* ---- Tracking ---- */

typedef struct vt_tracker vt_tracker;

/* config_json may be NULL or "" for defaults; unknown keys are rejected. */
vt_status vt_tracker_create(const char* config_json, vt_tracker** out);
void vt_tracker_free(vt_tracker* tracker);

/* Processes one scan-log line and returns this frame's tracks as JSON. */
vt_status vt_tracker_step(vt_tracker* tracker, const char* frame_json,
                          double dt, char** out_json);

/* Runs a fresh tracker over a whole scan log, writing a tab-separated
 * tracks file and, when the log carries ground truth, a metrics report.
 * metrics_out_path may be NULL to skip the report. */
vt_status vt_track_log(const char* log_path, const char* config_json,
                       const char* tracks_out_path,
                       const char* metrics_out_path);

/* Recomputes the metrics report from an existing log + tracks file pair. */
vt_status vt_eval(const char* log_path, const char* tracks_path,
                  const char* metrics_out_path);

#ifdef __cplusplus
}
#endif

#endif /* VTRACK_VTRACK_H */
