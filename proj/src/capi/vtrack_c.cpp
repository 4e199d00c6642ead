// Copyright 2026 the vtrack authors
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

#include "vtrack/vtrack.h"

#include <cstdlib>
#include <cstring>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "core/metrics.hpp"
#include "core/scan_log.hpp"
#include "core/simulator.hpp"
#include "core/tracker.hpp"

namespace {

thread_local std::string g_last_error;

vt_status fail(vt_status code, const std::string& message) {
  g_last_error = message;
  return code;
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

nlohmann::json hypothesis_to_json(const vtrack::tracker::HypothesisOutput& h) {
  nlohmann::json j;
  j["model"] = h.model == vtrack::tracker::ModelKind::Ism ? "ISM" : "VASM";
  j["state"] = {h.state[0], h.state[1], h.state[2],
                h.state[3], h.state[4], h.state[5]};
  j["cov_diag"] = {h.cov_diag[0], h.cov_diag[1], h.cov_diag[2],
                   h.cov_diag[3], h.cov_diag[4], h.cov_diag[5]};
  j["mean_nis"] = h.mean_nis;
  j["missed"] = h.missed_frames;
  nlohmann::json traj = nlohmann::json::array();
  for (const auto& p : h.predicted_trajectory) {
    traj.push_back({p.x(), p.y()});
  }
  j["predicted"] = std::move(traj);
  return j;
}

}  // namespace

struct vt_scenario {
  vtrack::simulator::ScenarioConfig config;
};

struct vt_tracker {
  vtrack::tracker::TrackerConfig config;
  vtrack::tracker::TrackManager manager;

  explicit vt_tracker(vtrack::tracker::TrackerConfig cfg)
      : config(cfg), manager(cfg) {}
};

extern "C" {

const char* vt_version(void) { return "0.1.0"; }

const char* vt_last_error(void) { return g_last_error.c_str(); }

void vt_string_free(char* s) { std::free(s); }

vt_status vt_scenario_load(const char* path, vt_scenario** out) {
  if (path == nullptr || out == nullptr) {
    return fail(VT_ERR_INVALID_ARGUMENT, "null argument");
  }
  try {
    auto* s = new vt_scenario{vtrack::simulator::load_scenario(path)};
    *out = s;
    return VT_OK;
  } catch (const std::exception& e) {
    return fail(VT_ERR_PARSE, e.what());
  }
}

vt_status vt_scenario_parse(const char* json_text, vt_scenario** out) {
  if (json_text == nullptr || out == nullptr) {
    return fail(VT_ERR_INVALID_ARGUMENT, "null argument");
  }
  try {
    auto* s = new vt_scenario{vtrack::simulator::parse_scenario(json_text)};
    *out = s;
    return VT_OK;
  } catch (const std::exception& e) {
    return fail(VT_ERR_PARSE, e.what());
  }
}

void vt_scenario_free(vt_scenario* scenario) { delete scenario; }

int vt_scenario_frame_count(const vt_scenario* scenario) {
  return scenario == nullptr ? -1 : scenario->config.frame_count();
}

vt_status vt_simulate(const vt_scenario* scenario, long long seed_override,
                      const char* out_log_path) {
  if (scenario == nullptr || out_log_path == nullptr) {
    return fail(VT_ERR_INVALID_ARGUMENT, "null argument");
  }
  try {
    vtrack::simulator::ScenarioConfig cfg = scenario->config;
    if (seed_override >= 0) {
      cfg.seed = static_cast<std::uint64_t>(seed_override);
    }
    vtrack::scan_log::write_log(out_log_path, vtrack::simulator::simulate(cfg));
    return VT_OK;
  } catch (const std::exception& e) {
    return fail(VT_ERR_IO, e.what());
  }
}

vt_status vt_tracker_create(const char* config_json, vt_tracker** out) {
  if (out == nullptr) {
    return fail(VT_ERR_INVALID_ARGUMENT, "null argument");
  }
  try {
    const std::string text = config_json == nullptr ? "" : config_json;
    *out = new vt_tracker(vtrack::tracker::parse_tracker_config(text));
    return VT_OK;
  } catch (const std::exception& e) {
    return fail(VT_ERR_PARSE, e.what());
  }
}

void vt_tracker_free(vt_tracker* tracker) { delete tracker; }

vt_status vt_tracker_step(vt_tracker* tracker, const char* frame_json,
                          double dt, char** out_json) {
  if (tracker == nullptr || frame_json == nullptr || out_json == nullptr) {
    return fail(VT_ERR_INVALID_ARGUMENT, "null argument");
  }
  if (!(dt > 0.0)) {
    return fail(VT_ERR_INVALID_ARGUMENT, "dt must be positive");
  }
  try {
    const auto frame = vtrack::scan_log::frame_from_json(frame_json);
    const auto clusters =
        vtrack::simulator::cluster_points(frame, tracker->config.cluster_gap);
    const auto outputs = tracker->manager.step(clusters, dt);

    nlohmann::json j;
    j["t"] = frame.timestamp;
    nlohmann::json tracks = nlohmann::json::array();
    for (const auto& to : outputs) {
      nlohmann::json tj;
      tj["id"] = to.id;
      tj["best"] = to.best;
      tj["shape"] = {{"length", to.shape.length},
                     {"width", to.shape.width},
                     {"confidence", to.shape.confidence}};
      nlohmann::json hyps = nlohmann::json::array();
      for (const auto& h : to.hypotheses) {
        hyps.push_back(hypothesis_to_json(h));
      }
      tj["hypotheses"] = std::move(hyps);
      tracks.push_back(std::move(tj));
    }
    j["tracks"] = std::move(tracks);
    *out_json = dup_string(j.dump());
    return VT_OK;
  } catch (const std::exception& e) {
    return fail(VT_ERR_RUNTIME, e.what());
  }
}

vt_status vt_track_log(const char* log_path, const char* config_json,
                       const char* tracks_out_path,
                       const char* metrics_out_path) {
  if (log_path == nullptr || tracks_out_path == nullptr) {
    return fail(VT_ERR_INVALID_ARGUMENT, "null argument");
  }
  try {
    const std::string text = config_json == nullptr ? "" : config_json;
    const auto config = vtrack::tracker::parse_tracker_config(text);
    const auto frames = vtrack::scan_log::read_log(log_path);
    const auto records = vtrack::metrics::run_tracker(frames, config);
    vtrack::metrics::write_tracks(tracks_out_path, records);
    if (metrics_out_path != nullptr) {
      const auto report = vtrack::metrics::compute_metrics(frames, records);
      vtrack::metrics::write_report(metrics_out_path, report);
    }
    return VT_OK;
  } catch (const std::exception& e) {
    return fail(VT_ERR_RUNTIME, e.what());
  }
}

vt_status vt_eval(const char* log_path, const char* tracks_path,
                  const char* metrics_out_path) {
  if (log_path == nullptr || tracks_path == nullptr ||
      metrics_out_path == nullptr) {
    return fail(VT_ERR_INVALID_ARGUMENT, "null argument");
  }
  try {
    const auto frames = vtrack::scan_log::read_log(log_path);
    const auto records = vtrack::metrics::read_tracks(tracks_path);
    const auto report = vtrack::metrics::compute_metrics(frames, records);
    vtrack::metrics::write_report(metrics_out_path, report);
    return VT_OK;
  } catch (const std::exception& e) {
    return fail(VT_ERR_RUNTIME, e.what());
  }
}

}  // extern "C"
