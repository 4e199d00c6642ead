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

#pragma once

#include <string>
#include <vector>

#include "core/simulator.hpp"
#include "core/tracker.hpp"

namespace vtrack::metrics {

/// Tracker output for one frame.
struct FrameRecord {
  int frame_index = 0;
  double timestamp = 0.0;
  std::vector<tracker::TrackOutput> tracks;
};

/// Tab-separated tracks file, one row per hypothesis per frame. Columns are
/// documented in the README.
void write_tracks(const std::string& path,
                  const std::vector<FrameRecord>& records);
std::vector<FrameRecord> read_tracks(const std::string& path);

/// Runs a fresh TrackManager over the frames (clustering each scan with the
/// configured gap). dt comes from the frame timestamps.
std::vector<FrameRecord> run_tracker(
    const std::vector<simulator::ScanFrame>& frames,
    const tracker::TrackerConfig& config);

/// Per-object evaluation against simulator ground truth.
struct ObjectMetrics {
  int object_id = -1;
  double position_rmse = 0.0;   // [m]
  double heading_rmse = 0.0;    // [rad], direction-folded
  double continuity = 0.0;      // % of frames with a track within range
  std::vector<double> prediction_error;  // mean k-step-ahead error, k=1..10
  std::string model_timeline;   // per frame: '-', 'I' or 'V'
};

struct MetricsReport {
  std::vector<ObjectMetrics> objects;
  int frames_processed = 0;
};

/// Distance within which a track counts as covering a truth object.
inline constexpr double kAssociationRadius = 2.0;

MetricsReport compute_metrics(const std::vector<simulator::ScanFrame>& frames,
                              const std::vector<FrameRecord>& records);

std::string report_to_json(const MetricsReport& report);
void write_report(const std::string& path, const MetricsReport& report);

}  // namespace vtrack::metrics
