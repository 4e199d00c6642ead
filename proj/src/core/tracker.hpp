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

#include <Eigen/Core>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "core/fitting.hpp"
#include "core/kinematics.hpp"
#include "core/shape.hpp"

namespace vtrack::tracker {

using kinematics::Mat6;
using kinematics::Vec6;

enum class ModelKind { Ism, Vasm };

/// Per-hypothesis fitting knobs: the fraction of cluster points that must
/// fall inside the fitted box, and a scale on the process noise.
struct HypothesisParams {
  double inlier_fraction = 0.6;
  double noise_scale = 1.0;
};

/// One independently filtered model instance for an object.
struct Track {
  ModelKind model = ModelKind::Ism;
  Vec6 state = Vec6::Zero();  // ISM: (x,xdot,y,ydot,th,thd); VASM: (x,y,L,v,th,thd)
  Mat6 cov = Mat6::Identity();
  shape::DimensionHistogram length_hist;
  shape::DimensionHistogram width_hist;
  // First fitted extents; stand in for the histogram estimates until those
  // mature, so the measured box does not snap from car-sized defaults.
  std::optional<double> fallback_length;
  std::optional<double> fallback_width;
  HypothesisParams params;
  std::deque<double> score_window;  // last W normalized innovations
  int missed_frames = 0;
  int updates = 0;
  std::uint64_t id = 0;

  Eigen::Vector2d position() const;
  double heading() const;
  double speed() const;
  shape::ShapeEstimate shape_estimate() const;
};

struct TrackerConfig {
  double gate_threshold = 11.34;      // chi-square 99%, 3 dof
  double mover_speed_threshold = 0.5; // [m/s]
  double mover_sigma_count = 3.0;
  int max_missed = 3;
  int score_window = 10;
  kinematics::NoiseParams noise;
  fitting::RansacConfig ransac;
  double cluster_gap = 0.7;
  /// Tracks closer than this are duplicates (cluster splits, respawns); the
  /// one with fewer updates is removed. Must exceed half a vehicle length:
  /// a split off one face can sit that far from the box center.
  double duplicate_radius = 3.5;
  std::uint64_t seed = 0;
  /// Movers get a single VASM hypothesis instead of the ISM + 3 VASM set.
  bool single_vasm_mode = false;
};

/// Parses TrackerConfig overrides from JSON text; empty input yields the
/// defaults. Unknown keys throw std::runtime_error.
TrackerConfig parse_tracker_config(const std::string& json_text);

/// Predicts one hypothesis forward by dt (process noise scaled by the
/// hypothesis's noise_scale).
Track kf_predict(const Track& track, double dt,
                 const kinematics::NoiseParams& noise);

/// Standard Kalman update in Joseph form. Returns the normalized innovation
/// squared; a singular innovation covariance rejects the update and
/// increments missed_frames.
struct UpdateResult {
  Track track;
  double nis = 0.0;
  bool accepted = false;
};
UpdateResult kf_update(const Track& track, const fitting::Measurement& meas);

/// True when the estimated speed minus mover_sigma_count standard deviations
/// still exceeds the mover speed threshold. Needs at least 3 updates.
bool detect_mover(const Track& track, const TrackerConfig& config);

/// Expands a single-ISM mover into the fixed hypothesis set:
/// [ISM kept, VASM(0.6, 1), VASM(0.8, 1), VASM(0.6, 4)].
std::vector<Track> spawn_hypotheses(const Track& track);

/// Index of the hypothesis with the lowest mean NIS over its score window,
/// plus gate_threshold penalty per missed frame. Ties prefer VASM, then the
/// lowest index. All-empty windows return 0.
int select_best(const std::vector<Track>& hypotheses, double gate_threshold);

/// Copies the best hypothesis's state into any hypothesis that has missed
/// max_missed or more frames, converting between model parameterizations.
std::vector<Track> reinitialize_failed(const std::vector<Track>& hypotheses,
                                       const TrackerConfig& config);

/// State conversions between the two model parameterizations (covariance
/// mapped through the Jacobian; VASM L gets 1 m^2 initial variance).
Track ism_to_vasm(const Track& ism);
Track vasm_to_ism(const Track& vasm);

/// Per-hypothesis output record for one frame.
struct HypothesisOutput {
  ModelKind model = ModelKind::Ism;
  Vec6 state = Vec6::Zero();
  Vec6 cov_diag = Vec6::Zero();
  std::vector<Eigen::Vector2d> predicted_trajectory;  // 10 steps ahead
  double mean_nis = 0.0;
  int missed_frames = 0;
};

struct TrackOutput {
  std::uint64_t id = 0;
  int best = 0;  // index into hypotheses
  shape::ShapeEstimate shape;
  std::vector<HypothesisOutput> hypotheses;

  const HypothesisOutput& best_hypothesis() const { return hypotheses[best]; }
};

/// Multi-hypothesis track manager: stationary objects carry one ISM
/// hypothesis, movers up to four. Single-writer; one step call at a time.
class TrackManager {
 public:
  explicit TrackManager(TrackerConfig config = {});

  /// One tracking cycle: predict, associate, fit, update, shape observe,
  /// mover promotion, failed-hypothesis reinitialization, best selection.
  std::vector<TrackOutput> step(
      const std::vector<fitting::PointCluster>& clusters, double dt);

  const TrackerConfig& config() const { return config_; }
  const std::map<std::uint64_t, std::vector<Track>>& tracks() const {
    return tracks_;
  }

 private:
  TrackerConfig config_;
  std::map<std::uint64_t, std::vector<Track>> tracks_;
  std::uint64_t next_id_ = 1;
  std::uint64_t frame_index_ = 0;
};

}  // namespace vtrack::tracker
