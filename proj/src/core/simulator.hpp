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
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "core/fitting.hpp"

namespace vtrack::simulator {

struct Pose {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
};

/// Piecewise trajectory: straight runs and constant-turn-rate arcs,
/// closed-form per segment. Describes the motion of the rotation-axis point
/// (rear axle); the body center rides axle_offset behind/ahead of it.
struct TrajectorySegment {
  double duration = 0.0;   // [s]
  double speed = 0.0;      // [m/s] along heading
  double turn_rate = 0.0;  // [rad/s]; 0 means straight
};

struct TrajectorySpec {
  Pose start;
  std::vector<TrajectorySegment> segments;

  double total_duration() const;
};

struct VehicleSpec {
  double length = 4.5;
  double width = 2.0;
  double axle_offset = 0.0;  // rotation-axis offset L from center [m]
  TrajectorySpec trajectory;
};

struct ClutterRect {
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  double theta = 0.0;
  double length = 1.0;
  double width = 1.0;
};

struct SensorModel {
  double fov = 2.0 * M_PI;                       // [rad]
  double angular_resolution = 0.25 * M_PI / 180; // [rad]
  double max_range = 60.0;                       // [m]
  double range_sigma = 0.05;                     // [m]
  double dropout_prob = 0.01;
};

struct ScenarioConfig {
  double duration = 10.0;
  double frame_rate = 10.0;
  std::uint64_t seed = 0;
  TrajectorySpec ego;
  std::vector<VehicleSpec> vehicles;
  std::vector<ClutterRect> clutter_rects;
  std::vector<Eigen::Vector2d> clutter_points;
  SensorModel sensor;

  int frame_count() const;
};

/// Ground-truth pose and velocity of a vehicle center at one instant.
struct TruthState {
  int object_id = -1;
  Pose center;           // center pose, heading = vehicle orientation
  double vx = 0.0;
  double vy = 0.0;
  double turn_rate = 0.0;
  double length = 4.5;
  double width = 2.0;
  double axle_offset = 0.0;
};

/// One simulated scan: timestamped ego pose plus world-frame returns with
/// optional per-point labels and per-object truth.
struct ScanFrame {
  double timestamp = 0.0;
  Pose ego_pose;
  std::vector<Eigen::Vector2d> points;
  std::vector<int> truth_labels;  // object id per point, -1 for clutter
  std::vector<TruthState> truth_states;
};

/// Closed-form pose of a trajectory at time t (axis-point pose). Past the
/// last segment the pose holds still. Throws std::out_of_range for t < 0.
Pose trajectory_pose(const TrajectorySpec& spec, double t);

/// Ground-truth center states of all scenario vehicles at time t.
std::vector<TruthState> generate_truth(const ScenarioConfig& config, double t);

/// Casts one ray per angular step from the ego pose, keeps the nearest hit
/// per ray, then applies range noise and dropout.
ScanFrame render_scan(const ScenarioConfig& config, double t,
                      std::mt19937_64& rng);

/// All frames of the scenario at the configured frame rate, deterministic
/// for a fixed config seed.
std::vector<ScanFrame> simulate(const ScenarioConfig& config);

/// Single-linkage clustering with the given gap; clusters of fewer than
/// 3 points are discarded.
std::vector<fitting::PointCluster> cluster_points(const ScanFrame& frame,
                                                  double gap = 0.7);

/// Parses a scenario from JSON text. Throws std::runtime_error with a
/// field-anchored message on malformed input.
ScenarioConfig parse_scenario(const std::string& json_text);
ScenarioConfig load_scenario(const std::string& path);

}  // namespace vtrack::simulator
