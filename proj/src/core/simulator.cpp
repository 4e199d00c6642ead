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

#include "core/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "core/angles.hpp"

namespace vtrack::simulator {

namespace {

using json = nlohmann::json;

constexpr double kClutterPointRadius = 0.15;

Eigen::Matrix2d rot2(double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  Eigen::Matrix2d r;
  r << c, -s, s, c;
  return r;
}

// Advances a pose along one segment for time t (t <= segment duration).
Pose advance(const Pose& p, const TrajectorySegment& seg, double t) {
  Pose out = p;
  if (seg.turn_rate == 0.0) {
    out.x += seg.speed * t * std::cos(p.theta);
    out.y += seg.speed * t * std::sin(p.theta);
  } else {
    // Circle of radius v/w around the instantaneous rotation center.
    const double r = seg.speed / seg.turn_rate;
    const double th1 = p.theta + seg.turn_rate * t;
    out.x += r * (std::sin(th1) - std::sin(p.theta));
    out.y -= r * (std::cos(th1) - std::cos(p.theta));
    out.theta = th1;
  }
  return out;
}

struct Segment2d {
  Eigen::Vector2d a;
  Eigen::Vector2d b;
};

void box_segments(const Eigen::Vector2d& center, double theta, double length,
                  double width, std::vector<Segment2d>& out) {
  const Eigen::Matrix2d r = rot2(theta);
  const Eigen::Vector2d corners[4] = {
      center + r * Eigen::Vector2d(length / 2, width / 2),
      center + r * Eigen::Vector2d(-length / 2, width / 2),
      center + r * Eigen::Vector2d(-length / 2, -width / 2),
      center + r * Eigen::Vector2d(length / 2, -width / 2)};
  for (int i = 0; i < 4; ++i) {
    out.push_back({corners[i], corners[(i + 1) % 4]});
  }
}

// Ray-segment intersection; returns the ray parameter or nullopt.
std::optional<double> intersect_segment(const Eigen::Vector2d& origin,
                                        const Eigen::Vector2d& dir,
                                        const Segment2d& seg) {
  const Eigen::Vector2d e = seg.b - seg.a;
  const double denom = dir.x() * (-e.y()) - dir.y() * (-e.x());
  if (std::abs(denom) < 1e-12) {
    return std::nullopt;
  }
  const Eigen::Vector2d w = seg.a - origin;
  const double t = (w.x() * (-e.y()) - w.y() * (-e.x())) / denom;
  const double u = (dir.x() * w.y() - dir.y() * w.x()) / denom;
  if (t > 1e-9 && u >= 0.0 && u <= 1.0) {
    return t;
  }
  return std::nullopt;
}

std::optional<double> intersect_circle(const Eigen::Vector2d& origin,
                                       const Eigen::Vector2d& dir,
                                       const Eigen::Vector2d& center,
                                       double radius) {
  const Eigen::Vector2d oc = origin - center;
  const double b = 2.0 * dir.dot(oc);
  const double c = oc.squaredNorm() - radius * radius;
  const double disc = b * b - 4.0 * c;
  if (disc < 0.0) {
    return std::nullopt;
  }
  const double t = (-b - std::sqrt(disc)) / 2.0;
  if (t > 1e-9) {
    return t;
  }
  return std::nullopt;
}

double require_positive(const json& j, const char* field) {
  if (!j.contains(field) || !j[field].is_number()) {
    throw std::runtime_error(std::string("scenario: missing or non-numeric '") +
                             field + "'");
  }
  const double v = j[field].get<double>();
  if (!(v > 0.0)) {
    throw std::runtime_error(std::string("scenario: '") + field +
                             "' must be positive");
  }
  return v;
}

Pose parse_pose(const json& j, const char* context) {
  if (!j.is_array() || j.size() != 3) {
    throw std::runtime_error(std::string("scenario: '") + context +
                             "' must be [x, y, theta]");
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

TrajectorySpec parse_trajectory(const json& j, const char* context) {
  TrajectorySpec spec;
  if (!j.contains("start")) {
    throw std::runtime_error(std::string("scenario: '") + context +
                             "' missing 'start'");
  }
  spec.start = parse_pose(j["start"], context);
  for (const auto& seg : j.value("segments", json::array())) {
    TrajectorySegment s;
    s.duration = seg.value("duration", 0.0);
    s.speed = seg.value("speed", 0.0);
    s.turn_rate = seg.value("turn_rate", 0.0);
    if (s.duration < 0.0) {
      throw std::runtime_error(std::string("scenario: '") + context +
                               "' segment duration must be >= 0");
    }
    spec.segments.push_back(s);
  }
  return spec;
}

}  // namespace

double TrajectorySpec::total_duration() const {
  return std::accumulate(segments.begin(), segments.end(), 0.0,
                         [](double acc, const TrajectorySegment& s) {
                           return acc + s.duration;
                         });
}

int ScenarioConfig::frame_count() const {
  return static_cast<int>(std::lround(duration * frame_rate));
}

Pose trajectory_pose(const TrajectorySpec& spec, double t) {
  if (t < 0.0) {
    throw std::out_of_range("trajectory time must be >= 0");
  }
  Pose p = spec.start;
  double remaining = t;
  for (const auto& seg : spec.segments) {
    if (remaining <= seg.duration) {
      return advance(p, seg, remaining);
    }
    p = advance(p, seg, seg.duration);
    remaining -= seg.duration;
  }
  // Past the last segment the object holds its final pose (clutter-like).
  return p;
}

std::vector<TruthState> generate_truth(const ScenarioConfig& config,
                                       double t) {
  if (t < 0.0 || t > config.duration + 1e-9) {
    throw std::out_of_range("truth time outside scenario duration");
  }
  std::vector<TruthState> out;
  for (size_t i = 0; i < config.vehicles.size(); ++i) {
    const VehicleSpec& veh = config.vehicles[i];
    const Pose axis = trajectory_pose(veh.trajectory, t);

    // Speed/turn rate of the active segment.
    double speed = 0.0;
    double turn_rate = 0.0;
    double acc = 0.0;
    for (const auto& seg : veh.trajectory.segments) {
      if (t <= acc + seg.duration) {
        speed = seg.speed;
        turn_rate = seg.turn_rate;
        break;
      }
      acc += seg.duration;
    }

    TruthState ts;
    ts.object_id = static_cast<int>(i);
    const Eigen::Vector2d center =
        Eigen::Vector2d(axis.x, axis.y) -
        rot2(axis.theta) * Eigen::Vector2d(veh.axle_offset, 0.0);
    ts.center = {center.x(), center.y(), wrap_angle(axis.theta)};
    ts.vx = speed * std::cos(axis.theta) +
            turn_rate * veh.axle_offset * std::sin(axis.theta);
    ts.vy = speed * std::sin(axis.theta) -
            turn_rate * veh.axle_offset * std::cos(axis.theta);
    ts.turn_rate = turn_rate;
    ts.length = veh.length;
    ts.width = veh.width;
    ts.axle_offset = veh.axle_offset;
    out.push_back(ts);
  }
  return out;
}

ScanFrame render_scan(const ScenarioConfig& config, double t,
                      std::mt19937_64& rng) {
  ScanFrame frame;
  frame.timestamp = t;
  const Pose ego = trajectory_pose(config.ego, t);
  frame.ego_pose = {ego.x, ego.y, wrap_angle(ego.theta)};
  frame.truth_states = generate_truth(config, t);

  struct Target {
    std::vector<Segment2d> segments;
    int id;
  };
  std::vector<Target> targets;
  for (const auto& ts : frame.truth_states) {
    Target tg;
    tg.id = ts.object_id;
    box_segments({ts.center.x, ts.center.y}, ts.center.theta, ts.length,
                 ts.width, tg.segments);
    targets.push_back(std::move(tg));
  }
  for (const auto& cr : config.clutter_rects) {
    Target tg;
    tg.id = -1;
    box_segments(cr.center, cr.theta, cr.length, cr.width, tg.segments);
    targets.push_back(std::move(tg));
  }

  const Eigen::Vector2d origin(ego.x, ego.y);
  const int rays =
      static_cast<int>(std::floor(config.sensor.fov /
                                  config.sensor.angular_resolution));
  std::normal_distribution<double> range_noise(0.0, config.sensor.range_sigma);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  for (int k = 0; k < rays; ++k) {
    const double angle = frame.ego_pose.theta - config.sensor.fov / 2.0 +
                         (k + 0.5) * config.sensor.angular_resolution;
    const Eigen::Vector2d dir(std::cos(angle), std::sin(angle));

    double best = config.sensor.max_range;
    int label = -2;  // no hit
    for (const auto& tg : targets) {
      for (const auto& seg : tg.segments) {
        if (auto hit = intersect_segment(origin, dir, seg)) {
          if (*hit < best) {
            best = *hit;
            label = tg.id;
          }
        }
      }
    }
    for (const auto& cp : config.clutter_points) {
      if (auto hit = intersect_circle(origin, dir, cp, kClutterPointRadius)) {
        if (*hit < best) {
          best = *hit;
          label = -1;
        }
      }
    }
    if (label == -2) {
      continue;
    }

    double range = best;
    if (config.sensor.range_sigma > 0.0) {
      range += range_noise(rng);
    }
    const bool dropped = config.sensor.dropout_prob > 0.0 &&
                         unit(rng) < config.sensor.dropout_prob;
    if (dropped || range <= 0.0 || range > config.sensor.max_range) {
      continue;
    }
    frame.points.push_back(origin + range * dir);
    frame.truth_labels.push_back(label);
  }
  return frame;
}

std::vector<ScanFrame> simulate(const ScenarioConfig& config) {
  std::mt19937_64 rng(config.seed);
  std::vector<ScanFrame> frames;
  const int n = config.frame_count();
  frames.reserve(n);
  for (int i = 0; i < n; ++i) {
    frames.push_back(render_scan(config, i / config.frame_rate, rng));
  }
  return frames;
}

std::vector<fitting::PointCluster> cluster_points(const ScanFrame& frame,
                                                  double gap) {
  if (!(gap > 0.0)) {
    throw std::invalid_argument("cluster gap must be positive");
  }
  const int n = static_cast<int>(frame.points.size());
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int a) {
    while (parent[a] != a) {
      parent[a] = parent[parent[a]];
      a = parent[a];
    }
    return a;
  };

  const double gap2 = gap * gap;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if ((frame.points[i] - frame.points[j]).squaredNorm() <= gap2) {
        parent[find(i)] = find(j);
      }
    }
  }

  std::map<int, fitting::PointCluster> groups;
  for (int i = 0; i < n; ++i) {
    auto& cl = groups[find(i)];
    cl.points.push_back(frame.points[i]);
    cl.sensor_origin = {frame.ego_pose.x, frame.ego_pose.y};
    cl.timestamp = frame.timestamp;
  }

  std::vector<fitting::PointCluster> out;
  for (auto& [root, cl] : groups) {
    if (cl.points.size() >= 3) {
      out.push_back(std::move(cl));
    }
  }
  return out;
}

ScenarioConfig parse_scenario(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(std::string("scenario: invalid JSON: ") +
                             e.what());
  }

  ScenarioConfig cfg;
  cfg.duration = require_positive(j, "duration");
  cfg.frame_rate = j.contains("frame_rate")
                       ? require_positive(j, "frame_rate")
                       : 10.0;
  cfg.seed = j.value("seed", 0ULL);

  if (!j.contains("ego")) {
    throw std::runtime_error("scenario: missing 'ego'");
  }
  cfg.ego = parse_trajectory(j["ego"], "ego");

  for (const auto& v : j.value("vehicles", json::array())) {
    VehicleSpec veh;
    veh.length = require_positive(v, "length");
    veh.width = require_positive(v, "width");
    veh.axle_offset = v.value("axle_offset", 0.0);
    veh.trajectory = parse_trajectory(v, "vehicle");
    cfg.vehicles.push_back(veh);
  }

  for (const auto& c : j.value("clutter_rects", json::array())) {
    ClutterRect cr;
    if (!c.contains("center") || !c["center"].is_array() ||
        c["center"].size() != 2) {
      throw std::runtime_error("scenario: clutter rect needs 'center' [x, y]");
    }
    cr.center = {c["center"][0].get<double>(), c["center"][1].get<double>()};
    cr.theta = c.value("theta", 0.0);
    cr.length = require_positive(c, "length");
    cr.width = require_positive(c, "width");
    cfg.clutter_rects.push_back(cr);
  }
  for (const auto& p : j.value("clutter_points", json::array())) {
    if (!p.is_array() || p.size() != 2) {
      throw std::runtime_error("scenario: clutter point must be [x, y]");
    }
    cfg.clutter_points.emplace_back(p[0].get<double>(), p[1].get<double>());
  }

  if (j.contains("sensor")) {
    const auto& s = j["sensor"];
    cfg.sensor.fov = s.value("fov_deg", 360.0) * kPi / 180.0;
    cfg.sensor.angular_resolution =
        s.value("angular_resolution_deg", 0.25) * kPi / 180.0;
    cfg.sensor.max_range = s.value("max_range", 60.0);
    cfg.sensor.range_sigma = s.value("range_sigma", 0.05);
    cfg.sensor.dropout_prob = s.value("dropout_prob", 0.01);
    if (cfg.sensor.fov <= 0.0 || cfg.sensor.angular_resolution <= 0.0 ||
        cfg.sensor.max_range <= 0.0 || cfg.sensor.range_sigma < 0.0 ||
        cfg.sensor.dropout_prob < 0.0 || cfg.sensor.dropout_prob >= 1.0) {
      throw std::runtime_error("scenario: invalid 'sensor' parameters");
    }
  }
  return cfg;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("scenario: cannot open '" + path + "'");
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

}  // namespace vtrack::simulator
