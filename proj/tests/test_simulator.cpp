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

#include <cmath>
#include <map>
#include <random>
#include <set>

#include <doctest.h>

#include <Eigen/Geometry>

#include "core/angles.hpp"
#include "core/simulator.hpp"

using namespace vtrack;
using namespace vtrack::simulator;

namespace {

// RK4 integration of the axis-point motion, oracle for the closed-form
// segment advance.
Pose rk4_pose(const TrajectorySpec& spec, double t, int steps_per_s = 4000) {
  Pose p = spec.start;
  double done = 0.0;
  for (const auto& seg : spec.segments) {
    const double span = std::min(seg.duration, t - done);
    if (span <= 0.0) {
      break;
    }
    const int steps = std::max(1, static_cast<int>(span * steps_per_s));
    const double h = span / steps;
    for (int i = 0; i < steps; ++i) {
      auto f = [&](const Eigen::Vector3d& s) -> Eigen::Vector3d {
        return {seg.speed * std::cos(s[2]), seg.speed * std::sin(s[2]),
                seg.turn_rate};
      };
      Eigen::Vector3d s(p.x, p.y, p.theta);
      const Eigen::Vector3d k1 = f(s);
      const Eigen::Vector3d k2 = f(s + 0.5 * h * k1);
      const Eigen::Vector3d k3 = f(s + 0.5 * h * k2);
      const Eigen::Vector3d k4 = f(s + h * k3);
      s += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      p = {s[0], s[1], s[2]};
    }
    done += seg.duration;
  }
  return p;
}

ScenarioConfig basic_scenario() {
  ScenarioConfig cfg;
  cfg.duration = 2.0;
  cfg.frame_rate = 10.0;
  cfg.seed = 42;
  cfg.ego.start = {0.0, 0.0, 0.0};
  VehicleSpec veh;
  veh.trajectory.start = {15.0, 6.0, 2.6};
  veh.trajectory.segments.push_back({5.0, 4.0, 0.0});
  veh.axle_offset = -1.4;
  cfg.vehicles.push_back(veh);
  return cfg;
}

}  // namespace

TEST_CASE("trajectory pose matches RK4 across segment boundaries") {
  TrajectorySpec spec;
  spec.start = {2.0, -1.0, 0.4};
  spec.segments.push_back({1.5, 5.0, 0.0});
  spec.segments.push_back({2.0, 5.0, 0.5});
  spec.segments.push_back({1.0, 3.0, -0.8});

  for (double t : {0.0, 0.7, 1.5, 1.5 + 1e-9, 2.3, 3.5, 4.2, 4.5}) {
    const Pose got = trajectory_pose(spec, t);
    const Pose want = rk4_pose(spec, t);
    CHECK(std::abs(got.x - want.x) < 1e-9);
    CHECK(std::abs(got.y - want.y) < 1e-9);
    CHECK(std::abs(angle_diff(got.theta, want.theta)) < 1e-9);
  }

  // Boundary continuity from both sides.
  const Pose lo = trajectory_pose(spec, 1.5 - 1e-9);
  const Pose hi = trajectory_pose(spec, 1.5 + 1e-9);
  CHECK(std::abs(lo.x - hi.x) < 1e-7);
  CHECK(std::abs(lo.y - hi.y) < 1e-7);

  // Pose holds after the last segment.
  const Pose end = trajectory_pose(spec, 4.5);
  const Pose past = trajectory_pose(spec, 9.0);
  CHECK(end.x == past.x);
  CHECK(end.y == past.y);

  CHECK_THROWS_AS(trajectory_pose(spec, -0.1), std::out_of_range);
}

TEST_CASE("truth center velocity is consistent with finite differences") {
  ScenarioConfig cfg = basic_scenario();
  cfg.vehicles[0].trajectory.segments[0].turn_rate = 0.5;
  const double t = 1.0;
  const double h = 1e-6;
  const auto truth = generate_truth(cfg, t);
  const auto before = generate_truth(cfg, t - h);
  const auto after = generate_truth(cfg, t + h);
  REQUIRE(truth.size() == 1);
  const double vx = (after[0].center.x - before[0].center.x) / (2.0 * h);
  const double vy = (after[0].center.y - before[0].center.y) / (2.0 * h);
  CHECK(truth[0].vx == doctest::Approx(vx).epsilon(1e-5));
  CHECK(truth[0].vy == doctest::Approx(vy).epsilon(1e-5));
}

TEST_CASE("scan points land on the target box faces") {
  ScenarioConfig cfg = basic_scenario();
  cfg.sensor.range_sigma = 0.0;
  cfg.sensor.dropout_prob = 0.0;
  std::mt19937_64 rng(cfg.seed);
  const ScanFrame frame = render_scan(cfg, 0.0, rng);
  REQUIRE(frame.points.size() > 10);
  REQUIRE(frame.points.size() == frame.truth_labels.size());

  const auto& ts = frame.truth_states[0];
  const Eigen::Rotation2Dd R(ts.center.theta);
  int on_face = 0;
  std::set<int> faces;
  for (size_t i = 0; i < frame.points.size(); ++i) {
    REQUIRE(frame.truth_labels[i] == 0);
    const Eigen::Vector2d local =
        R.inverse() *
        (frame.points[i] - Eigen::Vector2d(ts.center.x, ts.center.y));
    const double ex = std::abs(local.x()) - ts.length / 2.0;
    const double ey = std::abs(local.y()) - ts.width / 2.0;
    if (std::abs(ex) < 1e-9 || std::abs(ey) < 1e-9) {
      ++on_face;
    }
    if (std::abs(ex) < 1e-9) {
      faces.insert(local.x() > 0.0 ? 0 : 1);
    } else if (std::abs(ey) < 1e-9) {
      faces.insert(local.y() > 0.0 ? 2 : 3);
    }
  }
  CHECK(on_face == static_cast<int>(frame.points.size()));
  // A convex box shows at most two faces from any single viewpoint.
  CHECK(faces.size() <= 2);
}

TEST_CASE("nearer objects occlude farther ones") {
  ScenarioConfig cfg = basic_scenario();
  cfg.sensor.range_sigma = 0.0;
  cfg.sensor.dropout_prob = 0.0;
  // A second vehicle directly behind the first along the line of sight.
  VehicleSpec behind = cfg.vehicles[0];
  behind.trajectory.start = {30.0, 12.0, 2.6};
  cfg.vehicles.push_back(behind);

  std::mt19937_64 rng(1);
  const ScanFrame frame = render_scan(cfg, 0.0, rng);
  int front = 0;
  int back = 0;
  for (size_t i = 0; i < frame.points.size(); ++i) {
    if (frame.truth_labels[i] == 0) {
      ++front;
    } else {
      ++back;
      // Any point from the far box must not lie inside the shadow of the
      // near box: its ray distance is larger where visible only.
      const double r_far = frame.points[i].norm();
      CHECK(r_far > 10.0);
    }
  }
  CHECK(front > 10);

  // Remove the front vehicle: the rear one gains returns.
  ScenarioConfig solo = cfg;
  solo.vehicles.erase(solo.vehicles.begin());
  std::mt19937_64 rng2(1);
  const ScanFrame frame2 = render_scan(solo, 0.0, rng2);
  CHECK(static_cast<int>(frame2.points.size()) > back);
}

TEST_CASE("simulation is deterministic for a fixed seed") {
  const ScenarioConfig cfg = basic_scenario();
  const auto a = simulate(cfg);
  const auto b = simulate(cfg);
  REQUIRE(a.size() == b.size());
  REQUIRE(a.size() == static_cast<size_t>(cfg.frame_count()));
  for (size_t i = 0; i < a.size(); ++i) {
    REQUIRE(a[i].points.size() == b[i].points.size());
    for (size_t k = 0; k < a[i].points.size(); ++k) {
      CHECK(a[i].points[k] == b[i].points[k]);
    }
  }

  ScenarioConfig other = cfg;
  other.seed = 43;
  const auto c = simulate(other);
  bool identical = a[0].points.size() == c[0].points.size();
  if (identical) {
    for (size_t k = 0; k < a[0].points.size(); ++k) {
      if (a[0].points[k] != c[0].points[k]) {
        identical = false;
        break;
      }
    }
  }
  CHECK_FALSE(identical);
}

TEST_CASE("clustering matches a brute-force connected-components oracle") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (int trial = 0; trial < 20; ++trial) {
    ScanFrame frame;
    const int n = 40;
    for (int i = 0; i < n; ++i) {
      frame.points.emplace_back(u(rng), u(rng));
    }
    const double gap = 1.2;
    const auto clusters = cluster_points(frame, gap);

    // Oracle: repeated sweep connected components.
    std::vector<int> comp(n, -1);
    int n_comp = 0;
    for (int i = 0; i < n; ++i) {
      if (comp[i] != -1) {
        continue;
      }
      comp[i] = n_comp;
      bool changed = true;
      while (changed) {
        changed = false;
        for (int a = 0; a < n; ++a) {
          if (comp[a] != n_comp) {
            continue;
          }
          for (int b = 0; b < n; ++b) {
            if (comp[b] == -1 &&
                (frame.points[a] - frame.points[b]).norm() <= gap) {
              comp[b] = n_comp;
              changed = true;
            }
          }
        }
      }
      ++n_comp;
    }
    std::map<int, int> sizes;
    for (int i = 0; i < n; ++i) {
      sizes[comp[i]] += 1;
    }
    size_t expected = 0;
    for (const auto& [c, sz] : sizes) {
      if (sz >= 3) {
        ++expected;
      }
    }
    CHECK(clusters.size() == expected);

    // Cluster sizes match as a multiset.
    std::multiset<size_t> got;
    std::multiset<size_t> want;
    for (const auto& cl : clusters) {
      got.insert(cl.points.size());
    }
    for (const auto& [c, sz] : sizes) {
      if (sz >= 3) {
        want.insert(static_cast<size_t>(sz));
      }
    }
    CHECK(got == want);
  }
}

TEST_CASE("scenario parsing validates fields") {
  CHECK_THROWS_WITH_AS(parse_scenario("{"),
                       doctest::Contains("invalid JSON"), std::runtime_error);
  CHECK_THROWS_WITH_AS(parse_scenario("{}"), doctest::Contains("duration"),
                       std::runtime_error);
  CHECK_THROWS_WITH_AS(parse_scenario(R"({"duration": 1.0})"),
                       doctest::Contains("ego"), std::runtime_error);
  CHECK_THROWS_WITH_AS(
      parse_scenario(R"({"duration": 1.0, "ego": {"start": [0, 0]}})"),
      doctest::Contains("[x, y, theta]"), std::runtime_error);
  CHECK_THROWS_WITH_AS(
      parse_scenario(
          R"({"duration": 1.0, "ego": {"start": [0, 0, 0]},
              "vehicles": [{"length": -2, "width": 2, "start": [5, 0, 0]}]})"),
      doctest::Contains("length"), std::runtime_error);

  const ScenarioConfig cfg = parse_scenario(R"({
    "duration": 3.0,
    "frame_rate": 5.0,
    "seed": 7,
    "ego": {"start": [0, 0, 0]},
    "vehicles": [{
      "length": 4.4, "width": 1.8, "axle_offset": -1.3,
      "start": [10, 2, 1.57],
      "segments": [{"duration": 3.0, "speed": 5.0, "turn_rate": 0.2}]
    }],
    "clutter_rects": [{"center": [3, -4], "length": 1.0, "width": 0.5}],
    "clutter_points": [[1.0, 2.0]],
    "sensor": {"fov_deg": 180.0, "angular_resolution_deg": 0.5,
               "max_range": 40.0, "range_sigma": 0.03, "dropout_prob": 0.02}
  })");
  CHECK(cfg.frame_count() == 15);
  CHECK(cfg.seed == 7);
  REQUIRE(cfg.vehicles.size() == 1);
  CHECK(cfg.vehicles[0].axle_offset == -1.3);
  CHECK(cfg.vehicles[0].trajectory.segments.size() == 1);
  CHECK(cfg.clutter_rects.size() == 1);
  CHECK(cfg.clutter_points.size() == 1);
  CHECK(cfg.sensor.fov == doctest::Approx(kPi));
  CHECK(cfg.sensor.max_range == 40.0);
}
