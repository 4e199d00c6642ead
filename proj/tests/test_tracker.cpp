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
#include <random>

#include <doctest.h>

#include <Eigen/Dense>

#include "core/angles.hpp"
#include "core/simulator.hpp"
#include "core/tracker.hpp"

using namespace vtrack;
using namespace vtrack::tracker;
using kinematics::Mat6;
using kinematics::Vec6;

namespace {

Track make_ism(const Vec6& state, const Vec6& cov_diag) {
  Track t;
  t.model = ModelKind::Ism;
  t.state = state;
  t.cov = cov_diag.asDiagonal();
  return t;
}

fitting::Measurement make_meas(double x, double y, double theta,
                               const Eigen::Vector3d& r_diag) {
  fitting::Measurement m;
  m.z << x, y, theta;
  m.R = r_diag.asDiagonal();
  return m;
}

}  // namespace

TEST_CASE("kalman update with equal variances has gain one half") {
  Vec6 s;
  s << 1.0, 0.0, 2.0, 0.0, 0.0, 0.0;
  Vec6 p;
  p << 1.0, 1.0, 1.0, 1.0, 1.0, 1.0;
  const Track t = make_ism(s, p);
  const auto m = make_meas(2.0, 4.0, 0.2, {1.0, 1.0, 1.0});
  const UpdateResult res = kf_update(t, m);
  REQUIRE(res.accepted);
  CHECK(res.track.state[0] == doctest::Approx(1.5));
  CHECK(res.track.state[2] == doctest::Approx(3.0));
  CHECK(res.track.state[4] == doctest::Approx(0.1));
  // Joseph form: (1-k)^2 P + k^2 R with k = 1/2.
  CHECK(res.track.cov(0, 0) == doctest::Approx(0.5));
  CHECK(res.track.cov(2, 2) == doctest::Approx(0.5));
  CHECK(res.track.cov(4, 4) == doctest::Approx(0.5));
  // Unobserved rates keep their prior variance.
  CHECK(res.track.cov(1, 1) == doctest::Approx(1.0));
  // NIS: innovation (1, 2, 0.2) against S = 2 I.
  CHECK(res.nis == doctest::Approx((1.0 + 4.0 + 0.04) / 2.0));
}

TEST_CASE("perfect measurement pins the observed states") {
  Vec6 s;
  s << 0.0, 1.0, 0.0, -1.0, 0.3, 0.0;
  Vec6 p;
  p << 4.0, 4.0, 4.0, 4.0, 1.0, 1.0;
  const Track t = make_ism(s, p);
  const auto m = make_meas(0.7, -0.4, 0.1, {1e-12, 1e-12, 1e-12});
  const UpdateResult res = kf_update(t, m);
  REQUIRE(res.accepted);
  CHECK(res.track.state[0] == doctest::Approx(0.7).epsilon(1e-9));
  CHECK(res.track.state[2] == doctest::Approx(-0.4).epsilon(1e-9));
  CHECK(res.track.state[4] == doctest::Approx(0.1).epsilon(1e-9));
  CHECK(res.track.cov(0, 0) < 1e-10);
}

TEST_CASE("update keeps the covariance positive semidefinite") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.1, 5.0);
  for (int trial = 0; trial < 50; ++trial) {
    Vec6 p;
    for (int i = 0; i < 6; ++i) {
      p[i] = u(rng);
    }
    Track t = make_ism(Vec6::Zero(), p);
    const auto m = make_meas(u(rng), u(rng), 0.0, {u(rng), u(rng), u(rng)});
    const UpdateResult res = kf_update(t, m);
    REQUIRE(res.accepted);
    Eigen::SelfAdjointEigenSolver<Mat6> es(res.track.cov);
    CHECK(es.eigenvalues().minCoeff() >= -1e-12);
    CHECK(res.track.cov.trace() <= t.cov.trace() + 1e-12);
  }
}

TEST_CASE("angle innovation wraps across the pi boundary") {
  Vec6 s;
  s << 0.0, 0.0, 0.0, 0.0, 3.1, 0.0;
  Vec6 p = Vec6::Ones();
  const Track t = make_ism(s, p);
  const auto m = make_meas(0.0, 0.0, -3.1, {1.0, 1.0, 1.0});
  const UpdateResult res = kf_update(t, m);
  REQUIRE(res.accepted);
  // Posterior heading moves toward pi, not toward zero.
  CHECK(std::abs(res.track.state[4]) > 3.1);
}

TEST_CASE("mover detection requires confident speed") {
  TrackerConfig config;
  Vec6 fast;
  fast << 0.0, 3.0, 0.0, 0.0, 0.0, 0.0;
  Vec6 tight = Vec6::Constant(0.01);
  Track t = make_ism(fast, tight);
  t.updates = 5;
  CHECK(detect_mover(t, config));

  t.updates = 2;
  CHECK_FALSE(detect_mover(t, config));

  // Fast but uncertain: 3 sigma swamps the estimate.
  t.updates = 5;
  t.cov(1, 1) = 25.0;
  CHECK_FALSE(detect_mover(t, config));

  // Genuinely slow.
  Vec6 slow;
  slow << 0.0, 0.3, 0.0, 0.0, 0.0, 0.0;
  Track ts = make_ism(slow, tight);
  ts.updates = 5;
  CHECK_FALSE(detect_mover(ts, config));
}

TEST_CASE("model conversions round trip and match finite differences") {
  Track vasm;
  vasm.model = ModelKind::Vasm;
  vasm.state << 5.0, -2.0, -1.4, 7.0, 0.6, 0.3;
  Vec6 pd;
  pd << 0.5, 0.5, 0.2, 1.0, 0.05, 0.01;
  vasm.cov = pd.asDiagonal();

  const Track ism = vasm_to_ism(vasm);
  CHECK(ism.model == ModelKind::Ism);
  // Center velocity from the rigid-body relation.
  const double vx = 7.0 * std::cos(0.6) + (-1.4) * 0.3 * std::sin(0.6);
  const double vy = 7.0 * std::sin(0.6) - (-1.4) * 0.3 * std::cos(0.6);
  CHECK(ism.state[0] == 5.0);
  CHECK(ism.state[1] == doctest::Approx(vx));
  CHECK(ism.state[2] == -2.0);
  CHECK(ism.state[3] == doctest::Approx(vy));

  // Jacobian consistency: map sigma directions through the nonlinear
  // conversion and compare the quadratic form.
  const auto convert = [](const Vec6& x) -> Vec6 {
    Track t;
    t.model = ModelKind::Vasm;
    t.state = x;
    t.cov = Mat6::Identity();
    return vasm_to_ism(t).state;
  };
  const double h = 1e-6;
  Mat6 jfd;
  for (int j = 0; j < 6; ++j) {
    Vec6 plus = vasm.state;
    Vec6 minus = vasm.state;
    plus[j] += h;
    minus[j] -= h;
    jfd.col(j) = (convert(plus) - convert(minus)) / (2.0 * h);
  }
  const Mat6 expected = jfd * vasm.cov * jfd.transpose();
  CHECK((ism.cov - expected).cwiseAbs().maxCoeff() < 1e-6);

  // Round trip back to VASM: position, heading and turn rate survive; the
  // axis offset restarts at zero with unit variance.
  const Track back = ism_to_vasm(ism);
  CHECK(back.state[0] == doctest::Approx(5.0));
  CHECK(back.state[1] == doctest::Approx(-2.0));
  CHECK(back.state[2] == 0.0);
  CHECK(back.state[4] == doctest::Approx(0.6));
  CHECK(back.state[5] == doctest::Approx(0.3));
  CHECK(back.cov(2, 2) == 1.0);
  // v reprojects the center velocity onto the heading.
  CHECK(back.state[3] ==
        doctest::Approx(vx * std::cos(0.6) + vy * std::sin(0.6)));
}

TEST_CASE("mover promotion spawns the fixed hypothesis set") {
  Track t;
  t.model = ModelKind::Ism;
  t.state << 1.0, 4.0, 2.0, 0.0, 0.0, 0.0;
  t.cov = Mat6::Identity();
  t.id = 9;
  const auto hyps = spawn_hypotheses(t);
  REQUIRE(hyps.size() == 4);
  CHECK(hyps[0].model == ModelKind::Ism);
  for (int i = 1; i < 4; ++i) {
    CHECK(hyps[i].model == ModelKind::Vasm);
    CHECK(hyps[i].id == 9);
  }
  CHECK(hyps[1].params.inlier_fraction == 0.6);
  CHECK(hyps[1].params.noise_scale == 1.0);
  CHECK(hyps[2].params.inlier_fraction == 0.8);
  CHECK(hyps[2].params.noise_scale == 1.0);
  CHECK(hyps[3].params.inlier_fraction == 0.6);
  CHECK(hyps[3].params.noise_scale == 4.0);
}

TEST_CASE("best hypothesis selection") {
  std::vector<Track> hyps(3);
  hyps[0].model = ModelKind::Ism;
  hyps[0].score_window = {2.0, 4.0};  // mean 3
  hyps[1].model = ModelKind::Vasm;
  hyps[1].score_window = {1.0, 2.0};  // mean 1.5
  hyps[2].model = ModelKind::Vasm;
  hyps[2].score_window = {5.0};
  CHECK(select_best(hyps, 11.34) == 1);

  // Missed frames penalize heavily.
  hyps[1].missed_frames = 1;
  CHECK(select_best(hyps, 11.34) == 0);

  // Ties prefer VASM over ISM.
  std::vector<Track> tie(2);
  tie[0].model = ModelKind::Ism;
  tie[0].score_window = {2.0};
  tie[1].model = ModelKind::Vasm;
  tie[1].score_window = {2.0};
  CHECK(select_best(tie, 11.34) == 1);

  // Empty windows fall back to index 0.
  std::vector<Track> empty(2);
  CHECK(select_best(empty, 11.34) == 0);
}

TEST_CASE("failed hypotheses restart from the best one") {
  TrackerConfig config;
  std::vector<Track> hyps(2);
  hyps[0].model = ModelKind::Vasm;
  hyps[0].state << 3.0, 4.0, -1.0, 6.0, 0.5, 0.2;
  hyps[0].cov = Mat6::Identity();
  hyps[0].score_window = {1.0};
  hyps[0].params = {0.6, 1.0};

  hyps[1].model = ModelKind::Ism;
  hyps[1].state << 99.0, 0.0, 99.0, 0.0, 0.0, 0.0;
  hyps[1].cov = Mat6::Identity();
  hyps[1].missed_frames = config.max_missed;
  hyps[1].params = {0.8, 1.0};
  hyps[1].score_window = {50.0};

  const auto out = reinitialize_failed(hyps, config);
  REQUIRE(out.size() == 2);
  // Winner untouched.
  CHECK(out[0].state == hyps[0].state);
  // Loser rebuilt from the winner, converted to its own model, its params
  // kept and its history cleared.
  CHECK(out[1].model == ModelKind::Ism);
  CHECK(out[1].state[0] == doctest::Approx(3.0));
  CHECK(out[1].state[2] == doctest::Approx(4.0));
  CHECK(out[1].params.inlier_fraction == 0.8);
  CHECK(out[1].missed_frames == 0);
  CHECK(out[1].score_window.empty());

  // Below the threshold nothing changes.
  hyps[1].missed_frames = config.max_missed - 1;
  const auto keep = reinitialize_failed(hyps, config);
  CHECK(keep[1].state[0] == 99.0);
}

TEST_CASE("filter consistency on the linear model (NEES)") {
  // Synthetic linear-Gaussian world matched to the constant-velocity model:
  // the average normalized estimation error squared over many runs must sit
  // near the state dimension.
  kinematics::NoiseParams np;
  np.alpha = 0.5;
  np.beta = 0.1;
  const double dt = 0.1;
  const Eigen::Vector3d r_diag(0.04, 0.04, 0.01);

  std::mt19937_64 rng(2024);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int runs = 60;
  const int steps = 40;
  double nees_sum = 0.0;
  int nees_count = 0;

  for (int run = 0; run < runs; ++run) {
    Vec6 truth;
    truth << 0.0, 2.0, 0.0, 1.0, 0.2, 0.05;
    Track t = make_ism(truth, Vec6::Ones());
    // Initial estimate drawn from the prior.
    for (int i = 0; i < 6; ++i) {
      t.state[i] += gauss(rng);
    }

    const Mat6 phi = kinematics::ism_transition_matrix(dt);
    const Mat6 q = kinematics::ism_process_noise(dt, np);
    const Eigen::LLT<Mat6> chol(q + 1e-15 * Mat6::Identity());
    const Mat6 sq = chol.matrixL();

    for (int k = 0; k < steps; ++k) {
      Vec6 w;
      for (int i = 0; i < 6; ++i) {
        w[i] = gauss(rng);
      }
      truth = phi * truth + sq * w;
      t = kf_predict(t, dt, np);

      fitting::Measurement m;
      m.z << truth[0] + 0.2 * gauss(rng), truth[2] + 0.2 * gauss(rng),
          truth[4] + 0.1 * gauss(rng);
      m.R = r_diag.asDiagonal();
      const UpdateResult res = kf_update(t, m);
      REQUIRE(res.accepted);
      t = res.track;

      if (k >= 10) {
        Vec6 err = t.state - truth;
        err[4] = angle_diff(t.state[4], truth[4]);
        nees_sum += err.dot(t.cov.ldlt().solve(err));
        nees_count += 1;
      }
    }
  }
  const double mean_nees = nees_sum / nees_count;
  // 6-dof chi-square mean is 6; generous band for the sample size.
  CHECK(mean_nees > 5.0);
  CHECK(mean_nees < 7.2);
}

TEST_CASE("manager keeps separated objects on distinct tracks") {
  TrackerConfig config;
  config.ransac.iterations = 80;
  TrackManager manager(config);

  // Three stationary L-shaped point sets, far apart, each corner viewed
  // diagonally from the sensor at the origin.
  // Car-sized faces so the estimated shape agrees with the defaults.
  auto make_cluster = [](double cx, double cy) {
    fitting::PointCluster cl;
    for (int i = 0; i < 23; ++i) {
      cl.points.emplace_back(cx + i * 0.2, cy);
    }
    for (int i = 1; i < 11; ++i) {
      cl.points.emplace_back(cx, cy + i * 0.2);
    }
    return cl;
  };

  std::vector<std::uint64_t> ids;
  for (int frame = 0; frame < 12; ++frame) {
    const auto out = manager.step(
        {make_cluster(5.0, 10.0), make_cluster(20.0, 10.0),
         make_cluster(35.0, 10.0)},
        0.1);
    REQUIRE(out.size() == 3);
    if (frame == 0) {
      for (const auto& to : out) {
        ids.push_back(to.id);
      }
    } else {
      // Same three ids every frame; association never swaps them.
      for (size_t i = 0; i < 3; ++i) {
        CHECK(out[i].id == ids[i]);
      }
    }
  }

  const auto& tracks = manager.tracks();
  REQUIRE(tracks.size() == 3);
  std::vector<double> xs;
  for (const auto& [id, hyps] : tracks) {
    const Track& best = hyps[select_best(hyps, config.gate_threshold)];
    // Stationary objects settle at zero speed (a brief phantom speed can
    // appear when the shape estimate matures, but it must die out).
    CHECK(best.speed() < 0.1);
    xs.push_back(best.position().x());
  }
  std::sort(xs.begin(), xs.end());
  CHECK(std::abs(xs[0] - xs[1]) > 8.0);
  CHECK(std::abs(xs[1] - xs[2]) > 8.0);
}

TEST_CASE("manager drops tracks after persistent misses") {
  TrackerConfig config;
  TrackManager manager(config);
  fitting::PointCluster cl;
  for (int i = 0; i < 12; ++i) {
    cl.points.emplace_back(5.0 + 0.2 * i, 5.0);
  }
  for (int i = 1; i < 6; ++i) {
    cl.points.emplace_back(5.0, 5.0 + 0.2 * i);
  }
  manager.step({cl}, 0.1);
  REQUIRE(manager.tracks().size() == 1);
  for (int i = 0; i <= config.max_missed; ++i) {
    manager.step({}, 0.1);
  }
  CHECK(manager.tracks().empty());
}

TEST_CASE("manager promotes a moving vehicle end to end") {
  simulator::ScenarioConfig scenario;
  scenario.duration = 4.0;
  scenario.frame_rate = 10.0;
  scenario.seed = 5;
  scenario.ego.start = {0.0, 0.0, 0.0};
  simulator::VehicleSpec veh;
  veh.axle_offset = -1.4;
  veh.trajectory.start = {14.0, 8.0, -2.0};
  veh.trajectory.segments.push_back({4.0, 4.0, 0.0});
  scenario.vehicles.push_back(veh);

  const auto frames = simulator::simulate(scenario);
  TrackerConfig config;
  TrackManager manager(config);
  bool promoted = false;
  std::vector<TrackOutput> out;
  for (const auto& frame : frames) {
    out = manager.step(simulator::cluster_points(frame, config.cluster_gap),
                       1.0 / scenario.frame_rate);
    for (const auto& to : out) {
      if (to.hypotheses.size() == 4) {
        promoted = true;
      }
    }
  }
  CHECK(promoted);
  REQUIRE(!out.empty());

  // Final best estimate near the true center.
  const auto truth = frames.back().truth_states[0];
  double best_err = 1e18;
  for (const auto& to : out) {
    const auto& h = to.best_hypothesis();
    const Eigen::Vector2d pos = h.model == ModelKind::Ism
                                    ? Eigen::Vector2d(h.state[0], h.state[2])
                                    : Eigen::Vector2d(h.state[0], h.state[1]);
    best_err = std::min(best_err,
                        (pos - Eigen::Vector2d(truth.center.x,
                                               truth.center.y)).norm());
  }
  CHECK(best_err < 1.0);
}

TEST_CASE("tracker config parsing") {
  const TrackerConfig def = parse_tracker_config("");
  CHECK(def.gate_threshold == 11.34);
  CHECK(def.max_missed == 3);

  const TrackerConfig cfg = parse_tracker_config(R"({
    "gate_threshold": 9.0,
    "alpha": 2.0,
    "sigma": 0.1,
    "cluster_gap": 0.9,
    "seed": 77,
    "single_vasm_mode": true
  })");
  CHECK(cfg.gate_threshold == 9.0);
  CHECK(cfg.noise.alpha == 2.0);
  CHECK(cfg.ransac.sigma == 0.1);
  CHECK(cfg.ransac.inlier_threshold == doctest::Approx(0.3));
  CHECK(cfg.cluster_gap == 0.9);
  CHECK(cfg.seed == 77);
  CHECK(cfg.single_vasm_mode);

  CHECK_THROWS_AS(parse_tracker_config(R"({"no_such_key": 1})"),
                  std::runtime_error);
  CHECK_THROWS_AS(parse_tracker_config("{nope"), std::runtime_error);
}
