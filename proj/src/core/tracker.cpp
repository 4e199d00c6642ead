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

#include "core/tracker.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "core/angles.hpp"

namespace vtrack::tracker {

namespace {

using kinematics::IsmState;
using kinematics::VasmState;

Eigen::Matrix<double, 3, 6> observation_matrix(ModelKind model) {
  Eigen::Matrix<double, 3, 6> h = Eigen::Matrix<double, 3, 6>::Zero();
  if (model == ModelKind::Ism) {
    h(0, 0) = 1.0;
    h(1, 2) = 1.0;
  } else {
    h(0, 0) = 1.0;
    h(1, 1) = 1.0;
  }
  h(2, 4) = 1.0;
  return h;
}

Mat6 symmetrized(const Mat6& m) { return (m + m.transpose()) / 2.0; }

// Deterministic per-fit RNG seed (splitmix64 over the mixed ids).
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c,
                       std::uint64_t d) {
  std::uint64_t z = a;
  for (std::uint64_t v : {b, c, d}) {
    z ^= v + 0x9e3779b97f4a7c15ULL + (z << 6) + (z >> 2);
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z ^= z >> 31;
  }
  return z;
}

double window_score(const Track& t, double gate_threshold) {
  if (t.score_window.empty()) {
    return std::numeric_limits<double>::infinity();
  }
  double sum = 0.0;
  for (double v : t.score_window) {
    sum += v;
  }
  return sum / t.score_window.size() + gate_threshold * t.missed_frames;
}

}  // namespace

Eigen::Vector2d Track::position() const {
  if (model == ModelKind::Ism) {
    return {state[0], state[2]};
  }
  return {state[0], state[1]};
}

double Track::heading() const { return state[4]; }

double Track::speed() const {
  if (model == ModelKind::Ism) {
    return std::hypot(state[1], state[3]);
  }
  return std::hypot(state[3], state[2] * state[5]);
}

shape::ShapeEstimate Track::shape_estimate() const {
  shape::ShapeEstimate est = shape::estimate_shape(length_hist, width_hist);
  // Until a histogram matures, prefer the first fitted extent over the
  // car-sized default so the measured center does not jump at maturity.
  const bool len_mature = length_hist.estimate().has_value();
  const bool wid_mature = width_hist.estimate().has_value();
  if (!len_mature || !wid_mature) {
    double length = len_mature ? *length_hist.estimate()
                               : fallback_length.value_or(est.length);
    double width = wid_mature ? *width_hist.estimate()
                              : fallback_width.value_or(est.width);
    if (length < width) {
      std::swap(length, width);
    }
    est.length = length;
    est.width = width;
  }
  return est;
}

Track kf_predict(const Track& track, double dt,
                 const kinematics::NoiseParams& noise) {
  Track out = track;
  Mat6 phi;
  Mat6 q;
  if (track.model == ModelKind::Ism) {
    phi = kinematics::ism_transition_matrix(dt);
    q = kinematics::ism_process_noise(dt, noise);
    out.state = phi * track.state;
  } else {
    const VasmState s = VasmState::from_vec(track.state);
    phi = kinematics::vasm_transition_matrix(s, dt);
    q = kinematics::vasm_process_noise(s, dt, noise);
    out.state = kinematics::vasm_propagate(s, dt).vec();
  }
  out.state[4] = wrap_angle(out.state[4]);
  out.cov = symmetrized(phi * track.cov * phi.transpose() +
                        q * track.params.noise_scale);
  return out;
}

UpdateResult kf_update(const Track& track, const fitting::Measurement& meas) {
  UpdateResult res;
  res.track = track;

  const Eigen::Matrix<double, 3, 6> h = observation_matrix(track.model);
  const Eigen::Matrix3d s = h * track.cov * h.transpose() + meas.R;

  Eigen::FullPivLU<Eigen::Matrix3d> lu(s);
  if (!lu.isInvertible()) {
    res.track.missed_frames += 1;
    return res;
  }
  const Eigen::Matrix3d s_inv = lu.inverse();

  Eigen::Vector3d innovation = meas.z - h * track.state;
  innovation[2] = wrap_angle(innovation[2]);

  const Eigen::Matrix<double, 6, 3> k = track.cov * h.transpose() * s_inv;
  res.track.state = track.state + k * innovation;
  res.track.state[4] = wrap_angle(res.track.state[4]);

  const Mat6 ikh = Mat6::Identity() - k * h;
  res.track.cov = symmetrized(ikh * track.cov * ikh.transpose() +
                              k * meas.R * k.transpose());

  res.nis = innovation.dot(s_inv * innovation);
  res.track.missed_frames = 0;
  res.track.updates += 1;
  res.accepted = true;
  return res;
}

bool detect_mover(const Track& track, const TrackerConfig& config) {
  if (track.updates < 3) {
    return false;
  }
  const double speed = track.speed();
  double var;
  if (track.model == ModelKind::Ism) {
    if (speed < 1e-9) {
      var = std::max(track.cov(1, 1), track.cov(3, 3));
    } else {
      Eigen::Vector2d g(track.state[1] / speed, track.state[3] / speed);
      Eigen::Matrix2d pv;
      pv << track.cov(1, 1), track.cov(1, 3), track.cov(3, 1),
          track.cov(3, 3);
      var = g.dot(pv * g);
    }
  } else {
    var = track.cov(3, 3);
  }
  const double sigma = std::sqrt(std::max(var, 0.0));
  return speed - config.mover_sigma_count * sigma >
         config.mover_speed_threshold;
}

Track ism_to_vasm(const Track& ism) {
  const double theta = ism.state[4];
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const double vx = ism.state[1];
  const double vy = ism.state[3];

  Track out = ism;
  out.model = ModelKind::Vasm;
  Vec6 x;
  // v is the signed projection of the velocity on the heading; L starts at 0
  // and is estimated by the filter.
  x << ism.state[0], ism.state[2], 0.0, vx * c + vy * s, theta, ism.state[5];
  out.state = x;

  Mat6 j = Mat6::Zero();
  j(0, 0) = 1.0;
  j(1, 2) = 1.0;
  j(3, 1) = c;
  j(3, 3) = s;
  j(3, 4) = -vx * s + vy * c;
  j(4, 4) = 1.0;
  j(5, 5) = 1.0;
  Mat6 p = symmetrized(j * ism.cov * j.transpose());
  p.row(2).setZero();
  p.col(2).setZero();
  p(2, 2) = 1.0;  // 1 m^2 initial rotation-axis variance
  out.cov = p;
  return out;
}

Track vasm_to_ism(const Track& vasm) {
  const double theta = vasm.state[4];
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const double L = vasm.state[2];
  const double v = vasm.state[3];
  const double w = vasm.state[5];

  Track out = vasm;
  out.model = ModelKind::Ism;
  Vec6 x;
  x << vasm.state[0], v * c + L * w * s, vasm.state[1], v * s - L * w * c,
      theta, w;
  out.state = x;

  Mat6 j = Mat6::Zero();
  j(0, 0) = 1.0;
  j(2, 1) = 1.0;
  j(1, 2) = w * s;
  j(1, 3) = c;
  j(1, 4) = -v * s + L * w * c;
  j(1, 5) = L * s;
  j(3, 2) = -w * c;
  j(3, 3) = s;
  j(3, 4) = v * c + L * w * s;
  j(3, 5) = -L * c;
  j(4, 4) = 1.0;
  j(5, 5) = 1.0;
  out.cov = symmetrized(j * vasm.cov * j.transpose());
  return out;
}

std::vector<Track> spawn_hypotheses(const Track& track) {
  std::vector<Track> out;
  Track ism = track;
  out.push_back(ism);

  const HypothesisParams grid[3] = {{0.6, 1.0}, {0.8, 1.0}, {0.6, 4.0}};
  for (const auto& params : grid) {
    Track vasm = ism_to_vasm(track);
    vasm.params = params;
    out.push_back(vasm);
  }
  return out;
}

int select_best(const std::vector<Track>& hypotheses, double gate_threshold) {
  int best = 0;
  double best_score = std::numeric_limits<double>::infinity();
  for (int i = 0; i < static_cast<int>(hypotheses.size()); ++i) {
    const double score = window_score(hypotheses[i], gate_threshold);
    if (score < best_score - 1e-12) {
      best = i;
      best_score = score;
    } else if (std::abs(score - best_score) <= 1e-12 &&
               hypotheses[i].model == ModelKind::Vasm &&
               hypotheses[best].model == ModelKind::Ism) {
      best = i;
    }
  }
  return best;
}

std::vector<Track> reinitialize_failed(const std::vector<Track>& hypotheses,
                                       const TrackerConfig& config) {
  const int best = select_best(hypotheses, config.gate_threshold);
  std::vector<Track> out = hypotheses;
  for (int i = 0; i < static_cast<int>(out.size()); ++i) {
    if (i == best || out[i].missed_frames < config.max_missed) {
      continue;
    }
    const Track& donor = hypotheses[best];
    Track replacement = donor;
    if (donor.model != out[i].model) {
      replacement = donor.model == ModelKind::Ism ? ism_to_vasm(donor)
                                                  : vasm_to_ism(donor);
    }
    replacement.params = out[i].params;
    replacement.id = out[i].id;
    replacement.score_window.clear();
    replacement.missed_frames = 0;
    out[i] = replacement;
  }
  return out;
}

TrackManager::TrackManager(TrackerConfig config) : config_(config) {}

std::vector<TrackOutput> TrackManager::step(
    const std::vector<fitting::PointCluster>& clusters, double dt) {
  frame_index_ += 1;

  // Predict every hypothesis to the frame time.
  for (auto& [id, hyps] : tracks_) {
    for (auto& h : hyps) {
      h = kf_predict(h, dt, config_.noise);
    }
  }

  // Remove duplicate tracks. A track spawned on a fragment of an existing
  // object (grazing-angle cluster splits, respawns) would otherwise keep
  // winning the cluster from the established track. Keep the most updated.
  {
    std::vector<std::uint64_t> losers;
    for (auto it = tracks_.begin(); it != tracks_.end(); ++it) {
      for (auto jt = std::next(it); jt != tracks_.end(); ++jt) {
        const Track& a = it->second[select_best(it->second,
                                                config_.gate_threshold)];
        const Track& b = jt->second[select_best(jt->second,
                                                config_.gate_threshold)];
        if ((a.position() - b.position()).norm() >= config_.duplicate_radius) {
          continue;
        }
        int ua = 0;
        int ub = 0;
        for (const auto& h : it->second) {
          ua = std::max(ua, h.updates);
        }
        for (const auto& h : jt->second) {
          ub = std::max(ub, h.updates);
        }
        losers.push_back(ua < ub ? it->first : jt->first);
      }
    }
    for (std::uint64_t id : losers) {
      tracks_.erase(id);
    }
  }

  // Greedy nearest-neighbor association on Mahalanobis distance of the
  // cluster centroid to the best hypothesis's position. The gate covariance
  // is inflated by the cluster extent since a centroid is not a center.
  struct Pair {
    double dist2;
    std::uint64_t track_id;
    int cluster_idx;
  };
  std::vector<Pair> pairs;
  for (const auto& [id, hyps] : tracks_) {
    const Track& rep = hyps[select_best(hyps, config_.gate_threshold)];
    const Eigen::Vector2d pos = rep.position();
    Eigen::Matrix2d p_pos;
    if (rep.model == ModelKind::Ism) {
      p_pos << rep.cov(0, 0), rep.cov(0, 2), rep.cov(2, 0), rep.cov(2, 2);
    } else {
      p_pos = rep.cov.topLeftCorner<2, 2>();
    }
    for (int ci = 0; ci < static_cast<int>(clusters.size()); ++ci) {
      const Eigen::Vector2d centroid = clusters[ci].centroid();
      double half_extent = 0.0;
      for (const auto& p : clusters[ci].points) {
        half_extent = std::max(half_extent, (p - centroid).norm());
      }
      const Eigen::Matrix2d s =
          p_pos + (half_extent * half_extent + 0.25) *
                      Eigen::Matrix2d::Identity();
      const Eigen::Vector2d diff = centroid - pos;
      const double d2 = diff.dot(s.inverse() * diff);
      if (d2 < config_.gate_threshold) {
        pairs.push_back({d2, id, ci});
      }
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    if (a.dist2 != b.dist2) {
      return a.dist2 < b.dist2;
    }
    return std::tie(a.track_id, a.cluster_idx) <
           std::tie(b.track_id, b.cluster_idx);
  });

  std::map<std::uint64_t, int> assignment;
  std::vector<bool> cluster_taken(clusters.size(), false);
  for (const auto& p : pairs) {
    if (assignment.count(p.track_id) || cluster_taken[p.cluster_idx]) {
      continue;
    }
    assignment[p.track_id] = p.cluster_idx;
    cluster_taken[p.cluster_idx] = true;
  }

  // Fit + update each hypothesis of each assigned track.
  for (auto& [id, hyps] : tracks_) {
    auto it = assignment.find(id);
    if (it == assignment.end()) {
      for (auto& h : hyps) {
        h.missed_frames += 1;
      }
      continue;
    }
    const fitting::PointCluster& cluster = clusters[it->second];

    for (size_t hi = 0; hi < hyps.size(); ++hi) {
      Track& hyp = hyps[hi];
      const shape::ShapeEstimate dims = hyp.shape_estimate();

      fitting::BoxPrediction predicted;
      predicted.center = hyp.position();
      predicted.theta = hyp.heading();
      predicted.length = dims.length;
      predicted.width = dims.width;
      const double theta_var = hyp.cov(4, 4);
      predicted.heading_reliable =
          hyp.updates > 0 && theta_var < (kPi / 3.0) * (kPi / 3.0);

      std::mt19937_64 rng(mix_seed(config_.seed, frame_index_, id, hi));
      std::optional<fitting::CornerFit> fit;
      try {
        fit = fitting::fit_cluster(cluster, config_.ransac, predicted, rng);
      } catch (const std::invalid_argument&) {
        fit = std::nullopt;
      }
      if (!fit || fit->degenerate) {
        hyp.missed_frames += 1;
        continue;
      }

      fitting::Measurement meas = fitting::measurement_from_fit(
          *fit, cluster, dims.length, dims.width, predicted, config_.ransac);
      // Fit-bias floor: the Hessian-derived covariance only reflects point
      // noise, not corner placement and shape errors.
      meas.R(0, 0) += 0.1 * 0.1;
      meas.R(1, 1) += 0.1 * 0.1;
      meas.R(2, 2) += 0.035 * 0.035;

      // The hypothesis's inlier-fraction constraint: enough of the cluster
      // must fall inside the measured box, dilated by 3 sigma.
      {
        const double margin = 3.0 * config_.ransac.sigma;
        const Eigen::Vector2d center(meas.z[0], meas.z[1]);
        const double c = std::cos(meas.z[2]);
        const double s = std::sin(meas.z[2]);
        int inside = 0;
        for (const auto& p : cluster.points) {
          const Eigen::Vector2d d = p - center;
          const double lx = c * d.x() + s * d.y();
          const double ly = -s * d.x() + c * d.y();
          if (std::abs(lx) <= dims.length / 2.0 + margin &&
              std::abs(ly) <= dims.width / 2.0 + margin) {
            ++inside;
          }
        }
        if (inside <
            hyp.params.inlier_fraction * static_cast<double>(cluster.points.size())) {
          hyp.missed_frames += 1;
          continue;
        }
      }

      UpdateResult res = kf_update(hyp, meas);
      if (!res.accepted) {
        hyp = res.track;
        continue;
      }
      // Measurement gate: an innovation far outside the chi-square bound is
      // a corrupt fit, not a plausible maneuver; coast instead of absorbing.
      if (res.nis > config_.gate_threshold) {
        hyp.missed_frames += 1;
        continue;
      }
      hyp = res.track;
      hyp.score_window.push_back(res.nis);
      while (static_cast<int>(hyp.score_window.size()) >
             config_.score_window) {
        hyp.score_window.pop_front();
      }

      // Observe the fitted edge extents as dimension measurements, assigned
      // to the length or width axis by the measured heading.
      const Eigen::Vector2d u_len(std::cos(meas.z[2]), std::sin(meas.z[2]));
      auto observe_edge = [&](const std::vector<int>& inliers, double phi_axis) {
        if (inliers.size() < 2) {
          return;
        }
        const Eigen::Vector2d axis(std::cos(phi_axis), std::sin(phi_axis));
        double lo = 0.0;
        double hi_t = 0.0;
        bool first = true;
        for (int pi : inliers) {
          const double tproj = axis.dot(cluster.points[pi]);
          if (first) {
            lo = hi_t = tproj;
            first = false;
          } else {
            lo = std::min(lo, tproj);
            hi_t = std::max(hi_t, tproj);
          }
        }
        const double extent = hi_t - lo;
        if (std::abs(axis.dot(u_len)) >= std::sqrt(0.5)) {
          hyp.length_hist.observe(extent);
        } else {
          hyp.width_hist.observe(extent);
        }
      };
      observe_edge(fit->inliers_edge1, fit->phi + kPi / 2.0);
      if (fit->kind == fitting::CornerFit::Kind::Corner) {
        observe_edge(fit->inliers_edge2, fit->phi);
      }
    }
  }

  // Unassigned clusters spawn new single-ISM tracks.
  for (int ci = 0; ci < static_cast<int>(clusters.size()); ++ci) {
    if (cluster_taken[ci]) {
      continue;
    }
    Track t;
    t.model = ModelKind::Ism;
    const Eigen::Vector2d c = clusters[ci].centroid();
    // Seed the pre-maturity dimensions from the cluster's principal-axis
    // extents so the first fits do not assume a car-sized object.
    {
      Eigen::Matrix2d scatter = Eigen::Matrix2d::Zero();
      for (const auto& p : clusters[ci].points) {
        const Eigen::Vector2d d = p - c;
        scatter += d * d.transpose();
      }
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(scatter);
      double ext[2];
      for (int a = 0; a < 2; ++a) {
        const Eigen::Vector2d axis = eig.eigenvectors().col(a);
        double lo = 0.0;
        double hi = 0.0;
        bool first = true;
        for (const auto& p : clusters[ci].points) {
          const double t_proj = axis.dot(p - c);
          lo = first ? t_proj : std::min(lo, t_proj);
          hi = first ? t_proj : std::max(hi, t_proj);
          first = false;
        }
        ext[a] = hi - lo;
      }
      // Floors keep a collinear fragment from producing a degenerate box.
      t.fallback_length = std::max(0.6, std::max(ext[0], ext[1]));
      t.fallback_width = std::max(0.3, std::min(ext[0], ext[1]));
    }
    t.state << c.x(), 0.0, c.y(), 0.0, 0.0, 0.0;
    Vec6 diag;
    diag << 4.0, 25.0, 4.0, 25.0, kPi * kPi, 1.0;
    t.cov = diag.asDiagonal();
    t.id = next_id_;
    tracks_[next_id_] = {t};
    next_id_ += 1;
  }

  // Mover promotion and failure handling.
  for (auto& [id, hyps] : tracks_) {
    if (hyps.size() == 1 && hyps[0].model == ModelKind::Ism &&
        detect_mover(hyps[0], config_)) {
      // The fitted box heading is ambiguous by pi; assume forward travel at
      // promotion so the arc model starts with positive speed.
      Track& ism = hyps[0];
      const double dir = std::atan2(ism.state[3], ism.state[1]);
      if (std::cos(ism.state[4] - dir) < 0.0) {
        ism.state[4] = wrap_angle(ism.state[4] + kPi);
      }
      if (config_.single_vasm_mode) {
        Track vasm = ism_to_vasm(hyps[0]);
        vasm.params = {0.6, 1.0};
        hyps = {vasm};
      } else {
        hyps = spawn_hypotheses(hyps[0]);
      }
    }
  }

  for (auto it = tracks_.begin(); it != tracks_.end();) {
    int min_missed = std::numeric_limits<int>::max();
    for (const auto& h : it->second) {
      min_missed = std::min(min_missed, h.missed_frames);
    }
    if (min_missed > config_.max_missed) {
      it = tracks_.erase(it);
    } else {
      if (it->second.size() > 1) {
        it->second = reinitialize_failed(it->second, config_);
      }
      ++it;
    }
  }

  // Outputs with 1 s-ahead predicted trajectories (10 predict-only steps).
  std::vector<TrackOutput> out;
  for (const auto& [id, hyps] : tracks_) {
    TrackOutput to;
    to.id = id;
    to.best = select_best(hyps, config_.gate_threshold);
    to.shape = hyps[to.best].shape_estimate();
    for (const auto& h : hyps) {
      HypothesisOutput ho;
      ho.model = h.model;
      ho.state = h.state;
      ho.cov_diag = h.cov.diagonal();
      ho.missed_frames = h.missed_frames;
      if (!h.score_window.empty()) {
        double sum = 0.0;
        for (double v : h.score_window) {
          sum += v;
        }
        ho.mean_nis = sum / h.score_window.size();
      }
      Track rollout = h;
      for (int k = 0; k < 10; ++k) {
        rollout = kf_predict(rollout, dt, config_.noise);
        ho.predicted_trajectory.push_back(rollout.position());
      }
      to.hypotheses.push_back(std::move(ho));
    }
    out.push_back(std::move(to));
  }
  return out;
}

}  // namespace vtrack::tracker
