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

#include "core/fitting.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "core/angles.hpp"

namespace vtrack::fitting {

namespace {

// Perpendicular residual of a point against edge 1 (normal (cos phi, sin phi)).
double residual_edge1(const CornerFit& fit, const Eigen::Vector2d& p) {
  const double dx = p.x() - fit.xc;
  const double dy = p.y() - fit.yc;
  return std::cos(fit.phi) * dx + std::sin(fit.phi) * dy;
}

// Perpendicular residual against edge 2 (normal (-sin phi, cos phi)).
double residual_edge2(const CornerFit& fit, const Eigen::Vector2d& p) {
  const double dx = p.x() - fit.xc;
  const double dy = p.y() - fit.yc;
  return std::cos(fit.phi) * dy - std::sin(fit.phi) * dx;
}

Eigen::Vector2d edge1_dir(double phi) {
  return {-std::sin(phi), std::cos(phi)};
}

Eigen::Vector2d edge2_dir(double phi) { return {std::cos(phi), std::sin(phi)}; }

// Assigns every cluster point within threshold to its nearer edge.
void classify_inliers(const PointCluster& cluster, CornerFit& fit,
                      double threshold, bool corner) {
  fit.inliers_edge1.clear();
  fit.inliers_edge2.clear();
  for (int i = 0; i < static_cast<int>(cluster.points.size()); ++i) {
    const double d1 = std::abs(residual_edge1(fit, cluster.points[i]));
    if (corner) {
      const double d2 = std::abs(residual_edge2(fit, cluster.points[i]));
      if (d1 <= d2 && d1 < threshold) {
        fit.inliers_edge1.push_back(i);
      } else if (d2 < d1 && d2 < threshold) {
        fit.inliers_edge2.push_back(i);
      }
    } else if (d1 < threshold) {
      fit.inliers_edge1.push_back(i);
    }
  }
}

// Outward direction of an edge: from the corner toward the inlier mean.
Eigen::Vector2d outward_dir(const PointCluster& cluster, const CornerFit& fit,
                            const std::vector<int>& inliers,
                            const Eigen::Vector2d& axis) {
  double s = 0.0;
  for (int i : inliers) {
    s += axis.dot(cluster.points[i] -
                  Eigen::Vector2d(fit.xc, fit.yc));
  }
  return s >= 0.0 ? axis : Eigen::Vector2d(-axis);
}

bool fit_visibility(const PointCluster& cluster, const CornerFit& fit,
                    double s) {
  if (fit.inliers_edge1.empty() || fit.inliers_edge2.empty()) {
    return false;
  }
  const Eigen::Vector2d oa =
      outward_dir(cluster, fit, fit.inliers_edge1, edge1_dir(fit.phi));
  const Eigen::Vector2d ob =
      outward_dir(cluster, fit, fit.inliers_edge2, edge2_dir(fit.phi));
  return corner_visibility(cluster.viewing_direction(),
                           std::atan2(oa.y(), oa.x()),
                           std::atan2(ob.y(), ob.x()), s);
}

// Demotes a corner fit to an edge fit keeping the dominant edge as edge 1.
void demote_to_edge(CornerFit& fit) {
  if (fit.inliers_edge2.size() > fit.inliers_edge1.size()) {
    fit.inliers_edge1 = fit.inliers_edge2;
    fit.phi = wrap_angle(fit.phi - kPi / 2.0);
  }
  fit.inliers_edge2.clear();
  fit.kind = CornerFit::Kind::Edge;
}

// phi such that edge 1 runs along dir.
double phi_from_edge_dir(const Eigen::Vector2d& dir) {
  return std::atan2(-dir.x(), dir.y());
}

struct EdgeExtent {
  double lo = 0.0;
  double hi = 0.0;
  double length() const { return hi - lo; }
  double mid() const { return (lo + hi) / 2.0; }
};

EdgeExtent extent_along(const PointCluster& cluster, const CornerFit& fit,
                        const std::vector<int>& inliers,
                        const Eigen::Vector2d& axis) {
  EdgeExtent e;
  bool first = true;
  for (int i : inliers) {
    const double t =
        axis.dot(cluster.points[i] - Eigen::Vector2d(fit.xc, fit.yc));
    if (first) {
      e.lo = e.hi = t;
      first = false;
    } else {
      e.lo = std::min(e.lo, t);
      e.hi = std::max(e.hi, t);
    }
  }
  return e;
}

}  // namespace

Eigen::Vector2d PointCluster::centroid() const {
  Eigen::Vector2d c = Eigen::Vector2d::Zero();
  for (const auto& p : points) {
    c += p;
  }
  return points.empty() ? c : Eigen::Vector2d(c / points.size());
}

double PointCluster::viewing_direction() const {
  const Eigen::Vector2d d = centroid() - sensor_origin;
  return std::atan2(d.y(), d.x());
}

Eigen::Matrix<double, 3, 6> Measurement::observation_matrix() {
  Eigen::Matrix<double, 3, 6> h = Eigen::Matrix<double, 3, 6>::Zero();
  h(0, 0) = 1.0;
  h(1, 2) = 1.0;
  h(2, 4) = 1.0;
  return h;
}

bool corner_visibility(double theta_c, double theta_a, double theta_b,
                       double s) {
  const double limit = kPi / 2.0 - s;
  return std::abs(angle_diff(theta_c, theta_a)) < limit &&
         std::abs(angle_diff(theta_c, theta_b)) < limit;
}

double corner_cost(const PointCluster& cluster, const CornerFit& fit) {
  double j = 0.0;
  for (int i : fit.inliers_edge1) {
    const double r = residual_edge1(fit, cluster.points[i]);
    j += r * r / 2.0;
  }
  for (int i : fit.inliers_edge2) {
    const double r = residual_edge2(fit, cluster.points[i]);
    j += r * r / 2.0;
  }
  return j;
}

CornerFit gauss_newton_refine(const PointCluster& cluster,
                              const CornerFit& fit) {
  const bool corner = fit.kind == CornerFit::Kind::Corner;
  const size_t n_inl = fit.inliers_edge1.size() + fit.inliers_edge2.size();
  const size_t min_inl = corner ? 3 : 2;
  const int required_rank = corner ? 3 : 2;
  if (n_inl < min_inl) {
    CornerFit out = fit;
    out.degenerate = true;
    return out;
  }

  const double c = std::cos(fit.phi);
  const double s = std::sin(fit.phi);
  Eigen::Matrix3d normal = Eigen::Matrix3d::Zero();
  Eigen::Vector3d grad = Eigen::Vector3d::Zero();
  for (int i : fit.inliers_edge1) {
    const Eigen::Vector2d d =
        cluster.points[i] - Eigen::Vector2d(fit.xc, fit.yc);
    const double r = c * d.x() + s * d.y();
    const Eigen::Vector3d a(-c, -s, -s * d.x() + c * d.y());
    normal += a * a.transpose();
    grad += a * r;
  }
  for (int i : fit.inliers_edge2) {
    const Eigen::Vector2d d =
        cluster.points[i] - Eigen::Vector2d(fit.xc, fit.yc);
    const double r = c * d.y() - s * d.x();
    const Eigen::Vector3d a(s, -c, -s * d.y() - c * d.x());
    normal += a * a.transpose();
    grad += a * r;
  }

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(normal);
  const double lmax = es.eigenvalues().maxCoeff();
  const double cutoff = std::max(lmax, 1.0) * 1e-12;
  int rank = 0;
  for (int k = 0; k < 3; ++k) {
    if (es.eigenvalues()[k] > cutoff) {
      ++rank;
    }
  }
  if (rank < required_rank) {
    CornerFit out = fit;
    out.degenerate = true;
    return out;
  }

  Eigen::Vector3d step = Eigen::Vector3d::Zero();
  for (int k = 0; k < 3; ++k) {
    if (es.eigenvalues()[k] > cutoff) {
      const Eigen::Vector3d v = es.eigenvectors().col(k);
      step -= v * (v.dot(grad) / es.eigenvalues()[k]);
    }
  }

  CornerFit refined = fit;
  refined.xc += step[0];
  refined.yc += step[1];
  refined.phi = wrap_angle(refined.phi + step[2]);
  if (corner_cost(cluster, refined) <= corner_cost(cluster, fit)) {
    return refined;
  }
  return fit;
}

std::optional<CornerFit> fit_cluster(const PointCluster& cluster,
                                     const RansacConfig& config,
                                     const std::optional<BoxPrediction>& predicted,
                                     std::mt19937_64& rng) {
  const int n = static_cast<int>(cluster.points.size());
  if (n < 2) {
    throw std::invalid_argument("fit_cluster needs at least 2 points");
  }

  std::uniform_int_distribution<int> pick(0, n - 1);
  const double theta_c = cluster.viewing_direction();

  CornerFit best;
  size_t best_count = 0;
  double best_cost = 0.0;
  bool have_best = false;

  auto consider = [&](CornerFit& cand) {
    const size_t count =
        cand.inliers_edge1.size() + cand.inliers_edge2.size();
    if (count < 2) {
      return;
    }
    if (!have_best || count > best_count) {
      best = cand;
      best_count = count;
      best_cost = corner_cost(cluster, cand);
      have_best = true;
    } else if (count == best_count) {
      const double cost = corner_cost(cluster, cand);
      if (cost < best_cost) {
        best = cand;
        best_cost = cost;
      }
    }
  };

  for (int it = 0; it < config.iterations; ++it) {
    // Line hypothesis from two points.
    const int i = pick(rng);
    int j = pick(rng);
    while (j == i) {
      j = pick(rng);
    }
    const Eigen::Vector2d d = cluster.points[j] - cluster.points[i];
    if (d.norm() > 1e-9) {
      CornerFit line;
      line.kind = CornerFit::Kind::Edge;
      line.xc = cluster.points[i].x();
      line.yc = cluster.points[i].y();
      line.phi = phi_from_edge_dir(d.normalized());
      classify_inliers(cluster, line, config.inlier_threshold, false);
      consider(line);
    }

    // Corner hypotheses from three points: each pair defines edge 1 and
    // the remaining point fixes the perpendicular edge 2.
    if (n >= 3) {
      int idx[3];
      idx[0] = pick(rng);
      do {
        idx[1] = pick(rng);
      } while (idx[1] == idx[0]);
      do {
        idx[2] = pick(rng);
      } while (idx[2] == idx[0] || idx[2] == idx[1]);

      for (int k = 0; k < 3; ++k) {
        const Eigen::Vector2d& pa = cluster.points[idx[(k + 1) % 3]];
        const Eigen::Vector2d& pb = cluster.points[idx[(k + 2) % 3]];
        const Eigen::Vector2d& pk = cluster.points[idx[k]];
        const Eigen::Vector2d e = pb - pa;
        if (e.norm() < 1e-9) {
          continue;
        }
        const Eigen::Vector2d dir = e.normalized();
        const Eigen::Vector2d corner = pa + dir * dir.dot(pk - pa);
        if ((pk - corner).norm() < 1e-9) {
          continue;  // collinear sample
        }

        CornerFit cand;
        cand.kind = CornerFit::Kind::Corner;
        cand.xc = corner.x();
        cand.yc = corner.y();
        cand.phi = phi_from_edge_dir(dir);

        // Outward directions: edge 1 toward the pair midpoint, edge 2
        // toward the third point.
        const Eigen::Vector2d mid = (pa + pb) / 2.0 - corner;
        const Eigen::Vector2d ob = pk - corner;
        if (!corner_visibility(theta_c, std::atan2(mid.y(), mid.x()),
                               std::atan2(ob.y(), ob.x()),
                               config.slant_angle_s)) {
          continue;
        }
        classify_inliers(cluster, cand, config.inlier_threshold, true);
        if (cand.inliers_edge1.size() < 2 || cand.inliers_edge2.size() < 2) {
          demote_to_edge(cand);
        }
        consider(cand);
      }
    }
  }

  if (!have_best) {
    return std::nullopt;
  }

  CornerFit refined = gauss_newton_refine(cluster, best);
  classify_inliers(cluster, refined, config.inlier_threshold,
                   refined.kind == CornerFit::Kind::Corner);

  if (refined.kind == CornerFit::Kind::Corner &&
      (refined.inliers_edge1.size() < 2 || refined.inliers_edge2.size() < 2 ||
       !fit_visibility(cluster, refined, config.slant_angle_s))) {
    demote_to_edge(refined);
  }

  const size_t total =
      refined.inliers_edge1.size() + refined.inliers_edge2.size();
  if (total < 2 ||
      static_cast<double>(total) < config.min_inlier_fraction * n) {
    return std::nullopt;
  }
  return refined;
}

Measurement measurement_from_fit(const CornerFit& fit,
                                 const PointCluster& cluster,
                                 double length, double width,
                                 const std::optional<BoxPrediction>& predicted,
                                 const RansacConfig& config) {
  if (fit.degenerate) {
    throw std::invalid_argument("cannot convert a degenerate fit");
  }

  const Eigen::Vector2d corner(fit.xc, fit.yc);
  const Eigen::Vector2d u1 = edge1_dir(fit.phi);
  const Eigen::Vector2d u2 = edge2_dir(fit.phi);
  const EdgeExtent ext1 = extent_along(cluster, fit, fit.inliers_edge1, u1);
  const EdgeExtent ext2 = extent_along(cluster, fit, fit.inliers_edge2, u2);

  // Heading: 90 degree multiple of phi nearest the prediction, or for new
  // tracks the one aligning the longer fitted edge with the length axis.
  double theta_v;
  if (predicted && predicted->heading_reliable) {
    double best_err = std::numeric_limits<double>::infinity();
    theta_v = fit.phi;
    for (int k = -2; k <= 1; ++k) {
      const double cand = fit.phi + k * kPi / 2.0;
      const double err = std::abs(angle_diff(cand, predicted->theta));
      if (err < best_err) {
        best_err = err;
        theta_v = cand;
      }
    }
  } else {
    const bool edge1_longer = fit.kind == CornerFit::Kind::Edge ||
                              ext1.length() >= ext2.length();
    const Eigen::Vector2d axis = edge1_longer ? u1 : u2;
    const Eigen::Vector2d away = cluster.centroid() - cluster.sensor_origin;
    const Eigen::Vector2d head = axis.dot(away) >= 0.0 ? axis
                                                       : Eigen::Vector2d(-axis);
    theta_v = std::atan2(head.y(), head.x());
  }
  theta_v = wrap_angle(theta_v);

  const Eigen::Vector2d u_len(std::cos(theta_v), std::sin(theta_v));
  const Eigen::Vector2d u_wid(-std::sin(theta_v), std::cos(theta_v));

  Eigen::Vector2d center;
  if (fit.kind == CornerFit::Kind::Corner) {
    // The box corner identity follows from the outward edge directions:
    // both fitted edges leave the corner toward the vehicle interior side.
    const Eigen::Vector2d o1 =
        outward_dir(cluster, fit, fit.inliers_edge1, u1);
    const Eigen::Vector2d o2 =
        outward_dir(cluster, fit, fit.inliers_edge2, u2);
    const bool o1_is_len =
        std::abs(o1.dot(u_len)) >= std::abs(o1.dot(u_wid));
    const Eigen::Vector2d& o_len = o1_is_len ? o1 : o2;
    const Eigen::Vector2d& o_wid = o1_is_len ? o2 : o1;
    const double s_l = o_len.dot(u_len) >= 0.0 ? -1.0 : 1.0;
    const double s_w = o_wid.dot(u_wid) >= 0.0 ? -1.0 : 1.0;
    center = corner - u_len * (s_l * length / 2.0) -
             u_wid * (s_w * width / 2.0);
  } else {
    // Single edge: midpoint of the visible extent, offset across the edge
    // away from the sensor. The along-edge direction stays unobserved and
    // is capped at v_max below.
    const Eigen::Vector2d mid = corner + u1 * ext1.mid();
    const bool along_length = std::abs(u1.dot(u_len)) >= std::abs(u1.dot(u_wid));
    const Eigen::Vector2d cross = along_length ? u_wid : u_len;
    const double half = along_length ? width / 2.0 : length / 2.0;
    const double sign =
        cross.dot(mid - cluster.sensor_origin) >= 0.0 ? 1.0 : -1.0;
    center = mid + cross * (sign * half);
  }

  Measurement meas;
  meas.z << center.x(), center.y(), theta_v;

  // Hessian of the fit cost reparameterized at the vehicle center, so the
  // lever arm between corner and center shows up as position/angle
  // correlation.
  const Eigen::Vector2d d_w = center - corner;
  const double c = std::cos(fit.phi);
  const double s = std::sin(fit.phi);
  Eigen::Matrix3d normal = Eigen::Matrix3d::Zero();
  for (int i : fit.inliers_edge1) {
    const Eigen::Vector2d d = cluster.points[i] - corner;
    const double a_phi = -s * d.x() + c * d.y();
    const Eigen::Vector3d a(-c, -s, a_phi + (-c) * d_w.y() - (-s) * d_w.x());
    normal += a * a.transpose();
  }
  for (int i : fit.inliers_edge2) {
    const Eigen::Vector2d d = cluster.points[i] - corner;
    const double a_phi = -s * d.y() - c * d.x();
    const Eigen::Vector3d a(s, -c, a_phi + s * d_w.y() - (-c) * d_w.x());
    normal += a * a.transpose();
  }

  const double sigma2 = config.sigma * config.sigma;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(normal);
  Eigen::Matrix3d r = Eigen::Matrix3d::Zero();
  for (int k = 0; k < 3; ++k) {
    const double lambda = es.eigenvalues()[k];
    double var = config.v_max;
    if (lambda > 0.0 && sigma2 / lambda < config.v_max) {
      var = sigma2 / lambda;
    }
    r += var * es.eigenvectors().col(k) * es.eigenvectors().col(k).transpose();
  }
  meas.R = (r + r.transpose()) / 2.0;
  return meas;
}

}  // namespace vtrack::fitting
