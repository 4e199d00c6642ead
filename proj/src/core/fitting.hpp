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
#include <vector>

namespace vtrack::fitting {

/// Segmented LADAR returns for one object, world frame.
struct PointCluster {
  std::vector<Eigen::Vector2d> points;
  Eigen::Vector2d sensor_origin = Eigen::Vector2d::Zero();
  double timestamp = 0.0;

  Eigen::Vector2d centroid() const;
  /// Viewing direction: angle from the sensor origin to the centroid.
  double viewing_direction() const;
};

/// A fitted edge or perpendicular corner.
///
/// phi parameterizes the corner frame: edge 1 runs along (-sin phi, cos phi)
/// so its perpendicular residual is the projection onto (cos phi, sin phi);
/// edge 2 runs along (cos phi, sin phi). For Edge fits only edge 1 is
/// populated.
struct CornerFit {
  enum class Kind { Edge, Corner };

  double xc = 0.0;
  double yc = 0.0;
  double phi = 0.0;
  std::vector<int> inliers_edge1;
  std::vector<int> inliers_edge2;
  Kind kind = Kind::Edge;
  bool degenerate = false;
};

/// Vehicle-center measurement derived from a fit: z = (x, y, theta) with
/// covariance R. The observation matrix selects (x, y, theta) from the
/// 6-state vector; see observation_matrix().
struct Measurement {
  Eigen::Vector3d z = Eigen::Vector3d::Zero();
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();

  /// Fixed 3x6 observation matrix for the constant-velocity state ordering
  /// (x, xdot, y, ydot, theta, thetadot).
  static Eigen::Matrix<double, 3, 6> observation_matrix();
};

struct RansacConfig {
  int iterations = 200;
  double sigma = 0.05;                        // LADAR range std dev [m]
  double inlier_threshold = 3.0 * 0.05;       // 3 sigma
  double min_inlier_fraction = 0.5;
  double slant_angle_s = 10.0 * M_PI / 180.0; // minimum visible slant angle
  double v_max = 100.0;                       // variance cap for unobserved directions [m^2]
};

/// Predicted box pose used to disambiguate orientation and corner identity.
struct BoxPrediction {
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  double theta = 0.0;
  double length = 4.5;
  double width = 2.0;
  bool heading_reliable = true;
};

/// Visibility condition for a perpendicular corner: both outward edge
/// directions theta_a, theta_b must be within 90deg - s of the viewing
/// direction theta_c.
bool corner_visibility(double theta_c, double theta_a, double theta_b,
                       double s);

/// Sum of squared perpendicular distances of the inliers to their edges,
/// halved.
double corner_cost(const PointCluster& cluster, const CornerFit& fit);

/// One Gauss-Newton step on (xc, yc, phi). The step is rejected if it does
/// not decrease the cost; rank-deficient normal equations flag the fit
/// degenerate and return the input.
CornerFit gauss_newton_refine(const PointCluster& cluster,
                              const CornerFit& fit);

/// RANSAC over 2-point line hypotheses and 3-point corner hypotheses (each
/// 3-point sample yields three perpendicular corner candidates, filtered by
/// the visibility condition). Returns nullopt if no hypothesis reaches
/// min_inlier_fraction.
std::optional<CornerFit> fit_cluster(const PointCluster& cluster,
                                     const RansacConfig& config,
                                     const std::optional<BoxPrediction>& predicted,
                                     std::mt19937_64& rng);

/// Converts a fit to a vehicle-center measurement with covariance. dims is
/// (length, width). Throws std::invalid_argument for degenerate fits.
Measurement measurement_from_fit(const CornerFit& fit,
                                 const PointCluster& cluster,
                                 double length, double width,
                                 const std::optional<BoxPrediction>& predicted,
                                 const RansacConfig& config);

}  // namespace vtrack::fitting
