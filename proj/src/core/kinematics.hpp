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

namespace vtrack::kinematics {

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

/// Independent steering model state: velocity direction is decoupled from
/// heading. Vector order is (x, xdot, y, ydot, theta, thetadot).
struct IsmState {
  double x = 0.0;        // position east [m]
  double xdot = 0.0;     // velocity east [m/s]
  double y = 0.0;        // position north [m]
  double ydot = 0.0;     // velocity north [m/s]
  double theta = 0.0;    // heading [rad], wrapped to (-pi, pi]
  double thetadot = 0.0; // turn rate [rad/s]

  Vec6 vec() const;
  static IsmState from_vec(const Vec6& v);
};

/// Variable-axis Ackerman steering model state. Vector order is
/// (x, y, L, v, theta, thetadot). L is the signed centerline offset of the
/// instantaneous rotation axis from the vehicle center (rear axle for most
/// cars, typically negative with forward = +L).
struct VasmState {
  double x = 0.0;        // center east [m]
  double y = 0.0;        // center north [m]
  double L = 0.0;        // rotation-axis offset along centerline [m]
  double v = 0.0;        // arc speed at the rotation-axis point [m/s]
  double theta = 0.0;    // heading [rad], wrapped to (-pi, pi]
  double thetadot = 0.0; // turn rate [rad/s]

  Vec6 vec() const;
  static VasmState from_vec(const Vec6& v);
};

/// Maximum plausible |L|, half a long vehicle.
inline constexpr double kMaxAxisOffset = 6.0;

/// White-noise acceleration variances driving the process noise models.
struct NoiseParams {
  double alpha = 1.0;  // linear acceleration variance (both models)
  double beta = 0.5;   // ISM angular acceleration variance
  double gamma = 0.5;  // VASM angular acceleration variance
  double eps_L = 0.01; // rotation-axis drift variance, applied as eps_L*dt
};

/// Constant-velocity transition matrix: identity plus dt on the
/// (x,xdot), (y,ydot), (theta,thetadot) superdiagonals.
/// Throws std::invalid_argument for negative or non-finite dt.
Mat6 ism_transition_matrix(double dt);

/// Block-diagonal white-noise-acceleration process noise: Q_x and Q_y use
/// alpha, Q_theta uses beta, each [[dt^3/3, dt^2/2], [dt^2/2, dt]] scaled.
/// Throws std::invalid_argument for negative or non-finite dt.
Mat6 ism_process_noise(double dt, const NoiseParams& params);

/// Displacement of the vehicle center over dt, expressed in the vehicle
/// frame at the start of the interval (constant v, thetadot assumption).
struct LocalDisplacement {
  double cx = 0.0;
  double cy = 0.0;
};
LocalDisplacement vasm_local_displacement(double v, double thetadot, double L,
                                          double dt);

/// Orientation offset and speed of the vehicle center relative to the
/// rotation-axis point. Degenerate all-zero input returns (0, 0).
struct CenterVelocity {
  double dtheta_c = 0.0; // arctan2(-L*thetadot, v)
  double v_c = 0.0;      // center speed, >= 0
};
CenterVelocity vasm_center_velocity(const VasmState& state);

/// Nonlinear arc propagation of the VASM state over dt. L, v, thetadot are
/// unchanged; theta is wrapped.
VasmState vasm_propagate(const VasmState& state, double dt);

/// Jacobian of vasm_propagate with respect to the state (the EKF transition
/// matrix), Phi = I + T(theta) * M.
Mat6 vasm_transition_matrix(const VasmState& state, double dt);

/// Curvilinear process noise rotated into world coordinates: along-arc block
/// uses alpha, cross-arc (y, theta, thetadot) block uses gamma, eps_L*dt on
/// the L diagonal.
Mat6 vasm_process_noise(const VasmState& state, double dt,
                        const NoiseParams& params);

}  // namespace vtrack::kinematics
