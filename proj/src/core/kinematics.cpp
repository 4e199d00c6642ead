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

#include "core/kinematics.hpp"

#include <cmath>
#include <stdexcept>

#include "core/angles.hpp"

namespace vtrack::kinematics {

namespace {

void check_dt(double dt) {
  if (!std::isfinite(dt) || dt < 0.0) {
    throw std::invalid_argument("dt must be finite and non-negative");
  }
}

Eigen::Matrix2d rot2(double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  Eigen::Matrix2d r;
  r << c, -s, s, c;
  return r;
}

// World transform for VASM vectors: rotation on the (x, y) block, identity
// on (L, v, theta, thetadot).
Mat6 world_transform(double theta) {
  Mat6 t = Mat6::Identity();
  t.topLeftCorner<2, 2>() = rot2(theta);
  return t;
}

}  // namespace

Vec6 IsmState::vec() const {
  Vec6 v;
  v << x, xdot, y, ydot, theta, thetadot;
  return v;
}

IsmState IsmState::from_vec(const Vec6& v) {
  return {v[0], v[1], v[2], v[3], wrap_angle(v[4]), v[5]};
}

Vec6 VasmState::vec() const {
  Vec6 out;
  out << x, y, L, v, theta, thetadot;
  return out;
}

VasmState VasmState::from_vec(const Vec6& v) {
  return {v[0], v[1], v[2], v[3], wrap_angle(v[4]), v[5]};
}

Mat6 ism_transition_matrix(double dt) {
  check_dt(dt);
  Mat6 phi = Mat6::Identity();
  phi(0, 1) = dt;
  phi(2, 3) = dt;
  phi(4, 5) = dt;
  return phi;
}

Mat6 ism_process_noise(double dt, const NoiseParams& params) {
  check_dt(dt);
  const double q3 = dt * dt * dt / 3.0;
  const double q2 = dt * dt / 2.0;
  Mat6 q = Mat6::Zero();
  q(0, 0) = params.alpha * q3;
  q(0, 1) = q(1, 0) = params.alpha * q2;
  q(1, 1) = params.alpha * dt;
  q(2, 2) = params.alpha * q3;
  q(2, 3) = q(3, 2) = params.alpha * q2;
  q(3, 3) = params.alpha * dt;
  q(4, 4) = params.beta * q3;
  q(4, 5) = q(5, 4) = params.beta * q2;
  q(5, 5) = params.beta * dt;
  return q;
}

LocalDisplacement vasm_local_displacement(double v, double thetadot, double L,
                                          double dt) {
  check_dt(dt);
  const double a = thetadot * dt;
  const double sh = std::sin(a / 2.0);
  const double sc_h = sinc(a / 2.0);
  LocalDisplacement d;
  d.cx = v * dt * sinc(a) + 2.0 * L * sh * sh;
  d.cy = v * thetadot * dt * dt * sc_h * sc_h / 2.0 - L * std::sin(a);
  return d;
}

CenterVelocity vasm_center_velocity(const VasmState& state) {
  const double lateral = -state.L * state.thetadot;
  CenterVelocity cv;
  if (lateral == 0.0 && state.v == 0.0) {
    return cv;  // direction undefined, convention (0, 0)
  }
  cv.dtheta_c = std::atan2(lateral, state.v);
  cv.v_c = std::hypot(state.v, lateral);
  return cv;
}

VasmState vasm_propagate(const VasmState& state, double dt) {
  check_dt(dt);
  const LocalDisplacement d =
      vasm_local_displacement(state.v, state.thetadot, state.L, dt);
  const Eigen::Vector2d world =
      rot2(state.theta) * Eigen::Vector2d(d.cx, d.cy);
  VasmState out = state;
  out.x += world.x();
  out.y += world.y();
  out.theta = wrap_angle(state.theta + state.thetadot * dt);
  return out;
}

Mat6 vasm_transition_matrix(const VasmState& state, double dt) {
  check_dt(dt);
  const double a = state.thetadot * dt;
  const double sh = std::sin(a / 2.0);
  const double sc_h = sinc(a / 2.0);
  const LocalDisplacement d =
      vasm_local_displacement(state.v, state.thetadot, state.L, dt);

  const double dcx_dL = 2.0 * sh * sh;
  const double dcy_dL = -std::sin(a);
  const double dcx_dv = dt * sinc(a);
  const double dcy_dv = state.thetadot * dt * dt * sc_h * sc_h / 2.0;
  const double dcx_dw = state.v * dt * dt * sinc_deriv(a) +
                        state.L * dt * std::sin(a);
  // sinc(a/2)cos(a/2) = sinc(a), which keeps the small-angle branch exact
  const double dcy_dw =
      state.v * dt * dt * (sinc(a) - sc_h * sc_h / 2.0) -
      state.L * dt * std::cos(a);

  Mat6 m = Mat6::Zero();
  m(0, 2) = dcx_dL;
  m(0, 3) = dcx_dv;
  m(0, 4) = -d.cy;
  m(0, 5) = dcx_dw;
  m(1, 2) = dcy_dL;
  m(1, 3) = dcy_dv;
  m(1, 4) = d.cx;
  m(1, 5) = dcy_dw;
  m(4, 5) = dt;

  return Mat6::Identity() + world_transform(state.theta) * m;
}

Mat6 vasm_process_noise(const VasmState& state, double dt,
                        const NoiseParams& params) {
  check_dt(dt);
  const double dt2 = dt * dt;
  const double dt3 = dt2 * dt;
  const double dt4 = dt3 * dt;
  const double dt5 = dt4 * dt;
  const double av = std::abs(state.v);

  // Local curvilinear frame, state order (x, y, L, v, theta, thetadot).
  Mat6 q = Mat6::Zero();
  q(0, 0) = params.alpha * dt3 / 3.0;
  q(0, 3) = q(3, 0) = params.alpha * dt2 / 2.0;
  q(3, 3) = params.alpha * dt;
  q(1, 1) = params.gamma * state.v * state.v * dt5 / 20.0;
  q(1, 4) = q(4, 1) = params.gamma * av * dt4 / 8.0;
  q(1, 5) = q(5, 1) = params.gamma * av * dt3 / 6.0;
  q(4, 4) = params.gamma * dt3 / 3.0;
  q(4, 5) = q(5, 4) = params.gamma * dt2 / 2.0;
  q(5, 5) = params.gamma * dt;
  q(2, 2) = params.eps_L * dt;

  const Mat6 t = world_transform(state.theta);
  Mat6 out = t * q * t.transpose();
  return (out + out.transpose()) / 2.0;
}

}  // namespace vtrack::kinematics
