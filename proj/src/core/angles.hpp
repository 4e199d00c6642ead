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

#include <cmath>

namespace vtrack {

inline constexpr double kPi = 3.14159265358979323846;

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
  double r = std::remainder(a, 2.0 * kPi);
  if (r <= -kPi) {
    r += 2.0 * kPi;
  }
  return r;
}

/// Wrapped difference a - b in (-pi, pi].
inline double angle_diff(double a, double b) { return wrap_angle(a - b); }

/// sinc(x) = sin(x)/x with sinc(0) = 1. Series expansion below 1e-4 to
/// avoid cancellation.
inline double sinc(double x) {
  if (std::abs(x) < 1e-4) {
    const double x2 = x * x;
    return 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
  }
  return std::sin(x) / x;
}

/// d/dx sinc(x) = (x cos x - sin x)/x^2, with limit 0 at x = 0.
inline double sinc_deriv(double x) {
  if (std::abs(x) < 1e-4) {
    const double x2 = x * x;
    return x * (-1.0 / 3.0 + x2 / 30.0);
  }
  return (x * std::cos(x) - std::sin(x)) / (x * x);
}

}  // namespace vtrack
