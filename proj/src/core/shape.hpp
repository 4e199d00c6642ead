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

#include <map>
#include <optional>

namespace vtrack::shape {

/// Decayed histogram of one vehicle dimension. Every new measurement decays
/// existing weights by 2^(-1/half_life) and adds weight 1 to its bin, so
/// occluded (short) measurements age out instead of dragging the estimate.
class DimensionHistogram {
 public:
  explicit DimensionHistogram(double bin_width = 0.2, double half_life = 50.0)
      : bin_width_(bin_width), half_life_(half_life) {}

  /// Adds one measurement [m]. Non-positive or non-finite values are
  /// rejected and leave the histogram unchanged.
  void observe(double value);

  /// Peak-of-greatest-length estimate: the top 5% of weight (from the long
  /// end) is trimmed at query time, then among surviving local maxima with
  /// at least peak_fraction of the strongest peak, the longest wins.
  /// Returns nullopt while total weight is below the maturity threshold.
  std::optional<double> estimate() const;

  double total_weight() const { return total_weight_; }
  double bin_width() const { return bin_width_; }
  const std::map<int, double>& bins() const { return bins_; }

  static constexpr double kMaturityWeight = 3.0;
  static constexpr double kTrimFraction = 0.05;
  static constexpr double kPeakFraction = 0.2;

 private:
  double bin_width_;
  double half_life_;
  std::map<int, double> bins_;
  double total_weight_ = 0.0;
};

/// Length/width estimate consumed by the measurement conversion. Defaults
/// are a typical passenger car until the histograms mature.
struct ShapeEstimate {
  double length = 4.5;
  double width = 2.0;
  double confidence = 0.0;  // accumulated weight, min over the two dimensions
};

/// Combines the two histograms, falling back to defaults before maturity and
/// ordering the result so length >= width.
ShapeEstimate estimate_shape(const DimensionHistogram& length_hist,
                             const DimensionHistogram& width_hist);

}  // namespace vtrack::shape
