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

#include "core/shape.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace vtrack::shape {

void DimensionHistogram::observe(double value) {
  if (!std::isfinite(value) || value <= 0.0) {
    return;
  }
  const double decay = std::pow(2.0, -1.0 / half_life_);
  for (auto& [idx, w] : bins_) {
    w *= decay;
  }
  total_weight_ *= decay;
  const int idx = static_cast<int>(std::floor(value / bin_width_));
  bins_[idx] += 1.0;
  total_weight_ += 1.0;
}

std::optional<double> DimensionHistogram::estimate() const {
  if (total_weight_ < kMaturityWeight || bins_.empty()) {
    return std::nullopt;
  }

  // Trim whole bins from the long end while they fit inside the top 5%.
  std::vector<std::pair<int, double>> kept(bins_.begin(), bins_.end());
  double trimmed = 0.0;
  const double budget = kTrimFraction * total_weight_;
  while (kept.size() > 1 && trimmed + kept.back().second <= budget) {
    trimmed += kept.back().second;
    kept.pop_back();
  }

  // Local maxima over the surviving bins (missing neighbors count as 0).
  double strongest = 0.0;
  std::vector<std::pair<int, double>> peaks;
  for (size_t i = 0; i < kept.size(); ++i) {
    const auto [idx, w] = kept[i];
    double left = 0.0;
    double right = 0.0;
    if (i > 0 && kept[i - 1].first == idx - 1) {
      left = kept[i - 1].second;
    }
    if (i + 1 < kept.size() && kept[i + 1].first == idx + 1) {
      right = kept[i + 1].second;
    }
    if (w >= left && w >= right) {
      peaks.emplace_back(idx, w);
      strongest = std::max(strongest, w);
    }
  }

  int best_idx = kept.back().first;
  for (auto it = peaks.rbegin(); it != peaks.rend(); ++it) {
    if (it->second >= kPeakFraction * strongest) {
      best_idx = it->first;
      break;
    }
  }
  return (best_idx + 0.5) * bin_width_;
}

ShapeEstimate estimate_shape(const DimensionHistogram& length_hist,
                             const DimensionHistogram& width_hist) {
  ShapeEstimate est;
  const auto len = length_hist.estimate();
  const auto wid = width_hist.estimate();
  if (len) {
    est.length = *len;
  }
  if (wid) {
    est.width = *wid;
  }
  if (est.length < est.width) {
    std::swap(est.length, est.width);
  }
  est.confidence = std::min(length_hist.total_weight(),
                            width_hist.total_weight());
  return est;
}

}  // namespace vtrack::shape
