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

#include <stdexcept>

#include <json.hpp>

#include "core/angles.hpp"
#include "core/tracker.hpp"

namespace vtrack::tracker {

TrackerConfig parse_tracker_config(const std::string& json_text) {
  TrackerConfig cfg;
  if (json_text.empty()) {
    return cfg;
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(std::string("tracker config: invalid JSON: ") +
                             e.what());
  }

  for (const auto& [key, value] : j.items()) {
    if (key == "gate_threshold") {
      cfg.gate_threshold = value.get<double>();
    } else if (key == "mover_speed_threshold") {
      cfg.mover_speed_threshold = value.get<double>();
    } else if (key == "mover_sigma_count") {
      cfg.mover_sigma_count = value.get<double>();
    } else if (key == "max_missed") {
      cfg.max_missed = value.get<int>();
    } else if (key == "score_window") {
      cfg.score_window = value.get<int>();
    } else if (key == "alpha") {
      cfg.noise.alpha = value.get<double>();
    } else if (key == "beta") {
      cfg.noise.beta = value.get<double>();
    } else if (key == "gamma") {
      cfg.noise.gamma = value.get<double>();
    } else if (key == "eps_L") {
      cfg.noise.eps_L = value.get<double>();
    } else if (key == "ransac_iterations") {
      cfg.ransac.iterations = value.get<int>();
    } else if (key == "sigma") {
      cfg.ransac.sigma = value.get<double>();
      cfg.ransac.inlier_threshold = 3.0 * cfg.ransac.sigma;
    } else if (key == "inlier_threshold") {
      cfg.ransac.inlier_threshold = value.get<double>();
    } else if (key == "min_inlier_fraction") {
      cfg.ransac.min_inlier_fraction = value.get<double>();
    } else if (key == "slant_angle_deg") {
      cfg.ransac.slant_angle_s = value.get<double>() * kPi / 180.0;
    } else if (key == "v_max") {
      cfg.ransac.v_max = value.get<double>();
    } else if (key == "cluster_gap") {
      cfg.cluster_gap = value.get<double>();
    } else if (key == "duplicate_radius") {
      cfg.duplicate_radius = value.get<double>();
    } else if (key == "seed") {
      cfg.seed = value.get<std::uint64_t>();
    } else if (key == "single_vasm_mode") {
      cfg.single_vasm_mode = value.get<bool>();
    } else {
      throw std::runtime_error("tracker config: unknown key '" + key + "'");
    }
  }

  if (cfg.gate_threshold <= 0.0 || cfg.mover_speed_threshold <= 0.0 ||
      cfg.mover_sigma_count <= 0.0 || cfg.max_missed <= 0 ||
      cfg.score_window <= 0 || cfg.cluster_gap <= 0.0) {
    throw std::runtime_error("tracker config: parameters must be positive");
  }
  return cfg;
}

}  // namespace vtrack::tracker
