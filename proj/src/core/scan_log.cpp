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

#include "core/scan_log.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace vtrack::scan_log {

namespace {
using json = nlohmann::json;
}

std::string frame_to_json(const simulator::ScanFrame& frame) {
  json j;
  j["format_version"] = kFormatVersion;
  j["t"] = frame.timestamp;
  j["ego"] = {frame.ego_pose.x, frame.ego_pose.y, frame.ego_pose.theta};
  json pts = json::array();
  for (const auto& p : frame.points) {
    pts.push_back({p.x(), p.y()});
  }
  j["points"] = std::move(pts);
  if (!frame.truth_states.empty() || !frame.truth_labels.empty()) {
    json truth;
    truth["labels"] = frame.truth_labels;
    json objs = json::array();
    for (const auto& ts : frame.truth_states) {
      objs.push_back({{"id", ts.object_id},
                      {"x", ts.center.x},
                      {"y", ts.center.y},
                      {"theta", ts.center.theta},
                      {"vx", ts.vx},
                      {"vy", ts.vy},
                      {"turn_rate", ts.turn_rate},
                      {"length", ts.length},
                      {"width", ts.width},
                      {"axle_offset", ts.axle_offset}});
    }
    truth["objects"] = std::move(objs);
    j["truth"] = std::move(truth);
  }
  return j.dump();
}

simulator::ScanFrame frame_from_json(const std::string& line) {
  const json j = json::parse(line);
  if (j.value("format_version", -1) != kFormatVersion) {
    throw std::runtime_error("scan log: unsupported format_version");
  }
  simulator::ScanFrame frame;
  frame.timestamp = j.at("t").get<double>();
  const auto& ego = j.at("ego");
  frame.ego_pose = {ego[0].get<double>(), ego[1].get<double>(),
                    ego[2].get<double>()};
  for (const auto& p : j.at("points")) {
    frame.points.emplace_back(p[0].get<double>(), p[1].get<double>());
  }
  if (j.contains("truth")) {
    const auto& truth = j["truth"];
    frame.truth_labels = truth.value("labels", std::vector<int>{});
    for (const auto& o : truth.value("objects", json::array())) {
      simulator::TruthState ts;
      ts.object_id = o.at("id").get<int>();
      ts.center = {o.at("x").get<double>(), o.at("y").get<double>(),
                   o.at("theta").get<double>()};
      ts.vx = o.value("vx", 0.0);
      ts.vy = o.value("vy", 0.0);
      ts.turn_rate = o.value("turn_rate", 0.0);
      ts.length = o.value("length", 4.5);
      ts.width = o.value("width", 2.0);
      ts.axle_offset = o.value("axle_offset", 0.0);
      frame.truth_states.push_back(ts);
    }
  }
  return frame;
}

void write_log(const std::string& path,
               const std::vector<simulator::ScanFrame>& frames) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("scan log: cannot write '" + path + "'");
  }
  for (const auto& f : frames) {
    out << frame_to_json(f) << '\n';
  }
}

std::vector<simulator::ScanFrame> read_log(const std::string& path,
                                           bool* truncated) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("scan log: cannot open '" + path + "'");
  }
  std::vector<simulator::ScanFrame> frames;
  std::string line;
  bool bad_tail = false;
  while (std::getline(in, line)) {
    if (line.empty()) {
      continue;
    }
    try {
      frames.push_back(frame_from_json(line));
      bad_tail = false;
    } catch (const std::exception&) {
      bad_tail = true;  // keep complete frames, note the damage
    }
  }
  if (truncated != nullptr) {
    *truncated = bad_tail;
  }
  return frames;
}

}  // namespace vtrack::scan_log
