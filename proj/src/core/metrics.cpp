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

#include "core/metrics.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "core/angles.hpp"

namespace vtrack::metrics {

namespace {

// Heading error with the forward/backward direction folded out.
double fold_heading_error(double est, double truth) {
  double e = angle_diff(est, truth);
  if (e > kPi / 2.0) {
    e -= kPi;
  } else if (e < -kPi / 2.0) {
    e += kPi;
  }
  return e;
}

const char* model_name(tracker::ModelKind m) {
  return m == tracker::ModelKind::Ism ? "ISM" : "VASM";
}

}  // namespace

std::vector<FrameRecord> run_tracker(
    const std::vector<simulator::ScanFrame>& frames,
    const tracker::TrackerConfig& config) {
  tracker::TrackManager manager(config);
  std::vector<FrameRecord> records;
  for (size_t i = 0; i < frames.size(); ++i) {
    double dt = 0.1;
    if (i > 0) {
      dt = frames[i].timestamp - frames[i - 1].timestamp;
    } else if (frames.size() > 1) {
      dt = frames[1].timestamp - frames[0].timestamp;
    }
    if (!(dt > 0.0)) {
      dt = 0.1;
    }
    const auto clusters =
        simulator::cluster_points(frames[i], config.cluster_gap);
    FrameRecord rec;
    rec.frame_index = static_cast<int>(i);
    rec.timestamp = frames[i].timestamp;
    rec.tracks = manager.step(clusters, dt);
    records.push_back(std::move(rec));
  }
  return records;
}

void write_tracks(const std::string& path,
                  const std::vector<FrameRecord>& records) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("tracks: cannot write '" + path + "'");
  }
  out << "frame\tt\ttrack_id\thyp\tbest\tmodel"
      << "\ts0\ts1\ts2\ts3\ts4\ts5"
      << "\tc0\tc1\tc2\tc3\tc4\tc5"
      << "\tlength\twidth\tmean_nis\tmissed";
  for (int k = 1; k <= 10; ++k) {
    out << "\tpx" << k << "\tpy" << k;
  }
  out << '\n';
  out << std::setprecision(17);

  for (const auto& rec : records) {
    for (const auto& to : rec.tracks) {
      for (size_t hi = 0; hi < to.hypotheses.size(); ++hi) {
        const auto& h = to.hypotheses[hi];
        out << rec.frame_index << '\t' << rec.timestamp << '\t' << to.id
            << '\t' << hi << '\t' << (static_cast<int>(hi) == to.best ? 1 : 0)
            << '\t' << model_name(h.model);
        for (int i = 0; i < 6; ++i) {
          out << '\t' << h.state[i];
        }
        for (int i = 0; i < 6; ++i) {
          out << '\t' << h.cov_diag[i];
        }
        out << '\t' << to.shape.length << '\t' << to.shape.width << '\t'
            << h.mean_nis << '\t' << h.missed_frames;
        for (const auto& p : h.predicted_trajectory) {
          out << '\t' << p.x() << '\t' << p.y();
        }
        out << '\n';
      }
    }
  }
}

std::vector<FrameRecord> read_tracks(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("tracks: cannot open '" + path + "'");
  }
  std::vector<FrameRecord> records;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) {
      continue;
    }
    std::istringstream ss(line);
    int frame;
    double t;
    std::uint64_t id;
    int hyp;
    int best;
    std::string model;
    ss >> frame >> t >> id >> hyp >> best >> model;

    if (records.empty() || records.back().frame_index != frame) {
      records.push_back({frame, t, {}});
    }
    auto& rec = records.back();
    if (rec.tracks.empty() || rec.tracks.back().id != id) {
      tracker::TrackOutput to;
      to.id = id;
      rec.tracks.push_back(to);
    }
    auto& to = rec.tracks.back();

    tracker::HypothesisOutput h;
    h.model = model == "ISM" ? tracker::ModelKind::Ism
                             : tracker::ModelKind::Vasm;
    for (int i = 0; i < 6; ++i) {
      ss >> h.state[i];
    }
    for (int i = 0; i < 6; ++i) {
      ss >> h.cov_diag[i];
    }
    ss >> to.shape.length >> to.shape.width >> h.mean_nis >> h.missed_frames;
    for (int k = 0; k < 10; ++k) {
      double px;
      double py;
      ss >> px >> py;
      h.predicted_trajectory.emplace_back(px, py);
    }
    if (!ss) {
      throw std::runtime_error("tracks: malformed row in '" + path + "'");
    }
    if (best == 1) {
      to.best = static_cast<int>(to.hypotheses.size());
    }
    to.hypotheses.push_back(std::move(h));
  }
  return records;
}

MetricsReport compute_metrics(const std::vector<simulator::ScanFrame>& frames,
                              const std::vector<FrameRecord>& records) {
  MetricsReport report;
  report.frames_processed = static_cast<int>(records.size());
  if (frames.empty() || records.empty() || frames[0].truth_states.empty()) {
    return report;
  }

  const size_t n_frames = std::min(frames.size(), records.size());
  for (const auto& ts0 : frames[0].truth_states) {
    const int oid = ts0.object_id;
    ObjectMetrics om;
    om.object_id = oid;
    om.prediction_error.assign(10, 0.0);
    std::vector<int> pred_counts(10, 0);
    double pos_sq = 0.0;
    double head_sq = 0.0;
    int tracked = 0;

    for (size_t fi = 0; fi < n_frames; ++fi) {
      const simulator::TruthState* truth = nullptr;
      for (const auto& ts : frames[fi].truth_states) {
        if (ts.object_id == oid) {
          truth = &ts;
        }
      }
      if (truth == nullptr) {
        om.model_timeline.push_back('-');
        continue;
      }
      const Eigen::Vector2d tp(truth->center.x, truth->center.y);

      // Nearest best-hypothesis track within the association radius.
      const tracker::TrackOutput* match = nullptr;
      double best_d = kAssociationRadius;
      for (const auto& to : records[fi].tracks) {
        const auto& h = to.best_hypothesis();
        const Eigen::Vector2d pos = h.model == tracker::ModelKind::Ism
                                        ? Eigen::Vector2d(h.state[0], h.state[2])
                                        : Eigen::Vector2d(h.state[0], h.state[1]);
        const double d = (pos - tp).norm();
        if (d < best_d) {
          best_d = d;
          match = &to;
        }
      }
      if (match == nullptr) {
        om.model_timeline.push_back('-');
        continue;
      }

      ++tracked;
      const auto& h = match->best_hypothesis();
      om.model_timeline.push_back(
          h.model == tracker::ModelKind::Ism ? 'I' : 'V');
      pos_sq += best_d * best_d;
      const double he = fold_heading_error(h.state[4], truth->center.theta);
      head_sq += he * he;

      for (int k = 1; k <= 10; ++k) {
        const size_t fk = fi + k;
        if (fk >= n_frames) {
          break;
        }
        const simulator::TruthState* future = nullptr;
        for (const auto& ts : frames[fk].truth_states) {
          if (ts.object_id == oid) {
            future = &ts;
          }
        }
        if (future == nullptr) {
          continue;
        }
        const Eigen::Vector2d fp(future->center.x, future->center.y);
        om.prediction_error[k - 1] +=
            (h.predicted_trajectory[k - 1] - fp).norm();
        pred_counts[k - 1] += 1;
      }
    }

    if (tracked > 0) {
      om.position_rmse = std::sqrt(pos_sq / tracked);
      om.heading_rmse = std::sqrt(head_sq / tracked);
    }
    om.continuity = 100.0 * tracked / static_cast<double>(n_frames);
    for (int k = 0; k < 10; ++k) {
      if (pred_counts[k] > 0) {
        om.prediction_error[k] /= pred_counts[k];
      }
    }
    report.objects.push_back(std::move(om));
  }
  return report;
}

std::string report_to_json(const MetricsReport& report) {
  nlohmann::json j;
  j["frames_processed"] = report.frames_processed;
  nlohmann::json objs = nlohmann::json::array();
  for (const auto& om : report.objects) {
    objs.push_back({{"object_id", om.object_id},
                    {"position_rmse", om.position_rmse},
                    {"heading_rmse", om.heading_rmse},
                    {"continuity_percent", om.continuity},
                    {"prediction_error", om.prediction_error},
                    {"model_timeline", om.model_timeline}});
  }
  j["objects"] = std::move(objs);
  return j.dump(2);
}

void write_report(const std::string& path, const MetricsReport& report) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("metrics: cannot write '" + path + "'");
  }
  out << report_to_json(report) << '\n';
}

}  // namespace vtrack::metrics
