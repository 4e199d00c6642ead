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

// End-to-end harness: simulate scenarios, run the tracker on scan logs,
// recompute metrics. Built entirely on the public C API.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "vtrack/vtrack.h"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

int g_log_level = 1;  // 0=debug 1=info 2=warn 3=error

void log_info(const std::string& msg) {
  if (g_log_level <= 1) {
    std::cerr << "[info] " << msg << '\n';
  }
}

int data_error(const std::string& context) {
  std::cerr << "error: " << context << ": " << vt_last_error() << '\n';
  return kExitData;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open '" + path + "'");
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"2D LADAR vehicle tracking toolkit"};
  app.require_subcommand(1);

  std::string log_level = "info";
  app.add_option("--log-level", log_level, "debug, info, warn or error")
      ->capture_default_str();

  // simulate
  auto* sim = app.add_subcommand("simulate", "Render a scenario to a scan log");
  std::string scenario_path;
  std::string out_dir = ".";
  long long seed = -1;
  sim->add_option("--scenario", scenario_path, "Scenario JSON file")
      ->required();
  sim->add_option("--out", out_dir, "Output directory");
  sim->add_option("--seed", seed, "Override the scenario seed");

  // track
  auto* trk = app.add_subcommand("track", "Run the tracker on a scan log");
  std::string log_path;
  std::string tracker_config_path;
  std::string trk_out_dir = ".";
  trk->add_option("log", log_path, "Scan log (line-delimited JSON)")
      ->required();
  trk->add_option("--tracker-config", tracker_config_path,
                  "Tracker config JSON file");
  trk->add_option("--out", trk_out_dir, "Output directory");

  // eval
  auto* ev = app.add_subcommand("eval", "Recompute metrics from log + tracks");
  std::string eval_log;
  std::string eval_tracks;
  std::string eval_out_dir = ".";
  ev->add_option("log", eval_log, "Scan log with ground truth")->required();
  ev->add_option("tracks", eval_tracks, "Tracks file from 'track'")
      ->required();
  ev->add_option("--out", eval_out_dir, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  if (log_level == "debug") {
    g_log_level = 0;
  } else if (log_level == "info") {
    g_log_level = 1;
  } else if (log_level == "warn") {
    g_log_level = 2;
  } else if (log_level == "error") {
    g_log_level = 3;
  } else {
    std::cerr << "error: unknown log level '" << log_level << "'\n";
    return kExitUsage;
  }

  if (sim->parsed()) {
    vt_scenario* scenario = nullptr;
    if (vt_scenario_load(scenario_path.c_str(), &scenario) != VT_OK) {
      return data_error(scenario_path);
    }
    std::filesystem::create_directories(out_dir);
    const std::string out_path = out_dir + "/scan.jsonl";
    const vt_status rc = vt_simulate(scenario, seed, out_path.c_str());
    vt_scenario_free(scenario);
    if (rc != VT_OK) {
      return data_error(out_path);
    }
    log_info("wrote " + out_path);
    return 0;
  }

  if (trk->parsed()) {
    std::string config_json;
    if (!tracker_config_path.empty()) {
      try {
        config_json = read_file(tracker_config_path);
      } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
      }
    }
    std::filesystem::create_directories(trk_out_dir);
    const std::string tracks_path = trk_out_dir + "/tracks.tsv";
    const std::string metrics_path = trk_out_dir + "/metrics.json";
    if (vt_track_log(log_path.c_str(), config_json.c_str(),
                     tracks_path.c_str(), metrics_path.c_str()) != VT_OK) {
      return data_error(log_path);
    }
    log_info("wrote " + tracks_path + " and " + metrics_path);
    return 0;
  }

  // eval
  std::filesystem::create_directories(eval_out_dir);
  const std::string metrics_path = eval_out_dir + "/metrics.json";
  if (vt_eval(eval_log.c_str(), eval_tracks.c_str(), metrics_path.c_str()) !=
      VT_OK) {
    return data_error(eval_log);
  }
  log_info("wrote " + metrics_path);
  return 0;
}
