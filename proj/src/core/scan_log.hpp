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

#include <iosfwd>
#include <string>
#include <vector>

#include "core/simulator.hpp"

namespace vtrack::scan_log {

/// Scan logs are line-delimited JSON, one frame per line, each carrying a
/// format_version field. See docs in the README for the field layout.
inline constexpr int kFormatVersion = 1;

std::string frame_to_json(const simulator::ScanFrame& frame);
simulator::ScanFrame frame_from_json(const std::string& line);

void write_log(const std::string& path,
               const std::vector<simulator::ScanFrame>& frames);

/// Reads all complete frames; a truncated or malformed trailing line is
/// skipped with truncated set to true.
std::vector<simulator::ScanFrame> read_log(const std::string& path,
                                           bool* truncated = nullptr);

}  // namespace vtrack::scan_log
