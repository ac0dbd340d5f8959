// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <stdexcept>
#include <string>

#include "mtsfm/optimizer.hpp"

namespace mtsfm {

inline constexpr int kArchiveFormatVersion = 1;
inline constexpr const char* kArchiveFormat = "mtsfm-run-archive";

/// Malformed or invalid configuration document. line() is 1-based, 0 if unknown.
class ConfigError : public InvalidArgument {
 public:
  ConfigError(const std::string& what, int line)
      : InvalidArgument(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

/// Unreadable, malformed or unsupported run archive.
class ArchiveError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Config document: JSON (comments allowed) with optional sections
// array, waveform, constraint, campaign, beampattern, solver. Missing keys
// keep their defaults; unknown keys are rejected.
SynthesisConfig parse_config(const std::string& text);
SynthesisConfig load_config(const std::string& path);
std::string config_to_text(const SynthesisConfig& config);

struct RunArchive {
  int format_version = kArchiveFormatVersion;
  std::string created_utc;
  SynthesisConfig config;
  CampaignSummary summary;
};

std::string archive_to_text(const RunArchive& archive);
RunArchive archive_from_text(const std::string& text);

void write_archive(const std::string& path, const RunArchive& archive);
RunArchive read_archive(const std::string& path);

std::string utc_timestamp();

}  // namespace mtsfm
