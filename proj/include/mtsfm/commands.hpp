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

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "mtsfm/ambiguity.hpp"
#include "mtsfm/archive.hpp"
#include "mtsfm/spectral.hpp"

namespace mtsfm {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// PSLR and objective agreement required when re-evaluating an archive.
inline constexpr double kVerifyTolerance = 1e-9;

/// Sampling and grids used to characterize one waveform.
struct AnalysisSetup {
  double sample_rate = 0.0;  // Hz; the sample count is a multiple of the delay steps
  Vector<double> tau;        // 2 L + 1 delays over [-T, T], L = 400 ceil(TBW / 64)
  Vector<double> nu;         // over +-max(swept bandwidth, 8 / T), spacing <= 1 / (6 T), >= 401 points
  Index fft_size = 0;
  Index window_length = 0;
  Index hop = 0;
};

AnalysisSetup analysis_setup(const Vector<double>& alpha_row, double duration);

struct SynthOptions {
  std::string config_path;  // empty: defaults
  std::string output_path = "mtsfm_run.json";
  std::optional<std::uint64_t> seed;
  int jobs = 0;
};

struct EvalOptions {
  std::string archive_path;
  std::string trial = "best";
  std::string output_path = "beampattern.csv";
};

struct AnalyzeOptions {
  std::string archive_path;
  std::string trial = "best";
  Index waveform = 0;
  std::string output_dir = ".";
  bool initial = false;
};

struct ReportOptions {
  std::string archive_path;
  std::string output_path;  // optional JSON summary
};

int cmd_synth(const SynthOptions& opts, std::ostream& out, std::ostream& err);
int cmd_eval(const EvalOptions& opts, std::ostream& out, std::ostream& err);
int cmd_analyze(const AnalyzeOptions& opts, std::ostream& out, std::ostream& err);
int cmd_report(const ReportOptions& opts, std::ostream& out, std::ostream& err);

}  // namespace mtsfm
