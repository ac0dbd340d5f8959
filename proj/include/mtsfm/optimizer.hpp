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
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mtsfm/lbfgs.hpp"
#include "mtsfm/mimo.hpp"
#include "mtsfm/types.hpp"
#include "mtsfm/waveform.hpp"

namespace mtsfm {

struct SolverSettings {
  int max_iterations = 3000;           // quasi-Newton iterations, summed over outer rounds
  double objective_tolerance = 1e-8;   // relative objective change
  double constraint_tolerance = 1e-6;  // RMS-bandwidth residual, relative to the initial value
  double step_tolerance = 1e-12;
  double gradient_tolerance = 1e-6;
  int max_outer_iterations = 30;
  int history = 10;
};

/// Every run parameter. Defaults reproduce the 10-element, 16-harmonic,
/// TBW = 64, delta = 0.1 design example.
struct SynthesisConfig {
  Index elements = 10;
  Index harmonics = 16;
  double duration = 1.0;         // s
  double time_bandwidth = 64.0;  // T * swept bandwidth of the base row
  double delta = 0.1;
  int trials = 100;
  std::uint64_t rng_seed = 1;
  double perturbation_variance = 0.01;
  bool redraw_base_row = false;  // random per-harmonic signs on the base row, per trial
  Index grid_points = 1001;
  double passband_halfwidth = 0.3;
  double pslr_guard = 0.1;
  TemplateNormalization template_normalization = TemplateNormalization::radiated_power;
  Index quadrature_points = 0;  // 0: default_gbf_points per evaluation
  SolverSettings solver;

  /// Throws InvalidArgument naming the offending field.
  void validate() const;

  AngleGrid<double> grid() const;
  BeampatternTemplate<double> beampattern_template() const;
};

struct TrialResult {
  int trial = 0;
  std::uint64_t trial_seed = 0;
  ModulationIndexSet<double> initial_indices;
  ModulationIndexSet<double> final_indices;
  std::vector<double> objective_trace;  // objective of each accepted (feasible, improving) iterate
  double initial_objective = 0.0;
  double final_objective = 0.0;
  double pslr_db = 0.0;
  std::vector<double> constraint_residuals;  // per waveform, relative to the initial RMS bandwidth^2
  bool converged = false;
  int iterations = 0;
  std::string stop_reason;
  bool failed = false;
  std::string error;
};

struct CampaignSummary {
  std::vector<TrialResult> trials;
  double median_pslr_db = 0.0;
  double min_pslr_db = 0.0;
  double max_pslr_db = 0.0;
  int best_trial = -1;
  int converged_trials = 0;
  int failed_trials = 0;
};

/// Objective and gradient of the beampattern fit, sharing one GBF table per evaluation.
class BeampatternFit {
 public:
  BeampatternFit(BeampatternTemplate<double> tmpl, Index elements, Index harmonics, Index quadrature_points = 0);

  /// Trapezoidal integral over u of (P_d(u) - a(u)^H R(alpha) a(u))^2.
  double value(const Matrix<double>& alpha, Matrix<double>* gradient = nullptr);

  const BeampatternTemplate<double>& beampattern_template() const { return template_; }

 private:
  const GbfQuadrature<double>& quadrature_for(const Matrix<double>& alpha);

  BeampatternTemplate<double> template_;
  Index elements_;
  Index harmonics_;
  Index fixed_points_;
  Vector<double> weights_;
  Matrix<double> cosines_;  // grid x lag: cos(pi d u_i)
  std::optional<GbfQuadrature<double>> quad_;
};

double objective(const ModulationIndexSet<double>& idx, const BeampatternTemplate<double>& tmpl);

Matrix<double> objective_gradient(const ModulationIndexSet<double>& idx, const BeampatternTemplate<double>& tmpl);

/// Per-waveform violation of (1 - delta) b0_m <= b_m <= (1 + delta) b0_m with
/// b = rms_bandwidth_sq; zero when feasible, in (rad/s)^2 otherwise.
Vector<double> rms_constraint(const ModulationIndexSet<double>& idx, const ModulationIndexSet<double>& initial,
                              double delta);

/// 1/k profile scaled so T * swept_bandwidth equals the target time-bandwidth product.
Vector<double> base_row(Index harmonics, double duration, double time_bandwidth);

/// RNG seed of trial `trial_index`, derived from the campaign seed.
std::uint64_t trial_seed(std::uint64_t rng_seed, int trial_index);

ModulationIndexSet<double> initialize_trial(const SynthesisConfig& config, int trial_index);

TrialResult optimize_trial(const SynthesisConfig& config, const ModulationIndexSet<double>& initial,
                           const BeampatternTemplate<double>& tmpl);

/// Statistics over the successful trials. Throws NumericalFailure if none succeeded.
CampaignSummary summarize(std::vector<TrialResult> trials);

/// Runs config.trials independent trials on up to `jobs` threads (0: hardware
/// concurrency). Results do not depend on `jobs`.
CampaignSummary run_campaign(const SynthesisConfig& config, const BeampatternTemplate<double>& tmpl, int jobs = 0,
                             const std::function<void(const TrialResult&)>& on_trial = {});

/// Beampattern of a stored index set on the configured grid.
Vector<double> achieved_beampattern(const ModulationIndexSet<double>& idx, const AngleGrid<double>& grid);

}  // namespace mtsfm
