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

#include "mtsfm/optimizer.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <mutex>
#include <random>
#include <thread>

namespace mtsfm {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) {
    throw InvalidArgument("config: " + field + " " + what);
  }
}

Vector<double> flatten(const Matrix<double>& alpha) {
  const RowMajor rm = alpha;
  return Eigen::Map<const Vector<double>>(rm.data(), rm.size());
}

Matrix<double> unflatten(const Vector<double>& x, Index rows, Index cols) {
  return Eigen::Map<const RowMajor>(x.data(), rows, cols);
}

Vector<double> row_bandwidths(const Matrix<double>& alpha, double duration) {
  Vector<double> b(alpha.rows());
  for (Index m = 0; m < alpha.rows(); ++m) {
    b(m) = rms_bandwidth_sq(alpha.row(m), duration);
  }
  return b;
}

}  // namespace

void SynthesisConfig::validate() const {
  require(elements >= 1, "array.elements", "must be >= 1");
  require(harmonics >= 1, "waveform.harmonics", "must be >= 1");
  require(duration > 0.0 && std::isfinite(duration), "waveform.duration", "must be positive");
  require(time_bandwidth >= 0.0 && std::isfinite(time_bandwidth), "waveform.time_bandwidth",
          "must be non-negative");
  require(delta > 0.0 && delta < 1.0, "constraint.delta", "must lie in (0, 1)");
  require(trials >= 1, "campaign.trials", "must be >= 1");
  require(perturbation_variance >= 0.0 && std::isfinite(perturbation_variance), "campaign.perturbation_variance",
          "must be non-negative");
  require(grid_points >= 3, "beampattern.grid_points", "must be >= 3");
  require(passband_halfwidth > 0.0 && passband_halfwidth < 1.0, "beampattern.passband_halfwidth",
          "must lie in (0, 1)");
  require(pslr_guard >= 0.0 && passband_halfwidth + pslr_guard < 1.0, "beampattern.pslr_guard",
          "must be non-negative and leave a sidelobe region");
  require(quadrature_points >= 0, "solver.quadrature_points", "must be >= 0");
  require(solver.max_iterations >= 1, "solver.max_iterations", "must be >= 1");
  require(solver.max_outer_iterations >= 1, "solver.max_outer_iterations", "must be >= 1");
  require(solver.history >= 1, "solver.history", "must be >= 1");
  require(solver.objective_tolerance > 0.0, "solver.objective_tolerance", "must be > 0");
  require(solver.constraint_tolerance > 0.0, "solver.constraint_tolerance", "must be > 0");
  require(solver.step_tolerance > 0.0, "solver.step_tolerance", "must be > 0");
  require(solver.gradient_tolerance > 0.0, "solver.gradient_tolerance", "must be > 0");
}

AngleGrid<double> SynthesisConfig::grid() const { return AngleGrid<double>::uniform(grid_points); }

BeampatternTemplate<double> SynthesisConfig::beampattern_template() const {
  return desired_beampattern(passband_halfwidth, elements, grid(), template_normalization);
}

// --- objective ---------------------------------------------------------------

BeampatternFit::BeampatternFit(BeampatternTemplate<double> tmpl, Index elements, Index harmonics,
                               Index quadrature_points)
    : template_(std::move(tmpl)), elements_(elements), harmonics_(harmonics), fixed_points_(quadrature_points) {
  weights_ = template_.grid.trapezoid_weights();
  const Index n = template_.grid.size();
  cosines_.resize(n, elements_);
  for (Index i = 0; i < n; ++i) {
    for (Index d = 0; d < elements_; ++d) {
      cosines_(i, d) = std::cos(pi<double> * static_cast<double>(d) * template_.grid(i));
    }
  }
}

const GbfQuadrature<double>& BeampatternFit::quadrature_for(const Matrix<double>& alpha) {
  Index points = fixed_points_;
  if (points == 0) {
    const Vector<double> widest = Vector<double>::Constant(harmonics_, detail::max_pairwise_spread(alpha));
    points = default_gbf_points(widest);
  }
  if (!quad_ || quad_->points() != points + (points % 2)) {
    quad_.emplace(harmonics_, points);
  }
  return *quad_;
}

double BeampatternFit::value(const Matrix<double>& alpha, Matrix<double>* gradient) {
  if (alpha.rows() != elements_ || alpha.cols() != harmonics_) {
    throw InvalidArgument("BeampatternFit: index matrix has the wrong shape");
  }
  if (!all_finite(alpha)) {
    throw InvalidArgument("BeampatternFit: non-finite modulation index");
  }
  const GbfQuadrature<double>& quad = quadrature_for(alpha);
  const Matrix<double> phase = quad.phases(alpha);
  const Vector<double>& w = quad.half_weights();
  const double inv_m = 1.0 / static_cast<double>(elements_);

  Matrix<double> r = Matrix<double>::Zero(elements_, elements_);
  r.diagonal().setConstant(inv_m);
  for (Index i = 0; i < elements_; ++i) {
    for (Index j = 0; j < i; ++j) {
      r(i, j) = quad.j0_from_phase(phase.col(i) - phase.col(j)) * inv_m;
      r(j, i) = r(i, j);
    }
  }
  const Vector<double> lags = lag_sums(r);
  const Vector<double> error = template_.values() - cosines_ * lags;
  const double value = weights_.dot(error.cwiseAbs2());

  if (gradient != nullptr) {
    // dJ/dr_d; each off-diagonal pair enters r_d twice.
    const Vector<double> lag_grad = -2.0 * cosines_.transpose() * weights_.cwiseProduct(error);
    Matrix<double> v = Matrix<double>::Zero(phase.rows(), elements_);
    for (Index i = 0; i < elements_; ++i) {
      for (Index j = 0; j < i; ++j) {
        // d J0(alpha_i - alpha_j) / d alpha_i = -S^T (w .* sin(psi_ij)).
        const Vector<double> s = w.cwiseProduct((phase.col(i) - phase.col(j)).array().sin().matrix());
        const double coef = 2.0 * lag_grad(i - j) * inv_m;
        v.col(i) -= coef * s;
        v.col(j) += coef * s;
      }
    }
    *gradient = v.transpose() * quad.half_sines();
  }
  return value;
}

double objective(const ModulationIndexSet<double>& idx, const BeampatternTemplate<double>& tmpl) {
  const Vector<double> p = beampattern(correlation_matrix_gbf(idx), tmpl.grid);
  return trapezoid(tmpl.grid, (tmpl.values() - p).cwiseAbs2());
}

Matrix<double> objective_gradient(const ModulationIndexSet<double>& idx, const BeampatternTemplate<double>& tmpl) {
  BeampatternFit fit(tmpl, idx.elements(), idx.harmonics());
  Matrix<double> g;
  fit.value(idx.alpha(), &g);
  return g;
}

Vector<double> rms_constraint(const ModulationIndexSet<double>& idx, const ModulationIndexSet<double>& initial,
                              double delta) {
  if (idx.elements() != initial.elements() || idx.harmonics() != initial.harmonics()) {
    throw InvalidArgument("rms_constraint: index sets differ in shape");
  }
  const Vector<double> b = row_bandwidths(idx.alpha(), idx.duration());
  const Vector<double> b0 = row_bandwidths(initial.alpha(), initial.duration());
  Vector<double> residual(b.size());
  for (Index m = 0; m < b.size(); ++m) {
    residual(m) = std::max({0.0, b(m) - (1.0 + delta) * b0(m), (1.0 - delta) * b0(m) - b(m)});
  }
  return residual;
}

// --- initialization ----------------------------------------------------------

Vector<double> base_row(Index harmonics, double duration, double time_bandwidth) {
  Vector<double> row(harmonics);
  for (Index k = 0; k < harmonics; ++k) {
    row(k) = 1.0 / static_cast<double>(k + 1);
  }
  const double sweep = swept_bandwidth(row, duration);
  return row * (time_bandwidth / (duration * sweep));
}

std::uint64_t trial_seed(std::uint64_t rng_seed, int trial_index) {
  std::seed_seq seq{static_cast<std::uint32_t>(rng_seed & 0xffffffffu), static_cast<std::uint32_t>(rng_seed >> 32),
                    static_cast<std::uint32_t>(trial_index)};
  std::array<std::uint32_t, 2> words{};
  seq.generate(words.begin(), words.end());
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

ModulationIndexSet<double> initialize_trial(const SynthesisConfig& config, int trial_index) {
  std::mt19937_64 rng(trial_seed(config.rng_seed, trial_index));
  Vector<double> row = base_row(config.harmonics, config.duration, config.time_bandwidth);
  if (config.redraw_base_row) {
    std::bernoulli_distribution flip(0.5);
    for (Index k = 0; k < row.size(); ++k) {
      if (flip(rng)) {
        row(k) = -row(k);
      }
    }
    const double sweep = swept_bandwidth(row, config.duration);
    if (sweep > 0.0) {
      row *= config.time_bandwidth / (config.duration * sweep);
    }
  }
  Matrix<double> alpha = row.transpose().replicate(config.elements, 1);
  if (config.perturbation_variance > 0.0) {
    std::normal_distribution<double> noise(0.0, std::sqrt(config.perturbation_variance));
    for (Index m = 0; m < alpha.rows(); ++m) {
      for (Index k = 0; k < alpha.cols(); ++k) {
        alpha(m, k) += noise(rng);
      }
    }
  }
  return ModulationIndexSet<double>(std::move(alpha), config.duration);
}

// --- solver ------------------------------------------------------------------

namespace {

// Inequality constraints c(x) <= 0, two per waveform:
//   b_m / b0_m - (1 + delta) <= 0   and   (1 - delta) - b_m / b0_m <= 0.
class BandConstraints {
 public:
  BandConstraints(const Matrix<double>& initial, double duration, double delta)
      : duration_(duration), delta_(delta), elements_(initial.rows()), harmonics_(initial.cols()) {
    scale_ = row_bandwidths(initial, duration);
    for (Index m = 0; m < scale_.size(); ++m) {
      if (!(scale_(m) > 0.0)) {
        scale_(m) = 1.0;
      }
    }
    const double w = 2.0 * pi<double> / duration;
    d_weights_.resize(harmonics_);
    for (Index k = 0; k < harmonics_; ++k) {
      d_weights_(k) = w * w * static_cast<double>((k + 1) * (k + 1));
    }
    b0_ = row_bandwidths(initial, duration);
  }

  Index count() const { return 2 * elements_; }

  Vector<double> values(const Matrix<double>& alpha) const {
    const Vector<double> b = row_bandwidths(alpha, duration_);
    Vector<double> c(count());
    for (Index m = 0; m < elements_; ++m) {
      c(2 * m) = (b(m) - (1.0 + delta_) * b0_(m)) / scale_(m);
      c(2 * m + 1) = ((1.0 - delta_) * b0_(m) - b(m)) / scale_(m);
    }
    return c;
  }

  // Adds sum_i weight_i grad c_i to `grad` (M x K).
  void accumulate_gradient(const Matrix<double>& alpha, const Vector<double>& weight, Matrix<double>& grad) const {
    for (Index m = 0; m < elements_; ++m) {
      const double net = (weight(2 * m) - weight(2 * m + 1)) / scale_(m);
      if (net != 0.0) {
        grad.row(m) += net * alpha.row(m).cwiseProduct(d_weights_.transpose());
      }
    }
  }

  double max_violation(const Matrix<double>& alpha) const { return std::max(0.0, values(alpha).maxCoeff()); }

  // Radial scaling of each row back into its band, slightly inside the bounds.
  Matrix<double> project(const Matrix<double>& alpha) const {
    Matrix<double> out = alpha;
    const Vector<double> b = row_bandwidths(alpha, duration_);
    for (Index m = 0; m < elements_; ++m) {
      const double hi = (1.0 + delta_) * b0_(m) * (1.0 - 1e-12);
      const double lo = (1.0 - delta_) * b0_(m) * (1.0 + 1e-12);
      if (b(m) > hi && b(m) > 0.0) {
        out.row(m) *= std::sqrt(hi / b(m));
      } else if (b(m) < lo && b(m) > 0.0) {
        out.row(m) *= std::sqrt(lo / b(m));
      }
    }
    return out;
  }

 private:
  double duration_;
  double delta_;
  Index elements_;
  Index harmonics_;
  Vector<double> scale_;
  Vector<double> b0_;
  Vector<double> d_weights_;
};

constexpr double kInitialPenalty = 10.0;
constexpr double kPenaltyGrowth = 10.0;
constexpr double kMaxPenalty = 1e12;

}  // namespace

TrialResult optimize_trial(const SynthesisConfig& config, const ModulationIndexSet<double>& initial,
                           const BeampatternTemplate<double>& tmpl) {
  const Index rows = initial.elements();
  const Index cols = initial.harmonics();
  const double duration = initial.duration();
  const SolverSettings& solver = config.solver;

  BeampatternFit fit(tmpl, rows, cols, config.quadrature_points);
  const BandConstraints band(initial.alpha(), duration, config.delta);

  TrialResult result;
  result.initial_indices = initial;
  result.initial_objective = fit.value(initial.alpha());

  // Incumbent: best objective among feasible accepted iterates.
  Matrix<double> best = initial.alpha();
  double best_value = result.initial_objective;
  result.objective_trace.push_back(best_value);
  const auto offer = [&](const Matrix<double>& alpha, double value) {
    if (band.max_violation(alpha) <= solver.constraint_tolerance && value < best_value) {
      best = alpha;
      best_value = value;
      result.objective_trace.push_back(value);
    }
  };

  Vector<double> multipliers = Vector<double>::Zero(band.count());
  double penalty = kInitialPenalty;

  // Penalty part of the PHR augmented Lagrangian.
  const auto penalty_term = [&](const Vector<double>& c) {
    const Vector<double> shifted = (multipliers + penalty * c).cwiseMax(0.0);
    return (shifted.squaredNorm() - multipliers.squaredNorm()) / (2.0 * penalty);
  };

  const Objective lagrangian = [&](const Vector<double>& x, Vector<double>& grad) {
    const Matrix<double> alpha = unflatten(x, rows, cols);
    Matrix<double> g;
    const double value = fit.value(alpha, &g);
    const Vector<double> c = band.values(alpha);
    const Vector<double> shifted = (multipliers + penalty * c).cwiseMax(0.0);
    band.accumulate_gradient(alpha, shifted, g);
    grad = flatten(g);
    return value + penalty_term(c);
  };

  Vector<double> x = flatten(initial.alpha());
  int used = 0;
  double previous_violation = std::numeric_limits<double>::infinity();
  result.stop_reason = "outer_iterations";
  for (int outer = 0; outer < solver.max_outer_iterations; ++outer) {
    LbfgsSettings inner;
    inner.max_iterations = solver.max_iterations - used;
    inner.history = solver.history;
    inner.gradient_tolerance = solver.gradient_tolerance;
    inner.objective_tolerance = solver.objective_tolerance;
    inner.step_tolerance = solver.step_tolerance;

    const LbfgsResult run = minimize_lbfgs(lagrangian, x, inner, [&](const Vector<double>& xi, double li) {
      const Matrix<double> alpha = unflatten(xi, rows, cols);
      offer(alpha, li - penalty_term(band.values(alpha)));
    });
    used += run.iterations;
    x = run.x;

    const Matrix<double> alpha = unflatten(x, rows, cols);
    const Vector<double> c = band.values(alpha);
    const double violation = std::max(0.0, c.maxCoeff());
    if (run.stop == LbfgsStop::iterations) {
      result.stop_reason = "iteration_limit";
      break;
    }
    if (violation <= solver.constraint_tolerance) {
      result.converged = true;
      result.stop_reason = to_string(run.stop);
      break;
    }
    multipliers = (multipliers + penalty * c).cwiseMax(0.0);
    if (violation > 0.25 * previous_violation) {
      penalty = std::min(penalty * kPenaltyGrowth, kMaxPenalty);
    }
    previous_violation = violation;
  }

  // The last iterate may sit just outside the band; its radial projection is feasible.
  const Matrix<double> projected = band.project(unflatten(x, rows, cols));
  offer(projected, fit.value(projected));

  result.iterations = used;
  result.final_indices = ModulationIndexSet<double>(best, duration);
  result.final_objective = best_value;
  const Vector<double> residual = rms_constraint(result.final_indices, initial, config.delta);
  const Vector<double> b0 = row_bandwidths(initial.alpha(), duration);
  result.constraint_residuals.resize(static_cast<std::size_t>(rows));
  for (Index m = 0; m < rows; ++m) {
    result.constraint_residuals[static_cast<std::size_t>(m)] = b0(m) > 0.0 ? residual(m) / b0(m) : residual(m);
  }
  result.pslr_db = pslr(achieved_beampattern(result.final_indices, tmpl.grid), tmpl, config.pslr_guard);
  return result;
}

Vector<double> achieved_beampattern(const ModulationIndexSet<double>& idx, const AngleGrid<double>& grid) {
  return beampattern(correlation_matrix_gbf(idx), grid);
}

// --- campaign ----------------------------------------------------------------

CampaignSummary summarize(std::vector<TrialResult> trials) {
  CampaignSummary summary;
  summary.trials = std::move(trials);
  std::vector<double> values;
  for (const TrialResult& t : summary.trials) {
    if (t.failed) {
      ++summary.failed_trials;
      continue;
    }
    if (t.converged) {
      ++summary.converged_trials;
    }
    if (summary.best_trial < 0 || t.pslr_db < summary.trials[static_cast<std::size_t>(summary.best_trial)].pslr_db) {
      summary.best_trial = t.trial;
    }
    values.push_back(t.pslr_db);
  }
  if (values.empty()) {
    throw NumericalFailure("campaign: all trials failed");
  }
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  summary.median_pslr_db = n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
  summary.min_pslr_db = values.front();
  summary.max_pslr_db = values.back();
  return summary;
}

CampaignSummary run_campaign(const SynthesisConfig& config, const BeampatternTemplate<double>& tmpl, int jobs,
                             const std::function<void(const TrialResult&)>& on_trial) {
  config.validate();
  const int trials = config.trials;
  std::vector<TrialResult> results(static_cast<std::size_t>(trials));
  std::atomic<int> next{0};
  std::mutex report;

  const auto worker = [&] {
    for (int i = next.fetch_add(1); i < trials; i = next.fetch_add(1)) {
      TrialResult r;
      try {
        r = optimize_trial(config, initialize_trial(config, i), tmpl);
      } catch (const std::exception& e) {
        r = TrialResult{};
        r.failed = true;
        r.error = e.what();
      }
      r.trial = i;
      r.trial_seed = trial_seed(config.rng_seed, i);
      results[static_cast<std::size_t>(i)] = std::move(r);
      if (on_trial) {
        std::lock_guard<std::mutex> lock(report);
        on_trial(results[static_cast<std::size_t>(i)]);
      }
    }
  };

  if (jobs <= 0) {
    jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  }
  jobs = std::min(jobs, trials);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) {
      pool.emplace_back(worker);
    }
    for (std::thread& t : pool) {
      t.join();
    }
  }
  return summarize(std::move(results));
}

}  // namespace mtsfm
