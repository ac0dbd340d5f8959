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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.
//
//   acceptance [--full] [--cli PATH] [--workdir DIR]
//
// --full runs the 100-trial campaign (criterion 6); criterion 5 then uses its
// first 20 trials, which are identical to a 20-trial run.

#include <sys/wait.h>

#include <chrono>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "mtsfm/bessel.hpp"
#include "mtsfm/commands.hpp"
#include "mtsfm/gbf.hpp"

using namespace mtsfm;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const std::function<Outcome()>& check) {
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) {
    ++failures;
  }
  std::printf("[%s] %d %s: %s\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof buf, f, args);
  va_end(args);
  return buf;
}

double max_asymmetry(const Vector<double>& p) { return (p - p.reverse()).cwiseAbs().maxCoeff(); }

double ula_pattern(double u, Index m) {
  std::complex<double> s(0.0, 0.0);
  for (Index i = 0; i < m; ++i) {
    s += std::polar(1.0, pi<double> * static_cast<double>(i) * u);
  }
  return std::norm(s) / static_cast<double>(m);
}

std::string strip_timestamp(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::string out;
  while (std::getline(in, line)) {
    if (line.find("\"created_utc\"") == std::string::npos) {
      out += line + '\n';
    }
  }
  return out;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Worst beampattern asymmetry seen anywhere, for criterion 10.
double worst_asymmetry = 0.0;
long patterns_checked = 0;

void note_pattern(const Vector<double>& p) {
  worst_asymmetry = std::max(worst_asymmetry, max_asymmetry(p));
  ++patterns_checked;
}

Outcome gbf_oracle() {
  const auto start = Clock::now();
  std::mt19937_64 rng(20240601);
  std::uniform_int_distribution<int> harmonics(1, 4);
  std::uniform_int_distribution<int> order(-8, 8);
  std::uniform_real_distribution<double> arg(-5.0, 5.0);
  double worst = 0.0;
  double worst_bessel = 0.0;
  int single = 0;
  for (int c = 0; c < 200; ++c) {
    const int k = harmonics(rng);
    const int n = order(rng);
    Vector<double> z(k);
    for (int i = 0; i < k; ++i) {
      z(i) = arg(rng);
    }
    const double q = gbf_eval(n, z);
    worst = std::max(worst, std::abs(q - gbf_series_oracle(n, z)));
    if (k == 1) {
      ++single;
      worst_bessel = std::max(worst_bessel, std::abs(q - bessel_j(n, z(0))));
    }
  }
  const double t = seconds_since(start);
  return {worst <= 1e-8 && worst_bessel <= 1e-9 && t < 10.0,
          fmt("200 cases, max |quadrature - series| %.2e, %d K=1 cases max |quadrature - J_n| %.2e, %.2f s", worst,
              single, worst_bessel, t)};
}

Outcome correlation_equivalence() {
  const auto start = Clock::now();
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> elements(1, 6);
  std::uniform_int_distribution<int> harmonics(1, 8);
  std::uniform_real_distribution<double> arg(-5.0, 5.0);
  double worst = 0.0;
  double min_eig = 1.0;
  bool structure = true;
  for (int c = 0; c < 50; ++c) {
    const Index m = elements(rng);
    const Index k = harmonics(rng);
    Matrix<double> a(m, k);
    for (Index i = 0; i < m; ++i) {
      for (Index j = 0; j < k; ++j) {
        a(i, j) = arg(rng);
      }
    }
    const ModulationIndexSet<double> idx(a, 1.0);
    const CorrelationMatrix<double> g = correlation_matrix_gbf(idx);
    const CorrelationMatrix<double> n = correlation_matrix_numeric(idx);
    worst = std::max(worst, (g.matrix() - n.matrix()).cwiseAbs().maxCoeff());
    for (const auto* r : {&g, &n}) {
      structure = structure && r->matrix() == r->matrix().transpose() &&
                  (r->matrix().diagonal().array() == 1.0 / static_cast<double>(m)).all();
      min_eig = std::min(min_eig, r->min_eigenvalue());
    }
  }
  const double t = seconds_since(start);
  return {worst <= 1e-8 && structure && min_eig >= -1e-10 && t < 30.0,
          fmt("50 sets, max entry difference %.2e, symmetric with exact 1/M diagonal: %s, min eigenvalue %.2e, %.2f s",
              worst, structure ? "yes" : "no", min_eig, t)};
}

Outcome beampattern_limits() {
  const AngleGrid<double> g = AngleGrid<double>::uniform(2001);
  const Vector<double> omni = beampattern(CorrelationMatrix<double>::omnidirectional(10), g);
  const Vector<double> ula = beampattern(CorrelationMatrix<double>::phased_array(10), g);
  note_pattern(omni);
  note_pattern(ula);
  double omni_err = (omni.array() - 1.0).abs().maxCoeff();
  double ula_err = 0.0;
  for (Index i = 0; i < g.size(); ++i) {
    ula_err = std::max(ula_err, std::abs(ula(i) - ula_pattern(g(i), 10)));
  }
  const Index zero = 1000;
  const Index null = 1200;  // u = 0.2
  bool falling = true;
  for (Index i = zero; i < null; ++i) {
    falling = falling && ula(i + 1) < ula(i);
  }
  const bool null_ok = falling && ula(null) < 1e-10 && ula(null + 1) > ula(null);
  return {omni_err <= 1e-12 && ula_err <= 1e-10 && std::abs(ula(zero) - 10.0) <= 1e-10 && null_ok,
          fmt("omni max |P - 1| %.2e, ULA max error %.2e, P(0) = %.15g, first null at u = %.4f (P = %.2e)", omni_err,
              ula_err, ula(zero), g(null), ula(null))};
}

Outcome gradient_check() {
  std::mt19937_64 rng(4242);
  std::uniform_int_distribution<int> elements(2, 4);
  std::uniform_int_distribution<int> harmonics(1, 6);
  std::uniform_real_distribution<double> arg(-3.0, 3.0);
  double worst = 0.0;
  for (int c = 0; c < 20; ++c) {
    const Index m = elements(rng);
    const Index k = harmonics(rng);
    Matrix<double> a(m, k);
    for (Index i = 0; i < m; ++i) {
      for (Index j = 0; j < k; ++j) {
        a(i, j) = arg(rng);
      }
    }
    const auto tmpl = desired_beampattern(0.3, m, AngleGrid<double>::uniform(501));
    const ModulationIndexSet<double> idx(a, 1.0);
    const Matrix<double> g = objective_gradient(idx, tmpl);
    Matrix<double> fd(m, k);
    const double h = 1e-6;
    for (Index i = 0; i < m; ++i) {
      for (Index j = 0; j < k; ++j) {
        Matrix<double> ap = a;
        Matrix<double> am = a;
        ap(i, j) += h;
        am(i, j) -= h;
        fd(i, j) = (objective(ModulationIndexSet<double>(ap, 1.0), tmpl) -
                    objective(ModulationIndexSet<double>(am, 1.0), tmpl)) /
                   (2 * h);
      }
    }
    worst = std::max(worst, (g - fd).norm() / fd.norm());
  }
  return {worst < 1e-5, fmt("20 instances, max relative error %.2e", worst)};
}

struct Campaign {
  SynthesisConfig config;
  CampaignSummary summary;
  double seconds = 0.0;
};

Campaign run_design_campaign(int trials) {
  Campaign c;
  c.config.trials = trials;
  const auto start = Clock::now();
  c.summary = run_campaign(c.config, c.config.beampattern_template(), 0, [](const TrialResult& t) {
    std::fprintf(stderr, "  trial %d: pslr %.3f dB, %d iterations%s\n", t.trial, t.pslr_db, t.iterations,
                 t.failed ? " FAILED" : "");
  });
  c.seconds = seconds_since(start);
  return c;
}

Outcome design_example(const Campaign& full) {
  std::vector<TrialResult> first(full.summary.trials.begin(), full.summary.trials.begin() + 20);
  const double seconds = full.seconds * 20.0 / static_cast<double>(full.summary.trials.size());
  const CampaignSummary s = summarize(first);
  const SynthesisConfig& config = full.config;
  const auto grid = config.grid();
  bool band = true;
  double worst_residual = 0.0;
  double min_fraction = 1.0;
  for (const TrialResult& t : s.trials) {
    if (t.failed) {
      return {false, "trial " + std::to_string(t.trial) + " failed: " + t.error};
    }
    for (double r : t.constraint_residuals) {
      worst_residual = std::max(worst_residual, r);
      if (t.converged && r > config.solver.constraint_tolerance) {
        band = false;
      }
    }
    const Vector<double> p = achieved_beampattern(t.final_indices, grid);
    note_pattern(p);
    note_pattern(achieved_beampattern(t.initial_indices, grid));
    min_fraction = std::min(min_fraction, power_fraction_within(p, grid, 0.35));
  }
  const bool pass = std::abs(s.median_pslr_db - -11.89) <= 1.5 && s.min_pslr_db <= -11.0 && band &&
                    min_fraction >= 0.8 && seconds < 1800.0;
  return {pass, fmt("20 trials: median %.3f dB (target -11.89 +- 1.5), best %.3f dB (<= -11.0), max %.3f dB, "
                    "%d converged, max relative band residual %.1e, min power fraction in |u| <= 0.35 %.3f, %.0f s",
                    s.median_pslr_db, s.min_pslr_db, s.max_pslr_db, s.converged_trials, worst_residual, min_fraction,
                    seconds)};
}

Outcome full_campaign(const Campaign& full) {
  const CampaignSummary& s = full.summary;
  const bool pass = std::abs(s.median_pslr_db - -11.89) <= 1.0 && std::abs(s.min_pslr_db - -12.63) <= 1.0 &&
                    std::abs(s.max_pslr_db - -11.00) <= 1.0;
  return {pass, fmt("%zu trials: median %.3f dB (-11.89), min %.3f dB (-12.63), max %.3f dB (-11.00), each +- 1.0, "
                    "%d converged, %.0f s",
                    s.trials.size(), s.median_pslr_db, s.min_pslr_db, s.max_pslr_db, s.converged_trials,
                    full.seconds)};
}

Outcome spectral_compactness(const Campaign& c) {
  const TrialResult& best = c.summary.trials[static_cast<std::size_t>(c.summary.best_trial)];
  const ModulationIndexSet<double>& idx = best.final_indices;
  const double t_len = idx.duration();
  double worst = 1.0;
  double worst_modulus = 0.0;
  for (Index m = 0; m < idx.elements(); ++m) {
    const Vector<double> row = idx.row(m).transpose();
    const AnalysisSetup setup = analysis_setup(row, t_len);
    const SampledWaveform<double> w = sample_waveform(row, t_len, idx.elements(), setup.sample_rate);
    const double amp = 1.0 / std::sqrt(static_cast<double>(idx.elements()) * t_len);
    worst_modulus = std::max(worst_modulus, (w.samples.cwiseAbs().array() - amp).abs().maxCoeff());
    const auto [lo, hi] = frequency_range(row, t_len);
    const Spectrum s = spectrum(w, setup.fft_size);
    worst = std::min(worst, s.energy_within(lo - 1.0 / t_len, hi + 1.0 / t_len) / s.total_energy());
  }
  return {worst >= 0.9 && worst_modulus <= 1e-12,
          fmt("best trial %d: min energy fraction in swept band widened by 2/T %.4f, max modulus error %.1e",
              best.trial, worst, worst_modulus)};
}

Outcome ambiguity_properties(const Campaign& c) {
  const TrialResult& best = c.summary.trials[static_cast<std::size_t>(c.summary.best_trial)];
  const ModulationIndexSet<double>& idx = best.final_indices;
  const double m_inv = 1.0 / static_cast<double>(idx.elements());
  const Vector<double> row = idx.row(0).transpose();
  const AnalysisSetup setup = analysis_setup(row, idx.duration());
  const SampledWaveform<double> w = sample_waveform(row, idx.duration(), idx.elements(), setup.sample_rate);
  const AmbiguitySurface s = aaf(w, setup.tau, setup.nu);
  const Index rc = setup.tau.size() / 2;
  const Index cc = setup.nu.size() / 2;
  const double peak_err = std::abs(s.values(rc, cc) - m_inv);
  double asym = 0.0;
  for (Index r = 0; r < s.values.rows(); ++r) {
    for (Index col = 0; col < s.values.cols(); ++col) {
      asym = std::max(asym, std::abs(s.values(r, col) -
                                     std::conj(s.values(s.values.rows() - 1 - r, s.values.cols() - 1 - col))));
    }
  }

  // Unmodulated pulse: triangle ACF and sinc Doppler cut.
  const Index m = 10;
  const Vector<double> flat = Vector<double>::Zero(1);
  const SampledWaveform<double> pulse = sample_waveform(flat, 1.0, m, 32000.0);
  const Vector<double> tau = uniform_axis(-1.0, 1.0, 801);
  const ComplexVector<double> r = acf(pulse, tau);
  double tri = 0.0;
  for (Index i = 0; i < tau.size(); ++i) {
    tri = std::max(tri, std::abs(r(i) - (1.0 - std::abs(tau(i))) / static_cast<double>(m)));
  }
  const Vector<double> nu = uniform_axis(-10.0, 10.0, 201);
  const AmbiguitySurface cut = aaf(pulse, Vector<double>::Zero(1), nu);
  double sinc = 0.0;
  for (Index i = 0; i < nu.size(); ++i) {
    const double x = pi<double> * nu(i);
    const double expected = (x == 0.0 ? 1.0 : std::sin(x) / x) / static_cast<double>(m);
    sinc = std::max(sinc, std::abs(cut.values(0, i) - expected));
  }

  // Mean sidelobe pedestal of trial-0 designs, averaged over the waveforms of each set.
  std::vector<double> pedestal;
  for (double tbw : {16.0, 32.0, 64.0}) {
    SynthesisConfig config = c.config;
    config.time_bandwidth = tbw;
    const ModulationIndexSet<double> design =
        tbw == c.config.time_bandwidth
            ? c.summary.trials.front().final_indices
            : optimize_trial(config, initialize_trial(config, 0), config.beampattern_template()).final_indices;
    double level = 0.0;
    for (Index k = 0; k < design.elements(); ++k) {
      const Vector<double> b = design.row(k).transpose();
      const AnalysisSetup st = analysis_setup(b, design.duration());
      const SampledWaveform<double> x = sample_waveform(b, design.duration(), design.elements(), st.sample_rate);
      level += std::pow(10.0, thumbtack_metrics(aaf(x, st.tau, st.nu)).mean_pedestal_db / 10.0);
    }
    pedestal.push_back(10.0 * std::log10(level / static_cast<double>(design.elements())));
  }
  const bool falling = pedestal[1] < pedestal[0] && pedestal[2] < pedestal[1];
  return {peak_err <= 1e-6 && asym <= 1e-8 && tri <= 1e-6 && sinc <= 1e-6 && falling,
          fmt("chi(0,0) error %.1e, conjugate symmetry %.1e, triangle ACF %.1e, sinc cut %.1e, mean pedestal "
              "%.2f / %.2f / %.2f dB for optimized sets at TBW 16 / 32 / 64",
              peak_err, asym, tri, sinc, pedestal[0], pedestal[1], pedestal[2])};
}

int run_command(const std::string& cmd) {
  const int status = std::system((cmd + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome determinism(const std::string& cli, const fs::path& dir) {
  if (cli.empty()) {
    return {false, "no --cli given"};
  }
  fs::create_directories(dir);
  std::ofstream(dir / "config.json") << R"({
  "array": {"elements": 6},
  "waveform": {"harmonics": 8, "time_bandwidth": 32},
  "campaign": {"trials": 4, "rng_seed": 31},
  "beampattern": {"grid_points": 401},
  "solver": {"max_iterations": 200}
}
)";
  const std::string base = cli + " --config " + (dir / "config.json").string();
  const int a = run_command(base + " --jobs 1 synth --output " + (dir / "run1.json").string());
  const int b = run_command(base + " --jobs 3 synth --output " + (dir / "run2.json").string());
  const int c = run_command(base + " --jobs 1 synth --output " + (dir / "run3.json").string());
  if (a != 0 || b != 0 || c != 0) {
    return {false, fmt("synth exit codes %d %d %d", a, b, c)};
  }
  const std::string t1 = strip_timestamp(read_text(dir / "run1.json"));
  const std::string t2 = strip_timestamp(read_text(dir / "run2.json"));
  const std::string t3 = strip_timestamp(read_text(dir / "run3.json"));
  const int e = run_command(cli + " eval " + (dir / "run2.json").string() + " --output " +
                            (dir / "bp.csv").string());
  return {t1 == t3 && t1 == t2 && e == 0,
          fmt("three 4-trial runs (--jobs 1, 3, 1): archives identical apart from created_utc: %s, eval exit %d",
              t1 == t2 && t1 == t3 ? "yes" : "no", e)};
}

Outcome symmetry() {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> arg(-6.0, 6.0);
  const AngleGrid<double> g = AngleGrid<double>::uniform(1001);
  for (int c = 0; c < 50; ++c) {
    Matrix<double> a(8, 5);
    for (Index i = 0; i < a.rows(); ++i) {
      for (Index j = 0; j < a.cols(); ++j) {
        a(i, j) = arg(rng);
      }
    }
    note_pattern(beampattern(correlation_matrix_gbf(ModulationIndexSet<double>(a, 1.0)), g));
  }
  return {worst_asymmetry < 1e-10,
          fmt("%ld beampatterns, max |P(u) - P(-u)| %.2e", patterns_checked, worst_asymmetry)};
}

}  // namespace

int main(int argc, char** argv) {
  bool full = false;
  std::string cli;
  fs::path workdir = fs::temp_directory_path() / "mtsfm_acceptance";
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--full") {
      full = true;
    } else if (arg == "--cli" && i + 1 < argc) {
      cli = argv[++i];
    } else if (arg == "--workdir" && i + 1 < argc) {
      workdir = argv[++i];
    } else {
      std::fprintf(stderr, "usage: acceptance [--full] [--cli PATH] [--workdir DIR]\n");
      return 2;
    }
  }

  report(1, "GBF oracle equivalence", gbf_oracle);
  report(2, "correlation matrix equivalence", correlation_equivalence);
  report(3, "beampattern limits", beampattern_limits);
  report(4, "gradient correctness", gradient_check);

  Campaign campaign;
  std::string campaign_error;
  try {
    campaign = run_design_campaign(full ? 100 : 20);
  } catch (const std::exception& e) {
    campaign_error = e.what();
  }
  const auto with_campaign = [&](auto check) {
    return [&, check]() -> Outcome {
      if (!campaign_error.empty()) {
        return {false, "campaign failed: " + campaign_error};
      }
      return check(campaign);
    };
  };
  report(5, "design example at reduced scale", with_campaign(design_example));
  if (full) {
    report(6, "full campaign parity", with_campaign(full_campaign));
  } else {
    std::printf("[SKIP] 6 full campaign parity: run with --full\n");
  }
  report(7, "spectral compactness", with_campaign(spectral_compactness));
  report(8, "ambiguity properties", with_campaign(ambiguity_properties));
  report(9, "determinism", [&] { return determinism(cli, workdir); });
  report(10, "beampattern symmetry", symmetry);

  std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
