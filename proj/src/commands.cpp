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

#include "mtsfm/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>

#include <json.hpp>

namespace mtsfm {

namespace {

// Thrown for bad selectors and flags; maps to kExitUsage.
class UsageError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

constexpr Index kDelaySteps = 400;
constexpr Index kMinDopplerPoints = 401;
constexpr double kDopplerPerRayleigh = 6.0;  // Doppler samples per 1/T
constexpr double kFloorDb = -300.0;

double to_db(double value, double reference) {
  if (!(value > 0.0) || !(reference > 0.0)) {
    return kFloorDb;
  }
  return std::max(kFloorDb, 10.0 * std::log10(value / reference));
}

double amplitude_db(double value, double reference) {
  return std::max(kFloorDb, 2.0 * to_db(value, reference));
}

class CsvFile {
 public:
  CsvFile(const std::string& path, const std::string& kind) : path_(path), out_(path, std::ios::trunc) {
    if (!out_) {
      throw std::runtime_error("cannot write " + path);
    }
    out_ << std::setprecision(17);
    out_ << "# mtsfm " << kind << " v1\n";
  }

  void comment(const std::string& text) { out_ << "# " << text << '\n'; }
  void header(const std::string& columns) { out_ << columns << '\n'; }

  template <typename... Ts>
  void row(const Ts&... values) {
    bool first = true;
    ((out_ << (first ? "" : ",") << values, first = false), ...);
    out_ << '\n';
  }

  void close() {
    out_.close();
    if (!out_) {
      throw std::runtime_error("write failed: " + path_);
    }
  }

 private:
  std::string path_;
  std::ofstream out_;
};

const TrialResult& select_trial(const RunArchive& archive, const std::string& selector) {
  const auto& trials = archive.summary.trials;
  if (trials.empty()) {
    throw std::runtime_error("archive holds no trials");
  }
  int id = -1;
  if (selector == "best") {
    id = archive.summary.best_trial;
    if (id < 0) {
      throw std::runtime_error("archive has no successful trial");
    }
  } else {
    std::size_t used = 0;
    try {
      id = std::stoi(selector, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != selector.size() || selector.empty()) {
      throw UsageError("trial selector must be an integer or \"best\", got \"" + selector + "\"");
    }
  }
  for (const TrialResult& t : trials) {
    if (t.trial == id) {
      if (t.failed) {
        throw std::runtime_error("trial " + std::to_string(id) + " failed during synthesis: " + t.error);
      }
      return t;
    }
  }
  throw UsageError("trial " + std::to_string(id) + " is not in the archive");
}

template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

void print_summary(const CampaignSummary& s, std::ostream& out) {
  const int n = static_cast<int>(s.trials.size());
  out << std::setprecision(6) << std::fixed;
  out << "trials " << n << ", converged " << s.converged_trials << ", failed " << s.failed_trials << '\n';
  if (n > s.failed_trials) {
    out << "pslr_db median " << s.median_pslr_db << " min " << s.min_pslr_db << " max " << s.max_pslr_db
        << " best_trial " << s.best_trial << '\n';
  }
  out.unsetf(std::ios::floatfield);
}

}  // namespace

AnalysisSetup analysis_setup(const Vector<double>& alpha_row, double duration) {
  AnalysisSetup s;
  const double sweep = swept_bandwidth(alpha_row, duration);
  // Delay steps per pulse length; T / steps stays below 1 / (6 sweep) up to TBW 64.
  const Index steps = kDelaySteps * std::max<Index>(1, static_cast<Index>(std::ceil(sweep * duration / 64.0)));
  const double required = std::max(kOversampling * peak_frequency(alpha_row, duration), 1.0 / duration);
  const auto blocks = static_cast<Index>(std::ceil(required * duration / static_cast<double>(steps)));
  const Index count = std::max<Index>(1, blocks) * steps;
  s.sample_rate = static_cast<double>(count) / duration;
  s.tau = uniform_axis(-duration, duration, 2 * steps + 1);
  const double span = std::max(sweep, 8.0 / duration);
  const auto half = static_cast<Index>(std::ceil(kDopplerPerRayleigh * span * duration));
  s.nu = uniform_axis(-span, span, std::max(kMinDopplerPoints, 2 * half + 1));
  s.fft_size = next_power_of_two(8 * count);
  s.window_length = count / 16;
  s.hop = std::max<Index>(1, s.window_length / 4);
  return s;
}

int cmd_synth(const SynthOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (opts.jobs < 0) {
      throw UsageError("--jobs must be >= 0");
    }
    SynthesisConfig config = opts.config_path.empty() ? SynthesisConfig{} : load_config(opts.config_path);
    if (opts.seed) {
      config.rng_seed = *opts.seed;
    }
    config.validate();

    RunArchive archive;
    archive.config = config;
    archive.summary = run_campaign(config, config.beampattern_template(), opts.jobs, [&](const TrialResult& t) {
      err << "trial " << t.trial;
      if (t.failed) {
        err << " failed: " << t.error << '\n';
      } else {
        err << " pslr " << std::setprecision(6) << t.pslr_db << " dB, " << t.iterations << " iterations"
            << (t.converged ? "" : " (not converged)") << '\n';
      }
    });
    archive.created_utc = utc_timestamp();
    write_archive(opts.output_path, archive);
    print_summary(archive.summary, out);
    out << "archive " << opts.output_path << '\n';
    return kExitOk;
  });
}

int cmd_eval(const EvalOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunArchive archive = read_archive(opts.archive_path);
    const SynthesisConfig& config = archive.config;
    const TrialResult& selected = select_trial(archive, opts.trial);
    const BeampatternTemplate<double> tmpl = config.beampattern_template();

    int bad = 0;
    for (const TrialResult& t : archive.summary.trials) {
      if (t.failed) {
        continue;
      }
      std::string problem;
      try {
        const double p = pslr(achieved_beampattern(t.final_indices, tmpl.grid), tmpl, config.pslr_guard);
        BeampatternFit fit(tmpl, t.final_indices.elements(), t.final_indices.harmonics(), config.quadrature_points);
        const double j = fit.value(t.final_indices.alpha());
        if (!(std::abs(p - t.pslr_db) <= kVerifyTolerance)) {
          problem = "pslr " + std::to_string(p) + " dB vs stored " + std::to_string(t.pslr_db) + " dB";
        } else if (!(std::abs(j - t.final_objective) <= kVerifyTolerance * std::max(1.0, std::abs(j)))) {
          problem = "objective " + std::to_string(j) + " vs stored " + std::to_string(t.final_objective);
        }
      } catch (const std::exception& e) {
        problem = e.what();
      }
      if (!problem.empty()) {
        err << "trial " << t.trial << ": verification failed: " << problem << '\n';
        ++bad;
      }
    }
    if (bad > 0) {
      err << bad << " trial(s) failed verification\n";
      return kExitFailure;
    }

    const Vector<double> power = achieved_beampattern(selected.final_indices, tmpl.grid);
    const double peak = power.maxCoeff();
    CsvFile csv(opts.output_path, "beampattern");
    csv.comment("trial " + std::to_string(selected.trial));
    csv.comment("u = sin(theta), dimensionless; power linear; power_db relative to peak");
    csv.header("u,power,power_db,desired");
    for (Index i = 0; i < tmpl.grid.size(); ++i) {
      csv.row(tmpl.grid(i), power(i), to_db(power(i), peak), tmpl.desired(i));
    }
    csv.close();
    out << "verified " << archive.summary.trials.size() - static_cast<std::size_t>(archive.summary.failed_trials)
        << " trial(s); trial " << selected.trial << " pslr " << std::setprecision(10) << selected.pslr_db
        << " dB; beampattern " << opts.output_path << '\n';
    return kExitOk;
  });
}

int cmd_analyze(const AnalyzeOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunArchive archive = read_archive(opts.archive_path);
    const TrialResult& trial = select_trial(archive, opts.trial);
    const ModulationIndexSet<double>& idx = opts.initial ? trial.initial_indices : trial.final_indices;
    if (opts.waveform < 0 || opts.waveform >= idx.elements()) {
      throw UsageError("waveform index " + std::to_string(opts.waveform) + " out of range [0, " +
                       std::to_string(idx.elements()) + ")");
    }
    const Vector<double> row = idx.row(opts.waveform).transpose();
    const double duration = idx.duration();
    const AnalysisSetup setup = analysis_setup(row, duration);
    const SampledWaveform<double> w = sample_waveform(row, duration, idx.elements(), setup.sample_rate);

    const std::filesystem::path dir(opts.output_dir);
    std::filesystem::create_directories(dir);
    const std::string label = "trial " + std::to_string(trial.trial) + " waveform " + std::to_string(opts.waveform) +
                              (opts.initial ? " (initial)" : " (optimized)");

    const Spectrum energy_spectrum = spectrum(w, setup.fft_size);
    {
      CsvFile csv((dir / "spectrum.csv").string(), "spectrum");
      csv.comment(label);
      csv.comment("frequency in Hz; energy_density in J/Hz; power_db relative to peak");
      csv.header("frequency_hz,energy_density,power_db");
      for (Index i = 0; i < energy_spectrum.frequency.size(); ++i) {
        csv.row(energy_spectrum.frequency(i), energy_spectrum.energy_density(i), energy_spectrum.power_db(i));
      }
      csv.close();
    }

    const Spectrogram sg = spectrogram(w, setup.window_length, setup.hop);
    {
      const double peak = sg.magnitude.maxCoeff();
      CsvFile csv((dir / "spectrogram.csv").string(), "spectrogram");
      csv.comment(label);
      csv.comment("time in s (frame centre); frequency in Hz; magnitude_db relative to peak");
      csv.header("time_s,frequency_hz,magnitude_db");
      for (Index c = 0; c < sg.time.size(); ++c) {
        for (Index f = 0; f < sg.frequency.size(); ++f) {
          csv.row(sg.time(c), sg.frequency(f), amplitude_db(sg.magnitude(f, c), peak));
        }
      }
      csv.close();
    }

    const AmbiguitySurface surface = aaf(w, setup.tau, setup.nu, label);
    {
      const double peak = surface.values.cwiseAbs().maxCoeff();
      CsvFile csv((dir / "aaf.csv").string(), "aaf");
      csv.comment(label);
      csv.comment("tau in s; doppler in Hz; magnitude linear; magnitude_db relative to peak");
      csv.header("tau_s,doppler_hz,magnitude,magnitude_db");
      for (Index r = 0; r < surface.tau.size(); ++r) {
        for (Index c = 0; c < surface.nu.size(); ++c) {
          const double m = std::abs(surface.values(r, c));
          csv.row(surface.tau(r), surface.nu(c), m, amplitude_db(m, peak));
        }
      }
      csv.close();
    }

    const ComplexVector<double> corr = acf(w, setup.tau);
    {
      const double peak = corr.cwiseAbs().maxCoeff();
      CsvFile csv((dir / "acf.csv").string(), "acf");
      csv.comment(label);
      csv.comment("tau in s; real, imag, magnitude linear; magnitude_db relative to peak");
      csv.header("tau_s,real,imag,magnitude,magnitude_db");
      for (Index i = 0; i < setup.tau.size(); ++i) {
        const double m = std::abs(corr(i));
        csv.row(setup.tau(i), corr(i).real(), corr(i).imag(), m, amplitude_db(m, peak));
      }
      csv.close();
    }

    out << std::setprecision(15) << label << ": " << w.size() << " samples at " << w.sample_rate
        << " Hz; energy " << w.energy() << " (spectrum " << energy_spectrum.total_energy() << ")\n";
    out << "wrote spectrum.csv spectrogram.csv aaf.csv acf.csv to " << dir.string() << '\n';
    return kExitOk;
  });
}

int cmd_report(const ReportOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunArchive archive = read_archive(opts.archive_path);
    const CampaignSummary& s = archive.summary;
    if (s.trials.empty()) {
      throw std::runtime_error("archive holds no trials");
    }
    if (s.best_trial < 0) {
      throw std::runtime_error("archive has no successful trial");
    }
    out << std::left << std::setw(7) << "trial" << std::setw(18) << "final_objective" << std::setw(14)
        << "pslr_db" << std::setw(12) << "iterations"
        << "converged\n";
    for (const TrialResult& t : s.trials) {
      out << std::setw(7) << t.trial;
      if (t.failed) {
        out << "failed: " << t.error << '\n';
        continue;
      }
      out << std::setw(18) << std::setprecision(10) << t.final_objective << std::setw(14) << std::setprecision(8)
          << t.pslr_db << std::setw(12) << t.iterations << (t.converged ? "yes" : "no") << '\n';
    }
    out << std::right;
    print_summary(s, out);

    if (!opts.output_path.empty()) {
      nlohmann::ordered_json j;
      j["format"] = "mtsfm-report";
      j["format_version"] = 1;
      j["archive"] = opts.archive_path;
      j["trials"] = s.trials.size();
      j["converged_trials"] = s.converged_trials;
      j["failed_trials"] = s.failed_trials;
      j["median_pslr_db"] = s.median_pslr_db;
      j["min_pslr_db"] = s.min_pslr_db;
      j["max_pslr_db"] = s.max_pslr_db;
      j["best_trial"] = s.best_trial;
      std::ofstream f(opts.output_path, std::ios::trunc);
      f << j.dump(2) << '\n';
      if (!f.flush()) {
        throw std::runtime_error("cannot write " + opts.output_path);
      }
    }
    return kExitOk;
  });
}

}  // namespace mtsfm
