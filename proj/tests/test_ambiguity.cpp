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

#include <doctest.h>

#include <cmath>

#include "mtsfm/ambiguity.hpp"
#include "mtsfm/spectral.hpp"

using namespace mtsfm;

namespace {

SampledWaveform<double> unmodulated(Index elements, double duration, double fs) {
  return sample_waveform(Vector<double>(Vector<double>::Zero(1)), duration, elements, fs);
}

SampledWaveform<double> mtsfm_waveform(Index elements, double fs) {
  Vector<double> row(4);
  row << 3.0, -1.2, 0.8, 0.5;
  return sample_waveform(row, 1.0, elements, fs);
}

}  // namespace

TEST_CASE("ACF of an unmodulated pulse is a triangle") {
  const double t_len = 2.0;
  const SampledWaveform<double> w = unmodulated(5, t_len, 200.0);
  const Vector<double> tau = uniform_axis(-t_len, t_len, 801);
  const ComplexVector<double> r = acf(w, tau);
  for (Index i = 0; i < tau.size(); ++i) {
    const double expected = std::max(0.0, 1.0 - std::abs(tau(i)) / t_len) / 5.0;
    CHECK(std::abs(r(i) - expected) < 1e-12);
  }
}

TEST_CASE("zero-delay Doppler cut of an unmodulated pulse is a sinc") {
  const SampledWaveform<double> w = unmodulated(4, 1.0, 32000.0);
  const Vector<double> tau = Vector<double>::Zero(1);
  const Vector<double> nu = uniform_axis(-6.0, 6.0, 121);
  const AmbiguitySurface s = aaf(w, tau, nu);
  for (Index c = 0; c < nu.size(); ++c) {
    const double x = pi<double> * nu(c);
    const double sinc = x == 0.0 ? 1.0 : std::sin(x) / x;
    CHECK(std::abs(s.values(0, c) - sinc / 4.0) < 1e-6);
  }
}

TEST_CASE("ambiguity surface of an MTSFM waveform") {
  const SampledWaveform<double> w = mtsfm_waveform(3, 800.0);
  const Vector<double> tau = uniform_axis(-1.0, 1.0, 401);
  const Vector<double> nu = uniform_axis(-20.0, 20.0, 201);
  const AmbiguitySurface s = aaf(w, tau, nu, "test");
  CHECK(s.source == "test");
  CHECK(s.energy == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  const std::complex<double> peak = s.values(200, 100);
  CHECK(std::abs(peak - 1.0 / 3.0) < 1e-12);
  CHECK(s.values.cwiseAbs().maxCoeff() <= std::abs(peak) * (1 + 1e-12));
  double asym = 0.0;
  for (Index r = 0; r < tau.size(); ++r) {
    for (Index c = 0; c < nu.size(); ++c) {
      asym = std::max(asym, std::abs(s.values(r, c) - std::conj(s.values(tau.size() - 1 - r, nu.size() - 1 - c))));
    }
  }
  CHECK(asym < 1e-8);
  CHECK(std::abs(s.values(0, 50)) == 0.0);  // tau = -T: no overlap

  const ComplexVector<double> r = acf(w, tau);
  CHECK((r - s.values.col(100)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("ambiguity grids are validated") {
  const SampledWaveform<double> w = unmodulated(1, 1.0, 100.0);
  const Vector<double> nu = uniform_axis(-1.0, 1.0, 11);
  CHECK_THROWS_AS(aaf(w, uniform_axis(-0.5, 0.5, 12), nu), InvalidArgument);
  Vector<double> uneven(3);
  uneven << -0.1, 0.0, 0.2;
  CHECK_THROWS_AS(aaf(w, uneven, nu), InvalidArgument);
  CHECK_THROWS_AS(uniform_axis(0.0, 1.0, 0), InvalidArgument);
}

TEST_CASE("thumbtack metrics of an unmodulated pulse") {
  const double t_len = 1.0;
  const SampledWaveform<double> w = unmodulated(2, t_len, 400.0);
  const AmbiguitySurface s = aaf(w, uniform_axis(-t_len, t_len, 801), uniform_axis(-8.0, 8.0, 401));
  const ThumbtackMetrics m = thumbtack_metrics(s);
  // (1 - |tau|/T)^2 = 1/2 and sinc^2(pi nu T) = 1/2.
  CHECK(m.delay_width == doctest::Approx(2.0 * (1.0 - std::sqrt(0.5)) * t_len).epsilon(1e-3));
  CHECK(m.doppler_width == doctest::Approx(2.0 * 0.442946470689452 / t_len).epsilon(1e-3));

  const AmbiguitySurface coarse = aaf(w, uniform_axis(-t_len, t_len, 5), uniform_axis(-8.0, 8.0, 401));
  CHECK_THROWS_AS(thumbtack_metrics(coarse), InvalidArgument);
}

TEST_CASE("spectrum conserves energy") {
  const SampledWaveform<double> w = mtsfm_waveform(4, 512.0);
  const Spectrum s = spectrum(w, 4096);
  CHECK(s.frequency.size() == 4096);
  CHECK(s.total_energy() == doctest::Approx(w.energy()).epsilon(1e-12));
  CHECK(s.energy_within(-1e9, 1e9) == doctest::Approx(w.energy()).epsilon(1e-12));
  CHECK(s.bin_width == doctest::Approx(512.0 / 4096.0));
  CHECK(s.power_db.maxCoeff() == doctest::Approx(0.0));
  for (Index i = 1; i < s.frequency.size(); ++i) {
    CHECK(s.frequency(i) > s.frequency(i - 1));
  }

  const Spectrum tone = spectrum(unmodulated(1, 1.0, 64.0), 1024);
  Index peak = 0;
  tone.energy_density.maxCoeff(&peak);
  CHECK(tone.frequency(peak) == 0.0);
  CHECK_THROWS_AS(spectrum(w, 16), InvalidArgument);
}

TEST_CASE("spectrogram ridge follows the instantaneous frequency") {
  Vector<double> row(1);
  row << 20.0;
  const SampledWaveform<double> w = sample_waveform(row, 1.0, 1, 1024.0);
  const Spectrogram sg = spectrogram(w, 64, 16);
  CHECK(sg.magnitude.rows() == sg.frequency.size());
  CHECK(sg.magnitude.cols() == sg.time.size());
  const Vector<double> ridge = sg.ridge();
  for (Index c = 0; c < sg.time.size(); ++c) {
    CHECK(std::abs(ridge(c) - modulation_function_at(row, 1.0, sg.time(c))) < 4.0);
  }
  CHECK_THROWS_AS(spectrogram(w, 0, 16), InvalidArgument);
  CHECK_THROWS_AS(spectrogram(w, 4096, 16), InvalidArgument);
}

TEST_CASE("next_power_of_two") {
  CHECK(next_power_of_two(1) == 1);
  CHECK(next_power_of_two(5) == 8);
  CHECK(next_power_of_two(1024) == 1024);
}
