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

#include "mtsfm/waveform.hpp"

using namespace mtsfm;

namespace {

Vector<double> harmonic_profile(Index k) {
  Vector<double> row(k);
  for (Index i = 0; i < k; ++i) {
    row(i) = 1.0 / static_cast<double>(i + 1);
  }
  return row;
}

}  // namespace

TEST_CASE("ModulationIndexSet validates its inputs") {
  CHECK_THROWS_AS(ModulationIndexSet<double>(Matrix<double>(0, 3), 1.0), InvalidArgument);
  CHECK_THROWS_AS(ModulationIndexSet<double>(Matrix<double>::Ones(2, 3), 0.0), InvalidArgument);
  CHECK_THROWS_AS(ModulationIndexSet<double>(Matrix<double>::Ones(2, 3), -1.0), InvalidArgument);
  Matrix<double> bad = Matrix<double>::Ones(2, 3);
  bad(1, 2) = std::nan("");
  CHECK_THROWS_AS(ModulationIndexSet<double>(bad, 1.0), InvalidArgument);

  const ModulationIndexSet<double> idx(Matrix<double>::Ones(2, 3), 2.0);
  CHECK(idx.elements() == 2);
  CHECK(idx.harmonics() == 3);
  CHECK(idx.duration() == 2.0);
  CHECK(idx == ModulationIndexSet<double>(Matrix<double>::Ones(2, 3), 2.0));
}

TEST_CASE("phase and modulation function") {
  Vector<double> row(2);
  row << 1.5, -0.5;
  const double t_len = 2.0;
  CHECK(phase_at(row, t_len, 0.0) == 0.0);
  // sin(2 pi t / T) = 1 and sin(4 pi t / T) = 0 at t = T / 4.
  CHECK(phase_at(row, t_len, 0.5) == doctest::Approx(1.5).epsilon(1e-14));
  CHECK(modulation_function_at(row, t_len, 0.0) == doctest::Approx(1.5 / 2.0 - 0.5).epsilon(1e-14));

  const double h = 1e-6;
  for (double t : {-0.7, -0.2, 0.3, 0.9}) {
    const double fd = (phase_at(row, t_len, t + h) - phase_at(row, t_len, t - h)) / (2 * h) / (2 * pi<double>);
    CHECK(std::abs(modulation_function_at(row, t_len, t) - fd) < 1e-7);
  }
  CHECK_THROWS_AS(phase_at(row, t_len, 1.01), InvalidArgument);
  CHECK_NOTHROW(phase_at(row, t_len, -1.0));

  const Vector<double> a = modulation_coefficients(row, t_len);
  CHECK(a(0) == doctest::Approx(0.75));
  CHECK(a(1) == doctest::Approx(-0.5));
}

TEST_CASE("rms bandwidth matches the time average of the squared angular frequency") {
  Vector<double> row(3);
  row << 2.0, -1.0, 0.25;
  const double t_len = 0.5;
  const int n = 20000;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double t = -t_len / 2 + t_len * i / n;
    const double w = 2 * pi<double> * modulation_function_at(row, t_len, t);
    acc += w * w;
  }
  CHECK(rms_bandwidth_sq(row, t_len) == doctest::Approx(acc / n).epsilon(1e-12));

  Vector<double> single(1);
  single << 1.0;
  CHECK(rms_bandwidth_sq(single, 1.0) == doctest::Approx(2 * pi<double> * pi<double>).epsilon(1e-15));
}

TEST_CASE("swept bandwidth of the harmonic profile") {
  // Peak-to-trough excursion of sum_k cos(2 pi k t), K = 16, by continuous minimization.
  CHECK(swept_bandwidth(harmonic_profile(16), 1.0) == doctest::Approx(20.0954583048726).epsilon(1e-5));
  const auto [lo, hi] = frequency_range(harmonic_profile(16), 1.0);
  CHECK(hi == doctest::Approx(16.0).epsilon(1e-14));
  CHECK(lo < 0.0);
  CHECK(peak_frequency(harmonic_profile(16), 1.0) == doctest::Approx(16.0).epsilon(1e-14));
  CHECK(swept_bandwidth(Vector<double>(Vector<double>::Zero(4)), 1.0) == 0.0);
}

TEST_CASE("sample_waveform is constant modulus with energy 1/M") {
  const Vector<double> row = 3.0 * harmonic_profile(8);
  const Index m = 4;
  const double t_len = 1.0;
  const double fs = 8.0 * peak_frequency(row, t_len) + 13.3;
  const SampledWaveform<double> w = sample_waveform(row, t_len, m, fs);
  CHECK(w.size() == std::llround(t_len * fs));
  CHECK(w.sample_rate == doctest::Approx(static_cast<double>(w.size()) / t_len).epsilon(1e-15));
  const double amp = 1.0 / std::sqrt(m * t_len);
  CHECK((w.samples.cwiseAbs().array() - amp).abs().maxCoeff() < 1e-12);
  CHECK(w.energy() == doctest::Approx(1.0 / m).epsilon(1e-12));
  CHECK(w.time(0) == -0.5);
  CHECK(std::abs(w.samples(0) - std::polar(amp, phase_at(row, t_len, -0.5))) < 1e-15);

  CHECK_THROWS_AS(sample_waveform(row, t_len, m, 2.0 * peak_frequency(row, t_len)), InvalidArgument);
  CHECK_THROWS_AS(sample_waveform(row, t_len, 0, fs), InvalidArgument);
}
