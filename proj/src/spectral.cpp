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

#include "mtsfm/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include <unsupported/Eigen/FFT>

namespace mtsfm {

Index next_power_of_two(Index n) {
  Index p = 1;
  while (p < n) {
    p <<= 1;
  }
  return p;
}

namespace {

// Frequency of fftshift bin i for an n-point transform.
double shifted_frequency(Index i, Index n, double df) {
  return static_cast<double>(i - n / 2) * df;
}

Vector<double> to_db(const Vector<double>& linear) {
  const double peak = linear.maxCoeff();
  Vector<double> db(linear.size());
  for (Index i = 0; i < linear.size(); ++i) {
    db(i) = 10.0 * std::log10(std::max(linear(i), 1e-300) / peak);
  }
  return db;
}

}  // namespace

double Spectrum::total_energy() const { return energy_density.sum() * bin_width; }

double Spectrum::energy_within(double lo, double hi) const {
  double e = 0.0;
  for (Index i = 0; i < frequency.size(); ++i) {
    if (frequency(i) >= lo && frequency(i) <= hi) {
      e += energy_density(i);
    }
  }
  return e * bin_width;
}

Spectrum spectrum(const SampledWaveform<double>& w, Index fft_size) {
  const Index n = w.size();
  if (fft_size < n) {
    throw InvalidArgument("spectrum: fft_size must be at least the sample count");
  }
  std::vector<std::complex<double>> in(static_cast<std::size_t>(fft_size), {0.0, 0.0});
  std::copy(w.samples.data(), w.samples.data() + n, in.begin());
  std::vector<std::complex<double>> out;
  Eigen::FFT<double> fft;
  fft.fwd(out, in);

  const double dt = w.dt();
  Spectrum s;
  s.bin_width = 1.0 / (static_cast<double>(fft_size) * dt);
  s.frequency.resize(fft_size);
  s.energy_density.resize(fft_size);
  for (Index i = 0; i < fft_size; ++i) {
    const Index k = (i + fft_size - fft_size / 2) % fft_size;  // fftshift
    s.frequency(i) = shifted_frequency(i, fft_size, s.bin_width);
    s.energy_density(i) = std::norm(out[static_cast<std::size_t>(k)] * dt);
  }
  s.power_db = to_db(s.energy_density);
  return s;
}

Vector<double> Spectrogram::ridge() const {
  Vector<double> r(magnitude.cols());
  for (Index j = 0; j < magnitude.cols(); ++j) {
    Index best = 0;
    magnitude.col(j).maxCoeff(&best);
    r(j) = frequency(best);
  }
  return r;
}

Spectrogram spectrogram(const SampledWaveform<double>& w, Index window_length, Index hop, Index fft_size) {
  const Index n = w.size();
  if (window_length < 2 || window_length > n) {
    throw InvalidArgument("spectrogram: window length must lie in [2, sample count]");
  }
  if (hop < 1) {
    throw InvalidArgument("spectrogram: hop must be positive");
  }
  if (fft_size == 0) {
    fft_size = next_power_of_two(4 * window_length);
  }
  if (fft_size < window_length) {
    throw InvalidArgument("spectrogram: fft_size must be at least the window length");
  }

  Vector<double> window(window_length);
  for (Index i = 0; i < window_length; ++i) {
    window(i) = 0.5 - 0.5 * std::cos(2.0 * pi<double> * static_cast<double>(i) /
                                     static_cast<double>(window_length - 1));
  }

  const Index frames = (n - window_length) / hop + 1;
  const double dt = w.dt();
  Spectrogram s;
  s.bin_width = 1.0 / (static_cast<double>(fft_size) * dt);
  s.time.resize(frames);
  s.frequency.resize(fft_size);
  s.magnitude.resize(fft_size, frames);
  for (Index i = 0; i < fft_size; ++i) {
    s.frequency(i) = shifted_frequency(i, fft_size, s.bin_width);
  }

  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> in(static_cast<std::size_t>(fft_size));
  std::vector<std::complex<double>> out;
  for (Index j = 0; j < frames; ++j) {
    const Index start = j * hop;
    std::fill(in.begin(), in.end(), std::complex<double>(0.0, 0.0));
    for (Index i = 0; i < window_length; ++i) {
      in[static_cast<std::size_t>(i)] = w.samples(start + i) * window(i);
    }
    fft.fwd(out, in);
    s.time(j) = w.time(start) + 0.5 * static_cast<double>(window_length - 1) * dt;
    for (Index i = 0; i < fft_size; ++i) {
      const Index k = (i + fft_size - fft_size / 2) % fft_size;
      s.magnitude(i, j) = std::abs(out[static_cast<std::size_t>(k)]) * dt;
    }
  }
  return s;
}

}  // namespace mtsfm
