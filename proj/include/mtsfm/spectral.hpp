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

#include "mtsfm/types.hpp"
#include "mtsfm/waveform.hpp"

namespace mtsfm {

/// Energy spectrum of a sampled waveform on an fftshift-ordered frequency axis.
struct Spectrum {
  Vector<double> frequency;       // Hz, ascending
  Vector<double> energy_density;  // |X(f)|^2, energy per Hz
  Vector<double> power_db;        // 10 log10 of energy_density relative to its peak
  double bin_width = 0.0;         // Hz

  /// Sum of energy_density * bin_width; equals the time-domain energy (Parseval).
  double total_energy() const;
  /// Energy in bins whose centre lies in [lo, hi].
  double energy_within(double lo, double hi) const;
};

/// Zero-padded DFT magnitude squared, X(f_k) = dt sum_n x_n exp(-j 2 pi f_k t_n).
Spectrum spectrum(const SampledWaveform<double>& w, Index fft_size);

struct Spectrogram {
  Vector<double> time;       // frame centres, s
  Vector<double> frequency;  // Hz, ascending
  Matrix<double> magnitude;  // frequency x time, |STFT|
  double bin_width = 0.0;

  /// Frequency of the largest magnitude in each frame.
  Vector<double> ridge() const;
};

/// Hann-windowed short-time Fourier magnitude. fft_size == 0 picks the next
/// power of two at least 4x the window length.
Spectrogram spectrogram(const SampledWaveform<double>& w, Index window_length, Index hop, Index fft_size = 0);

Index next_power_of_two(Index n);

}  // namespace mtsfm
