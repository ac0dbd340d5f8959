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

#include <string>

#include "mtsfm/types.hpp"
#include "mtsfm/waveform.hpp"

namespace mtsfm {

/// Narrowband auto-ambiguity function samples, rows indexed by delay and
/// columns by Doppler.
struct AmbiguitySurface {
  ComplexMatrix<double> values;
  Vector<double> tau;  // s
  Vector<double> nu;   // Hz
  std::string source;
  double energy = 0.0;  // energy of the source waveform
};

/// chi(tau, nu) = integral x(t - tau/2) x^*(t + tau/2) exp(j 2 pi nu t) dt.
///
/// Delays must be integer multiples of the sample spacing; both grids must be
/// uniform. Delays with |tau| >= T have no overlap and give zero.
AmbiguitySurface aaf(const SampledWaveform<double>& w, const Vector<double>& tau_grid,
                     const Vector<double>& nu_grid, std::string source = {});

/// Zero-Doppler cut of the ambiguity function.
ComplexVector<double> acf(const SampledWaveform<double>& w, const Vector<double>& tau_grid);

struct ThumbtackMetrics {
  double delay_width = 0.0;    // s, full -3 dB width of |chi(tau, 0)|^2
  double doppler_width = 0.0;  // Hz, full -3 dB width of |chi(0, nu)|^2
  double peak_pedestal_db = 0.0;
  double mean_pedestal_db = 0.0;
};

/// Mainlobe widths and sidelobe pedestal statistics. The pedestal is every
/// sample with |tau| > 3 delay widths or |nu| > 3 Doppler widths.
ThumbtackMetrics thumbtack_metrics(const AmbiguitySurface& surface);

/// Minimum samples required between the first nulls on each side of the
/// mainlobe, per axis.
inline constexpr Index kMinMainlobeSamples = 10;

/// Uniform grid of `points` values spanning [lo, hi].
Vector<double> uniform_axis(double lo, double hi, Index points);

}  // namespace mtsfm
