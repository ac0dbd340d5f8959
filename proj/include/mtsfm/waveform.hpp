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

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <utility>

#include "mtsfm/types.hpp"

// Multi-tone sinusoidal FM waveforms. Waveform m has instantaneous phase
//   phi_m(t) = sum_k alpha(m, k) sin(2 pi k t / T),   -T/2 <= t <= T/2,
// so its modulation function is a cosine series with coefficients alpha k / T.

namespace mtsfm {

/// M x K modulation indices plus the common pulse duration T (seconds).
template <typename Scalar = double>
class ModulationIndexSet {
 public:
  ModulationIndexSet() = default;

  ModulationIndexSet(Matrix<Scalar> alpha, Scalar duration)
      : alpha_(std::move(alpha)), duration_(duration) {
    if (alpha_.rows() < 1 || alpha_.cols() < 1) {
      throw InvalidArgument("ModulationIndexSet: need M >= 1 and K >= 1");
    }
    if (!(duration_ > Scalar(0)) || !std::isfinite(static_cast<double>(duration_))) {
      throw InvalidArgument("ModulationIndexSet: duration must be positive and finite");
    }
    if (!all_finite(alpha_)) {
      throw InvalidArgument("ModulationIndexSet: non-finite modulation index");
    }
  }

  const Matrix<Scalar>& alpha() const { return alpha_; }
  Scalar duration() const { return duration_; }
  Index elements() const { return alpha_.rows(); }
  Index harmonics() const { return alpha_.cols(); }

  auto row(Index m) const { return alpha_.row(m); }

  bool operator==(const ModulationIndexSet& other) const {
    return duration_ == other.duration_ && alpha_.rows() == other.alpha_.rows() &&
           alpha_.cols() == other.alpha_.cols() && alpha_ == other.alpha_;
  }

 private:
  Matrix<Scalar> alpha_;
  Scalar duration_ = Scalar(1);
};

namespace detail {

template <typename Scalar>
void check_support(Scalar duration, Scalar t) {
  if (!(duration > Scalar(0))) {
    throw InvalidArgument("waveform: duration must be positive");
  }
  // A few ulps of slack so grid endpoints computed as -T/2 + i dt stay inside.
  const Scalar slack = Scalar(8) * std::numeric_limits<Scalar>::epsilon() * duration;
  if (!(std::abs(t) <= duration / Scalar(2) + slack)) {
    throw InvalidArgument("waveform: time " + std::to_string(double(t)) +
                          " outside the pulse support [-T/2, T/2]");
  }
}

}  // namespace detail

/// Instantaneous phase (radians) at time t.
template <typename Derived>
typename Derived::Scalar phase_at(const Eigen::MatrixBase<Derived>& alpha_row,
                                  typename Derived::Scalar duration, typename Derived::Scalar t) {
  using Scalar = typename Derived::Scalar;
  detail::check_support(duration, t);
  Scalar phase(0);
  for (Index k = 0; k < alpha_row.size(); ++k) {
    phase += alpha_row(k) * std::sin(Scalar(2) * pi<Scalar> * Scalar(k + 1) * t / duration);
  }
  return phase;
}

/// Instantaneous frequency (Hz): (1/2pi) dphi/dt = sum_k (k/T) alpha_k cos(2 pi k t / T).
template <typename Derived>
typename Derived::Scalar modulation_function_at(const Eigen::MatrixBase<Derived>& alpha_row,
                                                typename Derived::Scalar duration,
                                                typename Derived::Scalar t) {
  using Scalar = typename Derived::Scalar;
  detail::check_support(duration, t);
  Scalar f(0);
  for (Index k = 0; k < alpha_row.size(); ++k) {
    const Scalar harmonic = Scalar(k + 1);
    f += harmonic / duration * alpha_row(k) * std::cos(Scalar(2) * pi<Scalar> * harmonic * t / duration);
  }
  return f;
}

/// Cosine-series coefficients a_k = alpha_k k / T of the modulation function.
template <typename Derived>
Vector<typename Derived::Scalar> modulation_coefficients(const Eigen::MatrixBase<Derived>& alpha_row,
                                                         typename Derived::Scalar duration) {
  using Scalar = typename Derived::Scalar;
  Vector<Scalar> a(alpha_row.size());
  for (Index k = 0; k < alpha_row.size(); ++k) {
    a(k) = alpha_row(k) * Scalar(k + 1) / duration;
  }
  return a;
}

/// Squared RMS bandwidth (rad/s)^2: (2 pi / T)^2 sum_k k^2 alpha_k^2 / 2.
template <typename Derived>
typename Derived::Scalar rms_bandwidth_sq(const Eigen::MatrixBase<Derived>& alpha_row,
                                          typename Derived::Scalar duration) {
  using Scalar = typename Derived::Scalar;
  const Scalar w = Scalar(2) * pi<Scalar> / duration;
  Scalar sum(0);
  for (Index k = 0; k < alpha_row.size(); ++k) {
    const Scalar harmonic = Scalar(k + 1);
    sum += harmonic * harmonic * alpha_row(k) * alpha_row(k) / Scalar(2);
  }
  return w * w * sum;
}

/// Points of the time grid used for swept-bandwidth and peak-frequency scans.
inline constexpr Index kSweepGridPoints = 4096;

/// Extremes of the modulation function over a uniform grid on [-T/2, T/2).
template <typename Derived>
std::pair<typename Derived::Scalar, typename Derived::Scalar> frequency_range(
    const Eigen::MatrixBase<Derived>& alpha_row, typename Derived::Scalar duration,
    Index grid_points = kSweepGridPoints) {
  using Scalar = typename Derived::Scalar;
  Scalar lo = std::numeric_limits<Scalar>::infinity();
  Scalar hi = -lo;
  for (Index i = 0; i < grid_points; ++i) {
    const Scalar t = -duration / Scalar(2) + duration * Scalar(i) / Scalar(grid_points);
    const Scalar f = modulation_function_at(alpha_row, duration, t);
    lo = std::min(lo, f);
    hi = std::max(hi, f);
  }
  return {lo, hi};
}

/// Peak-to-peak excursion of the modulation function (Hz).
template <typename Derived>
typename Derived::Scalar swept_bandwidth(const Eigen::MatrixBase<Derived>& alpha_row,
                                         typename Derived::Scalar duration) {
  const auto [lo, hi] = frequency_range(alpha_row, duration);
  return hi - lo;
}

/// Largest |f(t)| over the sweep grid (Hz).
template <typename Derived>
typename Derived::Scalar peak_frequency(const Eigen::MatrixBase<Derived>& alpha_row,
                                        typename Derived::Scalar duration) {
  const auto [lo, hi] = frequency_range(alpha_row, duration);
  return std::max(std::abs(lo), std::abs(hi));
}

/// Minimum sample rate accepted by sample_waveform, as a multiple of the peak frequency.
inline constexpr double kOversampling = 8.0;

/// Uniformly sampled waveform x(t_i) = exp(j phi(t_i)) / sqrt(M T), t_i = -T/2 + i / fs.
template <typename Scalar = double>
struct SampledWaveform {
  ComplexVector<Scalar> samples;
  Scalar sample_rate = Scalar(1);
  Scalar duration = Scalar(1);
  Scalar energy_norm = Scalar(1);  // 1/M

  Index size() const { return samples.size(); }
  Scalar dt() const { return Scalar(1) / sample_rate; }
  Scalar time(Index i) const { return -duration / Scalar(2) + Scalar(i) / sample_rate; }
  Scalar energy() const { return samples.squaredNorm() * dt(); }
};

/// Sample one waveform of an M-element set. The sample count is round(T fs);
/// sample_rate must be at least kOversampling times the peak instantaneous frequency.
template <typename Derived>
SampledWaveform<typename Derived::Scalar> sample_waveform(const Eigen::MatrixBase<Derived>& alpha_row,
                                                          typename Derived::Scalar duration, Index elements,
                                                          typename Derived::Scalar sample_rate) {
  using Scalar = typename Derived::Scalar;
  if (elements < 1) {
    throw InvalidArgument("sample_waveform: element count must be >= 1");
  }
  if (!(duration > Scalar(0)) || !(sample_rate > Scalar(0))) {
    throw InvalidArgument("sample_waveform: duration and sample rate must be positive");
  }
  const Scalar required = Scalar(kOversampling) * peak_frequency(alpha_row, duration);
  if (sample_rate < required) {
    throw InvalidArgument("sample_waveform: sample rate " + std::to_string(double(sample_rate)) +
                          " Hz below required " + std::to_string(double(required)) + " Hz");
  }
  const auto count = static_cast<Index>(std::llround(static_cast<double>(duration * sample_rate)));
  if (count < 1) {
    throw InvalidArgument("sample_waveform: fewer than one sample in the pulse");
  }

  SampledWaveform<Scalar> w;
  // Exact N / T keeps the grid tiling [-T/2, T/2) and the energy at 1/M.
  w.sample_rate = Scalar(count) / duration;
  w.duration = duration;
  w.energy_norm = Scalar(1) / Scalar(elements);
  w.samples.resize(count);
  const Scalar amplitude = Scalar(1) / std::sqrt(Scalar(elements) * duration);
  for (Index i = 0; i < count; ++i) {
    w.samples(i) = std::polar(amplitude, phase_at(alpha_row, duration, w.time(i)));
  }
  return w;
}

}  // namespace mtsfm
