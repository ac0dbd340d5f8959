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

#include "mtsfm/ambiguity.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "mtsfm/spectral.hpp"

namespace mtsfm {

namespace {

using cd = std::complex<double>;

void require_uniform(const Vector<double>& axis, const char* name) {
  if (axis.size() < 1 || !all_finite(axis)) {
    throw InvalidArgument(std::string("aaf: ") + name + " grid must be non-empty and finite");
  }
  if (axis.size() < 3) {
    return;
  }
  const double step = (axis(axis.size() - 1) - axis(0)) / static_cast<double>(axis.size() - 1);
  const double scale = std::max(std::abs(step), 1e-300);
  for (Index i = 1; i < axis.size(); ++i) {
    if (std::abs((axis(i) - axis(i - 1)) - step) > 1e-9 * scale) {
      throw InvalidArgument(std::string("aaf: ") + name + " grid is not uniform");
    }
  }
}

// Chirp-z evaluation of X_j = sum_n p_n exp(j 2 pi (nu0 + j dnu) n dt) for
// all lag rows of one surface. The chirp kernel depends only on the grids,
// so it is transformed once.
class DopplerTransform {
 public:
  DopplerTransform(Index max_length, double nu0, double dnu, Index bins, double dt)
      : length_(max_length), bins_(bins), nu0_(nu0), dnu_(dnu), dt_(dt) {
    size_ = next_power_of_two(length_ + bins_ - 1);
    std::vector<cd> kernel(static_cast<std::size_t>(size_), cd(0.0, 0.0));
    // b_m = W^{-m^2/2} for m = -(L-1)..(J-1), wrapped into a circular buffer.
    for (Index m = -(length_ - 1); m < bins_; ++m) {
      const Index slot = (m + size_) % size_;
      kernel[static_cast<std::size_t>(slot)] = chirp(m, -1.0);
    }
    fft_.fwd(kernel_hat_, kernel);
  }

  // p has length <= max_length; sample n sits at time t_start + n dt.
  void apply(const std::vector<cd>& p, double t_start, Eigen::Ref<ComplexVector<double>> out) {
    std::vector<cd> a(static_cast<std::size_t>(size_), cd(0.0, 0.0));
    for (std::size_t n = 0; n < p.size(); ++n) {
      const double rotation = 2.0 * pi<double> * nu0_ * static_cast<double>(n) * dt_;
      a[n] = p[n] * std::polar(1.0, rotation) * chirp(static_cast<Index>(n), 1.0);
    }
    std::vector<cd> a_hat;
    fft_.fwd(a_hat, a);
    for (Index i = 0; i < size_; ++i) {
      a_hat[static_cast<std::size_t>(i)] *= kernel_hat_[static_cast<std::size_t>(i)];
    }
    std::vector<cd> conv;
    fft_.inv(conv, a_hat);
    for (Index j = 0; j < bins_; ++j) {
      const double nu = nu0_ + static_cast<double>(j) * dnu_;
      out(j) = conv[static_cast<std::size_t>(j)] * chirp(j, 1.0) *
               std::polar(1.0, 2.0 * pi<double> * nu * t_start);
    }
  }

 private:
  // W^{sign m^2 / 2} with W = exp(j 2 pi dnu dt).
  cd chirp(Index m, double sign) const {
    const double mm = static_cast<double>(m) * static_cast<double>(m);
    return std::polar(1.0, sign * pi<double> * dnu_ * dt_ * mm);
  }

  Index length_;
  Index bins_;
  Index size_ = 0;
  double nu0_;
  double dnu_;
  double dt_;
  Eigen::FFT<double> fft_;
  std::vector<cd> kernel_hat_;
};

}  // namespace

Vector<double> uniform_axis(double lo, double hi, Index points) {
  if (points < 1) {
    throw InvalidArgument("uniform_axis: need at least one point");
  }
  Vector<double> axis(points);
  if (points == 1) {
    axis(0) = lo;
    return axis;
  }
  const double span = static_cast<double>(points - 1);
  for (Index i = 0; i < points; ++i) {
    // Symmetric in i <-> points-1-i when lo == -hi.
    axis(i) = (lo * static_cast<double>(points - 1 - i) + hi * static_cast<double>(i)) / span;
  }
  return axis;
}

AmbiguitySurface aaf(const SampledWaveform<double>& w, const Vector<double>& tau_grid, const Vector<double>& nu_grid,
                     std::string source) {
  require_uniform(tau_grid, "delay");
  require_uniform(nu_grid, "Doppler");
  const Index n = w.size();
  const double dt = w.dt();

  std::vector<Index> lags(static_cast<std::size_t>(tau_grid.size()));
  for (Index r = 0; r < tau_grid.size(); ++r) {
    const double exact = tau_grid(r) / dt;
    const double rounded = std::round(exact);
    if (std::abs(exact - rounded) > 1e-6) {
      throw InvalidArgument("aaf: delay " + std::to_string(tau_grid(r)) +
                            " s is not a multiple of the sample spacing");
    }
    lags[static_cast<std::size_t>(r)] = static_cast<Index>(rounded);
  }

  const Index bins = nu_grid.size();
  const double nu0 = nu_grid(0);
  const double dnu = bins > 1 ? (nu_grid(bins - 1) - nu_grid(0)) / static_cast<double>(bins - 1) : 0.0;
  DopplerTransform transform(n, nu0, dnu, bins, dt);

  AmbiguitySurface s;
  s.tau = tau_grid;
  s.nu = nu_grid;
  s.source = std::move(source);
  s.energy = w.energy();
  s.values = ComplexMatrix<double>::Zero(tau_grid.size(), bins);

  std::vector<cd> product;
  ComplexVector<double> row(bins);
  for (Index r = 0; r < tau_grid.size(); ++r) {
    const Index lag = lags[static_cast<std::size_t>(r)];
    if (std::abs(lag) >= n) {
      continue;
    }
    // x(t - tau/2) x^*(t + tau/2) with x[i] the earlier and x[i + lag] the later
    // sample; its time is the midpoint of the two sample cells.
    const Index first = std::max<Index>(0, -lag);
    const Index last = std::min<Index>(n, n - lag);
    product.assign(static_cast<std::size_t>(last - first), cd(0.0, 0.0));
    for (Index i = first; i < last; ++i) {
      product[static_cast<std::size_t>(i - first)] = w.samples(i) * std::conj(w.samples(i + lag)) * dt;
    }
    const double t_start = w.time(first) + 0.5 * static_cast<double>(lag) * dt + 0.5 * dt;
    transform.apply(product, t_start, row);
    s.values.row(r) = row.transpose();
  }
  return s;
}

ComplexVector<double> acf(const SampledWaveform<double>& w, const Vector<double>& tau_grid) {
  Vector<double> zero(1);
  zero(0) = 0.0;
  return aaf(w, tau_grid, zero).values.col(0);
}

namespace {

Index nearest_zero(const Vector<double>& axis) {
  Index best = 0;
  axis.cwiseAbs().minCoeff(&best);
  return best;
}

struct Lobe {
  double width = 0.0;
  Index samples = 0;
};

// -3 dB width of a normalized power cut around `centre`, plus the sample count
// between the first local minima on either side.
Lobe measure_lobe(const Vector<double>& axis, const Vector<double>& power, Index centre, const char* name) {
  const Index n = axis.size();
  auto crossing = [&](int direction) {
    Index i = centre;
    while (true) {
      const Index next = i + direction;
      if (next < 0 || next >= n) {
        throw InvalidArgument(std::string("thumbtack_metrics: ") + name + " grid does not cover the mainlobe");
      }
      if (power(next) < 0.5) {
        const double f = (power(i) - 0.5) / (power(i) - power(next));
        return axis(i) + f * (axis(next) - axis(i));
      }
      i = next;
    }
  };
  auto null_index = [&](int direction) {
    Index i = centre;
    while (i + direction >= 0 && i + direction < n && power(i + direction) < power(i)) {
      i += direction;
    }
    return i;
  };
  Lobe lobe;
  lobe.width = crossing(+1) - crossing(-1);
  lobe.samples = null_index(+1) - null_index(-1) + 1;
  return lobe;
}

}  // namespace

ThumbtackMetrics thumbtack_metrics(const AmbiguitySurface& surface) {
  const Index rows = surface.values.rows();
  const Index cols = surface.values.cols();
  if (rows < 3 || cols < 3) {
    throw InvalidArgument("thumbtack_metrics: surface needs at least 3 samples per axis");
  }
  const Index r0 = nearest_zero(surface.tau);
  const Index c0 = nearest_zero(surface.nu);
  const double peak = std::norm(surface.values(r0, c0));
  if (!(peak > 0.0)) {
    throw InvalidArgument("thumbtack_metrics: zero response at the origin");
  }
  const Matrix<double> power = surface.values.cwiseAbs2() / peak;

  const Lobe delay = measure_lobe(surface.tau, power.col(c0), r0, "delay");
  const Lobe doppler = measure_lobe(surface.nu, power.row(r0).transpose(), c0, "Doppler");
  if (delay.samples < kMinMainlobeSamples || doppler.samples < kMinMainlobeSamples) {
    throw InvalidArgument("thumbtack_metrics: grid too coarse to resolve the mainlobe");
  }

  ThumbtackMetrics m;
  m.delay_width = delay.width;
  m.doppler_width = doppler.width;
  double peak_pedestal = 0.0;
  double sum = 0.0;
  Index count = 0;
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) {
      if (std::abs(surface.tau(r)) > 3.0 * m.delay_width || std::abs(surface.nu(c)) > 3.0 * m.doppler_width) {
        peak_pedestal = std::max(peak_pedestal, power(r, c));
        sum += power(r, c);
        ++count;
      }
    }
  }
  if (count == 0) {
    throw InvalidArgument("thumbtack_metrics: surface does not extend past the mainlobe");
  }
  m.peak_pedestal_db = 10.0 * std::log10(std::max(peak_pedestal, 1e-300));
  m.mean_pedestal_db = 10.0 * std::log10(std::max(sum / static_cast<double>(count), 1e-300));
  return m;
}

}  // namespace mtsfm
