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
#include <vector>

#include <Eigen/Eigenvalues>

#include "mtsfm/gbf.hpp"
#include "mtsfm/types.hpp"
#include "mtsfm/waveform.hpp"

// Array-level math for an M-element uniform linear array with half-wavelength
// spacing, in sine-angle coordinates u = sin(theta).

namespace mtsfm {

/// a(u)_m = exp(j pi m u), m = 0..M-1.
template <typename Scalar = double>
ComplexVector<Scalar> steering_vector(Scalar u, Index elements) {
  if (!(std::abs(u) <= Scalar(1))) {
    throw InvalidArgument("steering_vector: |u| must not exceed 1");
  }
  if (elements < 1) {
    throw InvalidArgument("steering_vector: element count must be >= 1");
  }
  ComplexVector<Scalar> a(elements);
  for (Index m = 0; m < elements; ++m) {
    a(m) = std::polar(Scalar(1), pi<Scalar> * Scalar(m) * u);
  }
  return a;
}

/// Strictly increasing sample points in [-1, 1].
template <typename Scalar = double>
class AngleGrid {
 public:
  AngleGrid() = default;

  explicit AngleGrid(Vector<Scalar> u) : u_(std::move(u)) {
    if (u_.size() < 2) {
      throw InvalidArgument("AngleGrid: need at least two points");
    }
    for (Index i = 0; i < u_.size(); ++i) {
      if (!(std::abs(u_(i)) <= Scalar(1))) {
        throw InvalidArgument("AngleGrid: values must lie in [-1, 1]");
      }
      if (i > 0 && !(u_(i) > u_(i - 1))) {
        throw InvalidArgument("AngleGrid: values must be strictly increasing");
      }
    }
  }

  /// n points spanning [-1, 1]; u_i = (2i - (n-1)) / (n-1) so u_{n-1-i} == -u_i exactly.
  static AngleGrid uniform(Index points) {
    if (points < 2) {
      throw InvalidArgument("AngleGrid::uniform: need at least two points");
    }
    Vector<Scalar> u(points);
    const Scalar span = Scalar(points - 1);
    for (Index i = 0; i < points; ++i) {
      u(i) = Scalar(2 * i - (points - 1)) / span;
    }
    u(0) = Scalar(-1);
    u(points - 1) = Scalar(1);
    return AngleGrid(std::move(u));
  }

  const Vector<Scalar>& values() const { return u_; }
  Index size() const { return u_.size(); }
  Scalar operator()(Index i) const { return u_(i); }

  /// Trapezoidal-rule weights for integrals over the grid in du.
  Vector<Scalar> trapezoid_weights() const {
    Vector<Scalar> w = Vector<Scalar>::Zero(u_.size());
    for (Index i = 0; i + 1 < u_.size(); ++i) {
      const Scalar h = (u_(i + 1) - u_(i)) / Scalar(2);
      w(i) += h;
      w(i + 1) += h;
    }
    return w;
  }

  bool operator==(const AngleGrid& other) const {
    return u_.size() == other.u_.size() && u_ == other.u_;
  }

 private:
  Vector<Scalar> u_;
};

template <typename Scalar, typename Derived>
Scalar trapezoid(const AngleGrid<Scalar>& grid, const Eigen::MatrixBase<Derived>& values) {
  if (values.size() != grid.size()) {
    throw InvalidArgument("trapezoid: value count does not match the grid");
  }
  return grid.trapezoid_weights().dot(values.template cast<Scalar>());
}

/// Real symmetric waveform correlation matrix of an equal-power M-element set.
///
/// Invariants, checked on construction: R == R^T exactly, diag(R) == 1/M
/// exactly, min eigenvalue >= -1e-10, |R(m, m')| <= 1/M.
template <typename Scalar = double>
class CorrelationMatrix {
 public:
  static constexpr double kPsdTolerance = 1e-10;

  CorrelationMatrix() = default;

  explicit CorrelationMatrix(Matrix<Scalar> r) : r_(std::move(r)) {
    const Index m = r_.rows();
    if (m < 1 || r_.cols() != m) {
      throw InvalidMatrix("CorrelationMatrix: matrix must be square and non-empty");
    }
    if (!all_finite(r_)) {
      throw InvalidMatrix("CorrelationMatrix: non-finite entry");
    }
    const Scalar diag = Scalar(1) / Scalar(m);
    for (Index i = 0; i < m; ++i) {
      if (r_(i, i) != diag) {
        throw InvalidMatrix("CorrelationMatrix: diagonal entry " + std::to_string(i) + " is not 1/M");
      }
      for (Index j = 0; j < i; ++j) {
        if (r_(i, j) != r_(j, i)) {
          throw InvalidMatrix("CorrelationMatrix: matrix is not symmetric");
        }
        if (std::abs(r_(i, j)) > diag * (Scalar(1) + Scalar(1e-12))) {
          throw InvalidMatrix("CorrelationMatrix: off-diagonal magnitude exceeds 1/M");
        }
      }
    }
    if (min_eigenvalue() < -Scalar(kPsdTolerance)) {
      throw InvalidMatrix("CorrelationMatrix: matrix is not positive semi-definite");
    }
  }

  /// Orthogonal waveforms: R = I / M.
  static CorrelationMatrix omnidirectional(Index elements) {
    return CorrelationMatrix(Matrix<Scalar>::Identity(elements, elements) / Scalar(elements));
  }

  /// Identical waveforms: every entry 1/M.
  static CorrelationMatrix phased_array(Index elements) {
    return CorrelationMatrix(Matrix<Scalar>::Constant(elements, elements, Scalar(1) / Scalar(elements)));
  }

  const Matrix<Scalar>& matrix() const { return r_; }
  Index elements() const { return r_.rows(); }
  Scalar operator()(Index i, Index j) const { return r_(i, j); }

  Scalar min_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> solver(r_, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff();
  }

 private:
  Matrix<Scalar> r_;
};

namespace detail {

// Forces the exact structural invariants onto an assembled matrix.
template <typename Scalar>
Matrix<Scalar> finish_correlation(Matrix<Scalar> r) {
  const Index m = r.rows();
  Matrix<Scalar> sym = (r + r.transpose()) / Scalar(2);
  sym.diagonal().setConstant(Scalar(1) / Scalar(m));
  return sym;
}

// Largest spread max_m alpha(m,k) - min_m alpha(m,k) over k: the largest
// |z_k| among all pairwise GBF arguments.
template <typename Scalar>
Scalar max_pairwise_spread(const Matrix<Scalar>& alpha) {
  return (alpha.colwise().maxCoeff() - alpha.colwise().minCoeff()).maxCoeff();
}

}  // namespace detail

/// Node count used for all entries of a set's correlation matrix.
template <typename Scalar>
Index default_correlation_points(const ModulationIndexSet<Scalar>& idx) {
  Vector<Scalar> widest = Vector<Scalar>::Constant(idx.harmonics(), detail::max_pairwise_spread(idx.alpha()));
  return default_gbf_points(widest);
}

/// R(m, m') = (1/M) J_0(alpha_m - alpha_m'), the closed form of the waveform inner products.
template <typename Scalar>
CorrelationMatrix<Scalar> correlation_matrix_gbf(const ModulationIndexSet<Scalar>& idx, Index points = 0) {
  const Index m = idx.elements();
  const GbfQuadrature<Scalar> quad(idx.harmonics(), points > 0 ? points : default_correlation_points(idx));
  const Matrix<Scalar> phase = quad.phases(idx.alpha());
  Matrix<Scalar> r(m, m);
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < i; ++j) {
      const Scalar value = quad.j0_from_phase(phase.col(i) - phase.col(j)) / Scalar(m);
      r(i, j) = value;
      r(j, i) = value;
    }
  }
  return CorrelationMatrix<Scalar>(detail::finish_correlation(std::move(r)));
}

/// Direct time-domain inner products: R(m, m') = integral x_m(t) x_m'(t)^* dt by
/// the trapezoidal rule on [-T/2, T/2] (the integrand is T-periodic).
template <typename Scalar>
CorrelationMatrix<Scalar> correlation_matrix_numeric(const ModulationIndexSet<Scalar>& idx, Index points = 0) {
  const Index m = idx.elements();
  const Scalar duration = idx.duration();
  const Index n = points > 0 ? points : default_correlation_points(idx);
  const Scalar dt = duration / Scalar(n);
  const Scalar amplitude = Scalar(1) / std::sqrt(Scalar(m) * duration);

  ComplexMatrix<Scalar> x(n, m);
  for (Index i = 0; i < n; ++i) {
    const Scalar t = -duration / Scalar(2) + Scalar(i) * dt;
    for (Index e = 0; e < m; ++e) {
      x(i, e) = std::polar(amplitude, phase_at(idx.row(e), duration, t));
    }
  }
  const ComplexMatrix<Scalar> gram = (x.transpose() * x.conjugate()) * dt;
  const Scalar residue = gram.imag().cwiseAbs().maxCoeff();
  if (residue > Scalar(kGbfImaginaryTolerance)) {
    throw NumericalFailure("correlation_matrix_numeric: imaginary residue " + std::to_string(double(residue)) +
                           " exceeds tolerance");
  }
  const Scalar diag_error = (gram.real().diagonal().array() - Scalar(1) / Scalar(m)).abs().maxCoeff();
  if (diag_error > Scalar(1e-12)) {
    throw NumericalFailure("correlation_matrix_numeric: waveform energy deviates from 1/M");
  }
  return CorrelationMatrix<Scalar>(detail::finish_correlation<Scalar>(gram.real()));
}

/// Lag sums r_d, d = 0..M-1, such that P(u) = sum_d r_d cos(pi d u) for real symmetric R.
template <typename Scalar>
Vector<Scalar> lag_sums(const Matrix<Scalar>& r) {
  const Index m = r.rows();
  Vector<Scalar> lags(m);
  lags(0) = r.trace();
  for (Index d = 1; d < m; ++d) {
    lags(d) = Scalar(2) * r.diagonal(-d).sum();
  }
  return lags;
}

/// Beampattern from lag sums; no positivity check.
template <typename Scalar>
Vector<Scalar> beampattern_from_lags(const Vector<Scalar>& lags, const AngleGrid<Scalar>& grid) {
  Vector<Scalar> p(grid.size());
  for (Index i = 0; i < grid.size(); ++i) {
    Scalar sum(0);
    for (Index d = 0; d < lags.size(); ++d) {
      sum += lags(d) * std::cos(pi<Scalar> * Scalar(d) * grid(i));
    }
    p(i) = sum;
  }
  return p;
}

/// Negative beampattern values above this (in magnitude) are roundoff and clipped to zero.
inline constexpr double kBeampatternClip = 1e-10;

/// P(u_i) = a(u_i)^H R a(u_i).
template <typename Scalar>
Vector<Scalar> beampattern(const CorrelationMatrix<Scalar>& r, const AngleGrid<Scalar>& grid) {
  Vector<Scalar> p = beampattern_from_lags(lag_sums(r.matrix()), grid);
  for (Index i = 0; i < p.size(); ++i) {
    if (p(i) < Scalar(0)) {
      if (p(i) < -Scalar(kBeampatternClip)) {
        throw InvalidMatrix("beampattern: negative power " + std::to_string(double(p(i))) + " at u = " +
                            std::to_string(double(grid(i))));
      }
      p(i) = Scalar(0);
    }
  }
  return p;
}

enum class TemplateNormalization {
  // integral of P_d du equals the power any equal-power set radiates,
  // integral of a^H R a du = 2 trace(R) = 2.
  radiated_power,
  // integral of P_d du equals the element count M.
  array_size,
};

/// Desired beampattern sampled on a grid, with the passband intervals that
/// define the PSLR regions.
template <typename Scalar = double>
struct BeampatternTemplate {
  AngleGrid<Scalar> grid;
  Vector<Scalar> desired;
  std::vector<std::pair<Scalar, Scalar>> passband;
  Scalar amplitude = Scalar(0);  // passband level of piecewise-constant templates

  // Slack on interval edges so grid points landing on a boundary count as inside.
  static constexpr double kEdgeTolerance = 1e-12;

  /// Arbitrary target samples on `grid`.
  static BeampatternTemplate from_samples(AngleGrid<Scalar> grid, Vector<Scalar> desired,
                                          std::vector<std::pair<Scalar, Scalar>> passband) {
    if (desired.size() != grid.size()) {
      throw InvalidArgument("BeampatternTemplate: sample count does not match the grid");
    }
    BeampatternTemplate t;
    t.grid = std::move(grid);
    t.desired = std::move(desired);
    t.passband = std::move(passband);
    t.amplitude = t.desired.size() > 0 ? t.desired.maxCoeff() : Scalar(0);
    return t;
  }

  bool in_passband(Scalar u) const {
    return std::any_of(passband.begin(), passband.end(), [u](const auto& iv) {
      return u >= iv.first - Scalar(kEdgeTolerance) && u <= iv.second + Scalar(kEdgeTolerance);
    });
  }

  /// Distance from u to the nearest passband interval (zero inside).
  Scalar distance_to_passband(Scalar u) const {
    Scalar best = std::numeric_limits<Scalar>::infinity();
    for (const auto& [lo, hi] : passband) {
      best = std::min(best, std::max({lo - u, u - hi, Scalar(0)}));
    }
    return best;
  }

  const Vector<Scalar>& values() const { return desired; }
};

/// P_d(u) = A for |u| <= halfwidth, else 0.
template <typename Scalar>
BeampatternTemplate<Scalar> desired_beampattern(Scalar halfwidth, Index elements, const AngleGrid<Scalar>& grid,
                                                TemplateNormalization normalization =
                                                    TemplateNormalization::radiated_power) {
  if (!(halfwidth > Scalar(0) && halfwidth <= Scalar(1))) {
    throw InvalidArgument("desired_beampattern: halfwidth must lie in (0, 1]");
  }
  if (elements < 1) {
    throw InvalidArgument("desired_beampattern: element count must be >= 1");
  }
  const Scalar total = normalization == TemplateNormalization::array_size ? Scalar(elements) : Scalar(2);
  BeampatternTemplate<Scalar> t;
  t.grid = grid;
  t.passband = {{-halfwidth, halfwidth}};
  t.amplitude = total / (Scalar(2) * halfwidth);
  t.desired.resize(grid.size());
  for (Index i = 0; i < grid.size(); ++i) {
    t.desired(i) = t.in_passband(grid(i)) ? t.amplitude : Scalar(0);
  }
  return t;
}

/// Peak-to-sidelobe level ratio in dB: peak P over points farther than `guard`
/// from the passband, relative to peak P inside the passband.
template <typename Scalar, typename Derived>
Scalar pslr(const Eigen::MatrixBase<Derived>& power, const BeampatternTemplate<Scalar>& tmpl, Scalar guard) {
  if (power.size() != tmpl.grid.size()) {
    throw InvalidArgument("pslr: beampattern and template grids differ in size");
  }
  if (!(guard >= Scalar(0))) {
    throw InvalidArgument("pslr: guard must be non-negative");
  }
  Scalar passband_peak(-1);
  Scalar sidelobe_peak(-1);
  for (Index i = 0; i < power.size(); ++i) {
    const Scalar u = tmpl.grid(i);
    const Scalar p = power(i);
    if (tmpl.in_passband(u)) {
      passband_peak = std::max(passband_peak, p);
    } else if (tmpl.distance_to_passband(u) > guard + Scalar(BeampatternTemplate<Scalar>::kEdgeTolerance)) {
      sidelobe_peak = std::max(sidelobe_peak, p);
    }
  }
  if (sidelobe_peak < Scalar(0)) {
    throw InvalidArgument("pslr: empty sidelobe region");
  }
  if (!(passband_peak > Scalar(0))) {
    throw InvalidArgument("pslr: no passband power");
  }
  return Scalar(10) * std::log10(sidelobe_peak / passband_peak);
}

/// Fraction of integral P du that falls inside |u| <= halfwidth.
template <typename Scalar, typename Derived>
Scalar power_fraction_within(const Eigen::MatrixBase<Derived>& power, const AngleGrid<Scalar>& grid,
                             Scalar halfwidth) {
  const Vector<Scalar> w = grid.trapezoid_weights();
  Scalar inside(0), total(0);
  for (Index i = 0; i < grid.size(); ++i) {
    total += w(i) * power(i);
    if (std::abs(grid(i)) <= halfwidth + Scalar(1e-12)) {
      inside += w(i) * power(i);
    }
  }
  return inside / total;
}

}  // namespace mtsfm
