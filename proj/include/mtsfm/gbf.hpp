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
#include <functional>
#include <vector>

#include "mtsfm/bessel.hpp"
#include "mtsfm/types.hpp"

// Cylindrical generalized Bessel functions of K-dimensional argument,
//
//   J_n(z_1..z_K) = (1/2pi) * integral_{-pi}^{pi} exp(j [sum_k z_k sin(k phi) - n phi]) dphi,
//
// evaluated with the trapezoidal rule over one period. The integrand is
// periodic and entire, so the rule converges geometrically once the node
// count exceeds the integrand's effective bandwidth (about sum_k k |z_k|).

namespace mtsfm {

/// Default node count for a GBF argument: max(512, 64 K ceil(max|z_k| + 8)).
template <typename Derived>
Index default_gbf_points(const Eigen::MatrixBase<Derived>& z) {
  const Index harmonics = z.size();
  const double zmax = harmonics > 0 ? static_cast<double>(z.cwiseAbs().maxCoeff()) : 0.0;
  const auto spread = static_cast<Index>(std::ceil(zmax + 8.0));
  return std::max<Index>(512, 64 * harmonics * spread);
}

/// Trapezoidal quadrature over one period with a cached sin(k phi_i) table.
///
/// Only the half period phi_i = 2 pi i / N, i = 0..N/2, is stored: the phase
/// sum_k z_k sin(k phi) is odd in phi, so the real part of the integrand is
/// even and the zeroth-order GBF and its gradient need only half the nodes.
template <typename Scalar>
class GbfQuadrature {
 public:
  GbfQuadrature(Index harmonics, Index points)
      : harmonics_(harmonics), points_(points + (points % 2)) {
    if (harmonics < 1) {
      throw InvalidArgument("GbfQuadrature: harmonic count must be >= 1");
    }
    if (points_ < 4) {
      throw InvalidArgument("GbfQuadrature: need at least 4 quadrature points");
    }
    const Index half = points_ / 2;
    // sin(2 pi j / N) for j = 0..N-1; products k*i are reduced mod N so every
    // table entry is an exact periodic sample.
    Vector<Scalar> base(points_);
    for (Index j = 0; j < points_; ++j) {
      base(j) = std::sin(Scalar(2) * pi<Scalar> * Scalar(j) / Scalar(points_));
    }
    sines_.resize(half + 1, harmonics_);
    for (Index k = 1; k <= harmonics_; ++k) {
      for (Index i = 0; i <= half; ++i) {
        sines_(i, k - 1) = base((k * i) % points_);
      }
    }
    weights_.setConstant(half + 1, Scalar(2) / Scalar(points_));
    weights_(0) = Scalar(1) / Scalar(points_);
    weights_(half) = Scalar(1) / Scalar(points_);
  }

  Index harmonics() const { return harmonics_; }
  Index points() const { return points_; }

  /// (N/2+1) x K table of sin(k phi_i).
  const Matrix<Scalar>& half_sines() const { return sines_; }
  const Vector<Scalar>& half_weights() const { return weights_; }

  /// Phase sum_k alpha(m, k) sin(k phi_i) for every row m of an M x K matrix;
  /// result is (N/2+1) x M. Differences of two columns are the phase of the
  /// GBF argument alpha_m - alpha_m'.
  template <typename Derived>
  Matrix<Scalar> phases(const Eigen::MatrixBase<Derived>& alpha) const {
    check_width(alpha.cols());
    return sines_ * alpha.transpose();
  }

  /// J_0 given the half-period phase samples of its argument.
  template <typename Derived>
  Scalar j0_from_phase(const Eigen::MatrixBase<Derived>& phase) const {
    return weights_.dot(phase.array().cos().matrix());
  }

  template <typename Derived>
  Scalar j0(const Eigen::MatrixBase<Derived>& z) const {
    check_width(z.size());
    return j0_from_phase(sines_ * z);
  }

  /// d J_0 / d z_k = -(1/2pi) integral sin(k phi) sin(sum_j z_j sin(j phi)) dphi.
  template <typename Derived>
  Vector<Scalar> gradient(const Eigen::MatrixBase<Derived>& z) const {
    check_width(z.size());
    const Vector<Scalar> phase = sines_ * z;
    return -(sines_.transpose() * (weights_.array() * phase.array().sin()).matrix());
  }

  /// Full-period trapezoidal sum for order n, returned as a complex number.
  /// The imaginary part is a roundoff residue for real arguments.
  template <typename Derived>
  std::complex<Scalar> coefficient(int order, const Eigen::MatrixBase<Derived>& z) const {
    check_width(z.size());
    const Index half = points_ / 2;
    const Vector<Scalar> phase = sines_ * z;
    const Index n_mod = ((static_cast<Index>(order) % points_) + points_) % points_;
    std::complex<Scalar> sum(0, 0);
    for (Index i = 0; i < points_; ++i) {
      const Scalar psi = i <= half ? phase(i) : -phase(points_ - i);
      const Scalar carrier =
          Scalar(2) * pi<Scalar> * Scalar((n_mod * i) % points_) / Scalar(points_);
      sum += std::polar(Scalar(1), psi - carrier);
    }
    return sum / Scalar(points_);
  }

 private:
  void check_width(Index width) const {
    if (width != harmonics_) {
      throw InvalidArgument("GbfQuadrature: argument has " + std::to_string(width) +
                            " harmonics, table has " + std::to_string(harmonics_));
    }
  }

  Index harmonics_;
  Index points_;
  Matrix<Scalar> sines_;
  Vector<Scalar> weights_;
};

/// Imaginary residue above which gbf_eval reports a numerical failure.
inline constexpr double kGbfImaginaryTolerance = 1e-9;

/// n-th order cylindrical GBF of real K-dimensional argument z.
/// `points` == 0 selects default_gbf_points(z); odd counts are rounded up.
template <typename Derived>
typename Derived::Scalar gbf_eval(int order, const Eigen::MatrixBase<Derived>& z, Index points = 0) {
  using Scalar = typename Derived::Scalar;
  if (z.size() < 1) {
    throw InvalidArgument("gbf_eval: argument must have at least one harmonic");
  }
  if (!all_finite(z)) {
    throw InvalidArgument("gbf_eval: non-finite argument");
  }
  const GbfQuadrature<Scalar> quad(z.size(), points > 0 ? points : default_gbf_points(z));
  const std::complex<Scalar> value = quad.coefficient(order, z);
  if (std::abs(value.imag()) > Scalar(kGbfImaginaryTolerance)) {
    throw NumericalFailure("gbf_eval: imaginary residue " + std::to_string(double(value.imag())) +
                           " exceeds tolerance; quadrature under-resolved");
  }
  return value.real();
}

/// Gradient of the zeroth-order GBF with respect to each argument component.
template <typename Derived>
Vector<typename Derived::Scalar> gbf_gradient(const Eigen::MatrixBase<Derived>& z, Index points = 0) {
  using Scalar = typename Derived::Scalar;
  if (z.size() < 1) {
    throw InvalidArgument("gbf_gradient: argument must have at least one harmonic");
  }
  if (!all_finite(z)) {
    throw InvalidArgument("gbf_gradient: non-finite argument");
  }
  const GbfQuadrature<Scalar> quad(z.size(), points > 0 ? points : default_gbf_points(z));
  return quad.gradient(z);
}

/// Multi-index series
///   J_n(z) = sum over integer (m_1..m_K) with sum_k k m_k = n of prod_k J_{m_k}(z_k),
/// truncated to |m_k| <= L_k. With max_index == 0 each dimension uses
/// L_k = ceil(|z_k|) + 20. The neglected tail is bounded by the largest
/// dropped |J_{L_k+1}(z_k)| ~ (|z_k|/2)^(L_k+1) / (L_k+1)!, below 1e-16 for the
/// defaults whenever |z_k| <= 20.
template <typename Derived>
typename Derived::Scalar gbf_series_oracle(int order, const Eigen::MatrixBase<Derived>& z,
                                           int max_index = 0) {
  using Scalar = typename Derived::Scalar;
  const Index harmonics = z.size();
  if (harmonics < 1) {
    throw InvalidArgument("gbf_series_oracle: argument must have at least one harmonic");
  }
  if (!all_finite(z)) {
    throw InvalidArgument("gbf_series_oracle: non-finite argument");
  }
  if (max_index < 0) {
    throw InvalidArgument("gbf_series_oracle: max_index must be non-negative");
  }

  std::vector<int> limit(static_cast<std::size_t>(harmonics));
  std::vector<std::vector<long double>> table(static_cast<std::size_t>(harmonics));
  for (Index k = 0; k < harmonics; ++k) {
    const auto zk = static_cast<double>(z(k));
    const int lk = max_index > 0 ? max_index : static_cast<int>(std::ceil(std::abs(zk))) + 20;
    limit[k] = lk;
    table[k].resize(static_cast<std::size_t>(2 * lk + 1));
    for (int m = -lk; m <= lk; ++m) {
      table[k][static_cast<std::size_t>(m + lk)] = bessel_j<long double>(m, zk);
    }
  }
  // reach[k] = largest |sum_{j<=k} j m_j| attainable with harmonics 1..k+1.
  std::vector<long long> reach(static_cast<std::size_t>(harmonics));
  long long acc = 0;
  for (Index k = 0; k < harmonics; ++k) {
    acc += static_cast<long long>(k + 1) * limit[k];
    reach[k] = acc;
  }

  std::function<long double(Index, long long)> sum_from = [&](Index k, long long remainder) {
    if (k == 0) {
      if (std::llabs(remainder) > limit[0]) {
        return 0.0L;
      }
      return table[0][static_cast<std::size_t>(remainder + limit[0])];
    }
    const long long harmonic = k + 1;
    long double total = 0.0L;
    for (int m = -limit[k]; m <= limit[k]; ++m) {
      const long long rest = remainder - harmonic * m;
      if (std::llabs(rest) > reach[k - 1]) {
        continue;
      }
      total += table[k][static_cast<std::size_t>(m + limit[k])] * sum_from(k - 1, rest);
    }
    return total;
  };
  return static_cast<Scalar>(sum_from(harmonics - 1, order));
}

}  // namespace mtsfm
