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

#include <cmath>
#include <cstdlib>
#include <limits>

#include "mtsfm/types.hpp"

namespace mtsfm {

/// Ordinary Bessel function of the first kind J_n(x) for integer order.
///
/// Evaluated from the ascending power series
///   J_n(x) = sum_s (-1)^s (x/2)^(2s+n) / (s! (s+n)!)
/// accumulated in long double. The largest term near s ~ |x|/2 grows like
/// exp(|x|) / (2 pi |x|), so cancellation costs about log10 of that many digits:
/// the absolute error stays below 1e-12 for |x| <= 20, which covers every
/// argument this library produces. Negative orders use J_{-n} = (-1)^n J_n.
template <typename Scalar>
Scalar bessel_j(int order, Scalar x) {
  if (!std::isfinite(static_cast<double>(x))) {
    throw InvalidArgument("bessel_j: non-finite argument");
  }
  const int n = std::abs(order);
  const long double half = static_cast<long double>(x) / 2.0L;

  long double term = 1.0L;
  for (int i = 1; i <= n; ++i) {
    term *= half / static_cast<long double>(i);
  }
  long double sum = term;
  const long double h2 = half * half;
  for (int s = 1; s < 400; ++s) {
    term *= -h2 / (static_cast<long double>(s) * static_cast<long double>(s + n));
    sum += term;
    if (static_cast<long double>(s) > half * (half < 0 ? -1 : 1) &&
        std::abs(term) <= std::numeric_limits<long double>::epsilon() * std::abs(sum)) {
      break;
    }
    if (term == 0.0L) {
      break;
    }
  }
  if (order < 0 && (n % 2) == 1) {
    sum = -sum;
  }
  return static_cast<Scalar>(sum);
}

}  // namespace mtsfm
