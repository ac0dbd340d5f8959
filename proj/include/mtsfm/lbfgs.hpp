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
#include <deque>
#include <functional>
#include <limits>
#include <string>

#include "mtsfm/types.hpp"

namespace mtsfm {

struct LbfgsSettings {
  int max_iterations = 1000;
  int history = 10;
  double gradient_tolerance = 1e-6;   // infinity norm
  double objective_tolerance = 1e-8;  // relative change per iteration
  double step_tolerance = 1e-12;      // infinity norm of the step
};

enum class LbfgsStop { gradient, objective, step, iterations, line_search };

inline const char* to_string(LbfgsStop s) {
  switch (s) {
    case LbfgsStop::gradient: return "gradient";
    case LbfgsStop::objective: return "objective";
    case LbfgsStop::step: return "step";
    case LbfgsStop::iterations: return "iterations";
    case LbfgsStop::line_search: return "line_search";
  }
  return "unknown";
}

struct LbfgsResult {
  Vector<double> x;
  double value = 0.0;
  int iterations = 0;
  LbfgsStop stop = LbfgsStop::iterations;
};

/// f(x, grad) returns the value and writes the gradient.
using Objective = std::function<double(const Vector<double>&, Vector<double>&)>;

/// Limited-memory BFGS with a strong-Wolfe line search (c1 = 1e-4, c2 = 0.9).
/// `on_iterate(x, f)` runs after every accepted step.
LbfgsResult minimize_lbfgs(const Objective& f, Vector<double> x, const LbfgsSettings& settings,
                           const std::function<void(const Vector<double>&, double)>& on_iterate = {});

}  // namespace mtsfm
