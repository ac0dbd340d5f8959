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

#include "mtsfm/lbfgs.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

namespace mtsfm {

namespace {

constexpr double kArmijo = 1e-4;
constexpr double kCurvature = 0.9;
constexpr int kMaxLineSearchEvaluations = 40;

struct Point {
  double step = 0.0;
  double value = 0.0;
  double slope = 0.0;  // directional derivative along the search direction
  Vector<double> x;
  Vector<double> grad;
};

class LineSearch {
 public:
  LineSearch(const Objective& f, const Vector<double>& x0, double f0, const Vector<double>& g0,
             const Vector<double>& direction)
      : f_(f), x0_(x0), f0_(f0), d0_(g0.dot(direction)), p_(direction) {}

  double initial_slope() const { return d0_; }

  // Strong-Wolfe step; nullopt when no acceptable point was found.
  std::optional<Point> run(double first_step) {
    Point prev{0.0, f0_, d0_, {}, {}};
    double step = first_step;
    for (int i = 0; i < kMaxLineSearchEvaluations; ++i) {
      Point cur = evaluate(step);
      if (!std::isfinite(cur.value)) {
        step *= 0.25;
        continue;
      }
      remember(cur);
      if (cur.value > f0_ + kArmijo * cur.step * d0_ || (i > 0 && cur.value >= prev.value)) {
        return zoom(std::move(prev), std::move(cur));
      }
      if (std::abs(cur.slope) <= -kCurvature * d0_) {
        return cur;
      }
      if (cur.slope >= 0.0) {
        return zoom(std::move(cur), std::move(prev));
      }
      prev = std::move(cur);
      step *= 2.0;
    }
    return best_sufficient();
  }

 private:
  Point evaluate(double step) {
    ++evaluations_;
    Point p;
    p.step = step;
    p.x = x0_ + step * p_;
    p.grad.resize(p.x.size());
    p.value = f_(p.x, p.grad);
    p.slope = p.grad.dot(p_);
    return p;
  }

  void remember(const Point& p) {
    if (p.value <= f0_ + kArmijo * p.step * d0_ && (!best_ || p.value < best_->value)) {
      best_ = p;
    }
  }

  std::optional<Point> best_sufficient() const { return best_; }

  // lo satisfies sufficient decrease with the lower value; the minimizer lies between lo and hi.
  std::optional<Point> zoom(Point lo, Point hi) {
    while (evaluations_ < kMaxLineSearchEvaluations) {
      const double a = interpolate(lo, hi);
      Point cur = evaluate(a);
      if (!std::isfinite(cur.value)) {
        hi = std::move(cur);
        hi.value = std::numeric_limits<double>::infinity();
        continue;
      }
      remember(cur);
      if (cur.value > f0_ + kArmijo * cur.step * d0_ || cur.value >= lo.value) {
        hi = std::move(cur);
      } else {
        if (std::abs(cur.slope) <= -kCurvature * d0_) {
          return cur;
        }
        if (cur.slope * (hi.step - lo.step) >= 0.0) {
          hi = std::move(lo);
        }
        lo = std::move(cur);
      }
      if (std::abs(hi.step - lo.step) <= 1e-16 * std::max(1.0, std::abs(lo.step))) {
        break;
      }
    }
    return best_sufficient();
  }

  // Safeguarded cubic interpolation between two bracketing points.
  static double interpolate(const Point& lo, const Point& hi) {
    const double a = lo.step;
    const double b = hi.step;
    const double lower = std::min(a, b);
    const double width = std::abs(b - a);
    double trial = 0.5 * (a + b);
    if (std::isfinite(hi.value)) {
      const double d1 = lo.slope + hi.slope - 3.0 * (lo.value - hi.value) / (a - b);
      const double disc = d1 * d1 - lo.slope * hi.slope;
      if (disc >= 0.0) {
        const double d2 = std::copysign(std::sqrt(disc), b - a);
        const double denom = hi.slope - lo.slope + 2.0 * d2;
        if (denom != 0.0) {
          trial = b - (b - a) * (hi.slope + d2 - d1) / denom;
        }
      }
    }
    const double margin = 0.1 * width;
    if (!std::isfinite(trial) || trial < lower + margin || trial > lower + width - margin) {
      trial = 0.5 * (a + b);
    }
    return trial;
  }

  const Objective& f_;
  const Vector<double>& x0_;
  double f0_;
  double d0_;
  const Vector<double>& p_;
  int evaluations_ = 0;
  std::optional<Point> best_;
};

}  // namespace

LbfgsResult minimize_lbfgs(const Objective& f, Vector<double> x, const LbfgsSettings& settings,
                           const std::function<void(const Vector<double>&, double)>& on_iterate) {
  LbfgsResult result;
  Vector<double> g(x.size());
  double fx = f(x, g);
  if (!std::isfinite(fx)) {
    throw NumericalFailure("minimize_lbfgs: non-finite objective at the starting point");
  }

  std::deque<std::pair<Vector<double>, Vector<double>>> memory;  // (s, y)
  int iteration = 0;
  bool restarted = false;
  result.stop = LbfgsStop::iterations;

  while (true) {
    if (g.lpNorm<Eigen::Infinity>() <= settings.gradient_tolerance) {
      result.stop = LbfgsStop::gradient;
      break;
    }
    if (iteration >= settings.max_iterations) {
      result.stop = LbfgsStop::iterations;
      break;
    }

    // Two-loop recursion.
    Vector<double> q = g;
    std::vector<double> alpha(memory.size());
    for (std::size_t i = memory.size(); i-- > 0;) {
      const auto& [s, y] = memory[i];
      alpha[i] = s.dot(q) / y.dot(s);
      q -= alpha[i] * y;
    }
    if (!memory.empty()) {
      const auto& [s, y] = memory.back();
      q *= s.dot(y) / y.squaredNorm();
    }
    for (std::size_t i = 0; i < memory.size(); ++i) {
      const auto& [s, y] = memory[i];
      const double beta = y.dot(q) / y.dot(s);
      q += (alpha[i] - beta) * s;
    }
    Vector<double> direction = -q;
    if (!(direction.dot(g) < 0.0)) {
      memory.clear();
      direction = -g;
    }

    const double first_step = memory.empty() ? std::min(1.0, 1.0 / g.norm()) : 1.0;
    LineSearch search(f, x, fx, g, direction);
    std::optional<Point> next = search.run(first_step);
    if (!next) {
      if (!memory.empty() && !restarted) {
        memory.clear();
        restarted = true;
        continue;
      }
      result.stop = LbfgsStop::line_search;
      break;
    }
    restarted = false;
    ++iteration;

    Vector<double> s = next->x - x;
    Vector<double> y = next->grad - g;
    const double previous = fx;
    x = std::move(next->x);
    g = std::move(next->grad);
    fx = next->value;
    if (on_iterate) {
      on_iterate(x, fx);
    }

    if (s.dot(y) > 1e-12 * s.norm() * y.norm()) {
      memory.emplace_back(std::move(s), std::move(y));
      if (static_cast<int>(memory.size()) > settings.history) {
        memory.pop_front();
      }
    }
    const double scale = std::max({std::abs(previous), std::abs(fx), 1e-300});
    if (std::abs(previous - fx) <= settings.objective_tolerance * scale) {
      result.stop = LbfgsStop::objective;
      break;
    }
    if ((next->step * direction).lpNorm<Eigen::Infinity>() <= settings.step_tolerance) {
      result.stop = LbfgsStop::step;
      break;
    }
  }

  result.x = std::move(x);
  result.value = fx;
  result.iterations = iteration;
  return result;
}

}  // namespace mtsfm
