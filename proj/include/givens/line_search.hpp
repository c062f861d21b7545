#pragma once

#include <cmath>
#include <limits>
#include <utility>

#include "givens/errors.hpp"
#include "givens/rotation.hpp"

namespace givens {

struct LineSearchResult {
  double theta = 0.0;   // minimizer in [-pi, pi)
  double value = 0.0;   // g(theta)
  int evaluations = 0;  // number of g calls spent
};

namespace detail {
inline constexpr int line_search_grid = 32;
inline constexpr double golden = 0.6180339887498949;  // (sqrt(5)-1)/2
}  // namespace detail

/// Global minimization of a 2*pi-periodic function over [-pi, pi).
///
/// Strategy: 32 equispaced samples over the period, then golden-section
/// refinement inside the bracket around the best sample, down to `tol`
/// radians. Two tolerances with distinct jobs keep this deterministic on
/// flat or float-jittery restrictions without limiting convergence depth:
/// grid values within 1e-12 (relative) of the minimum count as ties and
/// resolve to the smallest angle, while the refined point replaces the grid
/// winner only when it beats the grid minimum by a few ulps, so rounding
/// noise on a constant restriction cannot dislodge the tie winner.
template <typename G>
LineSearchResult line_minimize_periodic(G&& g, double tol = 1e-10) {
  int evals = 0;
  auto eval = [&](double t) {
    const double v = g(t);
    ++evals;
    if (!std::isfinite(v)) throw numeric_error("line_minimize_periodic: non-finite value", t);
    return v;
  };

  const double step = 2.0 * pi / detail::line_search_grid;
  double grid_min = std::numeric_limits<double>::infinity();
  double grid_vals[detail::line_search_grid];
  for (int k = 0; k < detail::line_search_grid; ++k) {
    grid_vals[k] = eval(-pi + k * step);
    if (grid_vals[k] < grid_min) grid_min = grid_vals[k];
  }
  const double tie_eps = 1e-12 * (1.0 + std::abs(grid_min));
  int best_k = 0;
  while (grid_vals[best_k] > grid_min + tie_eps) ++best_k;
  const double best_theta = -pi + best_k * step;
  const double best_val = grid_vals[best_k];

  // Golden-section refinement in the bracket around the winning sample.
  double lo = best_theta - step;
  double hi = best_theta + step;
  double x1 = hi - detail::golden * (hi - lo);
  double x2 = lo + detail::golden * (hi - lo);
  double f1 = eval(x1);
  double f2 = eval(x2);
  while (hi - lo > tol) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - detail::golden * (hi - lo);
      f1 = eval(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + detail::golden * (hi - lo);
      f2 = eval(x2);
    }
  }
  const double refined = f1 <= f2 ? x1 : x2;
  const double refined_val = f1 <= f2 ? f1 : f2;

  const double refine_eps =
      64.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(grid_min));
  if (refined_val < grid_min - refine_eps) {
    return {wrap_angle(refined), refined_val, evals};
  }
  return {best_theta, best_val, evals};
}

}  // namespace givens
