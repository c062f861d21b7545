#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include "givens/errors.hpp"
#include "givens/flops.hpp"
#include "givens/matrix.hpp"

namespace givens {

inline constexpr double pi = std::numbers::pi;

/// Maps an angle to the principal range [-pi, pi).
inline double wrap_angle(double theta) {
  double t = std::remainder(theta, 2.0 * pi);  // (-pi, pi]
  if (t >= pi) t -= 2.0 * pi;
  return t;
}

/// Plane rotation acting on columns i and j (0-based, i < j).
///
/// Column update convention, fixed once for the whole library:
///   new_i = cos(theta) * old_i + sin(theta) * old_j
///   new_j = -sin(theta) * old_i + cos(theta) * old_j
struct GivensRotation {
  int i = 0;
  int j = 0;
  double theta = 0.0;
};

inline GivensRotation make_givens(int i, int j, double theta, int dim) {
  if (i < 0 || j >= dim || i >= j) {
    throw invalid_coordinate("make_givens: need 0 <= i < j < d, got (" +
                             std::to_string(i) + ", " + std::to_string(j) +
                             ") with d=" + std::to_string(dim));
  }
  return GivensRotation{i, j, wrap_angle(theta)};
}

/// Dense d x d form of the rotation. Intended for tests and oracles; the
/// solvers never materialize it.
inline Matrix dense(const GivensRotation& g, int dim) {
  if (g.j >= dim) throw shape_error("dense: rotation indices exceed dimension");
  Matrix m = Matrix::Identity(dim, dim);
  const double c = std::cos(g.theta);
  const double s = std::sin(g.theta);
  m(g.i, g.i) = c;
  m(g.j, g.j) = c;
  m(g.j, g.i) = s;
  m(g.i, g.j) = -s;
  return m;
}

/// In-place M <- M * G. Touches only columns i and j; charges exactly
/// 6 * rows(M) flops (4 multiplications and 2 additions per row).
inline void rotate_columns(Matrix& m, const GivensRotation& g, FlopCounter& fc) {
  if (g.j >= m.cols()) {
    throw shape_error("rotate_columns: matrix has " + std::to_string(m.cols()) +
                      " columns, rotation needs column " + std::to_string(g.j));
  }
  const double c = std::cos(g.theta);
  const double s = std::sin(g.theta);
  const Eigen::Index rows = m.rows();
  for (Eigen::Index r = 0; r < rows; ++r) {
    const double a = m(r, g.i);
    const double b = m(r, g.j);
    m(r, g.i) = c * a + s * b;
    m(r, g.j) = -s * a + c * b;
  }
  fc.add(6 * static_cast<std::uint64_t>(rows));
}

}  // namespace givens
