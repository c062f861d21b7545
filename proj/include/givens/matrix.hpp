#pragma once

#include <Eigen/Dense>

namespace givens {

// Dense storage used throughout; row-major to match the on-disk formats.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace givens
