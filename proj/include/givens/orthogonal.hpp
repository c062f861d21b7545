#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>

#include <Eigen/QR>

#include "givens/errors.hpp"
#include "givens/matrix.hpp"

namespace givens {

/// Frobenius norm of U^T U - I.
inline double orthogonality_defect(const Matrix& u) {
  if (u.rows() != u.cols()) throw shape_error("orthogonality_defect: matrix must be square");
  const Eigen::Index d = u.cols();
  return (u.transpose() * u - Matrix::Identity(d, d)).norm();
}

/// Square matrix carrying the invariant ||U^T U - I||_F <= tol, checked on
/// construction. Drift under rotations is monitored, never corrected.
class OrthogonalMatrix {
 public:
  explicit OrthogonalMatrix(Matrix u, double tol = 1e-8) : u_(std::move(u)) {
    const double defect = orthogonality_defect(u_);
    if (!(defect <= tol)) {
      throw shape_error("OrthogonalMatrix: defect " + std::to_string(defect) +
                        " exceeds tolerance " + std::to_string(tol));
    }
  }

  int dim() const { return static_cast<int>(u_.rows()); }
  const Matrix& matrix() const { return u_; }
  double defect() const { return orthogonality_defect(u_); }

 private:
  Matrix u_;
};

/// Haar-style random orthogonal matrix: QR of a seeded standard Gaussian
/// matrix with the factor signs fixed so R has positive diagonal. Output is
/// fully determined by (d, seed).
inline OrthogonalMatrix random_orthogonal(int dim, std::uint64_t seed) {
  if (dim < 1) throw shape_error("random_orthogonal: dimension must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix g(dim, dim);
  for (int r = 0; r < dim; ++r)
    for (int c = 0; c < dim; ++c) g(r, c) = gauss(rng);

  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int c = 0; c < dim; ++c) {
    if (r(c, c) < 0.0) q.col(c) *= -1.0;
  }
  return OrthogonalMatrix(std::move(q), 1e-10);
}

}  // namespace givens
