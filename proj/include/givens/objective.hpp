#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "givens/errors.hpp"
#include "givens/flops.hpp"
#include "givens/matrix.hpp"

namespace givens {

/// Central-difference step for the default directional derivative.
inline constexpr double fd_step = 1e-5;

/// Upper-triangular coefficients of a skew-symmetric matrix: one value per
/// pair i < j, with the implied lower triangle negated and zero diagonal.
/// These are the coordinates of a Riemannian gradient in the plane-rotation
/// basis.
class SkewCoefficients {
 public:
  explicit SkewCoefficients(int dim)
      : dim_(dim), upper_(static_cast<std::size_t>(dim) * (dim - 1) / 2, 0.0) {}

  int dim() const { return dim_; }

  double& at(int i, int j) { return upper_[index(i, j)]; }
  double at(int i, int j) const { return upper_[index(i, j)]; }

  const std::vector<double>& upper() const { return upper_; }

  /// Squared Frobenius norm of the full skew matrix: 2 * sum of squares.
  double norm_squared() const {
    double s = 0.0;
    for (double v : upper_) s += v * v;
    return 2.0 * s;
  }

 private:
  std::size_t index(int i, int j) const {
    if (i < 0 || j >= dim_ || i >= j) throw invalid_coordinate("SkewCoefficients: bad pair");
    // row-by-row packing of the strict upper triangle
    const std::size_t row_start =
        static_cast<std::size_t>(i) * dim_ - static_cast<std::size_t>(i) * (i + 1) / 2;
    return row_start + static_cast<std::size_t>(j - i - 1);
  }

  int dim_;
  std::vector<double> upper_;
};

/// One-variable restriction of an objective to a single plane rotation,
/// g(theta) = f(U * G(i,j,theta)), optionally with its global minimizer in
/// closed form.
struct Restricted {
  std::function<double(double)> g;
  std::optional<double> argmin;
};

/// Behavioral contract for objectives driven by coordinate minimization.
///
/// The implementation owns whatever cached state it needs (e.g. a maintained
/// product matrix or a contracted tensor); the driver owns U. `restrict`
/// must satisfy g(0) = eval(U) up to an additive constant that does not
/// depend on U; the implementations in this library all declare that
/// constant to be zero. Flops spent inside eval/restrict/apply are charged
/// to the attached counter when one is set.
class CoordinateObjective {
 public:
  virtual ~CoordinateObjective() = default;

  virtual int dim() const = 0;
  virtual double eval(const Matrix& u) = 0;
  virtual Restricted restrict(const Matrix& u, int i, int j) = 0;

  /// d/dtheta of the restriction at theta = 0. Default is a central finite
  /// difference; override when a closed form is available.
  virtual double directional_derivative(const Matrix& u, int i, int j) {
    auto r = restrict(u, i, j);
    return (r.g(fd_step) - r.g(-fd_step)) / (2.0 * fd_step);
  }

  /// Notification that U has been replaced by U * G(i,j,theta); update caches.
  virtual void apply(const Matrix& u, int i, int j, double theta) {
    (void)u;
    (void)i;
    (void)j;
    (void)theta;
  }

  void set_flop_counter(FlopCounter* fc) { fc_ = fc; }
  FlopCounter* flop_counter() const { return fc_; }

 protected:
  void charge(std::uint64_t n) const {
    if (fc_) fc_->add(n);
  }

 private:
  FlopCounter* fc_ = nullptr;
};

/// Suspends flop charging on an objective for the guard's lifetime. Used
/// around diagnostic work (gradient sampling, stopping checks) so that only
/// solver work is counted.
class FlopPause {
 public:
  explicit FlopPause(CoordinateObjective& obj) : obj_(obj), saved_(obj.flop_counter()) {
    obj_.set_flop_counter(nullptr);
  }
  ~FlopPause() { obj_.set_flop_counter(saved_); }
  FlopPause(const FlopPause&) = delete;
  FlopPause& operator=(const FlopPause&) = delete;

 private:
  CoordinateObjective& obj_;
  FlopCounter* saved_;
};

inline double directional_derivative(CoordinateObjective& obj, const Matrix& u, int i, int j) {
  return obj.directional_derivative(u, i, j);
}

/// All pairwise directional derivatives at U.
inline SkewCoefficients riemannian_gradient(CoordinateObjective& obj, const Matrix& u) {
  const int d = obj.dim();
  SkewCoefficients grad(d);
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) grad.at(i, j) = obj.directional_derivative(u, i, j);
  return grad;
}

}  // namespace givens
