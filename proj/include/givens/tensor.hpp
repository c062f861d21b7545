#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "givens/errors.hpp"
#include "givens/flops.hpp"
#include "givens/matrix.hpp"
#include "givens/minimize.hpp"
#include "givens/objective.hpp"
#include "givens/orthogonal.hpp"

namespace givens {

/// Symmetric third-order tensor, dense d^3 storage in (a,b,c) order with a
/// slowest. Immutable after construction; symmetry is validated up front.
class SymmetricTensor3 {
 public:
  static SymmetricTensor3 from_values(int dim, std::vector<double> values, double tol = 1e-12) {
    check_size(dim, values.size());
    SymmetricTensor3 t(dim, std::move(values));
    const double violation = t.max_symmetry_violation();
    if (violation > tol) {
      throw symmetry_error("SymmetricTensor3: symmetry violated by " + std::to_string(violation));
    }
    return t;
  }

  /// Average over all six index permutations, then construct.
  static SymmetricTensor3 symmetrized(int dim, const std::vector<double>& values) {
    check_size(dim, values.size());
    std::vector<double> sym(values.size());
    for (int a = 0; a < dim; ++a) {
      for (int b = 0; b < dim; ++b) {
        for (int c = 0; c < dim; ++c) {
          const double total = values[flat(dim, a, b, c)] + values[flat(dim, a, c, b)] +
                               values[flat(dim, b, a, c)] + values[flat(dim, b, c, a)] +
                               values[flat(dim, c, a, b)] + values[flat(dim, c, b, a)];
          sym[flat(dim, a, b, c)] = total / 6.0;
        }
      }
    }
    return SymmetricTensor3(dim, std::move(sym));
  }

  static SymmetricTensor3 zero(int dim) {
    check_size(dim, static_cast<std::size_t>(dim) * dim * dim);
    return SymmetricTensor3(dim, std::vector<double>(static_cast<std::size_t>(dim) * dim * dim, 0.0));
  }

  int dim() const { return dim_; }

  double operator()(int a, int b, int c) const { return values_[flat(dim_, a, b, c)]; }

  const std::vector<double>& values() const { return values_; }

  double frobenius_norm() const {
    double s = 0.0;
    for (double v : values_) s += v * v;
    return std::sqrt(s);
  }

  double max_symmetry_violation() const { return raw_symmetry_violation(dim_, values_); }

  /// Largest absolute difference between an entry and any permutation of it.
  static double raw_symmetry_violation(int dim, const std::vector<double>& values) {
    check_size(dim, values.size());
    double worst = 0.0;
    for (int a = 0; a < dim; ++a) {
      for (int b = a; b < dim; ++b) {
        for (int c = b; c < dim; ++c) {
          const double ref = values[flat(dim, a, b, c)];
          worst = std::max(worst, std::abs(values[flat(dim, a, c, b)] - ref));
          worst = std::max(worst, std::abs(values[flat(dim, b, a, c)] - ref));
          worst = std::max(worst, std::abs(values[flat(dim, b, c, a)] - ref));
          worst = std::max(worst, std::abs(values[flat(dim, c, a, b)] - ref));
          worst = std::max(worst, std::abs(values[flat(dim, c, b, a)] - ref));
        }
      }
    }
    return worst;
  }

 private:
  SymmetricTensor3(int dim, std::vector<double> values) : dim_(dim), values_(std::move(values)) {}

  static std::size_t flat(int dim, int a, int b, int c) {
    return (static_cast<std::size_t>(a) * dim + b) * dim + c;
  }

  static void check_size(int dim, std::size_t n) {
    if (dim < 1) throw shape_error("SymmetricTensor3: dimension must be positive");
    if (n != static_cast<std::size_t>(dim) * dim * dim) {
      throw shape_error("SymmetricTensor3: value count does not match dimension");
    }
  }

  int dim_;
  std::vector<double> values_;
};

/// Triple contraction T(u, v, w) = sum_{abc} T_abc u_a v_b w_c.
inline double trilinear(const SymmetricTensor3& t, const Vector& u, const Vector& v,
                        const Vector& w, FlopCounter* fc = nullptr) {
  const int d = t.dim();
  if (u.size() != d || v.size() != d || w.size() != d) {
    throw shape_error("trilinear: vector dimension mismatch");
  }
  double total = 0.0;
  for (int a = 0; a < d; ++a) {
    for (int b = 0; b < d; ++b) {
      const double uv = u[a] * v[b];
      double inner = 0.0;
      for (int c = 0; c < d; ++c) inner += t(a, b, c) * w[c];
      total += uv * inner;
    }
  }
  if (fc) {
    const std::uint64_t dd = static_cast<std::uint64_t>(d);
    fc->add(dd * dd * (2 * dd + 3));  // per (a,b): uv product, d mul-adds, one fused mul-add
  }
  return total;
}

/// Objective of the diagonalization problem: sum_k T(u_k, u_k, u_k).
inline double tensor_objective(const SymmetricTensor3& t, const Matrix& u,
                               FlopCounter* fc = nullptr) {
  const int d = t.dim();
  if (u.rows() != d || u.cols() != d) throw shape_error("tensor_objective: U must be d x d");
  double total = 0.0;
  for (int k = 0; k < d; ++k) {
    Vector col = u.col(k);
    total += trilinear(t, col, col, col, fc);
  }
  if (fc) fc->add(static_cast<std::uint64_t>(d));
  return total;
}

/// Coefficients of the objective restricted to a rotation of columns i and j:
///   g(theta) = c3*cos^3 + s3*sin^3 + c1*cos + s1*sin,
/// plus the theta-independent contribution of the untouched columns, so that
/// g(0) + constant equals the full objective.
struct RestrictedCoeffs {
  double c3 = 0.0, s3 = 0.0, c1 = 0.0, s1 = 0.0;
  double constant = 0.0;

  double eval(double theta) const {
    const double c = std::cos(theta), s = std::sin(theta);
    return c3 * c * c * c + s3 * s * s * s + c1 * c + s1 * s;
  }

  double derivative(double theta) const {
    const double c = std::cos(theta), s = std::sin(theta);
    return -3.0 * c3 * c * c * s + 3.0 * s3 * s * s * c - c1 * s + s1 * c;
  }

  double second_derivative(double theta) const {
    const double c = std::cos(theta), s = std::sin(theta);
    return -3.0 * c3 * (c * c * c - 2.0 * c * s * s) + 3.0 * s3 * (2.0 * s * c * c - s * s * s) -
           c1 * c - s1 * s;
  }
};

/// Assembles the restricted coefficients from the four cross contractions.
/// Writing p = T(u_i,u_i,u_i), q = T(u_j,u_j,u_j), r = T(u_i,u_j,u_j) and
/// w = T(u_j,u_i,u_i), expanding the two rotated rank-one terms for
/// new_i = c*u_i + s*u_j, new_j = -s*u_i + c*u_j gives
///   g = c^3 (p+q) + s^3 (q-p) + 3 c^2 s (w-r) + 3 c s^2 (r+w),
/// and reducing the mixed powers with c^2 s = s - s^3, c s^2 = c - c^3 yields
/// the four-coefficient form below.
inline RestrictedCoeffs assemble_restricted(double tiii, double tjjj, double tijj, double tjii,
                                            double constant) {
  RestrictedCoeffs rc;
  rc.c3 = tiii + tjjj - 3.0 * tijj - 3.0 * tjii;
  rc.s3 = tjjj - tiii + 3.0 * tijj - 3.0 * tjii;
  rc.c1 = 3.0 * (tijj + tjii);
  rc.s1 = 3.0 * (tjii - tijj);
  rc.constant = constant;
  return rc;
}

/// Cross contractions and coefficient assembly for a column pair. When the
/// current objective value is supplied the constant costs nothing extra;
/// otherwise the remaining diagonal contractions are computed here.
inline RestrictedCoeffs contract_pair(const SymmetricTensor3& t, const Matrix& u, int i, int j,
                                      FlopCounter* fc = nullptr,
                                      std::optional<double> objective_value = std::nullopt) {
  const int d = t.dim();
  if (i < 0 || j >= d || i >= j) throw invalid_coordinate("contract_pair: bad column pair");
  Vector ui = u.col(i);
  Vector uj = u.col(j);
  const double tiii = trilinear(t, ui, ui, ui, fc);
  const double tjjj = trilinear(t, uj, uj, uj, fc);
  const double tijj = trilinear(t, ui, uj, uj, fc);
  const double tjii = trilinear(t, uj, ui, ui, fc);
  double constant = 0.0;
  if (objective_value) {
    constant = *objective_value - tiii - tjjj;
    if (fc) fc->add(2);
  } else {
    for (int k = 0; k < d; ++k) {
      if (k == i || k == j) continue;
      Vector uk = u.col(k);
      constant += trilinear(t, uk, uk, uk, fc);
      if (fc) fc->add(1);
    }
  }
  return assemble_restricted(tiii, tjjj, tijj, tjii, constant);
}

/// Global maximizer of the restricted objective over [-pi, pi).
///
/// Critical points are the real roots of the tangent half-angle polynomial of
/// g' (degree <= 6), found as companion-matrix eigenvalues; theta = -pi (the
/// substitution's excluded point) and theta = 0 are always candidates, which
/// also guarantees ascent. A dense grid takes over if root finding returns
/// nothing usable. Root-finding work is O(1) and not flop-charged.
inline double maximize_g(const RestrictedCoeffs& rc) {
  // ascending coefficients of (1+t^2)^3 * g'(2*atan(t))
  const double p0 = rc.s1;
  const double p1 = -6.0 * rc.c3 - 2.0 * rc.c1;
  const double p2 = 12.0 * rc.s3 + rc.s1;
  const double p3 = 12.0 * rc.c3 - 4.0 * rc.c1;
  const double p4 = -12.0 * rc.s3 - rc.s1;
  const double p5 = -6.0 * rc.c3 - 2.0 * rc.c1;
  const double p6 = -rc.s1;
  double poly[7] = {p0, p1, p2, p3, p4, p5, p6};

  double scale = 0.0;
  for (double v : poly) scale = std::max(scale, std::abs(v));
  if (scale <= 1e-300) return 0.0;  // constant restriction

  int degree = 6;
  while (degree > 0 && std::abs(poly[degree]) <= 1e-14 * scale) --degree;

  std::vector<double> candidates = {0.0, -pi};
  if (degree >= 1) {
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(degree, degree);
    for (int k = 1; k < degree; ++k) companion(k, k - 1) = 1.0;
    for (int k = 0; k < degree; ++k) companion(k, degree - 1) = -poly[k] / poly[degree];
    Eigen::EigenSolver<Eigen::MatrixXd> es(companion, /*computeEigenvectors=*/false);
    for (int k = 0; k < degree; ++k) {
      const auto root = es.eigenvalues()[k];
      if (std::abs(root.imag()) <= 1e-8 * (1.0 + std::abs(root.real()))) {
        candidates.push_back(2.0 * std::atan(root.real()));
      }
    }
    if (candidates.size() == 2u) {
      // root finding failed outright; fall back to a dense grid
      for (int k = 0; k < 1024; ++k) candidates.push_back(-pi + k * 2.0 * pi / 1024.0);
    }
  }

  std::sort(candidates.begin(), candidates.end());
  double best_theta = candidates.front();
  double best_value = rc.eval(best_theta);
  for (std::size_t k = 1; k < candidates.size(); ++k) {
    const double v = rc.eval(candidates[k]);
    if (v > best_value) {
      best_value = v;
      best_theta = candidates[k];
    }
  }
  return wrap_angle(best_theta);
}

/// Fully contracted tensor aux_abc = T(u_a, u_b, u_c), maintained across
/// rotations. The one-time build is O(d^4); each rotation updates only the
/// O(d^2) entries with an index in {i, j} by rotating the three modes in the
/// (i,j) plane.
class ContractedTensor {
 public:
  ContractedTensor(const SymmetricTensor3& t, const Matrix& u, FlopCounter* fc = nullptr)
      : dim_(t.dim()) {
    const int d = dim_;
    if (u.rows() != d || u.cols() != d) throw shape_error("ContractedTensor: U must be d x d");
    const std::size_t n = static_cast<std::size_t>(d) * d * d;
    std::vector<double> stage1(n, 0.0), stage2(n, 0.0);
    values_.assign(n, 0.0);
    // mode 1: stage1[a,q,r] = sum_p T_pqr U_pa
    for (int a = 0; a < d; ++a)
      for (int q = 0; q < d; ++q)
        for (int r = 0; r < d; ++r) {
          double acc = 0.0;
          for (int p = 0; p < d; ++p) acc += t(p, q, r) * u(p, a);
          stage1[flat(a, q, r)] = acc;
        }
    // mode 2: stage2[a,b,r] = sum_q stage1[a,q,r] U_qb
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b)
        for (int r = 0; r < d; ++r) {
          double acc = 0.0;
          for (int q = 0; q < d; ++q) acc += stage1[flat(a, q, r)] * u(q, b);
          stage2[flat(a, b, r)] = acc;
        }
    // mode 3: values[a,b,c] = sum_r stage2[a,b,r] U_rc
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b)
        for (int c = 0; c < d; ++c) {
          double acc = 0.0;
          for (int r = 0; r < d; ++r) acc += stage2[flat(a, b, r)] * u(r, c);
          values_[flat(a, b, c)] = acc;
        }
    if (fc) {
      const std::uint64_t dd = static_cast<std::uint64_t>(d);
      fc->add(3 * dd * dd * dd * (2 * dd));
    }
  }

  int dim() const { return dim_; }

  double operator()(int a, int b, int c) const { return values_[flat(a, b, c)]; }

  /// Applies the column rotation to all three modes; O(d^2) updated entries.
  void rotate(int i, int j, double theta, FlopCounter* fc = nullptr) {
    const int d = dim_;
    if (i < 0 || j >= d || i >= j) throw invalid_coordinate("ContractedTensor::rotate: bad pair");
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    auto rotate_pair = [c, s](double& x, double& y) {
      const double a = x, b = y;
      x = c * a + s * b;
      y = -s * a + c * b;
    };
    for (int b = 0; b < d; ++b)
      for (int cc = 0; cc < d; ++cc) rotate_pair(values_[flat(i, b, cc)], values_[flat(j, b, cc)]);
    for (int a = 0; a < d; ++a)
      for (int cc = 0; cc < d; ++cc) rotate_pair(values_[flat(a, i, cc)], values_[flat(a, j, cc)]);
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) rotate_pair(values_[flat(a, b, i)], values_[flat(a, b, j)]);
    if (fc) fc->add(18 * static_cast<std::uint64_t>(d) * d);
  }

 private:
  std::size_t flat(int a, int b, int c) const {
    return (static_cast<std::size_t>(a) * dim_ + b) * dim_ + c;
  }

  int dim_;
  std::vector<double> values_;
};

enum class TensorMode { naive, accelerated };

/// Tensor diagonalization objective in minimization form (the driver
/// minimizes, so eval returns the negated objective). Naive mode contracts
/// the needed entries per step in O(d^3); accelerated mode maintains the
/// fully contracted tensor and works in O(d^2) per step.
class TensorObjective final : public CoordinateObjective {
 public:
  TensorObjective(const SymmetricTensor3& t, TensorMode mode) : t_(&t), mode_(mode) {}

  int dim() const override { return t_->dim(); }

  double eval(const Matrix& u) override {
    ensure_init(u);
    return -objective_;
  }

  Restricted restrict(const Matrix& u, int i, int j) override {
    ensure_init(u);
    const RestrictedCoeffs rc = coefficients(u, i, j);
    const double theta_star = maximize_g(rc);
    FlopCounter* fc = flop_counter();
    auto g = [rc, fc](double theta) {
      if (fc) fc->add(12);
      return -(rc.eval(theta) + rc.constant);
    };
    return {std::move(g), theta_star};
  }

  double directional_derivative(const Matrix& u, int i, int j) override {
    ensure_init(u);
    // derivative of the minimized (negated) restriction at zero is -s1
    if (mode_ == TensorMode::accelerated) {
      return -3.0 * ((*aux_)(j, i, i) - (*aux_)(i, j, j));
    }
    Vector ui = u.col(i);
    Vector uj = u.col(j);
    const double tijj = trilinear(*t_, ui, uj, uj, flop_counter());
    const double tjii = trilinear(*t_, uj, ui, ui, flop_counter());
    return -3.0 * (tjii - tijj);
  }

  void apply(const Matrix& u, int i, int j, double theta) override {
    if (mode_ == TensorMode::accelerated) {
      aux_->rotate(i, j, theta, flop_counter());
      cubes_[static_cast<std::size_t>(i)] = (*aux_)(i, i, i);
      cubes_[static_cast<std::size_t>(j)] = (*aux_)(j, j, j);
    } else {
      Vector ui = u.col(i);
      Vector uj = u.col(j);
      cubes_[static_cast<std::size_t>(i)] = trilinear(*t_, ui, ui, ui, flop_counter());
      cubes_[static_cast<std::size_t>(j)] = trilinear(*t_, uj, uj, uj, flop_counter());
    }
    objective_ = 0.0;
    for (double v : cubes_) objective_ += v;
    charge(cubes_.size());
  }

  double column_cube(int k) const { return cubes_[static_cast<std::size_t>(k)]; }

 private:
  void ensure_init(const Matrix& u) {
    if (initialized_) return;
    const int d = dim();
    cubes_.resize(static_cast<std::size_t>(d));
    if (mode_ == TensorMode::accelerated) {
      aux_.emplace(*t_, u, flop_counter());
      for (int k = 0; k < d; ++k) cubes_[static_cast<std::size_t>(k)] = (*aux_)(k, k, k);
    } else {
      for (int k = 0; k < d; ++k) {
        Vector uk = u.col(k);
        cubes_[static_cast<std::size_t>(k)] = trilinear(*t_, uk, uk, uk, flop_counter());
      }
    }
    objective_ = 0.0;
    for (double v : cubes_) objective_ += v;
    initialized_ = true;
  }

  RestrictedCoeffs coefficients(const Matrix& u, int i, int j) {
    double tiii, tjjj, tijj, tjii;
    if (mode_ == TensorMode::accelerated) {
      tiii = (*aux_)(i, i, i);
      tjjj = (*aux_)(j, j, j);
      tijj = (*aux_)(i, j, j);
      tjii = (*aux_)(j, i, i);
    } else {
      // diagonal cubes come from the cache (refreshed whenever a column
      // changes, so they equal a fresh contraction bitwise)
      tiii = cubes_[static_cast<std::size_t>(i)];
      tjjj = cubes_[static_cast<std::size_t>(j)];
      Vector ui = u.col(i);
      Vector uj = u.col(j);
      tijj = trilinear(*t_, ui, uj, uj, flop_counter());
      tjii = trilinear(*t_, uj, ui, ui, flop_counter());
    }
    const double constant = objective_ - tiii - tjjj;
    charge(2);
    return assemble_restricted(tiii, tjjj, tijj, tjii, constant);
  }

  const SymmetricTensor3* t_;
  TensorMode mode_;
  std::optional<ContractedTensor> aux_;
  std::vector<double> cubes_;
  double objective_ = 0.0;
  bool initialized_ = false;
};

/// Orthogonal decomposition: positive scales and orthonormal directions.
struct Decomposition {
  Vector lambdas;                    // >= 0 after sign normalization
  Matrix v;                          // columns are the recovered directions
  std::vector<int> null_directions;  // indices with lambda below threshold
};

struct TensorDecomposeOptions {
  TensorMode mode = TensorMode::accelerated;
  std::uint64_t seed = 0;
  /// Defaults to gradient norm 1e-9 with an iteration cap of 50 * d^2.
  std::optional<StoppingRule> stop;
  SamplingVariant sampling = SamplingVariant::with_replacement;
  std::uint64_t gradient_sample_interval = 0;
  double null_threshold = 1e-10;
};

struct TensorDecomposeResult {
  Decomposition decomposition;
  DescentTrace trace;  // ascending tensor objective
  Matrix u;            // final orthogonal factor before sign normalization
  double objective = 0.0;
  double orthogonality_defect = 0.0;
  std::uint64_t iterations = 0;
  StopReason reason = StopReason::max_iterations;
};

/// Coordinate-maximization diagonalization of a symmetric tensor: sample a
/// column pair, assemble the restricted objective, take its global
/// maximizer, rotate. Scales are the diagonal contractions at the final
/// factor, with directions sign-flipped to make them non-negative.
inline TensorDecomposeResult tensor_decompose(const SymmetricTensor3& t,
                                              const OrthogonalMatrix& u0,
                                              const TensorDecomposeOptions& opts,
                                              FlopCounter& fc) {
  const int d = t.dim();
  if (u0.dim() != d) throw shape_error("tensor_decompose: U0 dimension mismatch");

  TensorObjective obj(t, opts.mode);
  MinimizeOptions mo;
  mo.seed = opts.seed;
  mo.sampling = opts.sampling;
  mo.gradient_sample_interval = opts.gradient_sample_interval;
  if (opts.stop) {
    mo.stop = *opts.stop;
  } else {
    mo.stop.gradient_norm_tol = 1e-9;
    mo.stop.max_iterations = 50ull * d * d;
  }

  auto inner = coordinate_minimize(obj, u0, mo, fc);

  TensorDecomposeResult result;
  result.trace.sense = Sense::maximize;
  result.trace.records = std::move(inner.trace.records);
  for (auto& rec : result.trace.records) rec.objective = -rec.objective;
  result.u = std::move(inner.u);
  result.orthogonality_defect = inner.orthogonality_defect;
  result.iterations = inner.iterations;
  result.reason = inner.reason;

  // extraction: fresh diagonal contractions, sign-normalized
  result.decomposition.lambdas = Vector(d);
  result.decomposition.v = result.u;
  double total = 0.0;
  for (int k = 0; k < d; ++k) {
    Vector uk = result.u.col(k);
    double cube = trilinear(t, uk, uk, uk, &fc);
    if (cube < 0.0) {
      result.decomposition.v.col(k) *= -1.0;
      cube = -cube;
    }
    result.decomposition.lambdas(k) = cube;
    if (cube < opts.null_threshold) result.decomposition.null_directions.push_back(k);
    total += cube;
  }
  result.objective = tensor_objective(t, result.u, nullptr);
  return result;
}

/// Exact construction of sum_i lambda_i v_i x v_i x v_i.
inline SymmetricTensor3 synth_orthogonal_tensor(const Vector& lambdas, const OrthogonalMatrix& v) {
  const int d = v.dim();
  if (lambdas.size() != d) throw shape_error("synth_orthogonal_tensor: lambda count mismatch");
  for (int k = 0; k < d; ++k) {
    if (!(lambdas(k) > 0.0)) {
      throw config_error("synth_orthogonal_tensor: scales must be positive");
    }
  }
  const Matrix& u = v.matrix();
  std::vector<double> values(static_cast<std::size_t>(d) * d * d, 0.0);
  std::size_t idx = 0;
  for (int a = 0; a < d; ++a) {
    for (int b = 0; b < d; ++b) {
      for (int c = 0; c < d; ++c, ++idx) {
        double acc = 0.0;
        for (int k = 0; k < d; ++k) acc += lambdas(k) * u(a, k) * u(b, k) * u(c, k);
        values[idx] = acc;
      }
    }
  }
  return SymmetricTensor3::from_values(d, std::move(values));
}

/// Frobenius norm of T minus the reconstruction from a decomposition.
inline double decomposition_residual(const SymmetricTensor3& t, const Decomposition& dec) {
  const int d = t.dim();
  if (dec.v.rows() != d || dec.v.cols() != d || dec.lambdas.size() != d) {
    throw shape_error("decomposition_residual: decomposition dimension mismatch");
  }
  double sum_sq = 0.0;
  for (int a = 0; a < d; ++a) {
    for (int b = 0; b < d; ++b) {
      for (int c = 0; c < d; ++c) {
        double recon = 0.0;
        for (int k = 0; k < d; ++k) {
          recon += dec.lambdas(k) * dec.v(a, k) * dec.v(b, k) * dec.v(c, k);
        }
        const double diff = t(a, b, c) - recon;
        sum_sq += diff * diff;
      }
    }
  }
  return std::sqrt(sum_sq);
}

}  // namespace givens
