#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "givens/errors.hpp"
#include "givens/flops.hpp"
#include "givens/line_search.hpp"
#include "givens/matrix.hpp"
#include "givens/minimize.hpp"
#include "givens/orthogonal.hpp"
#include "givens/rotation.hpp"

namespace givens {

/// Data set with features along rows and observations along columns.
class DataMatrix {
 public:
  explicit DataMatrix(Matrix a) : a_(std::move(a)) {
    if (a_.rows() < 1 || a_.cols() < 1) {
      throw shape_error("DataMatrix: need at least one feature and one sample");
    }
    if (!all_finite(a_)) throw data_error("DataMatrix: non-finite entries");
  }

  int features() const { return static_cast<int>(a_.rows()); }
  int samples() const { return static_cast<int>(a_.cols()); }
  const Matrix& matrix() const { return a_; }

 private:
  Matrix a_;
};

/// Solver state: the product A*U maintained in place, plus the sparsity
/// penalty. The orthogonal factor itself is never stored.
struct SpcaState {
  Matrix au;  // d x m
  double gamma = 0.0;

  int components() const { return static_cast<int>(au.cols()); }
};

/// Penalized objective: sum over entries of max(|AU_kj| - gamma, 0)^2.
/// Charged at 3 flops per entry (subtract, square, accumulate).
inline double spca_objective(const SpcaState& s, FlopCounter* fc = nullptr) {
  double total = 0.0;
  for (Eigen::Index r = 0; r < s.au.rows(); ++r) {
    for (Eigen::Index c = 0; c < s.au.cols(); ++c) {
      const double t = std::abs(s.au(r, c)) - s.gamma;
      if (t > 0.0) total += t * t;
    }
  }
  if (fc) fc->add(3 * static_cast<std::uint64_t>(s.au.size()));
  return total;
}

/// One-variable restriction of the (negated) objective to a rotation of
/// columns i and j: only those two columns' contribution varies. Each
/// evaluation costs O(d) and charges 12 flops per row.
inline std::function<double(double)> spca_coordinate_g(const SpcaState& s, int i, int j,
                                                       FlopCounter* fc = nullptr) {
  const int m = s.components();
  if (i < 0 || j >= m || i >= j) throw invalid_coordinate("spca_coordinate_g: bad column pair");
  Vector x = s.au.col(i);
  Vector y = s.au.col(j);
  const double gamma = s.gamma;
  return [x = std::move(x), y = std::move(y), gamma, fc](double theta) {
    const double c = std::cos(theta);
    const double sn = std::sin(theta);
    double total = 0.0;
    const Eigen::Index d = x.size();
    for (Eigen::Index k = 0; k < d; ++k) {
      const double a = c * x[k] + sn * y[k];
      const double b = -sn * x[k] + c * y[k];
      const double ta = std::abs(a) - gamma;
      if (ta > 0.0) total += ta * ta;
      const double tb = std::abs(b) - gamma;
      if (tb > 0.0) total += tb * tb;
    }
    if (fc) fc->add(12 * static_cast<std::uint64_t>(d));
    return -total;
  };
}

struct SpcaStepResult {
  double theta = 0.0;
  double objective_gain = 0.0;  // increase of the maximized objective, >= 0
  int evaluations = 0;          // g calls spent, including the theta=0 probe
};

/// One coordinate-maximization step: pick the best angle for the pair and
/// rotate the maintained product in place.
inline SpcaStepResult spca_step(SpcaState& s, int i, int j, FlopCounter& fc,
                                double line_search_tol = 1e-10) {
  auto g = spca_coordinate_g(s, i, j, &fc);
  const double g0 = g(0.0);
  auto ls = line_minimize_periodic(g, line_search_tol);
  rotate_columns(s.au, make_givens(i, j, ls.theta, s.components()), fc);
  return {ls.theta, g0 - ls.value, ls.evaluations + 1};
}

/// Sparse loading vectors; every nonzero column has unit 2-norm, columns
/// fully below the threshold are left zero and flagged.
struct SparseLoadings {
  Matrix z;
  std::vector<int> support;       // nonzeros per column
  std::vector<bool> zero_column;  // true where the column was fully truncated
};

/// Closed-form maximizer of Tr(Z^T AU) - gamma * sum|Z| over unit-norm
/// columns: soft-threshold each entry, then normalize each column.
inline SparseLoadings solve_for_z(const Matrix& au, double gamma) {
  if (gamma < 0.0) throw config_error("solve_for_z: gamma must be non-negative");
  const Eigen::Index d = au.rows(), m = au.cols();
  SparseLoadings out;
  out.z = Matrix::Zero(d, m);
  out.support.assign(static_cast<std::size_t>(m), 0);
  out.zero_column.assign(static_cast<std::size_t>(m), false);
  for (Eigen::Index c = 0; c < m; ++c) {
    double norm_sq = 0.0;
    int nnz = 0;
    for (Eigen::Index r = 0; r < d; ++r) {
      const double v = au(r, c);
      const double t = std::abs(v) - gamma;
      if (t > 0.0) {
        const double z = v > 0.0 ? t : -t;
        out.z(r, c) = z;
        norm_sq += z * z;
        ++nnz;
      }
    }
    out.support[static_cast<std::size_t>(c)] = nnz;
    if (norm_sq > 0.0) {
      out.z.col(c) /= std::sqrt(norm_sq);
    } else {
      out.zero_column[static_cast<std::size_t>(c)] = true;
    }
  }
  return out;
}

/// Entries of the current loadings support: |AU_kj| strictly above gamma.
inline std::int64_t count_loadings_support(const Matrix& au, double gamma) {
  std::int64_t n = 0;
  for (Eigen::Index r = 0; r < au.rows(); ++r)
    for (Eigen::Index c = 0; c < au.cols(); ++c)
      if (std::abs(au(r, c)) > gamma) ++n;
  return n;
}

struct SpcaOptions {
  std::uint64_t seed = 0;
  StoppingRule stop;
  double line_search_tol = 1e-10;
  bool trace_support = true;  // record the support size per iteration
};

struct SpcaResult {
  SparseLoadings loadings;
  DescentTrace trace;
  Matrix au;
  double objective = 0.0;
  std::uint64_t iterations = 0;
  StopReason reason = StopReason::max_iterations;
};

namespace detail {

/// Riemannian gradient norm of the sparse-PCA objective by central finite
/// differences over all column pairs. Diagnostic only; not flop-charged.
inline double spca_gradient_norm(const SpcaState& s) {
  const int m = s.components();
  double sum_sq = 0.0;
  for (int i = 0; i < m; ++i) {
    for (int j = i + 1; j < m; ++j) {
      auto g = spca_coordinate_g(s, i, j, nullptr);
      const double slope = (g(fd_step) - g(-fd_step)) / (2.0 * fd_step);
      sum_sq += slope * slope;
    }
  }
  return std::sqrt(2.0 * sum_sq);
}

}  // namespace detail

/// Full-case sparse PCA (components = samples): coordinate maximization of
/// the penalized objective over the maintained product AU, then loadings
/// extraction. The trace records the ascending objective and cumulative
/// flops per iteration.
inline SpcaResult spca_full(const DataMatrix& a, double gamma, const OrthogonalMatrix& u0,
                            const SpcaOptions& opts, FlopCounter& fc) {
  const int n = a.samples();
  const int d = a.features();
  if (n < 2) throw config_error("spca_full: need at least two samples to rotate");
  if (u0.dim() != n) {
    throw shape_error("spca_full: U0 must be " + std::to_string(n) + "x" + std::to_string(n));
  }
  if (gamma < 0.0) throw config_error("spca_full: gamma must be non-negative");
  opts.stop.validate();

  double max_row_norm = 0.0;
  for (int r = 0; r < d; ++r) max_row_norm = std::max(max_row_norm, a.matrix().row(r).norm());
  if (gamma >= max_row_norm) {
    throw degenerate_penalty_error(
        "spca_full: gamma=" + std::to_string(gamma) + " >= max feature norm " +
        std::to_string(max_row_norm) + "; objective is identically zero");
  }

  SpcaState state{a.matrix() * u0.matrix(), gamma};
  fc.add(static_cast<std::uint64_t>(d) * n * (2 * n - 1));
  double objective = spca_objective(state, &fc);

  SpcaResult result;
  result.trace.sense = Sense::maximize;
  TraceRecord initial;
  initial.objective = objective;
  initial.flops = fc.count();
  if (opts.trace_support) initial.nnz = count_loadings_support(state.au, gamma);
  result.trace.records.push_back(initial);

  const std::uint64_t window = static_cast<std::uint64_t>(n) * (n - 1) / 2;
  const std::uint64_t grad_interval = opts.stop.gradient_check_interval.value_or(window);
  std::mt19937_64 rng(opts.seed);
  auto pairs = detail::all_pairs(n);
  std::uniform_int_distribution<std::size_t> pick(0, pairs.size() - 1);

  std::uint64_t t = 0;
  StopReason reason = StopReason::max_iterations;
  while (true) {
    if (opts.stop.max_iterations && t >= *opts.stop.max_iterations) {
      reason = StopReason::max_iterations;
      break;
    }
    if (opts.stop.max_flops && fc.count() >= *opts.stop.max_flops) {
      reason = StopReason::max_flops;
      break;
    }
    if (opts.stop.objective_tol && result.trace.records.size() > window) {
      const auto& recs = result.trace.records;
      const double prev = recs[recs.size() - 1 - window].objective;
      if (std::abs(objective - prev) / std::max(1.0, std::abs(prev)) < *opts.stop.objective_tol) {
        reason = StopReason::objective_tol;
        break;
      }
    }
    if (opts.stop.gradient_norm_tol && t % std::max<std::uint64_t>(grad_interval, 1) == 0) {
      if (detail::spca_gradient_norm(state) <= *opts.stop.gradient_norm_tol) {
        reason = StopReason::gradient_norm_tol;
        break;
      }
    }

    const auto [i, j] = pairs[pick(rng)];
    auto step = spca_step(state, i, j, fc, opts.line_search_tol);
    objective += step.objective_gain;  // metric upkeep, not flop-charged
    ++t;

    TraceRecord rec;
    rec.iteration = t;
    rec.i = i;
    rec.j = j;
    rec.theta = step.theta;
    rec.objective = objective;
    rec.flops = fc.count();
    if (opts.trace_support) rec.nnz = count_loadings_support(state.au, gamma);
    result.trace.records.push_back(rec);
  }

  result.loadings = solve_for_z(state.au, gamma);
  result.au = std::move(state.au);
  result.objective = objective;
  result.iterations = t;
  result.reason = reason;
  return result;
}

struct AdjustedVariance {
  double raw = 0.0;         // sum of squared triangular diagonal entries
  double normalized = 0.0;  // raw / ||A||_F^2
  int effective_rank = 0;
};

/// Variance explained by possibly non-orthogonal loadings: orthogonalize the
/// score matrix A^T Z column by column and credit each component only with
/// the variance not already counted. Dependent columns are dropped.
inline AdjustedVariance adjusted_explained_variance(const DataMatrix& a, const Matrix& z) {
  if (z.rows() != a.features()) {
    throw shape_error("adjusted_explained_variance: loadings rows must match features");
  }
  Matrix y = a.matrix().transpose() * z;  // n x m score matrix
  AdjustedVariance out;
  std::vector<Vector> basis;
  for (Eigen::Index c = 0; c < y.cols(); ++c) {
    Vector v = y.col(c);
    const double original = v.norm();
    for (const Vector& q : basis) v -= q.dot(v) * q;
    const double rjj = v.norm();
    if (original > 0.0 && rjj > 1e-8 * original) {
      basis.push_back(v / rjj);
      out.raw += rjj * rjj;
      ++out.effective_rank;
    }
  }
  const double total = a.matrix().squaredNorm();
  out.normalized = total > 0.0 ? out.raw / total : 0.0;
  return out;
}

/// Fraction of entries with magnitude above 1e-12.
inline double sparsity(const Matrix& z) {
  if (z.size() == 0) return 0.0;
  std::int64_t nnz = 0;
  for (Eigen::Index r = 0; r < z.rows(); ++r)
    for (Eigen::Index c = 0; c < z.cols(); ++c)
      if (std::abs(z(r, c)) > 1e-12) ++nnz;
  return static_cast<double>(nnz) / static_cast<double>(z.size());
}

}  // namespace givens
