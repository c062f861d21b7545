#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "givens/errors.hpp"
#include "givens/matrix.hpp"
#include "givens/orthogonal.hpp"
#include "givens/tensor.hpp"

namespace givens {

/// Mixture of k spherical Gaussians in R^D with a shared variance.
struct GmmModel {
  Vector weights;  // k, positive, sums to one
  Matrix means;    // D x k, one column per component
  double sigma2 = 1.0;

  int components() const { return static_cast<int>(weights.size()); }
  int dim() const { return static_cast<int>(means.rows()); }

  void validate() const {
    if (weights.size() < 1 || means.cols() != weights.size()) {
      throw shape_error("GmmModel: weights and means disagree");
    }
    if (!(sigma2 > 0.0)) throw config_error("GmmModel: sigma2 must be positive");
    double total = 0.0;
    for (int k = 0; k < weights.size(); ++k) {
      if (!(weights(k) > 0.0)) throw config_error("GmmModel: weights must be positive");
      total += weights(k);
    }
    if (std::abs(total - 1.0) > 1e-12) throw config_error("GmmModel: weights must sum to one");
  }
};

struct LabeledSamples {
  Matrix points;            // D x n
  std::vector<int> labels;  // component index per column
};

/// Draws n labeled samples; component by weight, point = mean + sigma * z.
inline LabeledSamples sample_gmm(const GmmModel& model, int n, std::uint64_t seed) {
  model.validate();
  if (n < 1) throw config_error("sample_gmm: need at least one sample");
  std::mt19937_64 rng(seed);
  std::discrete_distribution<int> component(model.weights.data(),
                                            model.weights.data() + model.weights.size());
  std::normal_distribution<double> gauss;
  const double sigma = std::sqrt(model.sigma2);
  const int dim = model.dim();
  LabeledSamples out;
  out.points = Matrix(dim, n);
  out.labels.resize(static_cast<std::size_t>(n));
  for (int s = 0; s < n; ++s) {
    const int c = component(rng);
    out.labels[static_cast<std::size_t>(s)] = c;
    for (int r = 0; r < dim; ++r) out.points(r, s) = model.means(r, c) + sigma * gauss(rng);
  }
  return out;
}

/// Raw (uncorrected) moments: the mean, E[x x^T], and E[x (x) x (x) x].
struct RawMoments {
  Vector m1;
  Matrix m2;
  SymmetricTensor3 m3;
};

/// Moment estimates corrected for the spherical noise: sigma2 from the
/// smallest covariance eigenvalue, the identity term removed from the second
/// moment, and the three mean-slice terms removed from the third.
struct MomentEstimates {
  Vector m1;
  Matrix m2;
  SymmetricTensor3 m3;
  double sigma2_hat = 0.0;
  bool conditioning_warning = false;  // covariance was not numerically PSD
};

/// Applies the spherical-noise corrections to raw moments. Shared by the
/// empirical path and the analytic population path, which is what the
/// population oracle tests exploit.
inline MomentEstimates correct_raw_moments(const Vector& m1, const Matrix& m2_raw,
                                           const SymmetricTensor3& m3_raw) {
  const int dim = static_cast<int>(m1.size());
  if (m2_raw.rows() != dim || m2_raw.cols() != dim || m3_raw.dim() != dim) {
    throw shape_error("correct_raw_moments: dimension mismatch");
  }
  Matrix cov = m2_raw - m1 * m1.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (cov + cov.transpose()));
  const double smallest = es.eigenvalues()(0);
  MomentEstimates out{m1, Matrix(), SymmetricTensor3::zero(dim), 0.0, false};
  out.sigma2_hat = smallest;
  if (smallest < 0.0) {
    out.conditioning_warning = true;
    out.sigma2_hat = 0.0;
  }
  out.m2 = m2_raw - out.sigma2_hat * Matrix::Identity(dim, dim);

  std::vector<double> values = m3_raw.values();
  auto flat = [dim](int a, int b, int c) {
    return (static_cast<std::size_t>(a) * dim + b) * dim + c;
  };
  for (int a = 0; a < dim; ++a) {
    for (int b = 0; b < dim; ++b) {
      // subtract sigma2 * (m1 (x) e_a (x) e_a + e_a (x) m1 (x) e_a + e_a (x) e_a (x) m1)
      for (int c = 0; c < dim; ++c) {
        double corr = 0.0;
        if (b == c) corr += m1(a);
        if (a == c) corr += m1(b);
        if (a == b) corr += m1(c);
        values[flat(a, b, c)] -= out.sigma2_hat * corr;
      }
    }
  }
  out.m3 = SymmetricTensor3::symmetrized(dim, values);
  return out;
}

/// Empirical moments of a sample matrix (columns are observations).
inline MomentEstimates estimate_moments(const Matrix& points, int k) {
  const int dim = static_cast<int>(points.rows());
  const int n = static_cast<int>(points.cols());
  if (k < 1 || dim < k) throw config_error("estimate_moments: need D >= k >= 1");
  if (n <= dim) {
    throw insufficient_data_error("estimate_moments: need more samples than dimensions");
  }
  Vector m1 = points.rowwise().mean();
  Matrix m2 = (points * points.transpose()) / static_cast<double>(n);

  std::vector<double> m3(static_cast<std::size_t>(dim) * dim * dim, 0.0);
  std::vector<double> outer(static_cast<std::size_t>(dim) * dim);
  for (int s = 0; s < n; ++s) {
    for (int a = 0; a < dim; ++a)
      for (int b = 0; b < dim; ++b) outer[static_cast<std::size_t>(a) * dim + b] =
          points(a, s) * points(b, s);
    std::size_t idx = 0;
    for (int a = 0; a < dim; ++a) {
      const double xa = points(a, s);
      for (std::size_t bc = 0; bc < outer.size(); ++bc, ++idx) m3[idx] += xa * outer[bc];
    }
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  for (double& v : m3) v *= inv_n;

  return correct_raw_moments(m1, m2, SymmetricTensor3::symmetrized(dim, m3));
}

/// Analytic raw moments of a model: closed-form mixture expectations.
inline RawMoments population_raw_moments(const GmmModel& model) {
  model.validate();
  const int dim = model.dim();
  const int k = model.components();
  Vector m1 = Vector::Zero(dim);
  for (int c = 0; c < k; ++c) m1 += model.weights(c) * model.means.col(c);

  Matrix m2 = model.sigma2 * Matrix::Identity(dim, dim);
  for (int c = 0; c < k; ++c) {
    m2 += model.weights(c) * model.means.col(c) * model.means.col(c).transpose();
  }

  std::vector<double> m3(static_cast<std::size_t>(dim) * dim * dim, 0.0);
  auto flat = [dim](int a, int b, int c) {
    return (static_cast<std::size_t>(a) * dim + b) * dim + c;
  };
  for (int a = 0; a < dim; ++a) {
    for (int b = 0; b < dim; ++b) {
      for (int c = 0; c < dim; ++c) {
        double v = 0.0;
        for (int comp = 0; comp < k; ++comp) {
          v += model.weights(comp) * model.means(a, comp) * model.means(b, comp) *
               model.means(c, comp);
        }
        if (b == c) v += model.sigma2 * m1(a);
        if (a == c) v += model.sigma2 * m1(b);
        if (a == b) v += model.sigma2 * m1(c);
        m3[flat(a, b, c)] = v;
      }
    }
  }
  return RawMoments{std::move(m1), std::move(m2), SymmetricTensor3::symmetrized(dim, m3)};
}

/// Whitening map W (D x k) with W^T M2 W = I, plus the un-whitening map
/// B = U_k D_k^{1/2} used to pull recovered directions back to R^D.
struct Whitening {
  Matrix w;
  Matrix unwhiten;
  Vector eigenvalues;  // top-k, descending
};

inline Whitening whiten(const Matrix& m2, int k) {
  const int dim = static_cast<int>(m2.rows());
  if (m2.cols() != dim) throw shape_error("whiten: matrix must be square");
  if (k < 1 || k > dim) throw config_error("whiten: need 1 <= k <= D");
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m2 + m2.transpose()));
  const Vector evals = es.eigenvalues();  // ascending
  const double tol = 1e-10 * std::max(1.0, std::abs(evals(dim - 1)));
  Whitening out;
  out.w = Matrix(dim, k);
  out.unwhiten = Matrix(dim, k);
  out.eigenvalues = Vector(k);
  for (int c = 0; c < k; ++c) {
    const double lambda = evals(dim - 1 - c);
    if (lambda <= tol) {
      throw rank_error("whiten: only " + std::to_string(c) + " of " + std::to_string(k) +
                       " eigenvalues exceed tolerance");
    }
    out.eigenvalues(c) = lambda;
    out.w.col(c) = es.eigenvectors().col(dim - 1 - c) / std::sqrt(lambda);
    out.unwhiten.col(c) = es.eigenvectors().col(dim - 1 - c) * std::sqrt(lambda);
  }
  return out;
}

/// Pushes the third moment through the whitening map:
/// T_abc = sum_{pqr} M3_pqr W_pa W_qb W_rc, computed mode by mode.
inline SymmetricTensor3 whiten_tensor(const SymmetricTensor3& m3, const Matrix& w) {
  const int dim = m3.dim();
  const int k = static_cast<int>(w.cols());
  if (w.rows() != dim) throw shape_error("whiten_tensor: map rows must match tensor dimension");
  // mode 1
  std::vector<double> s1(static_cast<std::size_t>(k) * dim * dim, 0.0);
  for (int a = 0; a < k; ++a)
    for (int q = 0; q < dim; ++q)
      for (int r = 0; r < dim; ++r) {
        double acc = 0.0;
        for (int p = 0; p < dim; ++p) acc += m3(p, q, r) * w(p, a);
        s1[(static_cast<std::size_t>(a) * dim + q) * dim + r] = acc;
      }
  // mode 2
  std::vector<double> s2(static_cast<std::size_t>(k) * k * dim, 0.0);
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b)
      for (int r = 0; r < dim; ++r) {
        double acc = 0.0;
        for (int q = 0; q < dim; ++q)
          acc += s1[(static_cast<std::size_t>(a) * dim + q) * dim + r] * w(q, b);
        s2[(static_cast<std::size_t>(a) * k + b) * dim + r] = acc;
      }
  // mode 3
  std::vector<double> s3(static_cast<std::size_t>(k) * k * k, 0.0);
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b)
      for (int c = 0; c < k; ++c) {
        double acc = 0.0;
        for (int r = 0; r < dim; ++r)
          acc += s2[(static_cast<std::size_t>(a) * k + b) * dim + r] * w(r, c);
        s3[(static_cast<std::size_t>(a) * k + b) * k + c] = acc;
      }
  return SymmetricTensor3::symmetrized(k, s3);
}

/// Model parameters from a whitened-tensor decomposition: weights 1/lambda^2
/// projected onto the simplex, means lambda * B * v.
inline GmmModel recover_parameters(const Decomposition& dec, const Whitening& wh,
                                   double sigma2_hat, double lambda_tol = 1e-8,
                                   Vector* raw_lambdas = nullptr) {
  const int k = static_cast<int>(dec.lambdas.size());
  if (wh.unwhiten.cols() != k) throw shape_error("recover_parameters: k mismatch");
  std::string failed;
  for (int c = 0; c < k; ++c) {
    if (!(dec.lambdas(c) > lambda_tol)) failed += (failed.empty() ? "" : ", ") + std::to_string(c);
  }
  if (!failed.empty()) {
    throw recovery_error("recover_parameters: components below tolerance: " + failed);
  }
  if (raw_lambdas) *raw_lambdas = dec.lambdas;

  GmmModel model;
  model.weights = Vector(k);
  model.means = Matrix(wh.unwhiten.rows(), k);
  double total = 0.0;
  for (int c = 0; c < k; ++c) {
    const double w = std::max(1.0 / (dec.lambdas(c) * dec.lambdas(c)), 1e-12);
    model.weights(c) = w;
    total += w;
    model.means.col(c) = dec.lambdas(c) * (wh.unwhiten * dec.v.col(c));
  }
  model.weights /= total;
  model.sigma2 = sigma2_hat;
  return model;
}

/// Maximum-posterior labels under the model; ties resolve to the lowest index.
inline std::vector<int> cluster_assign(const Matrix& points, const GmmModel& model) {
  model.validate();
  if (points.rows() != model.dim()) throw shape_error("cluster_assign: dimension mismatch");
  const int n = static_cast<int>(points.cols());
  const int k = model.components();
  std::vector<int> labels(static_cast<std::size_t>(n), 0);
  for (int s = 0; s < n; ++s) {
    double best = -std::numeric_limits<double>::infinity();
    int best_c = 0;
    for (int c = 0; c < k; ++c) {
      const double score = std::log(model.weights(c)) -
                           (points.col(s) - model.means.col(c)).squaredNorm() /
                               (2.0 * model.sigma2);
      if (score > best) {
        best = score;
        best_c = c;
      }
    }
    labels[static_cast<std::size_t>(s)] = best_c;
  }
  return labels;
}

/// Normalized mutual information with the arithmetic-mean denominator and
/// natural logarithms. Identical partitions (up to label names) score
/// exactly 1; two single-cluster partitions score 1 by convention; the
/// result is exactly symmetric in its arguments.
inline double nmi(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw shape_error("nmi: label vectors differ in length");
  const double n = static_cast<double>(a.size());
  if (a.empty()) throw shape_error("nmi: empty labelings");

  std::map<int, double> pa, pb;
  std::map<std::pair<int, int>, double> pab;
  for (std::size_t s = 0; s < a.size(); ++s) {
    pa[a[s]] += 1.0;
    pb[b[s]] += 1.0;
    pab[{a[s], b[s]}] += 1.0;
  }
  // a bijective contingency table means the partitions agree up to label
  // names; short-circuit so the score is 1 with no float round-off
  if (pab.size() == pa.size() && pab.size() == pb.size()) return 1.0;

  double ha = 0.0, hb = 0.0;
  for (auto& [label, count] : pa) {
    const double p = count / n;
    ha -= p * std::log(p);
  }
  for (auto& [label, count] : pb) {
    const double p = count / n;
    hb -= p * std::log(p);
  }
  // accumulate cell terms in sorted order so the sum does not depend on the
  // argument order
  std::vector<double> terms;
  terms.reserve(pab.size());
  for (auto& [key, count] : pab) {
    const double p = count / n;
    const double px = pa[key.first] / n;
    const double py = pb[key.second] / n;
    terms.push_back(p * std::log(p / (px * py)));
  }
  std::sort(terms.begin(), terms.end());
  double mi = 0.0;
  for (double t : terms) mi += t;
  const double denom = 0.5 * (ha + hb);
  if (denom <= 0.0) return 1.0;  // both partitions are single clusters
  return std::clamp(mi / denom, 0.0, 1.0);
}

/// Well-separated synthetic model: seeded Gaussian centers scaled by
/// `spread`, mildly unequal weights, unit spherical variance by default.
inline GmmModel make_separated_model(int dim, int k, std::uint64_t seed, double spread = 5.0,
                                     double sigma2 = 1.0) {
  if (k < 1 || dim < k) throw config_error("make_separated_model: need D >= k >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  GmmModel model;
  model.means = Matrix(dim, k);
  for (int c = 0; c < k; ++c)
    for (int r = 0; r < dim; ++r) model.means(r, c) = spread * gauss(rng);
  model.weights = Vector(k);
  for (int c = 0; c < k; ++c) model.weights(c) = 2.0 + c;
  model.weights /= model.weights.sum();
  model.sigma2 = sigma2;
  return model;
}

/// Centers drawn from a Gaussian whose covariance is inverse-Wishart with
/// nu = D + 2 and identity scale; mirrors the synthetic-center preset.
inline GmmModel make_wishart_model(int dim, int k, std::uint64_t seed, double sigma2 = 2.0) {
  if (k < 1 || dim < k) throw config_error("make_wishart_model: need D >= k >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  const int nu = dim + 2;
  // Wishart(nu, I) via the Bartlett factor, then invert for the center prior.
  Matrix bartlett = Matrix::Zero(dim, dim);
  for (int r = 0; r < dim; ++r) {
    std::gamma_distribution<double> chi2((nu - r) / 2.0, 2.0);
    bartlett(r, r) = std::sqrt(chi2(rng));
    for (int c = 0; c < r; ++c) bartlett(r, c) = gauss(rng);
  }
  Matrix wishart = bartlett * bartlett.transpose();
  Matrix cov = wishart.inverse();
  Eigen::LLT<Matrix> llt(0.5 * (cov + cov.transpose()));
  Matrix chol = llt.matrixL();

  GmmModel model;
  model.means = Matrix(dim, k);
  for (int c = 0; c < k; ++c) {
    Vector z(dim);
    for (int r = 0; r < dim; ++r) z(r) = gauss(rng);
    model.means.col(c) = chol * z;
  }
  model.weights = Vector::Constant(k, 1.0 / k);
  model.sigma2 = sigma2;
  return model;
}

struct PipelineResult {
  GmmModel recovered;
  Vector raw_lambdas;
  Decomposition decomposition;
  double whitened_residual = 0.0;
  bool conditioning_warning = false;
  double sigma2_hat = 0.0;
};

/// Moment pipeline on prepared estimates: whiten, decompose, recover.
inline PipelineResult run_pipeline_from_moments(const MomentEstimates& moments, int k,
                                                std::uint64_t seed, FlopCounter& fc,
                                                TensorMode mode = TensorMode::accelerated) {
  PipelineResult out;
  out.conditioning_warning = moments.conditioning_warning;
  out.sigma2_hat = moments.sigma2_hat;
  Whitening wh = whiten(moments.m2, k);
  SymmetricTensor3 whitened = whiten_tensor(moments.m3, wh.w);
  TensorDecomposeOptions opts;
  opts.mode = mode;
  opts.seed = seed;
  auto dec = tensor_decompose(whitened, random_orthogonal(k, seed ^ 0x5bd1e995u), opts, fc);
  out.decomposition = dec.decomposition;
  out.whitened_residual = decomposition_residual(whitened, dec.decomposition);
  out.recovered =
      recover_parameters(dec.decomposition, wh, moments.sigma2_hat, 1e-8, &out.raw_lambdas);
  return out;
}

/// Full estimation pipeline from samples.
inline PipelineResult run_gmm_pipeline(const Matrix& points, int k, std::uint64_t seed,
                                       FlopCounter& fc,
                                       TensorMode mode = TensorMode::accelerated) {
  return run_pipeline_from_moments(estimate_moments(points, k), k, seed, fc, mode);
}

}  // namespace givens
