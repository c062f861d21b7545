#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>

#include "givens/errors.hpp"
#include "givens/flops.hpp"
#include "givens/matrix.hpp"
#include "givens/orthogonal.hpp"
#include "givens/spca.hpp"

namespace givens {

/// Source of d-dimensional samples. Exhaustion is signaled through an empty
/// optional, never as an error.
class SampleStream {
 public:
  virtual ~SampleStream() = default;
  virtual int dimension() const = 0;
  virtual std::optional<Vector> next() = 0;
  /// Samples handed out so far.
  virtual std::uint64_t position() const = 0;
};

/// In-memory adapter; columns of the stored matrix are the samples. Supports
/// rewinding for multi-pass experiments.
class MatrixColumnStream final : public SampleStream {
 public:
  explicit MatrixColumnStream(Matrix data) : data_(std::move(data)) {}

  int dimension() const override { return static_cast<int>(data_.rows()); }

  std::optional<Vector> next() override {
    if (pos_ >= data_.cols()) return std::nullopt;
    return Vector(data_.col(pos_++));
  }

  std::uint64_t position() const override { return static_cast<std::uint64_t>(pos_); }

  std::uint64_t total() const { return static_cast<std::uint64_t>(data_.cols()); }
  void reset() { pos_ = 0; }

 private:
  Matrix data_;
  Eigen::Index pos_ = 0;
};

namespace detail {

/// Contribution of one buffer column to the penalized objective.
inline double column_contribution(const Eigen::Ref<const Vector>& col, double gamma) {
  double total = 0.0;
  for (Eigen::Index k = 0; k < col.size(); ++k) {
    const double t = std::abs(col[k]) - gamma;
    if (t > 0.0) total += t * t;
  }
  return total;
}

}  // namespace detail

/// Streaming solver state: a buffer of exactly m product columns.
struct StreamState {
  SpcaState spca;             // au buffer (d x m) and gamma
  int inner_iterations = 0;   // rotations per round (L)
  std::uint64_t samples_consumed = 0;
};

/// Fills the buffer with the first m samples times U0. `inner_iterations`
/// of -1 selects the default of m rotations per round.
inline StreamState stream_init(SampleStream& stream, int m, const OrthogonalMatrix& u0,
                               double gamma, int inner_iterations, FlopCounter& fc) {
  if (m < 1) throw config_error("stream_init: need at least one component");
  if (u0.dim() != m) throw shape_error("stream_init: U0 must be m x m");
  if (gamma < 0.0) throw config_error("stream_init: gamma must be non-negative");
  if (inner_iterations < -1) throw config_error("stream_init: bad inner iteration count");

  const int d = stream.dimension();
  Matrix buffer(d, m);
  for (int c = 0; c < m; ++c) {
    auto v = stream.next();
    if (!v) {
      throw insufficient_data_error("stream_init: stream ended after " + std::to_string(c) +
                                    " of " + std::to_string(m) + " samples");
    }
    if (v->size() != d) throw shape_error("stream_init: sample dimension mismatch");
    buffer.col(c) = *v;
  }

  StreamState st;
  st.spca.au = buffer * u0.matrix();
  fc.add(static_cast<std::uint64_t>(d) * m * (2 * m - 1));
  st.spca.gamma = gamma;
  st.inner_iterations = inner_iterations < 0 ? m : inner_iterations;
  st.samples_consumed = static_cast<std::uint64_t>(m);
  return st;
}

struct StreamRoundResult {
  bool replaced = false;   // false once the stream is exhausted
  int evicted = -1;        // least-norm column index (ties to lowest)
  double objective_gain = 0.0;
};

/// One round: L coordinate-maximization rotations on the buffer, then evict
/// the least-norm column and admit the next sample verbatim. When the stream
/// is exhausted the replacement is skipped and reported.
inline StreamRoundResult stream_round(StreamState& st, SampleStream& stream, std::mt19937_64& rng,
                                      FlopCounter& fc, double line_search_tol = 1e-10,
                                      DescentTrace* trace = nullptr, double* objective = nullptr) {
  const int m = st.spca.components();
  StreamRoundResult out;
  std::uniform_int_distribution<int> pick_i(0, m - 1);
  // a single-column buffer has no pairs to rotate; rounds degrade to pure
  // sample replacement
  for (int t = 0; m >= 2 && t < st.inner_iterations; ++t) {
    int i = pick_i(rng);
    int j = pick_i(rng);
    while (j == i) j = pick_i(rng);
    if (i > j) std::swap(i, j);
    auto step = spca_step(st.spca, i, j, fc, line_search_tol);
    out.objective_gain += step.objective_gain;
    if (trace) {
      TraceRecord rec;
      rec.iteration = trace->records.empty() ? 1 : trace->records.back().iteration + 1;
      rec.i = i;
      rec.j = j;
      rec.theta = step.theta;
      if (objective) {
        *objective += step.objective_gain;
        rec.objective = *objective;
      }
      rec.flops = fc.count();
      rec.nnz = count_loadings_support(st.spca.au, st.spca.gamma);
      trace->records.push_back(rec);
    }
  }

  // Least-norm column; charged as solver work (2d-1 flops per column).
  int i_min = 0;
  double min_norm = st.spca.au.col(0).squaredNorm();
  for (int c = 1; c < m; ++c) {
    const double nrm = st.spca.au.col(c).squaredNorm();
    if (nrm < min_norm) {
      min_norm = nrm;
      i_min = c;
    }
  }
  fc.add(static_cast<std::uint64_t>(m) * (2 * st.spca.au.rows() - 1));
  out.evicted = i_min;

  auto v = stream.next();
  if (v) {
    if (v->size() != st.spca.au.rows()) throw shape_error("stream_round: sample dimension mismatch");
    if (objective) {
      // the swap moves the objective; keep the tracked value truthful
      *objective -= detail::column_contribution(st.spca.au.col(i_min), st.spca.gamma);
    }
    st.spca.au.col(i_min) = *v;
    if (objective) {
      *objective += detail::column_contribution(st.spca.au.col(i_min), st.spca.gamma);
    }
    ++st.samples_consumed;
    out.replaced = true;
    if (trace) {
      TraceRecord rec;
      rec.iteration = trace->records.empty() ? 1 : trace->records.back().iteration + 1;
      rec.i = -1;  // marks a sample replacement, not a rotation
      rec.j = i_min;
      if (objective) rec.objective = *objective;
      rec.flops = fc.count();
      rec.nnz = count_loadings_support(st.spca.au, st.spca.gamma);
      trace->records.push_back(rec);
    }
  }
  return out;
}

/// Loadings from the final buffer.
inline SparseLoadings stream_finalize(const StreamState& st) {
  return solve_for_z(st.spca.au, st.spca.gamma);
}

struct StreamingOptions {
  int components = 1;        // m
  double gamma = 0.0;
  int inner_iterations = -1;  // -1 selects the default L = m
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> max_samples;  // total-consumption cap (early stop)
  double line_search_tol = 1e-10;
};

struct StreamingResult {
  SparseLoadings loadings;
  DescentTrace trace;
  Matrix au;
  double objective = 0.0;
  std::uint64_t samples_consumed = 0;
  std::uint64_t iterations = 0;
  bool stream_exhausted = false;
};

/// Single-pass streaming sparse PCA: rounds of L rotations plus one sample
/// replacement each, until the stream ends or the sample budget is reached.
inline StreamingResult spca_streaming(SampleStream& stream, const OrthogonalMatrix& u0,
                                      const StreamingOptions& opts, FlopCounter& fc) {
  StreamState st = stream_init(stream, opts.components, u0, opts.gamma, opts.inner_iterations, fc);
  std::mt19937_64 rng(opts.seed);

  StreamingResult result;
  result.trace.sense = Sense::maximize;
  double objective = spca_objective(st.spca, &fc);
  TraceRecord initial;
  initial.objective = objective;
  initial.flops = fc.count();
  initial.nnz = count_loadings_support(st.spca.au, st.spca.gamma);
  result.trace.records.push_back(initial);

  while (true) {
    if (opts.max_samples && st.samples_consumed >= *opts.max_samples) break;
    auto round = stream_round(st, stream, rng, fc, opts.line_search_tol, &result.trace, &objective);
    if (!round.replaced) {
      result.stream_exhausted = true;
      break;
    }
  }

  result.loadings = stream_finalize(st);
  result.objective = spca_objective(st.spca, nullptr);
  result.au = std::move(st.spca.au);
  result.samples_consumed = st.samples_consumed;
  result.iterations = result.trace.records.empty() ? 0 : result.trace.records.back().iteration;
  return result;
}

}  // namespace givens
