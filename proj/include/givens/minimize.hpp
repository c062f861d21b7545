#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "givens/errors.hpp"
#include "givens/flops.hpp"
#include "givens/line_search.hpp"
#include "givens/objective.hpp"
#include "givens/orthogonal.hpp"
#include "givens/rotation.hpp"

namespace givens {

/// Stop conditions for the coordinate solvers. At least one criterion must be
/// set; an empty rule can never be satisfied and is rejected at entry.
struct StoppingRule {
  std::optional<std::uint64_t> max_iterations;
  std::optional<std::uint64_t> max_flops;
  /// Relative objective change below this over a sliding window of
  /// d(d-1)/2 iterations stops the run.
  std::optional<double> objective_tol;
  /// Riemannian gradient norm (not squared) below this stops the run.
  std::optional<double> gradient_norm_tol;
  /// Iterations between gradient evaluations for the rule above; defaults to
  /// d(d-1)/2 when unset.
  std::optional<std::uint64_t> gradient_check_interval;

  void validate() const {
    if (!max_iterations && !max_flops && !objective_tol && !gradient_norm_tol) {
      throw config_error("StoppingRule: no stopping criterion configured");
    }
  }
};

enum class StopReason {
  max_iterations,
  max_flops,
  objective_tol,
  gradient_norm_tol,
  stationary,  // resampling variant exhausted all pairs without improvement
};

inline const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::max_iterations: return "max_iterations";
    case StopReason::max_flops: return "max_flops";
    case StopReason::objective_tol: return "objective_tol";
    case StopReason::gradient_norm_tol: return "gradient_norm_tol";
    case StopReason::stationary: return "stationary";
  }
  return "unknown";
}

enum class Sense { minimize, maximize };

struct TraceRecord {
  std::uint64_t iteration = 0;
  int i = -1;  // -1 on the initial record
  int j = -1;
  double theta = 0.0;
  double objective = 0.0;
  std::uint64_t flops = 0;
  std::optional<double> grad_norm_squared;
  std::optional<std::int64_t> nnz;  // sparse-PCA runs record the support size
};

/// Per-iteration record of a coordinate run: the cost axis (cumulative flops)
/// against the quality axis (objective), plus the rotation applied.
struct DescentTrace {
  Sense sense = Sense::minimize;
  std::vector<TraceRecord> records;

  /// Objective non-increasing (minimize) / non-decreasing (maximize) up to
  /// `slack` per step.
  bool monotone(double slack = 1e-12) const {
    for (std::size_t t = 1; t < records.size(); ++t) {
      const double delta = records[t].objective - records[t - 1].objective;
      if (sense == Sense::minimize ? delta > slack : delta < -slack) return false;
    }
    return true;
  }
};

enum class SamplingVariant {
  /// Uniform over all pairs, with replacement.
  with_replacement,
  /// As above, but a sampled pair with |g'(0)| <= 1e-12 and no improvement
  /// triggers resampling among the untried pairs; the run stops as stationary
  /// once every pair has been tried without improvement.
  resample_zero_gradient,
};

struct MinimizeOptions {
  std::uint64_t seed = 0;
  StoppingRule stop;
  SamplingVariant sampling = SamplingVariant::with_replacement;
  double line_search_tol = 1e-10;
  /// When > 0, record ||grad f||^2 in the trace every this many iterations
  /// (and at iteration 0). Diagnostic work is not flop-charged.
  std::uint64_t gradient_sample_interval = 0;
};

struct MinimizeResult {
  Matrix u;
  DescentTrace trace;
  double orthogonality_defect = 0.0;
  std::uint64_t iterations = 0;
  StopReason reason = StopReason::max_iterations;
};

namespace detail {

inline std::vector<std::pair<int, int>> all_pairs(int d) {
  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(static_cast<std::size_t>(d) * (d - 1) / 2);
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) pairs.emplace_back(i, j);
  return pairs;
}

}  // namespace detail

/// Riemannian coordinate minimization on the orthogonal group: repeatedly
/// sample a plane (i,j), exactly minimize f(U * G(i,j,theta)) over the full
/// period, and apply the rotation. U never leaves the manifold up to float
/// drift, which is reported but not corrected.
inline MinimizeResult coordinate_minimize(CoordinateObjective& obj, const OrthogonalMatrix& u0,
                                          const MinimizeOptions& opts, FlopCounter& fc) {
  opts.stop.validate();
  const int d = obj.dim();
  if (d < 2) throw config_error("coordinate_minimize: need dimension >= 2 to rotate");
  if (u0.dim() != d) throw shape_error("coordinate_minimize: U0 dimension mismatch");

  Matrix u = u0.matrix();
  obj.set_flop_counter(&fc);
  const auto pairs = detail::all_pairs(d);
  const std::uint64_t window = pairs.size();
  std::mt19937_64 rng(opts.seed);
  std::uniform_int_distribution<std::size_t> pick(0, pairs.size() - 1);

  double f = obj.eval(u);

  MinimizeResult result;
  result.trace.sense = Sense::minimize;

  auto sample_gradient = [&](TraceRecord& rec) {
    FlopPause pause(obj);
    rec.grad_norm_squared = riemannian_gradient(obj, u).norm_squared();
  };

  TraceRecord initial;
  initial.objective = f;
  initial.flops = fc.count();
  if (opts.gradient_sample_interval > 0) sample_gradient(initial);
  result.trace.records.push_back(initial);

  const std::uint64_t grad_interval =
      std::max<std::uint64_t>(1, opts.stop.gradient_check_interval.value_or(window));

  std::uint64_t t = 0;
  StopReason reason = StopReason::max_iterations;
  bool stopped = false;
  while (!stopped) {
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
      const double change = std::abs(f - prev) / std::max(1.0, std::abs(prev));
      if (change < *opts.stop.objective_tol) {
        reason = StopReason::objective_tol;
        break;
      }
    }
    if (opts.stop.gradient_norm_tol && t % grad_interval == 0) {
      FlopPause pause(obj);
      const double norm2 = riemannian_gradient(obj, u).norm_squared();
      if (std::sqrt(norm2) <= *opts.stop.gradient_norm_tol) {
        reason = StopReason::gradient_norm_tol;
        break;
      }
    }

    auto [i, j] = pairs[pick(rng)];

    // Resampling variant: skip to an untried pair while the sampled one is
    // first-order flat and exact minimization cannot improve.
    std::vector<std::pair<int, int>> untried;
    bool resampling = false;
    bool pair_accepted = true;
    double theta = 0.0, g0 = 0.0, g_star = 0.0;
    while (true) {
      auto restricted = obj.restrict(u, i, j);
      g0 = restricted.g(0.0);
      if (restricted.argmin) {
        theta = *restricted.argmin;
        g_star = restricted.g(theta);
      } else {
        auto ls = line_minimize_periodic(restricted.g, opts.line_search_tol);
        theta = ls.theta;
        g_star = ls.value;
      }
      if (opts.sampling == SamplingVariant::with_replacement) break;

      const bool improves = g_star < g0;
      bool flat;
      {
        FlopPause pause(obj);
        flat = std::abs(obj.directional_derivative(u, i, j)) <= 1e-12;
      }
      if (improves || !flat) break;

      if (!resampling) {
        resampling = true;
        untried = pairs;
        std::erase(untried, std::make_pair(i, j));
      }
      if (untried.empty()) {
        pair_accepted = false;
        break;
      }
      std::uniform_int_distribution<std::size_t> pick_untried(0, untried.size() - 1);
      const std::size_t k = pick_untried(rng);
      i = untried[k].first;
      j = untried[k].second;
      untried.erase(untried.begin() + static_cast<std::ptrdiff_t>(k));
    }
    if (!pair_accepted) {
      reason = StopReason::stationary;
      stopped = true;
      break;
    }

    rotate_columns(u, GivensRotation{i, j, theta}, fc);
    obj.apply(u, i, j, theta);
    f += g_star - g0;
    ++t;

    TraceRecord rec;
    rec.iteration = t;
    rec.i = i;
    rec.j = j;
    rec.theta = theta;
    rec.objective = f;
    rec.flops = fc.count();
    if (opts.gradient_sample_interval > 0 && t % opts.gradient_sample_interval == 0) {
      sample_gradient(rec);
    }
    result.trace.records.push_back(rec);
  }

  result.u = std::move(u);
  result.iterations = t;
  result.reason = reason;
  result.orthogonality_defect = orthogonality_defect(result.u);
  return result;
}

}  // namespace givens
