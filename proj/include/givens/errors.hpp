#pragma once

#include <stdexcept>
#include <string>

namespace givens {

/// Base class for all errors thrown by this library.
class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unusable solver configuration (e.g. a stopping rule with no criterion).
class config_error : public error {
 public:
  using error::error;
};

/// Dimension or shape mismatch between operands.
class shape_error : public error {
 public:
  using error::error;
};

/// Coordinate pair outside 0 <= i < j < d.
class invalid_coordinate : public error {
 public:
  using error::error;
};

/// Non-finite value encountered during optimization; carries the angle at
/// which the offending evaluation happened.
class numeric_error : public error {
 public:
  numeric_error(const std::string& what, double theta)
      : error(what + " (theta=" + std::to_string(theta) + ")"), theta_(theta) {}
  double theta() const { return theta_; }

 private:
  double theta_ = 0.0;
};

/// Malformed input file; carries the 1-based line number when known.
class data_error : public error {
 public:
  explicit data_error(const std::string& what, long line = 0)
      : error(line > 0 ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}
  long line() const { return line_; }

 private:
  long line_ = 0;
};

/// Sparsity penalty so large the objective is identically zero.
class degenerate_penalty_error : public error {
 public:
  using error::error;
};

/// Stream or sample set too small for the requested operation.
class insufficient_data_error : public error {
 public:
  using error::error;
};

/// Matrix rank too low for the requested factorization.
class rank_error : public error {
 public:
  using error::error;
};

/// Model recovery failed; message lists the failing components.
class recovery_error : public error {
 public:
  using error::error;
};

/// Tensor fails the symmetry invariant.
class symmetry_error : public error {
 public:
  using error::error;
};

}  // namespace givens
