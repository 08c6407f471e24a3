#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace kgap {

/// Machine-readable error categories. The CLI maps each to a stable token
/// and exit status.
enum class ErrorCode : std::uint8_t {
  Config,
  Index,
  NonFinite,
  NotPositiveDefinite,
  SingularMetric,
  Parameter,
  Precondition,
  PositivityLoss,
  MaxIterExceeded,
  LinearSolveFailure,
  InsufficientSamples,
  Checksum,
  Io,
};

inline const char* error_token(ErrorCode code) {
  switch (code) {
    case ErrorCode::Config: return "CONFIG_INVALID";
    case ErrorCode::Index: return "INDEX_OUT_OF_RANGE";
    case ErrorCode::NonFinite: return "NON_FINITE";
    case ErrorCode::NotPositiveDefinite: return "NOT_POSITIVE_DEFINITE";
    case ErrorCode::SingularMetric: return "SINGULAR_METRIC";
    case ErrorCode::Parameter: return "PARAMETER";
    case ErrorCode::Precondition: return "PRECONDITION";
    case ErrorCode::PositivityLoss: return "POSITIVITY_LOSS";
    case ErrorCode::MaxIterExceeded: return "MAX_ITER_EXCEEDED";
    case ErrorCode::LinearSolveFailure: return "LINEAR_SOLVE_FAILURE";
    case ErrorCode::InsufficientSamples: return "INSUFFICIENT_SAMPLES";
    case ErrorCode::Checksum: return "CHECKSUM";
    case ErrorCode::Io: return "IO";
  }
  return "UNKNOWN";
}

inline int exit_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::Config: return 2;
    case ErrorCode::Parameter:
    case ErrorCode::Precondition: return 3;
    case ErrorCode::Checksum:
    case ErrorCode::Io: return 5;
    default: return 4;
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised when a metric fails positive-definiteness at some grid point.
class NotPositiveDefinite : public Error {
 public:
  NotPositiveDefinite(std::size_t point, double eigenvalue, const std::string& what)
      : Error(ErrorCode::NotPositiveDefinite, what), point_(point), eigenvalue_(eigenvalue) {}
  std::size_t point() const noexcept { return point_; }
  double eigenvalue() const noexcept { return eigenvalue_; }

 private:
  std::size_t point_;
  double eigenvalue_;
};

/// Raised by the Monge-Ampere solver. `t` is the continuation parameter at
/// which the failure happened (NaN when solving outside a path).
class SolverError : public Error {
 public:
  SolverError(ErrorCode code, double t, double residual, double min_eig,
              const std::string& what)
      : Error(code, what), t_(t), residual_(residual), min_eig_(min_eig) {}
  double t() const noexcept { return t_; }
  double residual() const noexcept { return residual_; }
  double min_eigenvalue() const noexcept { return min_eig_; }
  /// True when the failure looks like the path degenerating (positivity of the
  /// evolving metric is being lost) rather than a plain convergence problem.
  bool near_degeneracy() const noexcept {
    return code() == ErrorCode::PositivityLoss || min_eig_ < 1e-3;
  }

 private:
  double t_;
  double residual_;
  double min_eig_;
};

}  // namespace kgap
