#pragma once

#include <stdexcept>
#include <string>

namespace essmc {

// Base class for all library errors so callers can catch one type.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Matrix handed to a Cholesky factorization was not positive definite.
struct NotPositiveDefiniteError : Error {
  explicit NotPositiveDefiniteError(const std::string& msg = "matrix not PD")
      : Error(msg) {}
};

// Proposal machinery produced a zero direction (coincident walkers).
struct DegenerateEnsembleError : Error {
  explicit DegenerateEnsembleError(const std::string& msg = "degenerate ensemble")
      : Error(msg) {}
};

// Slice interval expansion hit its cap; the target looks improper along
// this direction.
struct UnboundedSliceError : Error {
  explicit UnboundedSliceError(const std::string& msg = "unbounded slice")
      : Error(msg) {}
};

// A chain state has non-finite log density; sampling cannot proceed from it.
struct InvalidStateError : Error {
  explicit InvalidStateError(const std::string& msg = "invalid current state")
      : Error(msg) {}
};

// Bad user-supplied configuration (CLI flags, config file, constructor args).
struct ConfigError : Error {
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// Autocorrelation analysis refused to certify an estimate. Carries the best
// available value so callers can still report it, flagged as unreliable.
struct ChainTooShortError : Error {
  double best_estimate;
  explicit ChainTooShortError(double best, const std::string& msg = "chain too short")
      : Error(msg), best_estimate(best) {}
};

// Constant series: autocorrelation is undefined.
struct ZeroVarianceError : Error {
  explicit ZeroVarianceError(const std::string& msg = "zero variance")
      : Error(msg) {}
};

// I/O failure while persisting or loading artifacts.
struct IoError : Error {
  explicit IoError(const std::string& msg) : Error(msg) {}
};

}  // namespace essmc
