#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <utility>

#include "essmc/errors.hpp"

// Univariate slice update along a direction vector.
//
// The walker position x0 is re-parameterized as x(t) = x0 + t * eta, so the
// slice machinery always works on the unit scale of eta: the initial
// interval has length 1 and expands in unit steps. Any tuning of the step
// length happens upstream, in the magnitude of eta itself.

namespace essmc {

struct SliceOptions {
  int max_expansions = 10000;    // total, both ends
  int max_contractions = 10000;  // shrink draws before giving up
};

struct SliceUpdateResult {
  Eigen::VectorXd new_point;
  double log_density_at_new_point = 0;
  double log_slice_height = 0;  // y: the update leaves {x : log f(x) > y}-ish
  int n_expansions = 0;
  int n_contractions = 0;
  long n_evaluations = 0;  // log-density calls made by this update
};

// One slice update. `logf_x0` must equal logf(x0); passing it in avoids a
// redundant evaluation per update. Draw order from `rng`: one uniform for
// the slice height, one for the interval placement, then one per shrink draw.
template <class LogDensity, class Rng>
SliceUpdateResult slice_along(LogDensity&& logf, const Eigen::VectorXd& x0,
                              double logf_x0, const Eigen::VectorXd& eta,
                              Rng& rng, const SliceOptions& opts = {}) {
  if (!std::isfinite(logf_x0)) throw InvalidStateError("invalid current state");
  if (eta.size() != x0.size()) throw Error("slice_along: direction dimension mismatch");
  if (eta.isZero(0.0)) throw DegenerateEnsembleError("degenerate ensemble");
  if (opts.max_expansions < 1 || opts.max_contractions < 1)
    throw ConfigError("slice_along: caps must be at least 1");

  SliceUpdateResult res;
  const auto eval = [&](double t) {
    ++res.n_evaluations;
    return logf(x0 + t * eta);
  };

  // Vertical draw: y = log f(x0) + log u defines the slice.
  const double y = logf_x0 + std::log(rng.uniform_open());
  res.log_slice_height = y;

  // Unit interval placed uniformly around t = 0, then stepped out in unit
  // increments while an endpoint is still inside the slice.
  double left = -rng.uniform();
  double right = left + 1.0;

  while (y < eval(left)) {
    left -= 1.0;
    if (++res.n_expansions > opts.max_expansions)
      throw UnboundedSliceError("unbounded slice");
  }
  while (y < eval(right)) {
    right += 1.0;
    if (++res.n_expansions > opts.max_expansions)
      throw UnboundedSliceError("unbounded slice");
  }

  // Shrink toward t = 0 until a draw lands inside the slice. x(0) = x0 is
  // inside by construction, so this terminates; the cap is a safety net
  // against NaN-shaped log densities, never a silent fallback to x0.
  for (;;) {
    const double t = rng.uniform(left, right);
    const double lf = eval(t);
    if (y < lf) {
      res.new_point = x0 + t * eta;
      res.log_density_at_new_point = lf;
      return res;
    }
    if (t < 0)
      left = t;
    else
      right = t;
    if (++res.n_contractions > opts.max_contractions)
      throw Error("slice shrink cap exceeded");
  }
}

}  // namespace essmc
