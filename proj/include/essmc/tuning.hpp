#pragma once

#include <algorithm>
#include <cmath>

#include "essmc/errors.hpp"

// Stochastic-approximation tuning of the slice length scale mu.
//
// Each ensemble iteration reports how many interval expansions and shrink
// contractions its slice updates performed. At the optimum the two are
// balanced, so mu is nudged by twice the expansion fraction:
//
//   mu' = 2 * mu * Ne / (Ne + Nc)
//
// with the factor clamped to [0.1, 2] to keep single updates from
// destabilizing the scale. Adaptation freezes once the fraction is close
// enough to 1/2 or after a fixed number of iterations, after which the
// chain is a plain time-homogeneous Markov chain again.

namespace essmc {

struct TuningState {
  double mu = 1.0;
  int iteration = 0;           // tuning updates applied so far
  int max_adapt_iterations = 100;
  double tolerance = 0.05;     // |Ne/(Ne+Nc) - 1/2| threshold to freeze
  bool frozen = false;
};

inline TuningState tune_length_scale(TuningState s, long n_expansions,
                                     long n_contractions) {
  if (n_expansions < 0 || n_contractions < 0)
    throw Error("tune_length_scale: negative counts");
  if (s.frozen) return s;

  const long total = n_expansions + n_contractions;
  if (total > 0) {
    const double ratio = double(n_expansions) / double(total);
    s.mu *= std::clamp(2.0 * ratio, 0.1, 2.0);
    if (std::abs(ratio - 0.5) <= s.tolerance) s.frozen = true;
  }
  // An all-interior iteration (total == 0) carries no signal; mu is kept
  // but the iteration still counts against the adaptation budget.
  ++s.iteration;
  if (s.iteration >= s.max_adapt_iterations) s.frozen = true;
  return s;
}

}  // namespace essmc
