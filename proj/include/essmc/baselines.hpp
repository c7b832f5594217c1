#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <string>

#include "essmc/ensemble.hpp"
#include "essmc/errors.hpp"
#include "essmc/moves.hpp"
#include "essmc/rng.hpp"
#include "essmc/slice.hpp"
#include "essmc/target.hpp"
#include "essmc/tuning.hpp"

// Comparison samplers behind the same chain-store interface: random-walk
// Metropolis with an acceptance-rate autotuner, axis/random-direction slice
// sampling, the stretch-move ensemble, and differential-evolution MC with
// snooker updates. All of them count density evaluations through the shared
// target, so efficiency numbers are directly comparable.

namespace essmc {

enum class AxisPolicy { component_cycle, random_direction };

struct BaselineOptions {
  std::uint64_t seed = 0;
  double proposal_scale = 0;  // metropolis; 0 means autotune before running
  double mu0 = 1.0;           // slice length scale start
  int max_adapt_iterations = 100;
  double adapt_tolerance = 0.05;
  AxisPolicy axis_policy = AxisPolicy::component_cycle;
  double stretch_a = 2.0;
  double demc_gamma = 0;  // 0 means 2.38/sqrt(2D)
  double snooker_probability = 0.1;
  double demc_eps = 1e-6;
  SliceOptions slice{1000000, 10000};
  bool quiet = false;
};

struct PointUpdate {
  Eigen::VectorXd x;
  double logf = 0;
  bool accepted = false;
};

// One random-walk Metropolis update with an isotropic Gaussian proposal.
template <class Rng>
PointUpdate metropolis_step(const LogDensityTarget& target,
                            const Eigen::VectorXd& x, double logf_x,
                            double scale, Rng& rng) {
  if (scale <= 0) throw ConfigError("proposal scale must be positive");
  Eigen::VectorXd prop(x.size());
  for (int j = 0; j < x.size(); ++j) prop[j] = x[j] + scale * rng.normal();
  const double logf_prop = target.log_density(prop);
  const double u = rng.uniform();
  if (std::log(u) < logf_prop - logf_x)
    return {std::move(prop), logf_prop, true};
  return {x, logf_x, false};
}

// Fraction of accepted proposals over a fixed-length probe run from x0.
template <class Rng>
double metropolis_acceptance_probe(const LogDensityTarget& target,
                                   const Eigen::VectorXd& x0, double scale,
                                   Rng& rng, int n_steps = 2000) {
  Eigen::VectorXd x = x0;
  double logf = target.log_density(x);
  if (!std::isfinite(logf)) throw InvalidStateError("walker outside support");
  long accepted = 0;
  for (int i = 0; i < n_steps; ++i) {
    auto r = metropolis_step(target, x, logf, scale, rng);
    if (r.accepted) ++accepted;
    x = std::move(r.x);
    logf = r.logf;
  }
  return double(accepted) / double(n_steps);
}

// Doubling/halving search, then geometric bisection, until a 2000-step probe
// lands its acceptance rate in [0.2, 0.3]. Probe samples are discarded.
template <class Rng>
double metropolis_autotune(const LogDensityTarget& target,
                           const Eigen::VectorXd& x0, Rng& rng) {
  double scale = 2.38 / std::sqrt(double(target.dim()));
  double lo = 0, hi = 0;  // scales bracketing the band, 0 = unknown
  for (int probe = 0; probe < 40; ++probe) {
    const double acc = metropolis_acceptance_probe(target, x0, scale, rng);
    if (acc >= 0.2 && acc <= 0.3) return scale;
    if (acc > 0.3) {
      lo = scale;  // steps too small
      scale = hi > 0 ? std::sqrt(lo * hi) : scale * 2.0;
    } else {
      hi = scale;  // steps too large
      scale = lo > 0 ? std::sqrt(lo * hi) : scale / 2.0;
    }
  }
  throw Error("failed to tune proposal scale in 40 probes");
}

namespace detail {

template <class Rng>
Eigen::VectorXd random_unit_vector(int dim, Rng& rng) {
  Eigen::VectorXd z(dim);
  double norm2 = 0;
  do {
    for (int j = 0; j < dim; ++j) z[j] = rng.normal();
    norm2 = z.squaredNorm();
  } while (norm2 == 0);
  return z / std::sqrt(norm2);
}

// Index in [0, n) distinct from one exclusion.
template <class Rng>
int draw_index_excluding1(int n, int e, Rng& rng) {
  int i = int(rng.uniform_int(std::uint64_t(n - 1)));
  if (i >= e) ++i;
  return i;
}

// Index in [0, n) distinct from two distinct exclusions.
template <class Rng>
int draw_index_excluding2(int n, int e0, int e1, Rng& rng) {
  int i = int(rng.uniform_int(std::uint64_t(n - 2)));
  if (e0 > e1) std::swap(e0, e1);
  if (i >= e0) ++i;
  if (i >= e1) ++i;
  return i;
}

}  // namespace detail

// One slice update along a coordinate axis with length scale mu.
template <class LogDensity, class Rng>
SliceUpdateResult standard_slice_axis_step(LogDensity&& logf,
                                           const Eigen::VectorXd& x,
                                           double logf_x, int axis, double mu,
                                           Rng& rng,
                                           const SliceOptions& opts = {}) {
  if (mu <= 0) throw ConfigError("mu must be positive");
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(x.size());
  eta[axis] = mu;
  return slice_along(std::forward<LogDensity>(logf), x, logf_x, eta, rng, opts);
}

// One slice update along a uniformly random direction.
template <class LogDensity, class Rng>
SliceUpdateResult standard_slice_random_step(LogDensity&& logf,
                                             const Eigen::VectorXd& x,
                                             double logf_x, double mu, Rng& rng,
                                             const SliceOptions& opts = {}) {
  if (mu <= 0) throw ConfigError("mu must be positive");
  const Eigen::VectorXd eta =
      mu * detail::random_unit_vector(int(x.size()), rng);
  return slice_along(std::forward<LogDensity>(logf), x, logf_x, eta, rng, opts);
}

// Stretch-move scale draw: z = (u(sqrt(a)-1/sqrt(a)) + 1/sqrt(a))^2,
// distributed as g(z) proportional to 1/sqrt(z) on [1/a, a].
template <class Rng>
double stretch_scale_draw(double a, Rng& rng) {
  const double sa = std::sqrt(a);
  const double v = rng.uniform() * (sa - 1.0 / sa) + 1.0 / sa;
  return v * v;
}

// Independent Metropolis chains run in lockstep, one per walker slot.
class MetropolisSampler {
 public:
  MetropolisSampler(LogDensityTarget target, BaselineOptions opts)
      : target_(std::move(target)), opts_(opts) {}

  const LogDensityTarget& target() const { return target_; }
  double scale() const { return scale_; }

  EnsembleState initialize(int n_chains, const InitStrategy& strategy) const {
    return initialize_state(target_, n_chains, strategy, opts_.seed);
  }

  // Tunes (if no scale was given) from the first chain's position.
  void prepare(const EnsembleState& state) {
    if (opts_.proposal_scale > 0) {
      scale_ = opts_.proposal_scale;
      return;
    }
    RngStream rng(opts_.seed, kStreamScaleProbe, 0);
    scale_ = metropolis_autotune(target_, state.positions.row(0).transpose(),
                                 rng);
  }

  ChainStore run(EnsembleState& state, long n_iterations, int thin = 1,
                 long eval_budget = 0) {
    if (scale_ <= 0) prepare(state);
    ChainStore chain;
    chain.n_walkers = state.n_walkers();
    chain.dim = state.dim();
    chain.thin = thin;
    for (long it = 0; it < n_iterations; ++it) {
      long evals = 0;
      for (int w = 0; w < state.n_walkers(); ++w) {
        RngStream rng(opts_.seed, std::uint32_t(w),
                      std::uint32_t(state.iteration));
        auto r = metropolis_step(target_, state.positions.row(w).transpose(),
                                 state.log_densities[w], scale_, rng);
        state.positions.row(w) = r.x.transpose();
        state.log_densities[w] = r.logf;
        ++chain.n_proposals;
        if (r.accepted) ++chain.n_accepted;
        ++evals;
      }
      ++state.iteration;
      chain.n_evaluations += evals;
      chain.evals_per_iteration.push_back(evals);
      if (it % thin == 0) {
        for (int w = 0; w < state.n_walkers(); ++w)
          for (int d = 0; d < state.dim(); ++d)
            chain.samples.push_back(state.positions(w, d));
        ++chain.n_recorded;
      }
      if (eval_budget > 0 && chain.n_evaluations >= eval_budget) break;
    }
    return chain;
  }

 private:
  LogDensityTarget target_;
  BaselineOptions opts_;
  double scale_ = 0;
};

// Independent slice-sampling chains; one iteration performs D univariate
// updates per chain. The length scale is tuned by the same expansion/
// contraction balancing rule the ensemble sampler uses.
class StandardSliceSampler {
 public:
  StandardSliceSampler(LogDensityTarget target, BaselineOptions opts)
      : target_(std::move(target)), opts_(opts) {}

  const LogDensityTarget& target() const { return target_; }

  EnsembleState initialize(int n_chains, const InitStrategy& strategy) const {
    EnsembleState state =
        initialize_state(target_, n_chains, strategy, opts_.seed);
    state.tuning.mu = opts_.mu0;
    state.tuning.max_adapt_iterations = opts_.max_adapt_iterations;
    state.tuning.tolerance = opts_.adapt_tolerance;
    return state;
  }

  ChainStore run(EnsembleState& state, long n_iterations, int thin = 1,
                 long eval_budget = 0) {
    const int d = state.dim();
    ChainStore chain;
    chain.n_walkers = state.n_walkers();
    chain.dim = d;
    chain.thin = thin;
    const auto logf = [this](const Eigen::VectorXd& x) {
      return target_.log_density(x);
    };
    for (long it = 0; it < n_iterations; ++it) {
      long ne = 0, nc = 0, evals = 0;
      try {
        for (int w = 0; w < state.n_walkers(); ++w) {
          RngStream rng(opts_.seed, std::uint32_t(w),
                        std::uint32_t(state.iteration));
          Eigen::VectorXd x = state.positions.row(w).transpose();
          double lf = state.log_densities[w];
          for (int j = 0; j < d; ++j) {
            SliceUpdateResult r =
                opts_.axis_policy == AxisPolicy::component_cycle
                    ? standard_slice_axis_step(logf, x, lf, j, state.tuning.mu,
                                               rng, opts_.slice)
                    : standard_slice_random_step(logf, x, lf, state.tuning.mu,
                                                 rng, opts_.slice);
            x = std::move(r.new_point);
            lf = r.log_density_at_new_point;
            ne += r.n_expansions;
            nc += r.n_contractions;
            evals += r.n_evaluations;
          }
          state.positions.row(w) = x.transpose();
          state.log_densities[w] = lf;
        }
      } catch (const Error& e) {
        chain.failed = true;
        chain.failure_message = e.what();
        chain.failed_at_iteration = it;
        break;
      }
      state.tuning = tune_length_scale(state.tuning, ne, nc);
      ++state.iteration;
      chain.n_evaluations += evals;
      chain.evals_per_iteration.push_back(evals);
      chain.mu_trajectory.push_back(state.tuning.mu);
      if (it % thin == 0) {
        for (int w = 0; w < state.n_walkers(); ++w)
          for (int dd = 0; dd < d; ++dd)
            chain.samples.push_back(state.positions(w, dd));
        ++chain.n_recorded;
      }
      if (eval_budget > 0 && chain.n_evaluations >= eval_budget) break;
    }
    chain.mu_final = state.tuning.mu;
    return chain;
  }

 private:
  LogDensityTarget target_;
  BaselineOptions opts_;
};

// Affine-invariant stretch-move ensemble, split into two half-sets.
class StretchSampler {
 public:
  StretchSampler(LogDensityTarget target, BaselineOptions opts)
      : target_(std::move(target)), opts_(opts) {
    if (opts_.stretch_a <= 1) throw ConfigError("stretch_a must exceed 1");
  }

  const LogDensityTarget& target() const { return target_; }

  EnsembleState initialize(int n_walkers, const InitStrategy& strategy) const {
    if (n_walkers < 4 || n_walkers % 2 != 0)
      throw ConfigError("stretch sampler needs an even walker count of at least 4");
    EnsembleState state =
        initialize_state(target_, n_walkers, strategy, opts_.seed);
    detail::flag_rank_deficiency(state, opts_.quiet);
    return state;
  }

  ChainStore run(EnsembleState& state, long n_iterations, int thin = 1,
                 long eval_budget = 0) {
    const int n = state.n_walkers(), h = n / 2, d = state.dim();
    const double exp_d = double(d - 1);
    ChainStore chain;
    chain.n_walkers = n;
    chain.dim = d;
    chain.thin = thin;
    for (long it = 0; it < n_iterations; ++it) {
      long evals = 0;
      for (int half = 0; half < 2; ++half) {
        const int lo = half * h, clo = (1 - half) * h;
        for (int k = 0; k < h; ++k) {
          const int g = lo + k;
          RngStream rng(opts_.seed, std::uint32_t(g),
                        std::uint32_t(state.iteration));
          const int j = clo + int(rng.uniform_int(std::uint64_t(h)));
          const double z = stretch_scale_draw(opts_.stretch_a, rng);
          const Eigen::VectorXd prop =
              state.positions.row(j).transpose() +
              z * (state.positions.row(g) - state.positions.row(j))
                      .transpose();
          const double logf_prop = target_.log_density(prop);
          ++evals;
          ++chain.n_proposals;
          const double u = rng.uniform();
          if (std::log(u) <
              exp_d * std::log(z) + logf_prop - state.log_densities[g]) {
            state.positions.row(g) = prop.transpose();
            state.log_densities[g] = logf_prop;
            ++chain.n_accepted;
          }
        }
      }
      ++state.iteration;
      chain.n_evaluations += evals;
      chain.evals_per_iteration.push_back(evals);
      if (it % thin == 0) {
        for (int w = 0; w < n; ++w)
          for (int dd = 0; dd < d; ++dd)
            chain.samples.push_back(state.positions(w, dd));
        ++chain.n_recorded;
      }
      if (eval_budget > 0 && chain.n_evaluations >= eval_budget) break;
    }
    return chain;
  }

 private:
  LogDensityTarget target_;
  BaselineOptions opts_;
};

// Differential-evolution MC with occasional snooker updates, half-set split.
class DemcSampler {
 public:
  DemcSampler(LogDensityTarget target, BaselineOptions opts)
      : target_(std::move(target)), opts_(opts) {
    if (opts_.snooker_probability < 0 || opts_.snooker_probability > 1)
      throw ConfigError("snooker probability must lie in [0, 1]");
  }

  const LogDensityTarget& target() const { return target_; }

  double gamma() const {
    return opts_.demc_gamma > 0
               ? opts_.demc_gamma
               : 2.38 / std::sqrt(2.0 * double(target_.dim()));
  }

  EnsembleState initialize(int n_walkers, const InitStrategy& strategy) const {
    if (n_walkers < 6 || n_walkers % 2 != 0)
      throw ConfigError("demc sampler needs an even walker count of at least 6");
    EnsembleState state =
        initialize_state(target_, n_walkers, strategy, opts_.seed);
    detail::flag_rank_deficiency(state, opts_.quiet);
    return state;
  }

  ChainStore run(EnsembleState& state, long n_iterations, int thin = 1,
                 long eval_budget = 0) {
    const int n = state.n_walkers(), h = n / 2, d = state.dim();
    const double g0 = gamma();
    const double gs = 2.38 / std::sqrt(2.0);
    ChainStore chain;
    chain.n_walkers = n;
    chain.dim = d;
    chain.thin = thin;
    for (long it = 0; it < n_iterations; ++it) {
      long evals = 0;
      for (int half = 0; half < 2; ++half) {
        const int lo = half * h, clo = (1 - half) * h;
        for (int k = 0; k < h; ++k) {
          const int g = lo + k;
          RngStream rng(opts_.seed, std::uint32_t(g),
                        std::uint32_t(state.iteration));
          const Eigen::VectorXd xg = state.positions.row(g).transpose();
          ++chain.n_proposals;
          if (rng.uniform() < opts_.snooker_probability) {
            // Snooker: move along the line to an anchor walker, using the
            // projected spread of two other walkers; the |.|^(D-1) factor
            // keeps detailed balance on the line-selection density.
            const int a = clo + int(rng.uniform_int(std::uint64_t(h)));
            const int p = clo + detail::draw_index_excluding1(h, a - clo, rng);
            const int q = clo + detail::draw_index_excluding2(
                                    h, a - clo, p - clo, rng);
            const Eigen::VectorXd anchor = state.positions.row(a).transpose();
            Eigen::VectorXd dir = xg - anchor;
            const double dist = dir.norm();
            if (dist == 0) continue;  // coincident anchor: nothing to project
            dir /= dist;
            const double span =
                dir.dot((state.positions.row(p) - state.positions.row(q))
                            .transpose());
            const Eigen::VectorXd prop = xg + gs * span * dir;
            const double logf_prop = target_.log_density(prop);
            ++evals;
            const double new_dist = (prop - anchor).norm();
            if (new_dist == 0) continue;
            const double corr =
                double(d - 1) * (std::log(new_dist) - std::log(dist));
            if (std::log(rng.uniform()) <
                logf_prop - state.log_densities[g] + corr) {
              state.positions.row(g) = prop.transpose();
              state.log_densities[g] = logf_prop;
              ++chain.n_accepted;
            }
          } else {
            const auto [l, m] = detail::draw_distinct_pair(h, rng);
            Eigen::VectorXd prop =
                xg + g0 * (state.positions.row(clo + l) -
                           state.positions.row(clo + m))
                             .transpose();
            if (opts_.demc_eps > 0)
              for (int j = 0; j < d; ++j)
                prop[j] += opts_.demc_eps * rng.normal();
            const double logf_prop = target_.log_density(prop);
            ++evals;
            if (std::log(rng.uniform()) <
                logf_prop - state.log_densities[g]) {
              state.positions.row(g) = prop.transpose();
              state.log_densities[g] = logf_prop;
              ++chain.n_accepted;
            }
          }
        }
      }
      ++state.iteration;
      chain.n_evaluations += evals;
      chain.evals_per_iteration.push_back(evals);
      if (it % thin == 0) {
        for (int w = 0; w < n; ++w)
          for (int dd = 0; dd < d; ++dd)
            chain.samples.push_back(state.positions(w, dd));
        ++chain.n_recorded;
      }
      if (eval_budget > 0 && chain.n_evaluations >= eval_budget) break;
    }
    return chain;
  }

 private:
  LogDensityTarget target_;
  BaselineOptions opts_;
};

}  // namespace essmc
