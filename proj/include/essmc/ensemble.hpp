#pragma once

#include <Eigen/Dense>
#include <atomic>
#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "essmc/errors.hpp"
#include "essmc/linalg.hpp"
#include "essmc/mixture.hpp"
#include "essmc/moves.hpp"
#include "essmc/rng.hpp"
#include "essmc/slice.hpp"
#include "essmc/target.hpp"
#include "essmc/tuning.hpp"

// Ensemble orchestrator. N walkers advance in two half-set phases per
// iteration: each walker in the active half gets a direction built from the
// other (frozen) half and takes one slice update along it. Updates within a
// phase are independent, so they can run on any number of workers; every
// walker draws from its own counter-based stream keyed by (seed, walker,
// iteration), which makes chains bit-identical across worker counts.

namespace essmc {

enum class MoveKind { differential, gaussian, global };

inline const char* to_string(MoveKind m) {
  switch (m) {
    case MoveKind::differential: return "differential";
    case MoveKind::gaussian: return "gaussian";
    case MoveKind::global: return "global";
  }
  return "?";
}

struct SamplerOptions {
  MoveKind move = MoveKind::differential;
  std::uint64_t seed = 0;
  int workers = 1;
  double mu0 = 1.0;
  int max_adapt_iterations = 100;
  double adapt_tolerance = 0.05;
  GlobalMoveOptions global;
  // The per-update expansion budget guards against improper targets. The
  // ensemble default is generous: in low dimensions two complementary
  // walkers occasionally near-coincide, the direction gets tiny and a
  // proper update may legitimately need ~10^5 unit steps.
  SliceOptions slice{1000000, 10000};
  int mixture_truncation = 0;  // 0 = size-based default
  bool quiet = false;          // suppress the rank warning on stderr
};

struct InitBall {
  Eigen::VectorXd center;
  double radius = 1.0;
};
struct InitPrior {};
struct InitExplicit {
  Eigen::MatrixXd positions;
};
using InitStrategy = std::variant<InitBall, InitPrior, InitExplicit>;

struct EnsembleState {
  Eigen::MatrixXd positions;      // N x D
  Eigen::VectorXd log_densities;  // N
  int iteration = 0;
  TuningState tuning;
  bool rank_warning = false;

  int n_walkers() const { return int(positions.rows()); }
  int dim() const { return int(positions.cols()); }
};

struct IterationCounts {
  long n_expansions = 0;
  long n_contractions = 0;
  long n_evaluations = 0;
};

// Recorded chain. Samples are stored record-major, then walker, then
// coordinate. A failed run keeps everything recorded up to the failure and
// carries the error message as a marker.
struct ChainStore {
  int n_walkers = 0;
  int dim = 0;
  int thin = 1;
  long n_recorded = 0;
  std::vector<double> samples;
  std::vector<double> mu_trajectory;        // per iteration
  std::vector<long> evals_per_iteration;    // per iteration
  long n_evaluations = 0;                   // total target calls
  long n_proposals = 0;                     // accept/reject samplers only
  long n_accepted = 0;
  double mu_final = 0;
  bool failed = false;
  std::string failure_message;
  long failed_at_iteration = -1;

  double value(long rec, int walker, int d) const {
    return samples[size_t((rec * n_walkers + walker) * dim + d)];
  }
  // One walker's series for a coordinate, from a record index onward.
  std::vector<double> series(int walker, int d, long from_record = 0) const {
    std::vector<double> out;
    out.reserve(size_t(std::max<long>(0, n_recorded - from_record)));
    for (long r = from_record; r < n_recorded; ++r)
      out.push_back(value(r, walker, d));
    return out;
  }
};

// Position setup shared by all multi-chain samplers. Validates support but
// imposes no walker-count floor; samplers add their own.
inline EnsembleState initialize_state(const LogDensityTarget& target,
                                      int n_walkers,
                                      const InitStrategy& strategy,
                                      std::uint64_t seed) {
  const int d = target.dim();
  if (n_walkers < 1) throw ConfigError("need at least one walker");
  EnsembleState state;
  state.positions.resize(n_walkers, d);
  if (const auto* ball = std::get_if<InitBall>(&strategy)) {
    Eigen::VectorXd center = ball->center;
    if (center.size() == 0) center = Eigen::VectorXd::Zero(d);
    if (center.size() != d) throw ConfigError("init ball center has wrong dimension");
    for (int w = 0; w < n_walkers; ++w) {
      RngStream rng(seed, kStreamInitialize + std::uint32_t(w), 0);
      for (int j = 0; j < d; ++j)
        state.positions(w, j) = center[j] + ball->radius * rng.normal();
    }
  } else if (std::get_if<InitPrior>(&strategy)) {
    for (int w = 0; w < n_walkers; ++w) {
      RngStream rng(seed, kStreamInitialize + std::uint32_t(w), 0);
      const Eigen::VectorXd x = target.sample_prior(rng);
      if (x.size() != d) throw ConfigError("prior sampler returned wrong dimension");
      state.positions.row(w) = x.transpose();
    }
  } else {
    const auto& exp = std::get<InitExplicit>(strategy);
    if (exp.positions.rows() != n_walkers || exp.positions.cols() != d)
      throw ConfigError("explicit initial positions have wrong shape");
    state.positions = exp.positions;
  }

  state.log_densities.resize(n_walkers);
  for (int w = 0; w < n_walkers; ++w) {
    state.log_densities[w] =
        target.log_density(state.positions.row(w).transpose());
    if (!std::isfinite(state.log_densities[w]))
      throw InvalidStateError("walker outside support");
  }
  return state;
}

namespace detail {

// The walkers should span the space; a rank-deficient start traps
// difference-based moves in a subspace.
inline void flag_rank_deficiency(EnsembleState& state, bool quiet) {
  const Eigen::MatrixXd centered =
      state.positions.rowwise() - state.positions.colwise().mean();
  if (Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(centered).rank() <
      state.dim()) {
    state.rank_warning = true;
    if (!quiet)
      std::cerr << "warning: initial walker displacements do not span the "
                   "parameter space\n";
  }
}

template <class F>
void parallel_for(int n, int workers, F&& f) {
  if (workers <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  const int k = std::min(workers, n);
  pool.reserve(size_t(k));
  for (int t = 0; t < k; ++t)
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) f(i);
    });
  for (auto& th : pool) th.join();
}

}  // namespace detail

class EnsembleSampler {
 public:
  EnsembleSampler(LogDensityTarget target, SamplerOptions opts)
      : target_(std::move(target)), opts_(opts) {
    if (opts_.workers < 1) throw ConfigError("workers must be at least 1");
    if (opts_.mu0 <= 0) throw ConfigError("mu0 must be positive");
  }

  const LogDensityTarget& target() const { return target_; }
  const SamplerOptions& options() const { return opts_; }

  EnsembleState initialize(int n_walkers, const InitStrategy& strategy) const {
    if (n_walkers < 2 * target_.dim() || n_walkers % 2 != 0)
      throw ConfigError("n_walkers must be even and at least twice the dimension");
    EnsembleState state =
        initialize_state(target_, n_walkers, strategy, opts_.seed);
    detail::flag_rank_deficiency(state, opts_.quiet);
    state.tuning.mu = opts_.mu0;
    state.tuning.max_adapt_iterations = opts_.max_adapt_iterations;
    state.tuning.tolerance = opts_.adapt_tolerance;
    return state;
  }

  // One full iteration: both half-set phases plus the tuning update.
  IterationCounts step(EnsembleState& state) const {
    const int n = state.n_walkers(), h = n / 2;
    const double mu = state.tuning.mu;
    IterationCounts totals;
    const auto logf = [this](const Eigen::VectorXd& x) {
      return target_.log_density(x);
    };

    for (int half = 0; half < 2; ++half) {
      const int lo = half * h, clo = (1 - half) * h;
      const auto comp_block = state.positions.middleRows(clo, h);
      const ComplementaryEnsemble comp(comp_block);

      std::optional<MixtureFit> fit;
      if (opts_.move == MoveKind::global) {
        RngStream fit_rng(opts_.seed, kStreamMixtureFit + std::uint32_t(half),
                          std::uint32_t(state.iteration));
        const int trunc = opts_.mixture_truncation > 0
                              ? opts_.mixture_truncation
                              : default_truncation(h);
        fit = fit_dpgm(comp_block, trunc, fit_rng);
      }

      std::vector<SliceUpdateResult> results(static_cast<std::size_t>(h));
      std::vector<std::exception_ptr> errors(static_cast<std::size_t>(h));
      detail::parallel_for(h, opts_.workers, [&](int k) {
        try {
          const int g = lo + k;
          RngStream rng(opts_.seed, std::uint32_t(g),
                        std::uint32_t(state.iteration));
          DirectionVector dv;
          switch (opts_.move) {
            case MoveKind::differential:
              dv = differential_move(mu, comp, rng);
              break;
            case MoveKind::gaussian:
              dv = gaussian_move(mu, comp, rng);
              break;
            case MoveKind::global:
              dv = global_move(mu, comp, *fit, rng, opts_.global);
              break;
          }
          const Eigen::VectorXd x0 = state.positions.row(g).transpose();
          results[size_t(k)] = slice_along(logf, x0, state.log_densities[g],
                                           dv.components, rng, opts_.slice);
        } catch (...) {
          errors[size_t(k)] = std::current_exception();
        }
      });

      for (int k = 0; k < h; ++k) {
        if (!errors[size_t(k)]) continue;
        const std::string tag = "walker " + std::to_string(lo + k) +
                                " iteration " +
                                std::to_string(state.iteration) + ": ";
        try {
          std::rethrow_exception(errors[size_t(k)]);
        } catch (const UnboundedSliceError& e) {
          throw UnboundedSliceError(tag + e.what());
        } catch (const DegenerateEnsembleError& e) {
          throw DegenerateEnsembleError(tag + e.what());
        } catch (const InvalidStateError& e) {
          throw InvalidStateError(tag + e.what());
        } catch (const std::exception& e) {
          throw Error(tag + e.what());
        }
      }

      for (int k = 0; k < h; ++k) {
        const auto& res = results[size_t(k)];
        state.positions.row(lo + k) = res.new_point.transpose();
        state.log_densities[lo + k] = res.log_density_at_new_point;
        totals.n_expansions += res.n_expansions;
        totals.n_contractions += res.n_contractions;
        totals.n_evaluations += res.n_evaluations;
      }
    }

    state.tuning =
        tune_length_scale(state.tuning, totals.n_expansions, totals.n_contractions);
    ++state.iteration;
    return totals;
  }

  // Advance n_iterations, recording every thin-th iteration. Errors do not
  // discard work: the chain keeps everything up to the failure, marked.
  // A positive eval_budget stops the run once that many density calls have
  // been spent, for evaluation-equalized sampler comparisons.
  ChainStore run(EnsembleState& state, long n_iterations, int thin = 1,
                 long eval_budget = 0) const {
    if (n_iterations < 0) throw ConfigError("n_iterations must be non-negative");
    if (thin < 1) throw ConfigError("thin must be at least 1");
    ChainStore chain;
    chain.n_walkers = state.n_walkers();
    chain.dim = state.dim();
    chain.thin = thin;
    chain.samples.reserve(size_t((n_iterations / thin + 1) *
                                 state.n_walkers() * state.dim()));
    chain.mu_trajectory.reserve(size_t(n_iterations));
    for (long it = 0; it < n_iterations; ++it) {
      try {
        const auto counts = step(state);
        chain.n_evaluations += counts.n_evaluations;
        chain.evals_per_iteration.push_back(counts.n_evaluations);
      } catch (const Error& e) {
        chain.failed = true;
        chain.failure_message = e.what();
        chain.failed_at_iteration = it;
        break;
      }
      chain.mu_trajectory.push_back(state.tuning.mu);
      if (it % thin == 0) {
        for (int w = 0; w < state.n_walkers(); ++w)
          for (int d = 0; d < state.dim(); ++d)
            chain.samples.push_back(state.positions(w, d));
        ++chain.n_recorded;
      }
      if (eval_budget > 0 && chain.n_evaluations >= eval_budget) break;
    }
    chain.mu_final = state.tuning.mu;
    return chain;
  }

 private:
  LogDensityTarget target_;
  SamplerOptions opts_;
};

}  // namespace essmc
