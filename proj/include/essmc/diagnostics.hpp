#pragma once

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "essmc/ensemble.hpp"
#include "essmc/errors.hpp"
#include "essmc/target.hpp"

// Chain quality diagnostics: normalized autocorrelation, integrated
// autocorrelation time (IAT) with a self-consistent truncation window,
// effective sample size, and evaluations-per-effective-sample efficiency.

namespace essmc {

// rho(k) = c(k)/c(0) with c(k) = (1/(n-k)) sum_m (x[m+k]-mean)(x[m]-mean).
// Computed with an FFT in O(n log n); equals the direct sum to roundoff.
inline std::vector<double> autocorrelation(const std::vector<double>& series) {
  const std::size_t n = series.size();
  if (n < 2) throw ConfigError("series must have at least 2 entries");
  double mean = 0;
  for (const double x : series) mean += x;
  mean /= double(n);

  std::size_t padded = 1;
  while (padded < 2 * n) padded <<= 1;
  std::vector<double> y(padded, 0.0);
  for (std::size_t i = 0; i < n; ++i) y[i] = series[i] - mean;

  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spec;
  fft.fwd(spec, y);
  for (auto& v : spec) v = std::complex<double>(std::norm(v), 0.0);
  std::vector<double> acov;
  fft.inv(acov, spec);

  if (acov[0] <= 0.0) throw ZeroVarianceError("zero variance");
  std::vector<double> rho(n);
  const double c0 = acov[0] / double(n);
  for (std::size_t k = 0; k < n; ++k)
    rho[k] = (acov[k] / double(n - k)) / c0;
  rho[0] = 1.0;
  return rho;
}

// Direct quadratic-time evaluation, kept as the oracle for the FFT path.
inline std::vector<double> autocorrelation_direct(
    const std::vector<double>& series) {
  const std::size_t n = series.size();
  if (n < 2) throw ConfigError("series must have at least 2 entries");
  double mean = 0;
  for (const double x : series) mean += x;
  mean /= double(n);
  std::vector<double> c(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    double s = 0;
    for (std::size_t m = 0; m + k < n; ++m)
      s += (series[m + k] - mean) * (series[m] - mean);
    c[k] = s / double(n - k);
  }
  if (c[0] <= 0.0) throw ZeroVarianceError("zero variance");
  std::vector<double> rho(n);
  for (std::size_t k = 0; k < n; ++k) rho[k] = c[k] / c[0];
  return rho;
}

namespace detail {

// Truncation window: the smallest M with M >= c * tau(M), where
// tau(M) = 1 + 2 sum_{k<=M} rho(k). Returns tau at that window.
struct WindowedIat {
  double tau = 0;
  bool window_found = false;
};

inline WindowedIat windowed_iat(const std::vector<double>& rho,
                                double window_constant) {
  double tau = 1.0;
  WindowedIat out;
  for (std::size_t m = 1; m < rho.size(); ++m) {
    tau += 2.0 * rho[m];
    out.tau = tau;
    if (double(m) >= window_constant * tau) {
      out.window_found = true;
      return out;
    }
  }
  return out;
}

}  // namespace detail

constexpr double kIatWindowConstant = 5.0;
// An IAT estimate is only trusted when the chain is much longer than it.
constexpr double kIatReliabilityFactor = 1000.0;

inline double integrated_autocorrelation_time(
    const std::vector<double>& series) {
  if (series.size() < 100)
    throw ConfigError("series must have at least 100 entries");
  const auto rho = autocorrelation(series);
  const auto win = detail::windowed_iat(rho, kIatWindowConstant);
  const double tau = std::max(1.0, win.tau);
  if (!win.window_found ||
      double(series.size()) < kIatReliabilityFactor * tau)
    throw ChainTooShortError(tau);
  return tau;
}

// IAT of one parameter across an ensemble: concatenate the walkers' series
// in walker order and estimate on the joined chain.
inline double ensemble_iat(const std::vector<std::vector<double>>& chains) {
  if (chains.empty()) throw ConfigError("no walker chains given");
  std::vector<double> joined;
  std::size_t total = 0;
  for (const auto& c : chains) {
    if (c.size() < 100)
      throw ConfigError("each walker chain must have at least 100 entries");
    total += c.size();
  }
  joined.reserve(total);
  for (const auto& c : chains) joined.insert(joined.end(), c.begin(), c.end());
  return integrated_autocorrelation_time(joined);
}

inline double effective_sample_size(long n_samples, double iat) {
  return double(n_samples) / iat;
}

inline double efficiency(double n_eff, long n_density_evaluations) {
  if (n_density_evaluations < 1)
    throw ConfigError("evaluation count must be at least 1");
  return n_eff / double(n_density_evaluations);
}

struct RunReport {
  std::vector<double> iat;  // per parameter
  double mean_iat = 0;
  double n_eff = 0;
  double efficiency = 0;
  std::vector<double> means;
  std::vector<double> variances;
  std::optional<std::vector<double>> mode_masses;
  long n_samples = 0;       // post-burn-in pooled sample count
  long n_evaluations = 0;
  long first_record = 0;    // burn-in cut, in record index units
  bool no_samples = false;
  bool iat_reliable = true; // false when any parameter hit the length guard
  std::string note;
};

// Summarize the post-burn-in part of a chain. IAT failures downgrade to the
// carried best estimate rather than aborting the report.
inline RunReport build_report(const ChainStore& chain,
                              double burn_in_fraction,
                              const std::optional<GroundTruth>& truth = {}) {
  if (burn_in_fraction < 0 || burn_in_fraction >= 1)
    throw ConfigError("burn-in fraction must lie in [0, 1)");
  RunReport rep;
  rep.n_evaluations = chain.n_evaluations;
  rep.first_record = long(burn_in_fraction * double(chain.n_recorded));
  const long kept = chain.n_recorded - rep.first_record;
  rep.n_samples = kept * chain.n_walkers;
  if (chain.failed) rep.note = chain.failure_message;
  if (kept <= 0) {
    rep.no_samples = true;
    if (rep.note.empty()) rep.note = "no samples";
    return rep;
  }

  rep.means.assign(size_t(chain.dim), 0.0);
  rep.variances.assign(size_t(chain.dim), 0.0);
  for (long r = rep.first_record; r < chain.n_recorded; ++r)
    for (int w = 0; w < chain.n_walkers; ++w)
      for (int d = 0; d < chain.dim; ++d)
        rep.means[size_t(d)] += chain.value(r, w, d);
  for (auto& m : rep.means) m /= double(rep.n_samples);
  for (long r = rep.first_record; r < chain.n_recorded; ++r)
    for (int w = 0; w < chain.n_walkers; ++w)
      for (int d = 0; d < chain.dim; ++d) {
        const double dx = chain.value(r, w, d) - rep.means[size_t(d)];
        rep.variances[size_t(d)] += dx * dx;
      }
  for (auto& v : rep.variances) v /= double(rep.n_samples);

  rep.iat.reserve(size_t(chain.dim));
  for (int d = 0; d < chain.dim; ++d) {
    std::vector<double> joined;
    joined.reserve(size_t(kept * chain.n_walkers));
    for (int w = 0; w < chain.n_walkers; ++w) {
      const auto s = chain.series(w, d, rep.first_record);
      joined.insert(joined.end(), s.begin(), s.end());
    }
    // Best-effort estimate: short or degenerate chains still get a number,
    // but the report is flagged as uncertified.
    double tau = 1.0;
    bool certified = false;
    if (joined.size() >= 100) {
      try {
        const auto win = detail::windowed_iat(autocorrelation(joined),
                                              kIatWindowConstant);
        tau = std::max(1.0, win.tau);
        certified = win.window_found &&
                    double(joined.size()) >= kIatReliabilityFactor * tau;
      } catch (const ZeroVarianceError&) {
      }
    }
    if (!certified) rep.iat_reliable = false;
    rep.iat.push_back(tau);
  }
  rep.mean_iat = 0;
  for (const double t : rep.iat) rep.mean_iat += t;
  rep.mean_iat /= double(chain.dim);
  rep.n_eff = effective_sample_size(rep.n_samples, rep.mean_iat);
  if (rep.n_evaluations >= 1)
    rep.efficiency = efficiency(rep.n_eff, rep.n_evaluations);

  // Fraction of samples captured by each known mode, by nearest center.
  if (truth && truth->mode_centers && !truth->mode_centers->empty()) {
    const auto& centers = *truth->mode_centers;
    std::vector<double> masses(centers.size(), 0.0);
    Eigen::VectorXd x(chain.dim);
    for (long r = rep.first_record; r < chain.n_recorded; ++r)
      for (int w = 0; w < chain.n_walkers; ++w) {
        for (int d = 0; d < chain.dim; ++d) x[d] = chain.value(r, w, d);
        std::size_t best = 0;
        double best_d = (x - centers[0]).squaredNorm();
        for (std::size_t c = 1; c < centers.size(); ++c) {
          const double dc = (x - centers[c]).squaredNorm();
          if (dc < best_d) {
            best_d = dc;
            best = c;
          }
        }
        masses[best] += 1.0;
      }
    for (auto& m : masses) m /= double(rep.n_samples);
    rep.mode_masses = masses;
  }
  return rep;
}

}  // namespace essmc
