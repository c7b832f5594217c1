#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "essmc/errors.hpp"
#include "essmc/linalg.hpp"

// Variational Bayesian Gaussian mixture with a truncated stick-breaking
// Dirichlet-process prior, fitted by coordinate ascent (CAVI).
//
// Component parameters carry Normal-Wishart priors centred on the data's
// own mean and covariance, which keeps every posterior covariance positive
// definite even when a component holds fewer members than dimensions.
// The fit returns posterior-mean parameters plus hard assignments
// (responsibility argmax), which is all the mode-jump proposal needs.

namespace essmc {

struct DpgmOptions {
  double tol = 1e-4;            // stop when the ELBO gain drops below this
  int max_sweeps = 200;
  double concentration = 1.0;   // stick-breaking Beta(1, concentration)
  double weight_threshold = 0;  // 0 means 2/n_points
};

struct MixtureFit {
  int n_components_max = 0;     // truncation level
  Eigen::VectorXd weights;      // simplex over truncation slots
  std::vector<Eigen::VectorXd> means;
  std::vector<SymmetricMatrix> covariances;
  std::vector<int> assignments; // per input point
  int effective_components = 0; // weight above threshold
  double weight_threshold = 0;
  bool converged = false;
  double final_elbo = -std::numeric_limits<double>::infinity();
};

// Truncation heuristic: a mode needs a few walkers to be resolvable at all.
inline int default_truncation(int n_points) {
  return std::max(1, std::min(10, n_points / 4));
}

namespace detail {

inline double digamma(double x) {
  double result = 0;
  while (x < 10.0) {
    result -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x, inv2 = inv * inv;
  result += std::log(x) - 0.5 * inv -
            inv2 * (1.0 / 12 -
                    inv2 * (1.0 / 120 -
                            inv2 * (1.0 / 252 -
                                    inv2 * (1.0 / 240 -
                                            inv2 * (1.0 / 132 -
                                                    inv2 * 691.0 / 32760)))));
  return result;
}

// log of the Wishart normalizer B(W, nu), taking log|W| precomputed
inline double log_wishart_b(double log_det_w, double nu, int d) {
  double s = -0.5 * nu * log_det_w - 0.5 * nu * d * std::log(2.0) -
             0.25 * d * (d - 1) * std::log(M_PI);
  for (int i = 1; i <= d; ++i) s -= std::lgamma(0.5 * (nu + 1 - i));
  return s;
}

}  // namespace detail

template <class Rng>
MixtureFit fit_dpgm(const Eigen::Ref<const Eigen::MatrixXd>& points,
                    int max_components, Rng& rng, const DpgmOptions& opts = {}) {
  const int n = int(points.rows()), d = int(points.cols());
  if (n < 2) throw Error("fit_dpgm: needs at least 2 points");
  if (d < 1) throw Error("fit_dpgm: dimension mismatch");
  if (max_components < 1) throw Error("fit_dpgm: truncation must be positive");
  const int T = std::min(max_components, n);
  const double alpha0 = opts.concentration, beta0 = 1.0, nu0 = d + 2.0;
  constexpr double kLog2Pi = 1.8378770664093453;

  // Prior centred on the data's own spread; jitter keeps it PD even for
  // collapsed point sets.
  const Eigen::VectorXd m0 = points.colwise().mean().transpose();
  Eigen::MatrixXd c0 = sample_covariance(points).matrix();
  c0.diagonal().array() += std::max(1e-6 * c0.trace() / d, 1e-10);
  const Eigen::MatrixXd v0 = nu0 * c0;  // W0^{-1}
  const Eigen::LLT<Eigen::MatrixXd> v0_llt(v0);
  double log_det_w0 = 0;
  {
    const Eigen::MatrixXd l = v0_llt.matrixL();
    for (int i = 0; i < d; ++i) log_det_w0 -= 2.0 * std::log(l(i, i));
  }
  const double log_b0 = detail::log_wishart_b(log_det_w0, nu0, d);

  // k-means++ seeding, driven by the caller's stream for reproducibility.
  Eigen::MatrixXd resp = Eigen::MatrixXd::Zero(n, T);
  {
    std::vector<int> centers{int(rng.uniform_int(std::uint64_t(n)))};
    Eigen::VectorXd d2 =
        (points.rowwise() - points.row(centers[0])).rowwise().squaredNorm();
    while (int(centers.size()) < T) {
      const double total = d2.sum();
      int next = 0;
      if (total > 0) {
        const double u = rng.uniform() * total;
        double acc = 0;
        next = n - 1;
        for (int i = 0; i < n; ++i) {
          acc += d2[i];
          if (u < acc) {
            next = i;
            break;
          }
        }
      } else {
        next = int(rng.uniform_int(std::uint64_t(n)));
      }
      centers.push_back(next);
      d2 = d2.cwiseMin(
          (points.rowwise() - points.row(next)).rowwise().squaredNorm());
    }
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double bd = std::numeric_limits<double>::infinity();
      for (int t = 0; t < T; ++t) {
        const double q = (points.row(i) - points.row(centers[t])).squaredNorm();
        if (q < bd) {
          bd = q;
          best = t;
        }
      }
      resp(i, best) = 1.0;
    }
  }

  // Variational state
  Eigen::VectorXd sa(T), sb(T), beta(T), nu(T), counts(T);
  Eigen::VectorXd e_ln_v(T), e_ln_1mv(T), e_ln_pi(T), e_ln_lam(T), log_det_w(T);
  std::vector<Eigen::VectorXd> m(T), xbar(T);
  std::vector<Eigen::MatrixXd> v(T), s_t(T);
  std::vector<Eigen::LLT<Eigen::MatrixXd>> v_llt(T);

  const auto m_step = [&] {
    counts = resp.colwise().sum().transpose();
    for (int t = 0; t < T; ++t) {
      const double nt = counts[t];
      if (nt > 1e-12) {
        xbar[t] = (resp.col(t).transpose() * points).transpose() / nt;
        const Eigen::MatrixXd xc = points.rowwise() - xbar[t].transpose();
        s_t[t] = (xc.transpose() * resp.col(t).asDiagonal() * xc) / nt;
      } else {
        xbar[t] = m0;
        s_t[t] = Eigen::MatrixXd::Zero(d, d);
      }
      beta[t] = beta0 + nt;
      nu[t] = nu0 + nt;
      m[t] = (beta0 * m0 + nt * xbar[t]) / beta[t];
      const Eigen::VectorXd dm = xbar[t] - m0;
      v[t] = v0 + nt * s_t[t] + (beta0 * nt / beta[t]) * (dm * dm.transpose());
      v_llt[t].compute(v[t]);
      const Eigen::MatrixXd l = v_llt[t].matrixL();
      double ld = 0;
      for (int i = 0; i < d; ++i) ld -= 2.0 * std::log(l(i, i));
      log_det_w[t] = ld;
      e_ln_lam[t] = d * std::log(2.0) + ld;
      for (int i = 1; i <= d; ++i)
        e_ln_lam[t] += detail::digamma(0.5 * (nu[t] + 1 - i));
    }
    // stick posteriors; the last slot absorbs the remainder (v_{T-1} = 1)
    double tail = 0, acc = 0;
    for (int t = T - 1; t >= 0; --t) {
      sa[t] = 1.0 + counts[t];
      sb[t] = alpha0 + tail;
      tail += counts[t];
    }
    for (int t = 0; t < T; ++t) {
      if (t < T - 1) {
        const double dab = detail::digamma(sa[t] + sb[t]);
        e_ln_v[t] = detail::digamma(sa[t]) - dab;
        e_ln_1mv[t] = detail::digamma(sb[t]) - dab;
      } else {
        e_ln_v[t] = 0.0;
        e_ln_1mv[t] = 0.0;  // unused
      }
      e_ln_pi[t] = e_ln_v[t] + acc;
      if (t < T - 1) acc += e_ln_1mv[t];
    }
  };

  const auto e_step = [&] {
    Eigen::VectorXd logr(T);
    for (int i = 0; i < n; ++i) {
      for (int t = 0; t < T; ++t) {
        const Eigen::VectorXd y =
            v_llt[t].matrixL().solve(points.row(i).transpose() - m[t]);
        const double quad = d / beta[t] + nu[t] * y.squaredNorm();
        logr[t] = e_ln_pi[t] + 0.5 * e_ln_lam[t] - 0.5 * d * kLog2Pi - 0.5 * quad;
      }
      const double mx = logr.maxCoeff();
      resp.row(i) = (logr.array() - mx).exp().transpose();
      resp.row(i) /= resp.row(i).sum();
    }
  };

  const auto elbo = [&] {
    double l1 = 0, l2 = 0, l3 = 0, l4 = 0, l5 = 0, l6 = 0, l7 = 0;
    for (int t = 0; t < T; ++t) {
      const double nt = counts[t];
      const Eigen::VectorXd yb = v_llt[t].matrixL().solve(xbar[t] - m[t]);
      const double tr_sw = v_llt[t].solve(s_t[t]).trace();
      l1 += 0.5 * nt *
            (e_ln_lam[t] - d / beta[t] - nu[t] * tr_sw -
             nu[t] * yb.squaredNorm() - d * kLog2Pi);
      l2 += nt * e_ln_pi[t];
      const Eigen::VectorXd ym = v_llt[t].matrixL().solve(m[t] - m0);
      l4 += 0.5 * (d * std::log(beta0 / (2.0 * M_PI)) + e_ln_lam[t] -
                   d * beta0 / beta[t] - beta0 * nu[t] * ym.squaredNorm()) +
            log_b0 + 0.5 * (nu0 - d - 1) * e_ln_lam[t] -
            0.5 * nu[t] * v_llt[t].solve(v0).trace();
      const double log_bt = detail::log_wishart_b(log_det_w[t], nu[t], d);
      const double h_wishart =
          -log_bt - 0.5 * (nu[t] - d - 1) * e_ln_lam[t] + 0.5 * nu[t] * d;
      l7 += 0.5 * e_ln_lam[t] + 0.5 * d * std::log(beta[t] / (2.0 * M_PI)) -
            0.5 * d - h_wishart;
    }
    for (int t = 0; t < T - 1; ++t) {
      l3 += std::log(alpha0) + (alpha0 - 1.0) * e_ln_1mv[t];
      l6 += std::lgamma(sa[t] + sb[t]) - std::lgamma(sa[t]) -
            std::lgamma(sb[t]) + (sa[t] - 1.0) * e_ln_v[t] +
            (sb[t] - 1.0) * e_ln_1mv[t];
    }
    for (int i = 0; i < n; ++i)
      for (int t = 0; t < T; ++t)
        if (resp(i, t) > 0) l5 += resp(i, t) * std::log(resp(i, t));
    return l1 + l2 + l3 + l4 - l5 - l6 - l7;
  };

  // The objective is always evaluated right after an M-step, when the
  // cached sufficient statistics agree with the responsibilities that
  // produced the parameters; that makes the reported ELBO sequence a true
  // coordinate-ascent trajectory (non-decreasing).
  MixtureFit fit;
  fit.n_components_max = T;
  m_step();
  double cur = elbo();
  for (int sweep = 1; sweep < opts.max_sweeps; ++sweep) {
    e_step();
    m_step();
    const double next = elbo();
    const bool done = std::abs(next - cur) < opts.tol;
    cur = next;
    if (done) {
      fit.converged = true;
      break;
    }
  }
  fit.final_elbo = cur;

  // Point-estimate read-out. Weights are expected membership fractions
  // E[N_t]/n: the share of points a component explains, which is also what
  // drives pair-selection odds in the mode-jump proposal.
  fit.weights = counts / double(n);
  fit.weights /= fit.weights.sum();
  fit.means.resize(T);
  fit.covariances.clear();
  for (int t = 0; t < T; ++t) {
    fit.means[t] = m[t];
    fit.covariances.push_back(SymmetricMatrix::from_matrix(v[t] / nu[t]));
  }
  fit.assignments.resize(n);
  for (int i = 0; i < n; ++i) {
    int best = 0;
    resp.row(i).maxCoeff(&best);
    fit.assignments[i] = best;
  }
  fit.weight_threshold =
      opts.weight_threshold > 0 ? opts.weight_threshold : 2.0 / n;
  fit.effective_components = 0;
  for (int t = 0; t < T; ++t)
    if (fit.weights[t] >= fit.weight_threshold) ++fit.effective_components;
  return fit;
}

}  // namespace essmc
