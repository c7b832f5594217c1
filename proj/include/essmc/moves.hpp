#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "essmc/errors.hpp"
#include "essmc/linalg.hpp"
#include "essmc/mixture.hpp"

// Direction-vector proposals. Each move sees only the complementary
// ensemble - the half that does NOT contain the walker being updated - so a
// walker's proposal never depends on its own position. That restriction is
// what keeps the parallel half-set update a valid Markov transition.

namespace essmc {

struct DirectionVector {
  Eigen::VectorXd components;
  // True when the tuned length scale mu is already folded into the vector.
  // The mode-jump branch of the global move deliberately omits mu.
  bool includes_mu = true;
};

// Read-only view of the other half-set. Constructing one asserts the size
// floor; the active walker is excluded by construction because the halves
// are disjoint.
class ComplementaryEnsemble {
 public:
  explicit ComplementaryEnsemble(Eigen::Ref<const Eigen::MatrixXd> walkers)
      : walkers_(walkers) {
    if (walkers_.rows() < 2)
      throw Error("complementary ensemble needs at least 2 walkers");
  }

  int size() const { return int(walkers_.rows()); }
  int dim() const { return int(walkers_.cols()); }
  Eigen::Ref<const Eigen::MatrixXd> walkers() const { return walkers_; }
  Eigen::VectorXd walker(int i) const { return walkers_.row(i).transpose(); }

 private:
  Eigen::Ref<const Eigen::MatrixXd> walkers_;
};

namespace detail {

// Uniform pair without replacement; two stream draws, order-sensitive.
template <class Rng>
inline std::pair<int, int> draw_distinct_pair(int n, Rng& rng) {
  const int a = int(rng.uniform_int(std::uint64_t(n)));
  int b = int(rng.uniform_int(std::uint64_t(n - 1)));
  if (b >= a) ++b;
  return {a, b};
}

// Covariance of a point set with a trace-scaled diagonal jitter, the shared
// preparation step for every covariance-shaped proposal.
inline SymmetricMatrix jittered_covariance(
    const Eigen::Ref<const Eigen::MatrixXd>& points, double rel_jitter) {
  SymmetricMatrix c = sample_covariance(points);
  c.add_to_diagonal(rel_jitter * c.trace() / double(c.dim()));
  return c;
}

}  // namespace detail

// Difference of two complementary walkers, scaled by mu.
template <class Rng>
DirectionVector differential_move(double mu, const ComplementaryEnsemble& comp,
                                  Rng& rng) {
  const auto [l, m] = detail::draw_distinct_pair(comp.size(), rng);
  Eigen::VectorXd d = comp.walker(l) - comp.walker(m);
  if (d.isZero(0.0)) throw DegenerateEnsembleError("degenerate ensemble");
  return {mu * d, true};
}

// Gaussian draw shaped by the complementary ensemble's covariance:
// eta = 2 mu z, z ~ N(0, C). The doubled scale keeps the direction
// magnitudes in line with the differential move.
template <class Rng>
DirectionVector gaussian_move(double mu, const ComplementaryEnsemble& comp,
                              Rng& rng) {
  const auto c = detail::jittered_covariance(comp.walkers(), 1e-9);
  const Eigen::MatrixXd l = cholesky(c);  // "not PD" on a collapsed ensemble
  Eigen::VectorXd z(comp.dim());
  for (int i = 0; i < z.size(); ++i) z[i] = rng.normal();
  z = l * z;
  if (z.isZero(0.0)) throw DegenerateEnsembleError("degenerate ensemble");
  return {2.0 * mu * z, true};
}

struct GlobalMoveOptions {
  // Covariance shrink factor for the mode-jump branch: tight proposals
  // parallel to the line between component means.
  double gamma = 0.001;
  // Same-component branch: draw 2 mu N(0, C_i) instead of a member pair
  // difference.
  bool within_component_gaussian = false;
};

// Mixture-informed move. Two complementary walkers pick two (not
// necessarily distinct) fitted components; same component means a local
// within-component step, different components mean a mode jump along the
// difference of component draws (no mu factor on that branch).
//
// `fit` must be the mixture fit of exactly this complementary ensemble, in
// the same row order (assignments are indexed by row).
template <class Rng>
DirectionVector global_move(double mu, const ComplementaryEnsemble& comp,
                            const MixtureFit& fit, Rng& rng,
                            const GlobalMoveOptions& opts = {}) {
  if (int(fit.assignments.size()) != comp.size())
    throw Error("global_move: fit does not match the complementary ensemble");
  if (fit.effective_components < 1)
    throw Error("global_move: mixture fit has no effective components");

  const auto [wa, wb] = detail::draw_distinct_pair(comp.size(), rng);
  const int ci = fit.assignments[wa], cj = fit.assignments[wb];

  if (ci == cj) {
    std::vector<int> members;
    for (int k = 0; k < comp.size(); ++k)
      if (fit.assignments[k] == ci) members.push_back(k);
    if (int(members.size()) >= 2 && !opts.within_component_gaussian) {
      const auto [p, q] = detail::draw_distinct_pair(int(members.size()), rng);
      Eigen::VectorXd d = comp.walker(members[p]) - comp.walker(members[q]);
      if (d.isZero(0.0)) throw DegenerateEnsembleError("degenerate ensemble");
      return {mu * d, true};
    }
    // Too few members to difference (or Gaussian branch requested): sample
    // the component's own shape.
    const Eigen::VectorXd z =
        sample_mvn(Eigen::VectorXd::Zero(comp.dim()), fit.covariances[ci], rng);
    if (z.isZero(0.0)) throw DegenerateEnsembleError("degenerate ensemble");
    return {2.0 * mu * z, true};
  }

  // Mode jump: component draws with shrunk covariances; doubled difference.
  SymmetricMatrix c_i = fit.covariances[ci];
  SymmetricMatrix c_j = fit.covariances[cj];
  c_i.scale(opts.gamma);
  c_j.scale(opts.gamma);
  const Eigen::VectorXd eta_i = sample_mvn(fit.means[ci], c_i, rng);
  const Eigen::VectorXd eta_j = sample_mvn(fit.means[cj], c_j, rng);
  Eigen::VectorXd d = 2.0 * (eta_i - eta_j);
  if (d.isZero(0.0)) throw DegenerateEnsembleError("degenerate ensemble");
  return {d, false};
}

}  // namespace essmc
