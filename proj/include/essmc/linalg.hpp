#pragma once

#include <Eigen/Dense>

#include "essmc/errors.hpp"
#include "essmc/rng.hpp"

// Small dense-matrix layer shared by the proposal moves and the mixture fit.
// Eigen does the heavy lifting; this file pins the conventions the rest of
// the library relies on (population covariance, exact symmetry, draw order).

namespace essmc {

// Symmetric matrix with exact entry-level symmetry: the upper triangle is
// mirrored from the lower one on construction, so (i,j) == (j,i) bit for bit.
class SymmetricMatrix {
 public:
  explicit SymmetricMatrix(int dim) : m_(Eigen::MatrixXd::Zero(dim, dim)) {}

  static SymmetricMatrix from_matrix(const Eigen::MatrixXd& a) {
    if (a.rows() != a.cols()) throw Error("SymmetricMatrix: matrix not square");
    SymmetricMatrix s(int(a.rows()));
    s.m_ = a;
    for (int i = 0; i < a.rows(); ++i)
      for (int j = 0; j < i; ++j) s.m_(j, i) = s.m_(i, j);
    return s;
  }

  static SymmetricMatrix identity(int dim) {
    SymmetricMatrix s(dim);
    s.m_.setIdentity();
    return s;
  }

  int dim() const { return int(m_.rows()); }
  double operator()(int i, int j) const { return m_(i, j); }
  const Eigen::MatrixXd& matrix() const { return m_; }
  double trace() const { return m_.trace(); }

  void add_to_diagonal(double v) { m_.diagonal().array() += v; }

  void scale(double v) { m_ *= v; }

 private:
  Eigen::MatrixXd m_;
};

// Population covariance of a set of points (rows): (1/n) sum (x - xbar)(x - xbar)^t.
// No Bessel correction; the proposal moves use the exact empirical second
// moment of the complementary ensemble.
inline SymmetricMatrix sample_covariance(const Eigen::Ref<const Eigen::MatrixXd>& points) {
  const auto n = points.rows();
  if (n < 1) throw Error("sample_covariance: needs at least one point");
  const Eigen::RowVectorXd mean = points.colwise().mean();
  const Eigen::MatrixXd centered = points.rowwise() - mean;
  return SymmetricMatrix::from_matrix((centered.transpose() * centered) / double(n));
}

// Lower-triangular Cholesky factor L with L L^t = A. Throws
// NotPositiveDefiniteError when A is singular or indefinite.
inline Eigen::MatrixXd cholesky(const SymmetricMatrix& a) {
  Eigen::LLT<Eigen::MatrixXd> llt(a.matrix());
  if (llt.info() != Eigen::Success) throw NotPositiveDefiniteError("matrix not PD");
  Eigen::MatrixXd l = llt.matrixL();
  return l;
}

// Draw from N(mean, cov). Consumes exactly dim standard normals from the
// stream, in coordinate order, so draws are reproducible by construction.
// A zero covariance is the point-mass limit and returns the mean without
// touching the stream's normal draws.
template <class Rng>
Eigen::VectorXd sample_mvn(const Eigen::VectorXd& mean,
                           const SymmetricMatrix& cov, Rng& rng) {
  if (cov.dim() != mean.size()) throw Error("sample_mvn: dimension mismatch");
  if (cov.matrix().isZero(0.0)) return mean;
  const Eigen::MatrixXd l = cholesky(cov);
  Eigen::VectorXd z(mean.size());
  for (int i = 0; i < z.size(); ++i) z[i] = rng.normal();
  return mean + l * z;
}

}  // namespace essmc
