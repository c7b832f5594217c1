#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <map>

#include "essmc/moves.hpp"
#include "essmc/rng.hpp"
#include "support/scripted_rng.hpp"

using namespace essmc;
using essmc_test::ScriptedRng;

namespace {

Eigen::MatrixXd gaussian_cloud(int n, int d, std::uint64_t seed,
                               double scale = 1.0) {
  RngStream r(seed, kStreamScratch, 0);
  Eigen::MatrixXd pts(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) pts(i, j) = scale * r.normal();
  return pts;
}

// hand-built two-component fit for steering the global move
MixtureFit two_mode_fit(int d, const std::vector<int>& assignments) {
  MixtureFit fit;
  fit.n_components_max = 2;
  fit.weights = Eigen::VectorXd::Constant(2, 0.5);
  fit.means = {Eigen::VectorXd::Constant(d, -0.5),
               Eigen::VectorXd::Constant(d, 0.5)};
  fit.covariances = {SymmetricMatrix::identity(d), SymmetricMatrix::identity(d)};
  fit.assignments = assignments;
  fit.effective_components = 2;
  fit.weight_threshold = 0.1;
  return fit;
}

}  // namespace

TEST_CASE("differential move is the scaled walker difference", "[moves]") {
  Eigen::MatrixXd w(2, 2);
  w << 1, 0, 0, 1;
  const ComplementaryEnsemble comp(w);

  ScriptedRng rng;
  rng.ints({0, 0});  // pair (0, 1)
  auto dv = differential_move(1.0, comp, rng);
  CHECK(dv.components[0] == 1.0);
  CHECK(dv.components[1] == -1.0);
  CHECK(dv.includes_mu);

  ScriptedRng rng2;
  rng2.ints({0, 0});
  dv = differential_move(0.5, comp, rng2);
  CHECK(dv.components[0] == 0.5);
  CHECK(dv.components[1] == -0.5);
}

TEST_CASE("coincident pair is a degenerate ensemble", "[moves]") {
  Eigen::MatrixXd w(2, 3);
  w.setOnes();
  const ComplementaryEnsemble comp(w);
  ScriptedRng rng;
  rng.ints({0, 0});
  CHECK_THROWS_MATCHES(differential_move(1.0, comp, rng),
                       DegenerateEnsembleError,
                       Catch::Matchers::Message("degenerate ensemble"));
}

TEST_CASE("walker pairs are drawn uniformly without replacement", "[moves]") {
  const auto w = gaussian_cloud(4, 1, 42);
  const ComplementaryEnsemble comp(w);
  RngStream rng(7, kStreamScratch, 0);
  std::map<std::pair<double, double>, long> counts;
  for (int i = 0; i < 24000; ++i) {
    const auto dv = differential_move(1.0, comp, rng);
    // recover the pair from the difference (all coordinates distinct)
    ++counts[{dv.components[0], 0.0}];
  }
  REQUIRE(counts.size() == 12);  // 4*3 ordered pairs
  for (const auto& [k, c] : counts) {
    CHECK(c > 1700);
    CHECK(c < 2300);
  }
}

TEST_CASE("differential directions have the predicted mean square", "[moves]") {
  const int d = 3;
  const auto w = gaussian_cloud(2000, d, 11);
  const ComplementaryEnsemble comp(w);
  const auto c = sample_covariance(w);
  RngStream rng(8, kStreamScratch, 0);
  const double mu = 0.7;
  double ms = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i)
    ms += differential_move(mu, comp, rng).components.squaredNorm();
  ms /= n;
  // E||mu (X_l - X_m)||^2 = 2 mu^2 trace(C) for an iid cloud
  CHECK(ms == Catch::Approx(2.0 * mu * mu * c.trace()).epsilon(0.05));
}

TEST_CASE("differential move maps exactly under affine maps", "[moves]") {
  const int d = 3;
  const auto w = gaussian_cloud(6, d, 13);
  // power-of-two scaling plus a coordinate swap is bit-exact in floating
  // point (no rounding in the map or in the difference)
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(d, d);
  a(0, 1) = 4.0;
  a(1, 0) = 0.5;
  a(2, 2) = 2.0;
  Eigen::MatrixXd mapped = w * a.transpose();

  const ComplementaryEnsemble comp(w), comp_mapped(mapped);
  for (std::uint32_t s = 0; s < 20; ++s) {
    RngStream r1(100, s, 0), r2(100, s, 0);
    const auto dv = differential_move(1.3, comp, r1);
    const auto dv_mapped = differential_move(1.3, comp_mapped, r2);
    REQUIRE(dv_mapped.components == a * dv.components);
  }

  // a general affine map (with offset) matches to rounding error
  Eigen::MatrixXd g(d, d);
  g << 1.7, 0.2, -0.4, 0.0, 0.9, 0.3, 0.5, -0.1, 1.1;
  const Eigen::VectorXd b = Eigen::VectorXd::Constant(d, 3.25);
  Eigen::MatrixXd gmapped = (w * g.transpose()).rowwise() + b.transpose();
  const ComplementaryEnsemble comp_g(gmapped);
  for (std::uint32_t s = 0; s < 20; ++s) {
    RngStream r1(100, s, 0), r2(100, s, 0);
    const auto dv = differential_move(1.3, comp, r1);
    const auto dv_mapped = differential_move(1.3, comp_g, r2);
    REQUIRE((dv_mapped.components - g * dv.components).norm() < 1e-12);
  }
}

TEST_CASE("gaussian move covariance tracks the ensemble covariance", "[moves]") {
  const int d = 2;
  const auto w = gaussian_cloud(2000, d, 17);
  const ComplementaryEnsemble comp(w);
  const auto c = sample_covariance(w);
  RngStream rng(9, kStreamScratch, 0);
  const double mu = 1.0;
  Eigen::MatrixXd draws(100000, d);
  for (int i = 0; i < draws.rows(); ++i)
    draws.row(i) = gaussian_move(mu, comp, rng).components.transpose();
  const auto emp = sample_covariance(draws);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      REQUIRE(emp(i, j) ==
              Catch::Approx(4.0 * mu * mu * c(i, j)).margin(0.05 * 4.0 * c.trace() / d));
}

TEST_CASE("gaussian move is deterministic given the stream", "[moves]") {
  const auto w = gaussian_cloud(10, 3, 19);
  const ComplementaryEnsemble comp(w);
  RngStream r1(21, 5, 9), r2(21, 5, 9);
  CHECK(gaussian_move(0.8, comp, r1).components ==
        gaussian_move(0.8, comp, r2).components);
}

TEST_CASE("jitter keeps collapsed ensembles workable", "[moves]") {
  // all walkers on the x-axis: covariance is rank one
  Eigen::MatrixXd w(50, 2);
  w.setZero();
  RngStream r(23, kStreamScratch, 0);
  for (int i = 0; i < 50; ++i) w(i, 0) = r.normal();

  // policy check at jitter 1e-6: off-line spread is about sqrt of the
  // jittered eigenvalue, i.e. O(1e-3)
  const auto c = detail::jittered_covariance(w, 1e-6);
  RngStream r2(24, kStreamScratch, 0);
  double max_off = 0, rms_off = 0;
  const int n = 3000;
  for (int i = 0; i < n; ++i) {
    const auto z = sample_mvn(Eigen::VectorXd::Zero(2), c, r2);
    max_off = std::max(max_off, std::abs(z[1]));
    rms_off += z[1] * z[1];
  }
  rms_off = std::sqrt(rms_off / n);
  CHECK(rms_off > 1e-4);
  CHECK(rms_off < 1e-2);

  // the move itself survives the degenerate geometry
  const ComplementaryEnsemble comp(w);
  RngStream r3(25, kStreamScratch, 0);
  CHECK_NOTHROW(gaussian_move(1.0, comp, r3));

  // a fully collapsed ensemble cannot support a Gaussian direction
  Eigen::MatrixXd same = Eigen::MatrixXd::Ones(8, 2);
  const ComplementaryEnsemble collapsed(same);
  RngStream r4(26, kStreamScratch, 0);
  CHECK_THROWS_AS(gaussian_move(1.0, collapsed, r4), NotPositiveDefiniteError);
}

TEST_CASE("mode jump with zero shrink returns the doubled mean gap", "[moves]") {
  const int d = 4;
  Eigen::MatrixXd w(6, d);
  w.setZero();
  for (int i = 0; i < 3; ++i) w.row(i).setConstant(-0.5);
  for (int i = 3; i < 6; ++i) w.row(i).setConstant(0.5);
  const ComplementaryEnsemble comp(w);
  const auto fit = two_mode_fit(d, {0, 0, 0, 1, 1, 1});

  ScriptedRng rng;
  rng.ints({0, 2});  // walkers 0 (comp 0) and 3 (comp 1)
  GlobalMoveOptions opts;
  opts.gamma = 0.0;
  const auto dv = global_move(1.0, comp, fit, rng, opts);
  CHECK_FALSE(dv.includes_mu);
  const Eigen::VectorXd want =
      2.0 * (fit.means[0] - fit.means[1]);
  CHECK(dv.components == want);
  CHECK(rng.exhausted());  // zero covariance consumed no normal draws
}

TEST_CASE("same-component selection behaves like a local pair difference", "[moves]") {
  const int d = 2;
  Eigen::MatrixXd w(4, d);
  w << 0, 0, 1, 0, 0, 2, 3, 3;
  const ComplementaryEnsemble comp(w);
  MixtureFit fit = two_mode_fit(d, {0, 0, 0, 1});

  ScriptedRng rng;
  rng.ints({0, 0,   // walkers 0 and 1 -> both component 0
            1, 1}); // members {0,1,2}: pair (1, 2)
  const auto dv = global_move(0.5, comp, fit, rng);
  CHECK(dv.includes_mu);
  CHECK(dv.components == 0.5 * (comp.walker(1) - comp.walker(2)));
}

TEST_CASE("within-component gaussian branch honours the option flag", "[moves]") {
  const int d = 2;
  Eigen::MatrixXd w(4, d);
  w << 0, 0, 1, 0, 0, 2, 3, 3;
  const ComplementaryEnsemble comp(w);
  const auto fit = two_mode_fit(d, {0, 0, 0, 1});

  GlobalMoveOptions opts;
  opts.within_component_gaussian = true;
  ScriptedRng rng;
  rng.ints({0, 0});            // walkers 0 and 1, both component 0
  rng.normals({0.7, -0.3});    // z against the identity covariance
  const auto dv = global_move(1.0, comp, fit, rng, opts);
  CHECK(dv.includes_mu);
  CHECK(dv.components[0] == Catch::Approx(2.0 * 0.7));
  CHECK(dv.components[1] == Catch::Approx(2.0 * -0.3));
  CHECK(rng.exhausted());
}

TEST_CASE("mode-jump frequency matches membership combinatorics", "[moves]") {
  const int d = 2;
  const int n1 = 30, n2 = 60;
  RngStream data_rng(33, kStreamScratch, 0);
  Eigen::MatrixXd w(n1 + n2, d);
  for (int i = 0; i < n1 + n2; ++i) {
    const double c = i < n1 ? -0.5 : 0.5;
    for (int j = 0; j < d; ++j) w(i, j) = c + 0.05 * data_rng.normal();
  }
  const ComplementaryEnsemble comp(w);
  RngStream fit_rng(34, kStreamMixtureFit, 0);
  const auto fit = fit_dpgm(w, default_truncation(n1 + n2), fit_rng);
  REQUIRE(fit.effective_components == 2);

  RngStream rng(35, kStreamScratch, 0);
  long jumps = 0;
  const int trials = 20000;
  for (int i = 0; i < trials; ++i) {
    const auto dv = global_move(1.0, comp, fit, rng);
    if (!dv.includes_mu) ++jumps;
  }
  // two draws without replacement across a 30/60 split
  const double expect = 2.0 * n1 * n2 / double((n1 + n2) * (n1 + n2 - 1));
  CHECK(double(jumps) / trials == Catch::Approx(expect).margin(0.02));
  CHECK(expect == Catch::Approx(2.0 / 9.0 * 2.0).margin(0.01));
}

TEST_CASE("global move validates its fit", "[moves]") {
  const auto w = gaussian_cloud(6, 2, 37);
  const ComplementaryEnsemble comp(w);
  RngStream rng(38, kStreamScratch, 0);

  auto fit = two_mode_fit(2, {0, 0, 0, 1, 1});  // wrong length
  CHECK_THROWS_AS(global_move(1.0, comp, fit, rng), Error);

  fit = two_mode_fit(2, {0, 0, 0, 1, 1, 1});
  fit.effective_components = 0;
  CHECK_THROWS_AS(global_move(1.0, comp, fit, rng), Error);
}

TEST_CASE("complementary ensemble enforces its size floor", "[moves]") {
  Eigen::MatrixXd w(1, 2);
  w << 1, 2;
  CHECK_THROWS_AS(ComplementaryEnsemble(w), Error);
}
