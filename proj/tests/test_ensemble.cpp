#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "essmc/ensemble.hpp"
#include "essmc/targets.hpp"

using essmc::ChainStore;
using essmc::EnsembleSampler;
using essmc::EnsembleState;
using essmc::InitBall;
using essmc::InitExplicit;
using essmc::InitPrior;
using essmc::LogDensityTarget;
using essmc::MoveKind;
using essmc::SamplerOptions;

namespace {

SamplerOptions quiet_opts(MoveKind move, std::uint64_t seed, int workers = 1) {
  SamplerOptions o;
  o.move = move;
  o.seed = seed;
  o.workers = workers;
  o.quiet = true;
  return o;
}

}  // namespace

TEST_CASE("walker count must be even and at least twice the dimension",
          "[ensemble]") {
  EnsembleSampler s(essmc::standard_normal_target(5),
                    quiet_opts(MoveKind::differential, 1));
  REQUIRE_THROWS_AS(s.initialize(9, InitBall{}), essmc::ConfigError);
  REQUIRE_THROWS_AS(s.initialize(8, InitBall{}), essmc::ConfigError);
  REQUIRE_NOTHROW(s.initialize(10, InitBall{}));
}

TEST_CASE("explicit initialization echoes the given positions", "[ensemble]") {
  EnsembleSampler s(essmc::standard_normal_target(2),
                    quiet_opts(MoveKind::differential, 1));
  Eigen::MatrixXd pos(4, 2);
  pos << 0.1, 0.2, -0.3, 0.4, 0.5, -0.6, -0.7, -0.8;
  const auto state = s.initialize(4, InitExplicit{pos});
  REQUIRE(state.positions == pos);
  for (int w = 0; w < 4; ++w)
    REQUIRE(state.log_densities[w] ==
            s.target().log_density(pos.row(w).transpose()));
  REQUIRE(state.iteration == 0);
  REQUIRE(state.tuning.mu == 1.0);

  Eigen::MatrixXd bad(4, 3);
  bad.setZero();
  REQUIRE_THROWS_AS(s.initialize(4, InitExplicit{bad}), essmc::ConfigError);
}

TEST_CASE("initialization rejects walkers outside the support", "[ensemble]") {
  auto target = essmc::gaussian_mixture_target(2);
  // Build a box-constrained target by hand: -inf outside the unit square.
  LogDensityTarget boxed("boxed", 2, [](const Eigen::VectorXd& x) {
    if (x[0] < 0 || x[0] > 1 || x[1] < 0 || x[1] > 1)
      return -std::numeric_limits<double>::infinity();
    return 0.0;
  });
  EnsembleSampler s(boxed, quiet_opts(MoveKind::differential, 1));
  Eigen::MatrixXd pos(4, 2);
  pos << 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 2.0, 0.5;
  REQUIRE_THROWS_WITH(s.initialize(4, InitExplicit{pos}),
                      Catch::Matchers::ContainsSubstring("walker outside support"));
}

TEST_CASE("rank-deficient starting ensembles are flagged", "[ensemble]") {
  EnsembleSampler s(essmc::standard_normal_target(2),
                    quiet_opts(MoveKind::differential, 3));
  Eigen::MatrixXd line(4, 2);
  line << 0, 0, 1, 1, 2, 2, 3, 3;  // all on the diagonal
  REQUIRE(s.initialize(4, InitExplicit{line}).rank_warning);

  const auto ball = s.initialize(4, InitBall{Eigen::VectorXd::Zero(2), 1.0});
  REQUIRE_FALSE(ball.rank_warning);
}

TEST_CASE("prior initialization uses the target prior sampler", "[ensemble]") {
  auto target = essmc::standard_normal_target(3);
  target.set_prior_sampler([](essmc::RngStream& rng) {
    Eigen::VectorXd x(3);
    for (int j = 0; j < 3; ++j) x[j] = rng.uniform(-1.0, 1.0);
    return x;
  });
  EnsembleSampler s(target, quiet_opts(MoveKind::differential, 7));
  const auto a = s.initialize(6, InitPrior{});
  const auto b = s.initialize(6, InitPrior{});
  REQUIRE(a.positions == b.positions);
  REQUIRE((a.positions.array() >= -1.0).all());
  REQUIRE((a.positions.array() <= 1.0).all());

  EnsembleSampler no_prior(essmc::standard_normal_target(3),
                           quiet_opts(MoveKind::differential, 7));
  REQUIRE_THROWS_AS(no_prior.initialize(6, InitPrior{}), essmc::ConfigError);
}

TEST_CASE("walker updates read only the opposite half-set", "[ensemble]") {
  // Second half-set walkers share one y value, so every direction offered to
  // the first half has zero y component and their y coordinates survive the
  // phase bit for bit. Any leak of same-half positions would move them.
  EnsembleSampler s(essmc::standard_normal_target(2),
                    quiet_opts(MoveKind::differential, 11));
  Eigen::MatrixXd pos(4, 2);
  pos << 0.3, 1.5, -0.2, -0.9, 0.0, 0.0, 1.0, 0.0;
  auto state = s.initialize(4, InitExplicit{pos});
  s.step(state);
  REQUIRE(state.positions(0, 1) == 1.5);
  REQUIRE(state.positions(1, 1) == -0.9);
  REQUIRE(state.positions(0, 0) != 0.3);
  REQUIRE(state.positions(1, 0) != -0.2);
}

TEST_CASE("one-dimensional chain reproduces standard normal moments",
          "[ensemble]") {
  EnsembleSampler s(essmc::standard_normal_target(1),
                    quiet_opts(MoveKind::differential, 2024));
  auto state = s.initialize(4, InitBall{Eigen::VectorXd::Zero(1), 1.0});
  const auto chain = s.run(state, 10000);
  REQUIRE_FALSE(chain.failed);
  double sum = 0, sum2 = 0;
  long n = 0;
  for (long r = chain.n_recorded / 2; r < chain.n_recorded; ++r)
    for (int w = 0; w < 4; ++w) {
      const double x = chain.value(r, w, 0);
      sum += x;
      sum2 += x * x;
      ++n;
    }
  const double mean = sum / double(n);
  const double var = sum2 / double(n) - mean * mean;
  REQUIRE(std::abs(mean) < 0.05);
  REQUIRE(std::abs(var - 1.0) < 0.1);
}

TEST_CASE("chains are bit-identical across worker counts", "[ensemble]") {
  for (const auto move : {MoveKind::differential, MoveKind::global}) {
    ChainStore chains[2];
    for (int i = 0; i < 2; ++i) {
      auto opts = quiet_opts(move, 99, i == 0 ? 1 : 4);
      EnsembleSampler s(essmc::gaussian_mixture_target(2), opts);
      auto state = s.initialize(16, InitBall{Eigen::VectorXd::Zero(2), 1.0});
      chains[i] = s.run(state, 50);
    }
    REQUIRE(chains[0].samples == chains[1].samples);
    REQUIRE(chains[0].mu_trajectory == chains[1].mu_trajectory);
    REQUIRE(chains[0].n_evaluations == chains[1].n_evaluations);
  }
}

TEST_CASE("same seed gives identical runs, different seeds differ",
          "[ensemble]") {
  auto run_once = [](std::uint64_t seed) {
    EnsembleSampler s(essmc::standard_normal_target(2),
                      quiet_opts(MoveKind::differential, seed));
    auto state = s.initialize(6, InitBall{Eigen::VectorXd::Zero(2), 1.0});
    return s.run(state, 30);
  };
  const auto a = run_once(5), b = run_once(5), c = run_once(6);
  REQUIRE(a.samples == b.samples);
  REQUIRE(a.samples != c.samples);
}

TEST_CASE("density evaluations per walker update stay in a narrow band",
          "[ensemble]") {
  EnsembleSampler s(essmc::standard_normal_target(10),
                    quiet_opts(MoveKind::differential, 31));
  auto state = s.initialize(20, InitBall{Eigen::VectorXd::Zero(10), 1.0});
  const auto chain = s.run(state, 300);
  REQUIRE(state.tuning.frozen);
  long evals = 0;
  for (size_t it = 150; it < chain.evals_per_iteration.size(); ++it)
    evals += chain.evals_per_iteration[it];
  const double per_update = double(evals) / (150.0 * 20.0);
  REQUIRE(per_update >= 3.0);
  REQUIRE(per_update <= 8.0);
}

TEST_CASE("length scale freezes within the adaptation budget from extreme starts",
          "[ensemble]") {
  std::vector<double> finals;
  for (const double mu0 : {1e-3, 1e3}) {
    auto opts = quiet_opts(MoveKind::differential, 17);
    opts.mu0 = mu0;
    EnsembleSampler s(essmc::correlated_normal_target(10, 0.95), opts);
    auto state = s.initialize(20, InitBall{Eigen::VectorXd::Zero(10), 1.0});
    const auto chain = s.run(state, 120);
    REQUIRE_FALSE(chain.failed);
    REQUIRE(state.tuning.frozen);
    REQUIRE(state.tuning.iteration <= 100);
    finals.push_back(chain.mu_final);
  }
  const double ratio = finals[0] / finals[1];
  REQUIRE(ratio < 2.0);
  REQUIRE(ratio > 0.5);
}

TEST_CASE("affine reparameterization conjugates the whole chain exactly",
          "[ensemble]") {
  // Coordinate permutation plus power-of-two scaling commutes with floating
  // point arithmetic, so the two chains must match bit for bit.
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(3, 3);
  a(0, 1) = 4.0;
  a(1, 0) = 0.5;
  a(2, 2) = 2.0;
  Eigen::MatrixXd ainv = Eigen::MatrixXd::Zero(3, 3);
  ainv(1, 0) = 0.25;
  ainv(0, 1) = 2.0;
  ainv(2, 2) = 0.5;

  auto base = essmc::standard_normal_target(3);
  LogDensityTarget mapped("mapped-normal", 3,
                          [base, ainv](const Eigen::VectorXd& x) {
                            return base.log_density(ainv * x);
                          });

  Eigen::MatrixXd pos(6, 3);
  pos << 0.3, -0.5, 0.9, 1.2, 0.4, -0.7, -0.8, 1.1, 0.2, 0.6, -1.3, 0.5, -0.1,
      0.8, -1.0, 1.4, -0.2, 0.3;

  EnsembleSampler sb(base, quiet_opts(MoveKind::differential, 123));
  EnsembleSampler sm(mapped, quiet_opts(MoveKind::differential, 123));
  auto stb = sb.initialize(6, InitExplicit{pos});
  auto stm = sm.initialize(6, InitExplicit{(pos * a.transpose()).eval()});
  for (int it = 0; it < 30; ++it) {
    sb.step(stb);
    sm.step(stm);
    const Eigen::MatrixXd want = stb.positions * a.transpose();
    REQUIRE(stm.positions == want);
  }
}

TEST_CASE("run bookkeeping: thinning, zero iterations, evaluation totals",
          "[ensemble]") {
  auto target = essmc::standard_normal_target(2);
  EnsembleSampler s(target, quiet_opts(MoveKind::differential, 8));
  auto state = s.initialize(4, InitBall{Eigen::VectorXd::Zero(2), 1.0});

  target.reset_evaluations();
  auto state2 = s.initialize(4, InitBall{Eigen::VectorXd::Zero(2), 1.0});
  const auto chain = s.run(state2, 10, 3);
  REQUIRE(chain.n_recorded == 4);  // iterations 0, 3, 6, 9
  REQUIRE(chain.samples.size() == size_t(4 * 4 * 2));
  REQUIRE(chain.mu_trajectory.size() == 10);
  REQUIRE(target.evaluations() == 4 + chain.n_evaluations);

  auto state3 = s.initialize(4, InitBall{Eigen::VectorXd::Zero(2), 1.0});
  const auto empty = s.run(state3, 0);
  REQUIRE(empty.n_recorded == 0);
  REQUIRE(empty.samples.empty());
  REQUIRE(empty.mu_final == 1.0);

  const auto tail = chain.series(1, 0, 2);
  REQUIRE(tail.size() == 2);
  REQUIRE(tail[0] == chain.value(2, 1, 0));
  REQUIRE(tail[1] == chain.value(3, 1, 0));
}

TEST_CASE("a failing update keeps the partial chain with a marker",
          "[ensemble]") {
  LogDensityTarget flat("flat", 2,
                        [](const Eigen::VectorXd&) { return 0.0; });
  auto opts = quiet_opts(MoveKind::differential, 3);
  opts.slice.max_expansions = 200;
  EnsembleSampler s(flat, opts);
  Eigen::MatrixXd pos(4, 2);
  pos << 0, 0, 1, 0, 0, 1, 1, 1;
  auto state = s.initialize(4, InitExplicit{pos});
  const auto chain = s.run(state, 10);
  REQUIRE(chain.failed);
  REQUIRE(chain.failed_at_iteration == 0);
  REQUIRE(chain.n_recorded == 0);
  REQUIRE_THAT(chain.failure_message,
               Catch::Matchers::ContainsSubstring("unbounded slice"));
  REQUIRE_THAT(chain.failure_message,
               Catch::Matchers::ContainsSubstring("walker"));
}
