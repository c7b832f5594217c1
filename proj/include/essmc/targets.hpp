#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "essmc/errors.hpp"
#include "essmc/rng.hpp"
#include "essmc/target.hpp"

// Benchmark target distributions. Each factory returns a LogDensityTarget
// with an exact closed-form log density and, where one exists, analytic
// ground truth. Evaluations are O(D) except object detection, which is
// O(pixels) via a separable profile decomposition.

namespace essmc {

namespace detail {

constexpr double kLog2Pi = 1.8378770664093453;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log N(z; 0, e^{log_s} * ((1-g) I + g J)) for the equicorrelated family.
// The (1-g)I + gJ eigenstructure (1-g with multiplicity m-1, 1+(m-1)g once)
// gives determinant and inverse in closed form, so evaluation is O(m).
inline double log_mvn_equicorr(const Eigen::Ref<const Eigen::VectorXd>& z,
                               double log_s, double g) {
  const auto m = double(z.size());
  const double sum = z.sum();
  const double quad =
      (z.squaredNorm() - g * sum * sum / (1.0 + (m - 1) * g)) / (1.0 - g);
  const double logdet =
      m * log_s + (m - 1) * std::log1p(-g) + std::log1p((m - 1) * g);
  return -0.5 * (m * kLog2Pi + logdet + quad * std::exp(-log_s));
}

inline double log_sum_exp(double a, double b) {
  const double hi = std::max(a, b), lo = std::min(a, b);
  if (hi == kNegInf) return kNegInf;
  return hi + std::log1p(std::exp(lo - hi));
}

}  // namespace detail

inline LogDensityTarget standard_normal_target(int dim) {
  LogDensityTarget t("standard_normal", dim, [dim](const Eigen::VectorXd& x) {
    return -0.5 * (x.squaredNorm() + dim * detail::kLog2Pi);
  });
  t.ground_truth().means = Eigen::VectorXd::Zero(dim);
  t.ground_truth().variances = Eigen::VectorXd::Ones(dim);
  return t;
}

// N(0, Sigma) with unit variances and constant correlation rho.
inline LogDensityTarget correlated_normal_target(int dim, double rho) {
  if (dim < 2) throw ConfigError("correlated_normal: dim must be >= 2");
  if (rho >= 1.0 || rho <= -1.0 / (dim - 1))
    throw ConfigError("correlated_normal: correlation not PD");
  LogDensityTarget t("correlated_normal", dim, [rho](const Eigen::VectorXd& x) {
    return detail::log_mvn_equicorr(x, 0.0, rho);
  });
  t.ground_truth().means = Eigen::VectorXd::Zero(dim);
  t.ground_truth().variances = Eigen::VectorXd::Ones(dim);
  return t;
}

// Autoregressive chain: x_0 ~ N(0,1), x_{i+1} | x_i ~ N(alpha x_i, 1-alpha^2).
// Every marginal is exactly N(0,1); neighbouring coordinates correlate at
// alpha, which makes the joint badly conditioned as alpha -> 1.
inline LogDensityTarget ar1_target(int dim, double alpha) {
  if (std::abs(alpha) >= 1.0) throw ConfigError("ar1: |alpha| must be < 1");
  const double beta2 = 1.0 - alpha * alpha;
  const double norm_const =
      -0.5 * dim * detail::kLog2Pi - 0.5 * (dim - 1) * std::log(beta2);
  LogDensityTarget t("ar1", dim, [alpha, beta2, norm_const](const Eigen::VectorXd& x) {
    double q = x[0] * x[0];
    for (int i = 1; i < x.size(); ++i) {
      const double d = x[i] - alpha * x[i - 1];
      q += d * d / beta2;
    }
    return norm_const - 0.5 * q;
  });
  t.ground_truth().means = Eigen::VectorXd::Zero(dim);
  t.ground_truth().variances = Eigen::VectorXd::Ones(dim);
  return t;
}

// Funnel: x_0 ~ N(0,1); x_{1:D-1} | x_0 ~ N(0, e^{x_0} ((1-g) I + g J)).
// The conditional scale spans orders of magnitude along the x_0 axis.
inline LogDensityTarget funnel_target(int dim, double gamma) {
  if (dim < 2) throw ConfigError("funnel: dim must be >= 2");
  if (gamma >= 1.0 || (dim > 2 && gamma <= -1.0 / (dim - 2)))
    throw ConfigError("funnel: correlation not PD");
  LogDensityTarget t("funnel", dim, [gamma](const Eigen::VectorXd& x) {
    const double log_x0 = -0.5 * (x[0] * x[0] + detail::kLog2Pi);
    return log_x0 + detail::log_mvn_equicorr(x.tail(x.size() - 1), x[0], gamma);
  });
  t.ground_truth().means = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd var = Eigen::VectorXd::Constant(dim, std::exp(0.5));
  var[0] = 1.0;
  t.ground_truth().variances = var;
  return t;
}

// Ring-shaped likelihood: log L = -sum over cyclic pairs of
// ((x_i^2 + x_{i+1}^2 - a)^2 / b)^2. Mass concentrates on the manifold of
// points whose consecutive coordinate pairs lie on a circle of radius^2 = a.
inline LogDensityTarget ring_target(int dim, double a = 2.0, double b = 1.0) {
  if (dim < 2) throw ConfigError("ring: dim must be >= 2");
  LogDensityTarget t("ring", dim, [a, b](const Eigen::VectorXd& x) {
    const auto n = x.size();
    double s = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double r = x[i] * x[i] + x[(i + 1) % n] * x[(i + 1) % n] - a;
      const double u = r * r / b;
      s += u * u;
    }
    return -s;
  });
  t.ground_truth().means = Eigen::VectorXd::Zero(dim);
  return t;
}

// Two concentric Gaussian shells centred at +/- c on the first axis:
// L = circ(x; -c) + circ(x; +c), circ(x; c) proportional to
// exp(-(|x-c| - r)^2 / (2 w^2)).
inline LogDensityTarget shells_target(int dim, double c = 3.5, double r = 2.0,
                                      double w = 0.1) {
  if (dim < 1) throw ConfigError("shells: dim must be >= 1");
  const double log_norm = -std::log(std::sqrt(2.0 * M_PI) * w);
  LogDensityTarget t("shells", dim, [dim, c, r, w, log_norm](const Eigen::VectorXd& x) {
    Eigen::VectorXd d = x;
    d[0] -= c;
    const double dist1 = d.norm();
    d[0] += 2.0 * c;
    const double dist2 = d.norm();
    const double l1 = log_norm - (dist1 - r) * (dist1 - r) / (2.0 * w * w);
    const double l2 = log_norm - (dist2 - r) * (dist2 - r) / (2.0 * w * w);
    return detail::log_sum_exp(l1, l2);
  });
  t.ground_truth().means = Eigen::VectorXd::Zero(dim);
  return t;
}

// Two isotropic Gaussian modes at -0.5 and +0.5 (all coordinates), sd 0.1,
// with masses 1/3 and 2/3. Mode separation grows like sqrt(D)/0.1.
inline LogDensityTarget gaussian_mixture_target(int dim) {
  const double sd = 0.1;
  const double log_norm = -0.5 * dim * detail::kLog2Pi - dim * std::log(sd);
  LogDensityTarget t("gaussian_mixture", dim, [dim, sd, log_norm](const Eigen::VectorXd& x) {
    const double q1 =
        (x.array() + 0.5).matrix().squaredNorm() / (2.0 * sd * sd);
    const double q2 =
        (x.array() - 0.5).matrix().squaredNorm() / (2.0 * sd * sd);
    return detail::log_sum_exp(std::log(1.0 / 3.0) + log_norm - q1,
                               std::log(2.0 / 3.0) + log_norm - q2);
  });
  t.ground_truth().mode_masses = {1.0 / 3.0, 2.0 / 3.0};
  t.ground_truth().mode_centers = {Eigen::VectorXd::Constant(dim, -0.5),
                                   Eigen::VectorXd::Constant(dim, 0.5)};
  t.ground_truth().means = Eigen::VectorXd::Constant(dim, 1.0 / 6.0);
  t.ground_truth().variances =
      Eigen::VectorXd::Constant(dim, sd * sd + 0.25 - 1.0 / 36.0);
  // Uniform box over [-1, 1]^dim covering both modes.
  t.set_prior_sampler([dim](RngStream& rng) {
    Eigen::VectorXd x(dim);
    for (int d = 0; d < dim; ++d) x[d] = rng.uniform(-1.0, 1.0);
    return x;
  });
  return t;
}

// ---------------------------------------------------------------------------
// Object detection: 4-parameter posterior over one Gaussian profile
// theta = (X, Y, A, R) given a noisy image containing several objects.

struct SceneObject {
  double x, y, a, r;
};

struct SimulatedImage {
  Eigen::MatrixXd pixels;  // (ny, nx), pixel centers at integer coordinates
  std::vector<SceneObject> objects;
};

inline double gaussian_profile(double px, double py, const SceneObject& o) {
  const double dx = px - o.x, dy = py - o.y;
  return o.a * std::exp(-(dx * dx + dy * dy) / (2.0 * o.r * o.r));
}

// Scene generator: n objects with uniform positions, amplitudes in (1,2),
// radii in (3,7), plus N(0, 4) pixel noise. Draw order: per object
// (x, y, a, r), then noise in raster order (rows of y, x innermost).
inline SimulatedImage simulate_image(RngStream& rng, int n_objects = 8,
                                     int nx = 200, int ny = 200) {
  SimulatedImage sim;
  sim.pixels = Eigen::MatrixXd::Zero(ny, nx);
  for (int k = 0; k < n_objects; ++k) {
    SceneObject o;
    o.x = rng.uniform(0.0, double(nx));
    o.y = rng.uniform(0.0, double(ny));
    o.a = rng.uniform(1.0, 2.0);
    o.r = rng.uniform(3.0, 7.0);
    sim.objects.push_back(o);
  }
  for (int y = 0; y < ny; ++y)
    for (int x = 0; x < nx; ++x) {
      double v = 2.0 * rng.normal();
      for (const auto& o : sim.objects) v += gaussian_profile(x, y, o);
      sim.pixels(y, x) = v;
    }
  return sim;
}

// Image persistence: the grid is a flat row-major array of little-endian
// doubles; shape and any known object positions live in a <path>.json sidecar.
inline void save_image(const std::string& path, const Eigen::MatrixXd& pixels,
                       const std::vector<SceneObject>& objects = {}) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open image file for writing: " + path);
  const std::int64_t ny = pixels.rows(), nx = pixels.cols();
  for (std::int64_t y = 0; y < ny; ++y)
    for (std::int64_t x = 0; x < nx; ++x) {
      const double v = pixels(y, x);
      f.write(reinterpret_cast<const char*>(&v), 8);
    }
  if (!f) throw IoError("failed writing image file: " + path);

  nlohmann::json meta;
  meta["ny"] = ny;
  meta["nx"] = nx;
  meta["dtype"] = "float64_le";
  meta["order"] = "row_major";
  if (!objects.empty()) {
    nlohmann::json objs = nlohmann::json::array();
    for (const auto& o : objects)
      objs.push_back({{"x", o.x}, {"y", o.y}, {"a", o.a}, {"r", o.r}});
    meta["objects"] = objs;
  }
  std::ofstream side(path + ".json");
  if (!side) throw IoError("cannot open image sidecar for writing: " + path);
  side << meta.dump(2) << '\n';
  if (!side) throw IoError("failed writing image sidecar: " + path);
}

inline Eigen::MatrixXd load_image(const std::string& path) {
  std::ifstream side(path + ".json");
  if (!side) throw IoError("cannot open image sidecar: " + path + ".json");
  std::int64_t ny = 0, nx = 0;
  try {
    const auto meta = nlohmann::json::parse(side);
    ny = meta.at("ny").get<std::int64_t>();
    nx = meta.at("nx").get<std::int64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError("bad image sidecar " + path + ".json: " + e.what());
  }
  if (ny < 1 || nx < 1 || ny > 100000 || nx > 100000)
    throw IoError("bad image dimensions: " + path);
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open image file: " + path);
  Eigen::MatrixXd pixels(ny, nx);
  for (std::int64_t y = 0; y < ny; ++y)
    for (std::int64_t x = 0; x < nx; ++x) {
      double v;
      f.read(reinterpret_cast<char*>(&v), 8);
      pixels(y, x) = v;
    }
  if (!f) throw IoError("truncated image file: " + path);
  return pixels;
}

// Posterior over theta = (X, Y, A, R) for a single profile against the full
// image: log p = -sum_pixels (G - D)^2 / (2 sigma^2) + log prior, with a
// uniform box prior X,Y in (0, size), A in (1,2), R in (2,9).
//
// The profile is separable, G(x,y) = A ex(x) ey(y), so the residual sum
// collapses to A^2 (sum ex^2)(sum ey^2) - 2A ey^t D ex + sum D^2: one
// matrix-vector product per evaluation instead of a quadratic pixel loop.
inline LogDensityTarget object_detection_target(Eigen::MatrixXd image,
                                                double sigma = 2.0) {
  const auto ny = image.rows(), nx = image.cols();
  if (ny < 1 || nx < 1) throw ConfigError("object_detection: empty image");
  if (sigma <= 0) throw ConfigError("object_detection: sigma must be positive");
  auto img = std::make_shared<const Eigen::MatrixXd>(std::move(image));
  const double ssd_const = img->squaredNorm();
  const double log_prior =
      -std::log(double(nx) * double(ny) * (2.0 - 1.0) * (9.0 - 2.0));
  LogDensityTarget t(
      "object_detection", 4,
      [img, nx, ny, sigma, ssd_const, log_prior](const Eigen::VectorXd& th) {
        const double X = th[0], Y = th[1], A = th[2], R = th[3];
        if (X <= 0 || X >= double(nx) || Y <= 0 || Y >= double(ny) || A <= 1 ||
            A >= 2 || R <= 2 || R >= 9)
          return detail::kNegInf;
        Eigen::VectorXd ex(nx), ey(ny);
        const double inv2r2 = 1.0 / (2.0 * R * R);
        for (Eigen::Index x = 0; x < nx; ++x)
          ex[x] = std::exp(-(x - X) * (x - X) * inv2r2);
        for (Eigen::Index y = 0; y < ny; ++y)
          ey[y] = std::exp(-(y - Y) * (y - Y) * inv2r2);
        const double cross = ey.dot((*img) * ex);
        const double quad = A * A * ex.squaredNorm() * ey.squaredNorm() -
                            2.0 * A * cross + ssd_const;
        return -quad / (2.0 * sigma * sigma) + log_prior;
      });
  t.set_prior_sampler([nx, ny](RngStream& rng) {
    Eigen::VectorXd th(4);
    th << rng.uniform(0.0, double(nx)), rng.uniform(0.0, double(ny)),
        rng.uniform(1.0, 2.0), rng.uniform(2.0, 9.0);
    return th;
  });
  return t;
}

// ---------------------------------------------------------------------------
// Registry used by the CLI and config loader.

struct TargetParams {
  int dim = 10;
  double alpha = 0.95;        // ar1
  double corr = 0.95;         // correlated_normal rho / funnel gamma
  double ring_a = 2.0;
  double ring_b = 1.0;
  double shell_c = 3.5;
  double shell_r = 2.0;
  double shell_w = 0.1;
  double sigma = 2.0;         // object detection noise scale
  std::string image_path;     // object detection input; simulated when empty
  std::uint64_t image_seed = 20200905;
};

inline std::vector<std::string> target_ids() {
  return {"standard_normal", "correlated_normal", "ar1",
          "funnel",          "ring",              "shells",
          "gaussian_mixture", "object_detection"};
}

inline LogDensityTarget make_target(const std::string& id, const TargetParams& p) {
  if (id == "standard_normal") return standard_normal_target(p.dim);
  if (id == "correlated_normal") return correlated_normal_target(p.dim, p.corr);
  if (id == "ar1") return ar1_target(p.dim, p.alpha);
  if (id == "funnel") return funnel_target(p.dim, p.corr);
  if (id == "ring") return ring_target(p.dim, p.ring_a, p.ring_b);
  if (id == "shells") return shells_target(p.dim, p.shell_c, p.shell_r, p.shell_w);
  if (id == "gaussian_mixture") return gaussian_mixture_target(p.dim);
  if (id == "object_detection") {
    if (!p.image_path.empty())
      return object_detection_target(load_image(p.image_path), p.sigma);
    RngStream rng(p.image_seed, kStreamScratch, 0);
    return object_detection_target(simulate_image(rng).pixels, p.sigma);
  }
  throw ConfigError("unknown target id: " + id);
}

}  // namespace essmc
