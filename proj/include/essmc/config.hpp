#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "essmc/errors.hpp"
#include "essmc/targets.hpp"

// Run configuration. Every CLI flag has a JSON twin with the same name
// (dashes become underscores); flags override file values.

namespace essmc {

struct RunConfig {
  std::string target = "standard_normal";
  int dim = 10;
  double alpha = 0.95;  // ar1 coefficient
  double rho = 0.95;    // correlated-normal rho / funnel gamma
  std::string image;    // object detection input (empty = simulate)
  std::uint64_t image_seed = 20200905;

  std::string sampler = "ess";  // ess | metropolis | slice | stretch | demc
  std::string move = "differential";  // ess: differential | gaussian | global
  int walkers = 20;
  long iterations = 1000;
  double burn_in = 0.5;
  std::uint64_t seed = 0;
  int workers = 1;
  double gamma = 0.001;  // global-move component scale
  int adapt_max = 100;
  double adapt_tol = 0.05;
  double mu0 = 1.0;
  int thin = 1;
  long eval_budget = 0;  // 0 = run the configured iterations

  std::string init = "ball";  // ball | prior
  double ball_radius = 1.0;

  std::string out = "out";
  std::string label;  // row label in comparisons; defaults to sampler name

  void validate() const {
    const auto ids = target_ids();
    if (std::find(ids.begin(), ids.end(), target) == ids.end())
      throw ConfigError("unknown target id: " + target);
    if (dim < 1) throw ConfigError("dim must be at least 1");
    if (iterations < 0) throw ConfigError("iterations must be non-negative");
    if (walkers < 1) throw ConfigError("walkers must be at least 1");
    if (burn_in < 0 || burn_in >= 1)
      throw ConfigError("burn-in fraction must lie in [0, 1)");
    if (workers < 1) throw ConfigError("workers must be at least 1");
    if (thin < 1) throw ConfigError("thin must be at least 1");
    if (mu0 <= 0) throw ConfigError("mu0 must be positive");
    if (adapt_max < 0) throw ConfigError("adapt-max must be non-negative");
    if (adapt_tol <= 0) throw ConfigError("adapt-tol must be positive");
    if (sampler != "ess" && sampler != "metropolis" && sampler != "slice" &&
        sampler != "stretch" && sampler != "demc")
      throw ConfigError("unknown sampler: " + sampler);
    if (move != "differential" && move != "gaussian" && move != "global")
      throw ConfigError("unknown move: " + move);
    if (init != "ball" && init != "prior")
      throw ConfigError("unknown init strategy: " + init);
  }

  TargetParams target_params() const {
    TargetParams p;
    p.dim = dim;
    p.alpha = alpha;
    p.corr = rho;
    p.image_path = image;
    p.image_seed = image_seed;
    return p;
  }
};

inline void from_json_into(const nlohmann::json& j, RunConfig& c) {
  const auto get = [&j](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  get("target", c.target);
  get("dim", c.dim);
  get("alpha", c.alpha);
  get("rho", c.rho);
  get("image", c.image);
  get("image_seed", c.image_seed);
  get("sampler", c.sampler);
  get("move", c.move);
  get("walkers", c.walkers);
  get("iterations", c.iterations);
  get("burn_in", c.burn_in);
  get("seed", c.seed);
  get("workers", c.workers);
  get("gamma", c.gamma);
  get("adapt_max", c.adapt_max);
  get("adapt_tol", c.adapt_tol);
  get("mu0", c.mu0);
  get("thin", c.thin);
  get("eval_budget", c.eval_budget);
  get("init", c.init);
  get("ball_radius", c.ball_radius);
  get("out", c.out);
  get("label", c.label);
}

inline nlohmann::json config_to_json(const RunConfig& c) {
  nlohmann::json j;
  j["target"] = c.target;
  j["dim"] = c.dim;
  j["alpha"] = c.alpha;
  j["rho"] = c.rho;
  if (!c.image.empty()) j["image"] = c.image;
  j["image_seed"] = c.image_seed;
  j["sampler"] = c.sampler;
  j["move"] = c.move;
  j["walkers"] = c.walkers;
  j["iterations"] = c.iterations;
  j["burn_in"] = c.burn_in;
  j["seed"] = c.seed;
  j["workers"] = c.workers;
  j["gamma"] = c.gamma;
  j["adapt_max"] = c.adapt_max;
  j["adapt_tol"] = c.adapt_tol;
  j["mu0"] = c.mu0;
  j["thin"] = c.thin;
  j["eval_budget"] = c.eval_budget;
  j["init"] = c.init;
  j["ball_radius"] = c.ball_radius;
  j["out"] = c.out;
  if (!c.label.empty()) j["label"] = c.label;
  return j;
}

inline RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  RunConfig c;
  try {
    from_json_into(nlohmann::json::parse(in), c);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("bad config file " + path + ": " + e.what());
  }
  return c;
}

}  // namespace essmc
