#pragma once

#include <Eigen/Dense>
#include <atomic>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "essmc/errors.hpp"
#include "essmc/rng.hpp"

// Target distribution interface. A target is a log-density over R^D plus
// optional extras: a prior sampler (for prior-based walker initialization)
// and analytic ground truth (for diagnostics and tests).
//
// Every call goes through log_density(), which bumps a shared evaluation
// counter. All samplers in this library are compared on equal numbers of
// density evaluations, so the counter is the canonical cost meter.

namespace essmc {

struct GroundTruth {
  std::optional<Eigen::VectorXd> means;
  std::optional<Eigen::VectorXd> variances;
  std::optional<std::vector<double>> mode_masses;
  std::optional<std::vector<Eigen::VectorXd>> mode_centers;
};

class LogDensityTarget {
 public:
  using LogDensityFn = std::function<double(const Eigen::VectorXd&)>;
  using PriorSampler = std::function<Eigen::VectorXd(RngStream&)>;

  LogDensityTarget(std::string id, int dim, LogDensityFn logf)
      : id_(std::move(id)),
        dim_(dim),
        logf_(std::move(logf)),
        n_evals_(std::make_shared<std::atomic<long>>(0)) {
    if (dim_ < 1) throw ConfigError("target dimension must be positive");
  }

  const std::string& id() const { return id_; }
  int dim() const { return dim_; }

  double log_density(const Eigen::VectorXd& x) const {
    if (x.size() != dim_) throw Error("log_density: dimension mismatch");
    n_evals_->fetch_add(1, std::memory_order_relaxed);
    return logf_(x);
  }

  long evaluations() const { return n_evals_->load(std::memory_order_relaxed); }
  void reset_evaluations() { n_evals_->store(0, std::memory_order_relaxed); }

  bool has_prior_sampler() const { return bool(prior_); }
  Eigen::VectorXd sample_prior(RngStream& rng) const {
    if (!prior_) throw ConfigError("target '" + id_ + "' has no prior sampler");
    return prior_(rng);
  }
  void set_prior_sampler(PriorSampler p) { prior_ = std::move(p); }

  const GroundTruth& ground_truth() const { return truth_; }
  GroundTruth& ground_truth() { return truth_; }

 private:
  std::string id_;
  int dim_;
  LogDensityFn logf_;
  PriorSampler prior_;
  GroundTruth truth_;
  std::shared_ptr<std::atomic<long>> n_evals_;  // shared across copies
};

}  // namespace essmc
