#pragma once

#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "essmc/baselines.hpp"
#include "essmc/chain_io.hpp"
#include "essmc/config.hpp"
#include "essmc/diagnostics.hpp"
#include "essmc/ensemble.hpp"
#include "essmc/sha1.hpp"
#include "essmc/targets.hpp"

// Experiment driver: builds target + sampler from a RunConfig, runs the chain,
// and persists chain binary, report JSON, and a summary CSV row. Also hosts
// the evaluation-equalized multi-sampler comparison.

namespace essmc {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitSampler = 3;
inline constexpr int kExitIo = 4;

inline MoveKind parse_move(const std::string& s) {
  if (s == "differential") return MoveKind::differential;
  if (s == "gaussian") return MoveKind::gaussian;
  if (s == "global") return MoveKind::global;
  throw ConfigError("unknown move: " + s);
}

struct RunResult {
  RunConfig config;
  ChainStore chain;
  RunReport report;
  std::string update_kind;  // move name for the ensemble, sampler id otherwise
  long init_evaluations = 0;
};

inline InitStrategy init_strategy_from(const RunConfig& cfg) {
  if (cfg.init == "prior") return InitPrior{};
  InitBall ball;
  ball.center = Eigen::VectorXd::Zero(cfg.dim);
  ball.radius = cfg.ball_radius;
  return ball;
}

// Build the target, persisting a freshly simulated detection image (grid plus
// JSON sidecar) into out_dir when the config names none.
inline LogDensityTarget build_target(const RunConfig& cfg,
                                     const std::string& out_dir = "") {
  TargetParams p = cfg.target_params();
  if (cfg.target == "object_detection" && cfg.image.empty() &&
      !out_dir.empty()) {
    RngStream rng(cfg.image_seed, kStreamScratch, 0);
    const SimulatedImage sim = simulate_image(rng);
    save_image(out_dir + "/simulated_image.bin", sim.pixels, sim.objects);
    return object_detection_target(sim.pixels, p.sigma);
  }
  return make_target(cfg.target, p);
}

inline RunResult execute_run(const RunConfig& cfg,
                             const std::string& out_dir = "",
                             bool quiet = false) {
  cfg.validate();
  LogDensityTarget target = build_target(cfg, out_dir);

  RunResult res;
  res.config = cfg;

  if (cfg.sampler == "ess") {
    SamplerOptions opts;
    opts.move = parse_move(cfg.move);
    opts.seed = cfg.seed;
    opts.workers = cfg.workers;
    opts.mu0 = cfg.mu0;
    opts.max_adapt_iterations = cfg.adapt_max;
    opts.adapt_tolerance = cfg.adapt_tol;
    opts.global.gamma = cfg.gamma;
    opts.quiet = quiet;
    EnsembleSampler sampler(target, opts);
    EnsembleState state = sampler.initialize(cfg.walkers, init_strategy_from(cfg));
    res.init_evaluations = target.evaluations();
    res.chain = sampler.run(state, cfg.iterations, cfg.thin, cfg.eval_budget);
    res.update_kind = cfg.move;
  } else {
    BaselineOptions opts;
    opts.seed = cfg.seed;
    opts.mu0 = cfg.mu0;
    opts.max_adapt_iterations = cfg.adapt_max;
    opts.adapt_tolerance = cfg.adapt_tol;
    opts.quiet = quiet;
    const InitStrategy strategy = init_strategy_from(cfg);
    const auto drive = [&](auto& sampler) {
      EnsembleState state = sampler.initialize(cfg.walkers, strategy);
      if constexpr (requires { sampler.prepare(state); }) sampler.prepare(state);
      res.init_evaluations = target.evaluations();
      res.chain = sampler.run(state, cfg.iterations, cfg.thin, cfg.eval_budget);
    };
    if (cfg.sampler == "metropolis") {
      MetropolisSampler sampler(target, opts);
      drive(sampler);
    } else if (cfg.sampler == "slice") {
      StandardSliceSampler sampler(target, opts);
      drive(sampler);
    } else if (cfg.sampler == "stretch") {
      StretchSampler sampler(target, opts);
      drive(sampler);
    } else {
      DemcSampler sampler(target, opts);
      drive(sampler);
    }
    res.update_kind = cfg.sampler;
  }

  res.report = build_report(res.chain, cfg.burn_in, target.ground_truth());
  return res;
}

inline std::string row_label(const RunConfig& cfg) {
  if (!cfg.label.empty()) return cfg.label;
  if (cfg.sampler == "ess") return "ess/" + cfg.move;
  return cfg.sampler;
}

// Config as embedded in chain provenance: the output location does not
// influence the samples, so dropping it keeps chain bytes location-independent.
inline nlohmann::json provenance_config(const RunConfig& cfg) {
  nlohmann::json j = config_to_json(cfg);
  j.erase("out");
  j.erase("label");
  return j;
}

inline std::string config_sha1(const RunConfig& cfg) {
  const std::string dump = provenance_config(cfg).dump();
  return git_blob_sha1(dump.data(), dump.size());
}

inline nlohmann::json run_record_json(const RunResult& res,
                                      const std::string& chain_file,
                                      const std::string& chain_sha1) {
  nlohmann::json j;
  j["config"] = config_to_json(res.config);
  j["report"] = report_to_json(res.report);
  j["sampler"] = res.config.sampler;
  j["update"] = res.update_kind;
  j["chain_file"] = chain_file;
  j["chain_sha1"] = chain_sha1;
  j["binary_sha1"] = binary_sha1_self();
  return j;
}

inline void write_summary_csv(const std::string& path, const RunResult& res) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open summary file for writing: " + path);
  f << "label,sampler,move,target,dim,walkers,iterations,seed,"
       "n_evaluations,mean_iat,n_eff,efficiency,iat_reliable,status,"
       "config_sha1,binary_sha1\n";
  f << std::setprecision(12);
  f << row_label(res.config) << ',' << res.config.sampler << ','
    << res.update_kind << ',' << res.config.target << ',' << res.config.dim
    << ',' << res.config.walkers << ',' << res.config.iterations << ','
    << res.config.seed << ',' << res.chain.n_evaluations << ','
    << res.report.mean_iat << ',' << res.report.n_eff << ','
    << res.report.efficiency << ',' << (res.report.iat_reliable ? 1 : 0) << ','
    << (res.chain.failed ? "failed" : "ok") << ',' << config_sha1(res.config)
    << ',' << binary_sha1_self() << '\n';
  if (!f) throw IoError("failed writing summary file: " + path);
}

inline void write_error_record(const std::string& out_dir,
                               const std::string& kind,
                               const std::string& message, int exit_code) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  std::ofstream f(out_dir + "/error.json");
  if (!f) return;  // best effort; the exit code still reports the failure
  nlohmann::json j;
  j["error"] = kind;
  j["message"] = message;
  j["exit_code"] = exit_code;
  f << j.dump(2) << '\n';
}

// Full single-run pipeline with the documented exit codes. Failed chains are
// persisted with their failure marker before reporting exit 3.
inline int run_experiment(const RunConfig& cfg, std::ostream& out = std::cout,
                          std::ostream& err = std::cerr) {
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  try {
    std::filesystem::create_directories(cfg.out);
  } catch (const std::exception& e) {
    err << "i/o error: " << e.what() << '\n';
    return kExitIo;
  }

  RunResult res;
  try {
    res = execute_run(cfg, cfg.out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    write_error_record(cfg.out, "config", e.what(), kExitConfig);
    return kExitConfig;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << '\n';
    write_error_record(cfg.out, "io", e.what(), kExitIo);
    return kExitIo;
  } catch (const Error& e) {
    err << "sampler error: " << e.what() << '\n';
    write_error_record(cfg.out, "sampler", e.what(), kExitSampler);
    return kExitSampler;
  }

  const std::string chain_path = cfg.out + "/chain.bin";
  try {
    ChainHeader header = make_header(res.chain, cfg.seed, res.update_kind,
                                     cfg.target, cfg.iterations);
    header.provenance = {{"config", provenance_config(cfg)},
                         {"binary_sha1", binary_sha1_self()}};
    write_chain(chain_path, header, res.chain);
    const nlohmann::json record =
        run_record_json(res, chain_path, git_blob_sha1_file(chain_path));
    std::ofstream rf(cfg.out + "/report.json");
    if (!rf) throw IoError("cannot open report file for writing");
    rf << record.dump(2) << '\n';
    if (!rf) throw IoError("failed writing report file");
    write_summary_csv(cfg.out + "/summary.csv", res);
  } catch (const std::exception& e) {
    err << "i/o error: " << e.what() << '\n';
    write_error_record(cfg.out, "io", e.what(), kExitIo);
    return kExitIo;
  }

  if (res.chain.failed) {
    err << "sampler error: " << res.chain.failure_message << '\n';
    write_error_record(cfg.out, "sampler", res.chain.failure_message,
                       kExitSampler);
    return kExitSampler;
  }
  out << "wrote " << chain_path << " (" << res.chain.n_recorded
      << " records, " << res.chain.n_evaluations << " evaluations)\n";
  return kExitOk;
}

struct CompareRow {
  std::string label;
  bool ok = false;
  double mean_iat = 0;
  double n_eff = 0;
  double efficiency = 0;
  long evaluations = 0;
  std::string note;
};

// Run every config and tabulate IAT/efficiency. The first ensemble config
// runs first; its evaluation count becomes the budget for the other rows so
// all samplers spend the same number of density evaluations.
inline std::vector<CompareRow> compare(const std::vector<RunConfig>& configs,
                                       bool quiet = true) {
  std::vector<CompareRow> rows(configs.size());
  std::vector<std::size_t> order;
  std::size_t reference = configs.size();
  for (std::size_t i = 0; i < configs.size(); ++i)
    if (configs[i].sampler == "ess") {
      reference = i;
      break;
    }
  if (reference < configs.size()) order.push_back(reference);
  for (std::size_t i = 0; i < configs.size(); ++i)
    if (i != reference) order.push_back(i);

  long budget = 0;
  for (const std::size_t i : order) {
    RunConfig cfg = configs[i];
    CompareRow& row = rows[i];
    row.label = row_label(cfg);
    if (i != reference && budget > 0 && cfg.eval_budget == 0) {
      cfg.eval_budget = budget;
      // The iteration count is a cap; the budget is what actually stops the
      // run. Raise the cap so the budget binds even for cheap updates.
      cfg.iterations = std::max(cfg.iterations, budget);
    }
    try {
      const RunResult res = execute_run(cfg, "", quiet);
      row.evaluations = res.chain.n_evaluations;
      if (res.chain.failed) {
        row.note = res.chain.failure_message;
      } else {
        row.ok = true;
        row.mean_iat = res.report.mean_iat;
        row.n_eff = res.report.n_eff;
        row.efficiency = res.report.efficiency;
        if (!res.report.iat_reliable) row.note = "iat not certified";
      }
      if (i == reference) budget = res.chain.n_evaluations;
    } catch (const std::exception& e) {
      row.note = e.what();
    }
  }
  return rows;
}

inline void print_compare_table(const std::vector<CompareRow>& rows,
                                std::ostream& out) {
  out << std::left << std::setw(22) << "sampler" << std::right
      << std::setw(12) << "iat" << std::setw(12) << "n_eff" << std::setw(14)
      << "efficiency" << std::setw(14) << "evaluations" << "  status\n";
  for (const auto& row : rows) {
    out << std::left << std::setw(22) << row.label << std::right;
    if (row.ok) {
      out << std::setw(12) << std::fixed << std::setprecision(2)
          << row.mean_iat << std::setw(12) << std::setprecision(0) << row.n_eff
          << std::setw(14) << std::scientific << std::setprecision(3)
          << row.efficiency << std::setw(14) << row.evaluations << "  ok";
      out.unsetf(std::ios::floatfield);
    } else {
      out << std::setw(12) << "-" << std::setw(12) << "-" << std::setw(14)
          << "-" << std::setw(14) << row.evaluations << "  failed";
      if (!row.note.empty()) out << " (" << row.note << ')';
    }
    out << '\n';
  }
}

inline void write_compare_csv(const std::string& path,
                              const std::vector<CompareRow>& rows) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open comparison file for writing: " + path);
  f << "sampler,iat,n_eff,efficiency,evaluations,status,note\n";
  f << std::setprecision(12);
  for (const auto& row : rows) {
    f << row.label << ',';
    if (row.ok)
      f << row.mean_iat << ',' << row.n_eff << ',' << row.efficiency << ',';
    else
      f << ",,,";
    f << row.evaluations << ',' << (row.ok ? "ok" : "failed") << ",\""
      << row.note << "\"\n";
  }
  if (!f) throw IoError("failed writing comparison file: " + path);
}

}  // namespace essmc
