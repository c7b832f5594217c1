#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "essmc/chain_io.hpp"
#include "essmc/config.hpp"
#include "essmc/runner.hpp"
#include "essmc/targets.hpp"

// Command-line front end: run one experiment, compare samplers under an
// equalized evaluation budget, export a marginal histogram, or simulate a
// detection image. Exit codes: 0 ok, 2 config error, 3 sampler error, 4 I/O.

namespace {

using essmc::RunConfig;

// Flags override config-file values; only flags the user actually passed are
// applied on top of the loaded file.
struct RunFlags {
  RunConfig v;  // bound flag storage, initialized to the defaults
  std::string config_path;
  std::vector<std::pair<CLI::Option*, std::function<void(RunConfig&)>>> overrides;

  template <class T>
  void opt(CLI::App* cmd, const char* name, T RunConfig::* member,
           const char* help) {
    CLI::Option* o = cmd->add_option(name, v.*member, help);
    overrides.emplace_back(
        o, [this, member](RunConfig& c) { c.*member = v.*member; });
  }

  void add(CLI::App* cmd) {
    cmd->add_option("--config", config_path,
                    "JSON config file; explicit flags override its values");
    opt(cmd, "--target", &RunConfig::target, "target id (see `essmc targets`)");
    opt(cmd, "--dim", &RunConfig::dim, "problem dimension");
    opt(cmd, "--alpha", &RunConfig::alpha,
        "autoregressive coefficient for the ar1 target");
    opt(cmd, "--rho", &RunConfig::rho,
        "correlation for correlated_normal / funnel targets");
    opt(cmd, "--image", &RunConfig::image,
        "detection image file (empty: simulate)");
    opt(cmd, "--image-seed", &RunConfig::image_seed,
        "seed for simulated detection images");
    opt(cmd, "--sampler", &RunConfig::sampler,
        "ess | metropolis | slice | stretch | demc");
    opt(cmd, "--move", &RunConfig::move,
        "ensemble move: differential | gaussian | global");
    opt(cmd, "--walkers", &RunConfig::walkers, "number of walkers (chains)");
    opt(cmd, "--iterations", &RunConfig::iterations, "iterations to run");
    opt(cmd, "--burn-in", &RunConfig::burn_in,
        "burn-in fraction discarded by diagnostics");
    opt(cmd, "--seed", &RunConfig::seed, "master seed");
    opt(cmd, "--workers", &RunConfig::workers,
        "worker threads for half-set updates");
    opt(cmd, "--gamma", &RunConfig::gamma, "covariance scale of the global move");
    opt(cmd, "--adapt-max", &RunConfig::adapt_max,
        "last iteration allowed to adapt mu");
    opt(cmd, "--adapt-tol", &RunConfig::adapt_tol,
        "expansion balance tolerance for freezing");
    opt(cmd, "--mu0", &RunConfig::mu0, "initial length scale mu");
    opt(cmd, "--thin", &RunConfig::thin, "record every thin-th iteration");
    opt(cmd, "--eval-budget", &RunConfig::eval_budget,
        "stop once this many density evaluations are spent (0: none)");
    opt(cmd, "--init", &RunConfig::init, "initialization: ball | prior");
    opt(cmd, "--ball-radius", &RunConfig::ball_radius, "radius of the init ball");
    opt(cmd, "--out", &RunConfig::out, "output directory");
    opt(cmd, "--label", &RunConfig::label, "row label in comparison tables");
  }

  RunConfig resolve() const {
    RunConfig cfg;
    if (!config_path.empty()) cfg = essmc::load_config_file(config_path);
    for (const auto& [o, apply] : overrides)
      if (o->count() > 0) apply(cfg);
    return cfg;
  }
};

int cmd_compare(const std::vector<std::string>& files,
                const std::string& csv_out) {
  std::vector<RunConfig> configs;
  configs.reserve(files.size());
  for (const auto& f : files) configs.push_back(essmc::load_config_file(f));
  const auto rows = essmc::compare(configs);
  essmc::print_compare_table(rows, std::cout);
  if (!csv_out.empty()) essmc::write_compare_csv(csv_out, rows);
  return essmc::kExitOk;
}

int cmd_export_marginal(const std::string& chain_file, int parameter,
                        int bins, double burn_in,
                        const std::vector<double>& range,
                        const std::string& out) {
  const auto [header, chain] = essmc::read_chain(chain_file);
  std::optional<std::pair<double, double>> r;
  if (range.size() == 2) r = {range[0], range[1]};
  const auto hist = essmc::marginal_histogram(chain, parameter, bins, burn_in, r);
  essmc::write_histogram_csv(out, hist);

  nlohmann::json meta;
  meta["chain_file"] = chain_file;
  meta["chain_sha1"] = essmc::git_blob_sha1_file(chain_file);
  meta["parameter"] = parameter;
  meta["bins"] = bins;
  meta["burn_in"] = burn_in;
  meta["n_used"] = hist.n_used;
  meta["binary_sha1"] = essmc::binary_sha1_self();
  if (!header.provenance.is_null()) meta["provenance"] = header.provenance;
  std::ofstream mf(out + ".meta.json");
  if (!mf) throw essmc::IoError("cannot open histogram sidecar: " + out);
  mf << meta.dump(2) << '\n';
  std::cout << "wrote " << out << " (" << hist.n_used << " samples)\n";
  return essmc::kExitOk;
}

int cmd_simulate_image(std::uint64_t seed, int objects, int nx, int ny,
                       const std::string& out) {
  essmc::RngStream rng(seed, essmc::kStreamScratch, 0);
  const auto sim = essmc::simulate_image(rng, objects, nx, ny);
  essmc::save_image(out, sim.pixels, sim.objects);
  std::cout << "wrote " << out << " and " << out << ".json (" << objects
            << " objects)\n";
  return essmc::kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ensemble slice MCMC toolkit"};
  app.require_subcommand(1);
  int exit_code = essmc::kExitOk;

  auto* run = app.add_subcommand("run", "execute one configured sampling run");
  RunFlags flags;
  flags.add(run);
  run->callback([&] { exit_code = essmc::run_experiment(flags.resolve()); });

  auto* cmp = app.add_subcommand(
      "compare", "run several configs and tabulate IAT / efficiency");
  std::vector<std::string> cmp_files;
  std::string cmp_csv;
  cmp->add_option("configs", cmp_files, "JSON config files, one per row");
  cmp->add_option("--out", cmp_csv, "also write the table as CSV");
  cmp->callback([&] { exit_code = cmd_compare(cmp_files, cmp_csv); });

  auto* exp = app.add_subcommand("export-marginal",
                                 "histogram one coordinate of a stored chain");
  std::string exp_chain, exp_out = "marginal.csv";
  int exp_param = 0, exp_bins = 50;
  double exp_burn = 0.5;
  std::vector<double> exp_range;
  exp->add_option("chain", exp_chain, "chain file written by `run`")
      ->required();
  exp->add_option("--parameter", exp_param, "coordinate index");
  exp->add_option("--bins", exp_bins, "number of bins");
  exp->add_option("--burn-in", exp_burn, "burn-in fraction to discard");
  exp->add_option("--range", exp_range, "histogram range: lo hi")
      ->expected(2);
  exp->add_option("--out", exp_out, "output CSV path");
  exp->callback([&] {
    exit_code = cmd_export_marginal(exp_chain, exp_param, exp_bins, exp_burn,
                                    exp_range, exp_out);
  });

  auto* sim = app.add_subcommand("simulate-image",
                                 "generate a detection image + JSON sidecar");
  std::uint64_t sim_seed = 20200905;
  int sim_objects = 8, sim_nx = 200, sim_ny = 200;
  std::string sim_out = "image.bin";
  sim->add_option("--seed", sim_seed, "image seed");
  sim->add_option("--objects", sim_objects, "number of injected objects");
  sim->add_option("--nx", sim_nx, "image width");
  sim->add_option("--ny", sim_ny, "image height");
  sim->add_option("--out", sim_out, "output path");
  sim->callback([&] {
    exit_code = cmd_simulate_image(sim_seed, sim_objects, sim_nx, sim_ny,
                                   sim_out);
  });

  auto* tgt = app.add_subcommand("targets", "list available target ids");
  tgt->callback([&] {
    for (const auto& id : essmc::target_ids()) std::cout << id << '\n';
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return essmc::kExitConfig;
  } catch (const essmc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return essmc::kExitConfig;
  } catch (const essmc::IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return essmc::kExitIo;
  } catch (const essmc::Error& e) {
    std::cerr << "sampler error: " << e.what() << '\n';
    return essmc::kExitSampler;
  }
  return exit_code;
}
