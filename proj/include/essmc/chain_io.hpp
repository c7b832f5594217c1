#pragma once

#include <bit>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "essmc/diagnostics.hpp"
#include "essmc/ensemble.hpp"
#include "essmc/errors.hpp"
#include "essmc/sha1.hpp"

// Chain persistence: a single JSON header line followed by raw little-endian
// doubles in record-major, walker-minor, coordinate-innermost order. Plus a
// CSV exporter, report serialization, and histogram extraction.

namespace essmc {

static_assert(std::endian::native == std::endian::little,
              "chain files are little-endian; add byte swapping for this platform");

struct ChainHeader {
  int version = 1;
  int dim = 0;
  int n_walkers = 0;
  long n_iterations = 0;  // iterations executed
  std::uint64_t seed = 0;
  std::string move;
  std::string target_id;
  double mu_final = 0;
  int thin = 1;
  long n_recorded = 0;
  long n_evaluations = 0;
  bool failed = false;
  std::string failure_message;
  long failed_at_iteration = -1;
  // Full run provenance: the generating config plus the binary's content
  // hash. Carried verbatim; null when the producer did not supply one.
  nlohmann::json provenance = nullptr;
};

inline nlohmann::json header_to_json(const ChainHeader& h) {
  nlohmann::json j;
  j["version"] = h.version;
  j["dim"] = h.dim;
  j["n_walkers"] = h.n_walkers;
  j["n_iterations"] = h.n_iterations;
  j["seed"] = h.seed;
  j["move"] = h.move;
  j["target_id"] = h.target_id;
  j["mu_final"] = h.mu_final;
  j["thin"] = h.thin;
  j["n_recorded"] = h.n_recorded;
  j["n_evaluations"] = h.n_evaluations;
  if (h.failed) {
    j["failed"] = true;
    j["failure_message"] = h.failure_message;
    j["failed_at_iteration"] = h.failed_at_iteration;
  }
  if (!h.provenance.is_null()) j["provenance"] = h.provenance;
  return j;
}

inline ChainHeader header_from_json(const nlohmann::json& j) {
  ChainHeader h;
  h.version = j.at("version").get<int>();
  h.dim = j.at("dim").get<int>();
  h.n_walkers = j.at("n_walkers").get<int>();
  h.n_iterations = j.at("n_iterations").get<long>();
  h.seed = j.at("seed").get<std::uint64_t>();
  h.move = j.at("move").get<std::string>();
  h.target_id = j.at("target_id").get<std::string>();
  h.mu_final = j.at("mu_final").get<double>();
  h.thin = j.value("thin", 1);
  h.n_recorded = j.value("n_recorded", h.n_iterations);
  h.n_evaluations = j.value("n_evaluations", 0L);
  h.failed = j.value("failed", false);
  h.failure_message = j.value("failure_message", std::string());
  h.failed_at_iteration = j.value("failed_at_iteration", -1L);
  if (j.contains("provenance")) h.provenance = j.at("provenance");
  return h;
}

inline ChainHeader make_header(const ChainStore& chain, std::uint64_t seed,
                               const std::string& move,
                               const std::string& target_id,
                               long n_iterations) {
  ChainHeader h;
  h.dim = chain.dim;
  h.n_walkers = chain.n_walkers;
  h.n_iterations = n_iterations;
  h.seed = seed;
  h.move = move;
  h.target_id = target_id;
  h.mu_final = chain.mu_final;
  h.thin = chain.thin;
  h.n_recorded = chain.n_recorded;
  h.n_evaluations = chain.n_evaluations;
  h.failed = chain.failed;
  h.failure_message = chain.failure_message;
  h.failed_at_iteration = chain.failed_at_iteration;
  return h;
}

inline void write_chain(const std::string& path, const ChainHeader& header,
                        const ChainStore& chain) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open chain file for writing: " + path);
  out << header_to_json(header).dump() << '\n';
  out.write(reinterpret_cast<const char*>(chain.samples.data()),
            std::streamsize(chain.samples.size() * sizeof(double)));
  if (!out) throw IoError("failed writing chain file: " + path);
}

inline std::pair<ChainHeader, ChainStore> read_chain(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open chain file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw IoError("chain file missing header: " + path);
  ChainHeader header;
  try {
    header = header_from_json(nlohmann::json::parse(line));
  } catch (const nlohmann::json::exception& e) {
    throw IoError("bad chain header in " + path + ": " + e.what());
  }
  ChainStore chain;
  chain.dim = header.dim;
  chain.n_walkers = header.n_walkers;
  chain.thin = header.thin;
  chain.n_recorded = header.n_recorded;
  chain.n_evaluations = header.n_evaluations;
  chain.mu_final = header.mu_final;
  chain.failed = header.failed;
  chain.failure_message = header.failure_message;
  chain.failed_at_iteration = header.failed_at_iteration;
  const std::size_t count =
      std::size_t(header.n_recorded) * std::size_t(header.n_walkers) *
      std::size_t(header.dim);
  chain.samples.resize(count);
  in.read(reinterpret_cast<char*>(chain.samples.data()),
          std::streamsize(count * sizeof(double)));
  if (std::size_t(in.gcount()) != count * sizeof(double))
    throw IoError("chain file truncated: " + path);
  return {header, chain};
}

// One row per stored sample: iteration, walker, x_0..x_{D-1}.
inline void write_chain_csv(const std::string& path, const ChainStore& chain) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open csv file for writing: " + path);
  out << "iteration,walker";
  for (int d = 0; d < chain.dim; ++d) out << ",x_" << d;
  out << '\n';
  out.precision(17);
  for (long r = 0; r < chain.n_recorded; ++r) {
    const long iteration = r * chain.thin;
    for (int w = 0; w < chain.n_walkers; ++w) {
      out << iteration << ',' << w;
      for (int d = 0; d < chain.dim; ++d) out << ',' << chain.value(r, w, d);
      out << '\n';
    }
  }
  if (!out) throw IoError("failed writing csv file: " + path);
}

inline nlohmann::json report_to_json(const RunReport& rep) {
  nlohmann::json j;
  j["iat"] = rep.iat;
  j["mean_iat"] = rep.mean_iat;
  j["n_eff"] = rep.n_eff;
  j["efficiency"] = rep.efficiency;
  j["means"] = rep.means;
  j["variances"] = rep.variances;
  j["n_samples"] = rep.n_samples;
  j["n_evaluations"] = rep.n_evaluations;
  j["first_record"] = rep.first_record;
  j["no_samples"] = rep.no_samples;
  j["iat_reliable"] = rep.iat_reliable;
  if (rep.mode_masses) j["mode_masses"] = *rep.mode_masses;
  if (!rep.note.empty()) j["note"] = rep.note;
  return j;
}

struct Histogram {
  std::vector<double> edges;   // n_bins + 1
  std::vector<double> masses;  // normalized counts, sum to 1
  long n_used = 0;
};

// Post-burn-in histogram of one coordinate's pooled samples.
inline Histogram marginal_histogram(const ChainStore& chain, int parameter,
                                    int n_bins, double burn_in_fraction,
                                    std::optional<std::pair<double, double>>
                                        range = {}) {
  if (parameter < 0 || parameter >= chain.dim)
    throw ConfigError("parameter index out of range");
  if (n_bins < 1) throw ConfigError("need at least one bin");
  const long first = long(burn_in_fraction * double(chain.n_recorded));
  if (first >= chain.n_recorded) throw ConfigError("no samples after burn-in");

  double lo, hi;
  if (range) {
    lo = range->first;
    hi = range->second;
  } else {
    lo = hi = chain.value(first, 0, parameter);
    for (long r = first; r < chain.n_recorded; ++r)
      for (int w = 0; w < chain.n_walkers; ++w) {
        const double x = chain.value(r, w, parameter);
        lo = std::min(lo, x);
        hi = std::max(hi, x);
      }
    if (lo == hi) hi = lo + 1.0;  // constant chain: one occupied bin
  }
  if (hi <= lo) throw ConfigError("histogram range is empty");

  Histogram hist;
  hist.edges.resize(size_t(n_bins) + 1);
  for (int b = 0; b <= n_bins; ++b)
    hist.edges[size_t(b)] = lo + (hi - lo) * double(b) / double(n_bins);
  hist.masses.assign(size_t(n_bins), 0.0);
  for (long r = first; r < chain.n_recorded; ++r)
    for (int w = 0; w < chain.n_walkers; ++w) {
      const double x = chain.value(r, w, parameter);
      if (x < lo || x > hi) continue;
      int b = int((x - lo) / (hi - lo) * double(n_bins));
      if (b == n_bins) b = n_bins - 1;  // right edge inclusive
      hist.masses[size_t(b)] += 1.0;
      ++hist.n_used;
    }
  if (hist.n_used > 0)
    for (auto& m : hist.masses) m /= double(hist.n_used);
  return hist;
}

inline void write_histogram_csv(const std::string& path,
                                const Histogram& hist) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open histogram file for writing: " + path);
  out << "bin_lo,bin_hi,mass\n";
  out.precision(17);
  for (std::size_t b = 0; b + 1 < hist.edges.size(); ++b)
    out << hist.edges[b] << ',' << hist.edges[b + 1] << ','
        << hist.masses[b] << '\n';
  if (!out) throw IoError("failed writing histogram file: " + path);
}

}  // namespace essmc
