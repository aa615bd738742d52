// photon-gate command implementations, kept out of main() so the tests can
// drive them with in-memory streams.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "photongate/core.hpp"
#include "photongate/criterion.hpp"
#include "photongate/error_model.hpp"
#include "photongate/timetag.hpp"

namespace photongate::cli {

enum ExitCode : int {
  kExitSingle = 0,
  kExitNotSingle = 1,
  kExitError = 2,
  kExitIndeterminate = 3,
};

int exit_code(Decision d) noexcept;

/// A config file problem, with the offending line when there is one.
class ConfigError : public std::runtime_error {
public:
  ConfigError(const std::string& what, std::size_t line = 0);

  [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

/// Parsed simulation config. Keys:
///   source.kind      ideal | background | coherent
///   source.emitters  for ideal, default 1
///   source.mu        for coherent
///   params.eta, params.delta (0), params.gamma (0), cycles
///   seed             may instead come from --seed
///   sim.block_size (65536), sim.threads (0 = all cores)
struct RunConfig {
  SourceModel source = IdealEmitters{1};
  double eta = 0.0;
  double delta = 0.0;
  double gamma = 0.0;
  std::optional<std::uint64_t> cycles;
  std::optional<std::uint64_t> seed;
  std::uint64_t block_size = 1 << 16;
  unsigned threads = 0;
};

RunConfig parse_config(std::istream& in);

/// Canonical key-value echo of a config, in a fixed order.
Echo echo(const RunConfig& cfg);

struct RunReport {
  PhotonStats stats = PhotonStats::from_probabilities(1.0, 0.0, 0.0);
  ClickCounts counts;
  Verdict verdict;
  DeviationReport deviations;
  Echo config;
  double duration_s = 0.0;
};

RunReport make_report(const ClickCounts& counts, const DetectionParams& params,
                      Echo config, FluctuationTerm term = FluctuationTerm::Variance);

/// Every report line except the duration, each starting with prefix.
void write_report(std::ostream& out, const RunReport& report,
                  const std::string& prefix = "");

/// Header and value line shaped like a results table row.
std::string table_header();
std::string table_row(const Verdict& v);

/// Entry point shared by main() and the tests.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace photongate::cli
