#pragma once

#include "mopar/harness.hpp"
#include "mopar/problem.hpp"
#include "mopar/stepper.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

namespace mopar {

struct OutputOptions {
  std::string dir = ".";
  bool field_csv = true;
  bool mesh = false;
  bool ledger_csv = true;
  bool report_json = true;
};

struct OracleOptions {
  int instances = 50;
  int grid_resolution = 21;
  std::uint64_t seed = 1;
};

/// Everything a CLI run needs. Built from JSON; see configs/ for examples.
struct RunConfig {
  std::string mode;
  ProblemSpec problem;
  std::optional<ExactSolution> exact;  ///< when set, f and u0 are manufactured from it
  int m = 16;
  double T = 1.0;
  int N = 16;
  SolverOptions solver;
  SamplingOptions validation;
  double eps = 0.5;
  TemporalStudyOptions temporal;
  SpatialStudyOptions spatial;
  OracleOptions oracle;
  OutputOptions outputs;
};

inline constexpr std::string_view kModes[] = {"validate",       "solve",         "audit",
                                              "temporal-study", "spatial-study", "oracle-check"};

/// Parses a JSON document. Throws Error(config) on malformed input, unknown
/// keys or ids, and on tau = T/N >= 1.
RunConfig parse_config(std::string_view json_text);
/// Reads and parses a file; a missing file is an io error.
RunConfig load_config(const std::filesystem::path& path);

/// Builds a problem from its JSON block alone (used by tests and tools).
ProblemSpec parse_problem(std::string_view json_text);

}  // namespace mopar
