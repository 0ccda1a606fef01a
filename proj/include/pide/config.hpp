#pragma once

#include "pide/verification.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace pide {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class ProblemKind { sine_memory, heat_no_memory, zero, custom };

std::string to_string(ProblemKind p);
ProblemKind parse_problem_kind(const std::string& name);

struct RunConfig {
  Scheme scheme = Scheme::standard;
  std::optional<std::string> preset;  ///< "table1" or "table2"
  /// Every row of the preset (or the single requested row). Rows finer than
  /// h = 1/128 only run with `large_rows`; see active_rows().
  std::vector<StudyRow> rows;
  double T = 1.0;

  ProblemKind problem = ProblemKind::sine_memory;
  CustomProblemParams custom;
  ForcingMode forcing = ForcingMode::operator_derived;

  SolverConfig solver;
  std::optional<StabilityConstants> constants;

  std::string out_csv;
  std::string out_md;
  bool benchmark = false;
  bool large_rows = false;
  bool stability = false;
  int threads = 1;

  bool help = false;
  std::string help_text;

  [[nodiscard]] std::vector<StudyRow> active_rows() const;
};

/// Default stability constants for the sine-memory problem on the unit square:
/// nu0 = 1/(1 + P^2) with P^2 = 1/(2 pi^2), mu0 = sqrt(2) + 3, K1 = 1.
StabilityConstants sine_memory_constants();

/// Accepts "1/8", "0.125" or "8e-2"; throws ConfigError otherwise.
double parse_size(const std::string& text, const std::string& what);

/// Parses flags and an optional --config file (INI/TOML with sections
/// [run], [solver], [stability], [output], [custom]). Flags override the file;
/// unknown keys are rejected by name.
RunConfig parse_config(int argc, const char* const* argv);
RunConfig parse_config(const std::vector<std::string>& args);

BenchmarkProblem make_problem(const RunConfig& cfg);

}  // namespace pide
