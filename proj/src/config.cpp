#include "pide/config.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

namespace pide {

namespace {

const std::set<std::string> kSections = {"run", "solver", "stability", "output", "custom"};

// Sections only group keys; every key maps to the flag of the same name with
// underscores written as dashes.
class SectionedConfig : public CLI::ConfigTOML {
 public:
  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    std::vector<CLI::ConfigItem> out;
    for (CLI::ConfigItem item : CLI::ConfigTOML::from_config(input)) {
      if (item.name == "++" || item.name == "--") continue;
      if (!item.parents.empty() && item.parents.front() != "default") {
        if (item.parents.size() > 1 || !kSections.contains(item.parents.front())) {
          throw ConfigError("unknown config section '" + item.fullname() + "'");
        }
      }
      item.parents.clear();
      std::replace(item.name.begin(), item.name.end(), '_', '-');
      out.push_back(std::move(item));
    }
    return out;
  }
};

}  // namespace

std::string to_string(ProblemKind p) {
  switch (p) {
    case ProblemKind::sine_memory: return "paper_section5";
    case ProblemKind::heat_no_memory: return "heat_no_memory";
    case ProblemKind::zero: return "zero";
    case ProblemKind::custom: return "custom";
  }
  return "?";
}

ProblemKind parse_problem_kind(const std::string& name) {
  if (name == "paper_section5" || name == "sine_memory") return ProblemKind::sine_memory;
  if (name == "heat_no_memory") return ProblemKind::heat_no_memory;
  if (name == "zero") return ProblemKind::zero;
  if (name == "custom") return ProblemKind::custom;
  throw ConfigError("unknown problem '" + name + "' (expected paper_section5, heat_no_memory, zero or custom)");
}

StabilityConstants sine_memory_constants() {
  const double p2 = 1.0 / (2.0 * std::numbers::pi * std::numbers::pi);
  return {1.0 / (1.0 + p2), std::numbers::sqrt2 + 3.0, 1.0};
}

double parse_size(const std::string& text, const std::string& what) {
  auto number = [&](const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size() || !std::isfinite(v)) {
      throw ConfigError(what + ": cannot parse '" + text + "'");
    }
    return v;
  };
  double v = 0.0;
  if (const auto slash = text.find('/'); slash != std::string::npos) {
    const double num = number(text.substr(0, slash));
    const double den = number(text.substr(slash + 1));
    if (den == 0.0) throw ConfigError(what + ": zero denominator in '" + text + "'");
    v = num / den;
  } else {
    v = number(text);
  }
  if (!(v > 0.0)) throw ConfigError(what + " must be positive, got '" + text + "'");
  return v;
}

std::vector<StudyRow> RunConfig::active_rows() const {
  if (large_rows) return rows;
  std::vector<StudyRow> out;
  for (const auto& r : rows) {
    if (r.fine_n <= 128) out.push_back(r);
  }
  return out;
}

RunConfig parse_config(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.push_back("pide");
  for (const auto& a : args) argv.push_back(a.c_str());
  return parse_config(static_cast<int>(argv.size()), argv.data());
}

RunConfig parse_config(int argc, const char* const* argv) {
  RunConfig cfg;
  CLI::App app{"Finite-element convergence studies for parabolic integro-differential equations", "pide"};
  app.set_help_flag("--help", "print this help and exit");
  app.config_formatter(std::make_shared<SectionedConfig>());
  app.set_config("--config", "", "INI/TOML configuration file");
  app.allow_config_extras(CLI::config_extras_mode::error);

  std::string scheme, h, H, dt, problem, preset, forcing, nonsym;
  app.add_option("--scheme", scheme, "standard, 4.1, 4.2 or 4.3");
  app.add_option("--h", h, "fine mesh size, e.g. 1/64");
  app.add_option("--H", H, "coarse mesh size, e.g. 1/16");
  app.add_option("--dt", dt, "time step, e.g. 1/32");
  app.add_option("--T", cfg.T, "final time");
  app.add_option("--problem", problem, "paper_section5, heat_no_memory, zero or custom");
  app.add_option("--preset", preset, "table1 or table2")->check(CLI::IsMember({"table1", "table2"}));
  app.add_option("--forcing", forcing, "paper or operator");
  app.add_option("--out-csv", cfg.out_csv, "CSV output path");
  app.add_option("--out-md", cfg.out_md, "Markdown output path");
  app.add_flag("--benchmark", cfg.benchmark, "report wall times and history memory");
  app.add_flag("--large-rows", cfg.large_rows, "also run h = 1/256 and 1/512");
  app.add_flag("--stability", cfg.stability, "evaluate the discrete stability bound at every step");
  app.add_option("--threads", cfg.threads, "rows solved concurrently")->check(CLI::PositiveNumber);

  app.add_option("--linear-tol", cfg.solver.linear_tol, "relative residual tolerance of Krylov solves");
  app.add_option("--linear-max-iters", cfg.solver.linear_max_iters);
  app.add_option("--newton-tol", cfg.solver.newton_tol, "max-norm tolerance of Newton increments");
  app.add_option("--newton-max-iters", cfg.solver.newton_max_iters);
  app.add_option("--nonsymmetric", nonsym, "bicgstab or gmres")->check(CLI::IsMember({"bicgstab", "gmres"}));
  app.add_option("--gmres-restart", cfg.solver.gmres_restart);

  std::optional<double> nu0, mu0, K1;
  app.add_option("--nu0", nu0, "coercivity constant");
  app.add_option("--mu0", mu0, "bound of the memory operator");
  app.add_option("--K1", K1, "bound of the quadrature weights");

  app.add_option("--kernel-rate", cfg.custom.kernel_rate, "custom problem: K(t) = exp(-rate t)");
  app.add_option("--diffusion", cfg.custom.diffusion, "custom problem: A = -d Laplacian");
  app.add_option("--alpha-scale", cfg.custom.alpha_scale);
  app.add_option("--beta-scale", cfg.custom.beta_scale);
  app.add_option("--gamma-scale", cfg.custom.gamma_scale);
  app.add_option("--g-scale", cfg.custom.g_scale);
  app.add_option("--amplitude", cfg.custom.amplitude);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    cfg.help = true;
    cfg.help_text = app.help();
    return cfg;
  } catch (const CLI::ConfigError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const CLI::ParseError& e) {
    throw ConfigError(e.what());
  }

  try {
    if (!problem.empty()) cfg.problem = parse_problem_kind(problem);
    if (!forcing.empty()) cfg.forcing = parse_forcing_mode(forcing);
    if (!nonsym.empty()) {
      cfg.solver.nonsymmetric_method =
          nonsym == "gmres" ? NonsymmetricMethod::gmres_restarted : NonsymmetricMethod::bicgstab;
    }
    if (!scheme.empty()) cfg.scheme = parse_scheme(scheme);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  if (cfg.forcing == ForcingMode::closed_form && cfg.problem != ProblemKind::sine_memory) {
    throw ConfigError("--forcing paper is only available for --problem paper_section5");
  }
  if (!(cfg.T > 0.0)) throw ConfigError("T must be positive");
  try {
    cfg.solver.validate();
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }

  if (!preset.empty()) {
    cfg.preset = preset;
    if (!h.empty() || !H.empty() || !dt.empty()) throw ConfigError("--preset cannot be combined with --h, --H or --dt");
    if (scheme.empty()) cfg.scheme = preset == "table1" ? Scheme::twogrid_43 : Scheme::standard;
    cfg.rows = preset == "table1" ? table1_rows(true) : table2_rows(true);
    if (cfg.scheme == Scheme::standard) {
      for (auto& r : cfg.rows) r.coarse_n = 0, r.H_nominal = 0.0;
    } else if (preset == "table2") {
      throw ConfigError("preset table2 has no coarse meshes; use --scheme standard");
    }
  } else {
    if (h.empty() || dt.empty()) throw ConfigError("either --preset or both --h and --dt are required");
    StudyRow row;
    const double hv = parse_size(h, "h");
    row.fine_n = static_cast<int>(std::llround(1.0 / hv));
    if (row.fine_n < 1 || std::abs(row.fine_n * hv - 1.0) > 1e-9) {
      throw ConfigError("h must be 1/n for a positive integer n, got '" + h + "'");
    }
    row.dt = parse_size(dt, "dt");
    if (cfg.scheme != Scheme::standard) {
      if (H.empty()) throw ConfigError("--H is required for two-grid schemes");
      const double Hv = parse_size(H, "H");
      row.coarse_n = static_cast<int>(std::llround(1.0 / Hv));
      if (row.coarse_n < 1 || std::abs(row.coarse_n * Hv - 1.0) > 1e-9) {
        throw ConfigError("H must be 1/n for a positive integer n, got '" + H + "'");
      }
    }
    cfg.rows = {row};
  }
  for (const auto& r : cfg.rows) {
    try {
      (void)step_count(r.dt, cfg.T);
    } catch (const std::exception&) {
      throw ConfigError("dt = " + std::to_string(r.dt) + " does not divide T = " + std::to_string(cfg.T) +
                        " (number of steps must be an integer)");
    }
  }

  if (nu0 || mu0 || K1) {
    StabilityConstants c = cfg.problem == ProblemKind::sine_memory ? sine_memory_constants() : StabilityConstants{};
    if (nu0) c.nu0 = *nu0;
    if (mu0) c.mu0 = *mu0;
    if (K1) c.K1 = *K1;
    if (!(c.nu0 > 0.0) || !(c.mu0 >= 0.0) || !(c.K1 >= 0.0)) throw ConfigError("invalid stability constants");
    cfg.constants = c;
  } else if (cfg.problem == ProblemKind::sine_memory) {
    cfg.constants = sine_memory_constants();
  }
  if (cfg.stability && !cfg.constants) {
    throw ConfigError("--stability needs --nu0, --mu0 and --K1 for this problem");
  }
  return cfg;
}

BenchmarkProblem make_problem(const RunConfig& cfg) {
  switch (cfg.problem) {
    case ProblemKind::sine_memory: return sine_memory_problem(cfg.forcing);
    case ProblemKind::heat_no_memory: return heat_no_memory_problem();
    case ProblemKind::zero: return zero_problem();
    case ProblemKind::custom: return custom_problem(cfg.custom);
  }
  throw ConfigError("unknown problem");
}

}  // namespace pide
