#pragma once

#include "pide/assembly.hpp"
#include "pide/memory.hpp"
#include "pide/problem.hpp"
#include "pide/solvers.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace pide {

enum class Scheme {
  standard,    ///< fully implicit backward Euler on the fine grid
  twogrid_41,  ///< coarse Newton, fine linear (nonsymmetric) with frozen coarse coefficients
  twogrid_42,  ///< coarse Newton, fine SPD with all memory terms as data
  twogrid_43,  ///< coarse Newton, fine SPD; lower-order memory built from coarse states only
};

std::string to_string(Scheme s);
Scheme parse_scheme(const std::string& name);

/// Failure inside a time step, tagged with the step index and phase.
class StepError : public std::runtime_error {
 public:
  StepError(int step, std::string phase, const std::string& cause)
      : std::runtime_error("step " + std::to_string(step) + " (" + phase + "): " + cause),
        step_(step),
        phase_(std::move(phase)) {}
  [[nodiscard]] int step() const { return step_; }
  [[nodiscard]] const std::string& phase() const { return phase_; }

 private:
  int step_;
  std::string phase_;
};

/// Analytic constants entering the stability bounds: coercivity nu0 of A,
/// bound mu0 of B, weight bound K1.
struct StabilityConstants {
  double nu0 = 1.0;
  double mu0 = 1.0;
  double K1 = 1.0;
};

enum class StepsizeClass { admissible_H1, admissible_L2, inadmissible };

struct StepsizeCheck {
  double l2_threshold = 0.0;  ///< min{1/2, 7 nu0^2 / (8 mu0^2 K1^2 T)}
  double h1_threshold = 0.0;  ///< nu0^2 / (2 mu0^2 K1^2 T)
  bool l2_ok = false;
  bool h1_ok = false;
  StepsizeClass classification = StepsizeClass::inadmissible;
};

/// Advisory classification of dt against the L2 and H1 stability conditions.
/// Exceeding the L2 condition (including its 1/2 cap) is inadmissible; within
/// it the step is admissible_H1 when the H1 condition also holds.
StepsizeCheck check_stepsize(double dt, double T, const StabilityConstants& c);

/// E_n = 6 max{exp(2 t_n), exp((2 mu0 K1 t_n / nu0)^2)}.
double stability_amplification(double t_n, const StabilityConstants& c);

struct StabilityDiagnostics {
  StabilityConstants constants;
  std::vector<double> En;
  std::vector<double> lhs;  ///< ||U^n|| + (sum ||U^i - U^{i-1}||^2)^{1/2} + sqrt(nu0)/2 (sum dt ||U^i||_1^2)^{1/2}
  std::vector<double> rhs;  ///< E_n^{1/2} (||U^0||^2 + dt sum ||f^i||^2)^{1/2}

  [[nodiscard]] bool holds() const;
  [[nodiscard]] int first_violation() const;  ///< step index or 0
};

struct StepRecord {
  int n = 0;
  int newton_iterations = 0;
  int linear_iterations = 0;
  double coarse_seconds = 0.0;
  double fine_seconds = 0.0;
  int fine_history_entries = 0;    ///< fine entries held while solving step n
  int coarse_history_entries = 0;  ///< coarse entries held while solving step n
  std::size_t history_bytes = 0;   ///< after step n
};

/// Complete state of one time-stepping run.
struct SchemeState {
  SchemeState(Scheme s, MemoryWeights w, MemoryHistory coarse_hist, MemoryHistory fine_hist)
      : scheme(s), weights(std::move(w)), coarse_history(std::move(coarse_hist)), fine_history(std::move(fine_hist)) {}

  Scheme scheme = Scheme::standard;
  FeSpacePtr coarse;  ///< null for the standard scheme
  FeSpacePtr fine;
  std::optional<QuadTransfer> coarse_at_fine;  ///< fine quadrature points located on the coarse mesh

  int n = 0;
  int N = 0;
  double dt = 0.0;
  double T = 0.0;
  SolverConfig solver;

  FeFunction U_H;
  FeFunction U_h;  ///< U^n for the standard scheme

  MemoryWeights weights;
  MemoryHistory coarse_history;
  MemoryHistory fine_history;

  SparseMatrix mass_h, stiffness_h, mass_H, stiffness_H;
  SparseMatrix fine_system;  ///< M/dt + A with boundary elimination (4.2, and 4.3 with alpha = 0)
  int fine_system_assemblies = 0;

  StepRecord last;

  [[nodiscard]] std::size_t history_bytes() const { return coarse_history.bytes() + fine_history.bytes(); }
  [[nodiscard]] double time() const { return n * dt; }
};

/// Builds the initial state: nodal interpolants of u0 on both grids, history
/// modes for the scheme, cached mass and stiffness matrices. `coarse` is
/// ignored for the standard scheme.
SchemeState make_state(Scheme scheme, const ProblemSpec& spec, MeshPtr coarse, MeshPtr fine, double dt, double T,
                       const SolverConfig& solver = {});

void step_standard(SchemeState& state, const ProblemSpec& spec);
void step_twogrid_41(SchemeState& state, const ProblemSpec& spec);
void step_twogrid_42(SchemeState& state, const ProblemSpec& spec);
void step_twogrid_43(SchemeState& state, const ProblemSpec& spec);
void step(SchemeState& state, const ProblemSpec& spec);

struct RunOptions {
  SolverConfig solver;
  std::optional<StabilityConstants> constants;
};

struct RunResult {
  FeFunction fine_solution;
  std::optional<FeFunction> coarse_solution;
  std::optional<StabilityDiagnostics> stability;
  std::vector<StepRecord> steps;
  double wall_seconds = 0.0;
  double coarse_seconds = 0.0;
  double fine_seconds = 0.0;
  std::size_t peak_history_bytes = 0;
  std::size_t peak_fine_history_bytes = 0;
  std::size_t peak_coarse_history_bytes = 0;
  int peak_fine_history_entries = 0;
  double sup_l2_norm = 0.0;  ///< max_n ||U_h^n||
  bool finite = true;        ///< no NaN/Inf in any fine state
  int coarse_nodes = 0;
  int fine_nodes = 0;
};

/// Runs N = T/dt steps of a scheme.
RunResult run(Scheme scheme, const ProblemSpec& spec, MeshPtr coarse, MeshPtr fine, double dt, double T,
              const RunOptions& options = {});

/// Number of steps T/dt; throws unless it is an integer within 1e-12.
int step_count(double dt, double T);

}  // namespace pide
