#pragma once

#include "pide/schemes.hpp"

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace pide {

/// An exact solution with the derivatives needed to manufacture a forcing.
struct ManufacturedSolution {
  std::function<double(const Vec2&, double)> u;
  std::function<Vec2(const Vec2&, double)> grad;
  std::function<Mat2(const Vec2&, double)> hessian;
  std::function<double(const Vec2&, double)> u_t;
};

enum class ForcingMode {
  closed_form,       ///< hand-derived formula shipped with the problem
  operator_derived,  ///< f = u_t + A u + \int_0^t K(t - s) B u(s) ds from the exact solution
};

std::string to_string(ForcingMode m);
ForcingMode parse_forcing_mode(const std::string& name);

struct ManufacturedProblem {
  ManufacturedSolution exact;
  ForcingMode mode = ForcingMode::operator_derived;
  /// Closed-form forcing, when one exists for this problem.
  std::function<double(const Vec2&, double)> closed_form;
  /// Gauss-Legendre points per unit-length panel for the time integrals.
  int time_quadrature_points = 12;
};

/// Forcing at (x, t). Time integrals are evaluated by composite
/// Gauss-Legendre on [0, t] with panels no wider than 1.
double forcing_value(const ManufacturedProblem& mp, const ProblemSpec& spec, const Vec2& x, double t);

/// The strong form B u at (x, s) computed from the exact solution.
double memory_operator_value(const ManufacturedSolution& exact, const ProblemSpec& spec, const Vec2& x, double s);

// -- shipped problems -------------------------------------------------------

/// x1(1 - x1) x2(1 - x2) e^{-t} on the unit square.
ManufacturedSolution bubble_solution();

/// K(t) = e^{-t}, A = -Laplacian, alpha = 0, beta = (sin u, 1 - cos u),
/// gamma = (1 - cos u, sin u), g = sin u, exact solution bubble_solution().
struct BenchmarkProblem {
  ProblemSpec spec;
  ManufacturedProblem manufactured;
};

BenchmarkProblem sine_memory_problem(ForcingMode mode = ForcingMode::operator_derived);
/// Same exact solution, no memory term: the backward-Euler heat equation.
BenchmarkProblem heat_no_memory_problem();
/// Sine-memory coefficients with f = 0 and u0 = 0; exact solution 0.
BenchmarkProblem zero_problem();
/// alpha = a I, beta = gamma = g = 0 (linear, state independent B).
BenchmarkProblem linear_memory_problem(double a = 0.5);

/// Parameterised family used for file-defined problems: the sine-memory
/// coefficients scaled by constants, kernel e^{-rate t}, diffusion d I and
/// alpha = alpha_scale I; the forcing is always operator-derived.
struct CustomProblemParams {
  double kernel_rate = 1.0;
  double diffusion = 1.0;
  double alpha_scale = 0.0;
  double beta_scale = 1.0;
  double gamma_scale = 1.0;
  double g_scale = 1.0;
  double amplitude = 1.0;
};
BenchmarkProblem custom_problem(const CustomProblemParams& p);

// -- error norms --------------------------------------------------------------

struct ErrorNorms {
  double l2 = 0.0;
  double h1_semi = 0.0;
  double h1 = 0.0;  ///< (l2^2 + h1_semi^2)^{1/2}
};

/// Errors against the exact solution at time t, degree-4 quadrature per triangle.
ErrorNorms error_norms(const FeFunction& numeric, const std::function<double(const Vec2&, double)>& u,
                       const std::function<Vec2(const Vec2&, double)>& grad, double t);

// -- convergence studies ------------------------------------------------------

struct StudyRow {
  int coarse_n = 0;          ///< H = 1/coarse_n (0 for the standard scheme)
  int fine_n = 0;            ///< h = 1/fine_n
  double dt = 0.0;
  double H_nominal = 0.0;    ///< H used for the H-order column (defaults to 1/coarse_n)

  [[nodiscard]] double H() const { return coarse_n > 0 ? 1.0 / coarse_n : 0.0; }
  [[nodiscard]] double h() const { return 1.0 / fine_n; }
  [[nodiscard]] double H_for_order() const { return H_nominal > 0.0 ? H_nominal : H(); }
};

/// Coupled rows h = 2^-l, dt = 2h, H = 1/ceil(2 / sqrt(h)) (nominal H = sqrt(h)/2),
/// for l = 2..7, or ..9 with `large_rows`.
std::vector<StudyRow> table1_rows(bool large_rows = false);
/// Rows h = 2^-l, dt = 2h for the standard scheme.
std::vector<StudyRow> table2_rows(bool large_rows = false);

struct RowResult {
  StudyRow row;
  bool ok = false;
  std::string message;
  ErrorNorms errors;
  double wall_seconds = 0.0;
  std::size_t peak_history_bytes = 0;
  std::size_t peak_fine_history_bytes = 0;
  std::size_t peak_coarse_history_bytes = 0;
  int peak_fine_history_entries = 0;
  int steps = 0;
  int coarse_nodes = 0;
  int fine_nodes = 0;
  std::optional<bool> stability_holds;
  bool finite = true;
};

struct ConvergenceReport {
  Scheme scheme = Scheme::standard;
  std::string problem;
  double T = 1.0;
  std::vector<RowResult> rows;
  /// Per consecutive pair k -> k+1, NaN when the parameter did not change.
  std::vector<double> h_order, H_order, dt_order;

  [[nodiscard]] bool all_ok() const;
};

/// log(e_k / e_{k+1}) / log(p_k / p_{k+1}); NaN if p_k == p_{k+1} or an error is not positive.
double observed_order(double e_k, double e_k1, double p_k, double p_k1);

struct StudyOptions {
  double T = 1.0;
  SolverConfig solver;
  std::optional<StabilityConstants> constants;
  int threads = 1;
};

/// Runs every row (concurrently when threads > 1), measures errors at T and
/// fills the order columns from the H1 errors. Row failures are recorded.
ConvergenceReport run_convergence_study(Scheme scheme, const std::vector<StudyRow>& rows,
                                        const BenchmarkProblem& problem, const StudyOptions& options = {});

/// Comma-separated report; first line is a schema comment. Wall times are
/// only written when `with_timings` is set so that reports are reproducible.
void write_csv(const ConvergenceReport& report, std::ostream& os, bool with_timings = false);
/// Markdown table with columns H, h, dt, H1 error, h order, H order, dt order
/// (the H columns are dropped for the standard scheme).
void write_markdown(const ConvergenceReport& report, std::ostream& os);

/// "1/8" style label for reciprocal mesh sizes and steps.
std::string reciprocal_label(double v);

inline constexpr const char* kCsvSchema = "# pide-convergence-csv v1";

}  // namespace pide
