#pragma once

#include "pide/assembly.hpp"

#include <functional>
#include <stdexcept>
#include <string>

namespace pide {

enum class NonsymmetricMethod { bicgstab, gmres_restarted };

struct SolverConfig {
  double linear_tol = 1e-10;  ///< relative residual ||b - Ax|| / ||b||
  int linear_max_iters = 20000;
  double newton_tol = 1e-10;  ///< max-norm of the Newton increment
  int newton_max_iters = 30;
  NonsymmetricMethod nonsymmetric_method = NonsymmetricMethod::bicgstab;
  bool fallback_to_gmres = true;  ///< retry with GMRES(m) after a BiCGStab failure
  int gmres_restart = 50;

  void validate() const;
};

/// Thrown when an iterative solve fails; carries the last relative residual.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double residual, int iterations)
      : std::runtime_error(what), residual_(residual), iterations_(iterations) {}
  [[nodiscard]] double residual() const { return residual_; }
  [[nodiscard]] int iterations() const { return iterations_; }

 private:
  double residual_;
  int iterations_;
};

struct LinearSolveInfo {
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Optional per-iteration callback: (iteration, current iterate).
using IterationObserver = std::function<void(int, const Vector&)>;

/// Jacobi-preconditioned conjugate gradients. Throws on non-convergence and
/// on negative or zero curvature p^T A p <= 0.
Vector solve_spd(const SparseMatrix& a, const Vector& b, const SolverConfig& config,
                 LinearSolveInfo* info = nullptr, const IterationObserver& observer = {});

/// Jacobi-preconditioned BiCGStab or restarted GMRES.
Vector solve_nonsymmetric(const SparseMatrix& a, const Vector& b, const SolverConfig& config,
                          LinearSolveInfo* info = nullptr);

struct NewtonResult {
  Vector solution;
  int iterations = 0;
  int linear_iterations = 0;
  double last_increment = 0.0;
  std::vector<double> increments;
};

/// Full Newton: x <- x - J(x)^{-1} r(x) until ||dx||_inf <= newton_tol.
/// The linear solves go through solve_nonsymmetric, or solve_spd when
/// `symmetric_jacobian` is set.
NewtonResult newton_solve(const std::function<Vector(const Vector&)>& residual,
                          const std::function<SparseMatrix(const Vector&)>& jacobian, Vector initial_guess,
                          const SolverConfig& config, bool symmetric_jacobian = false);

}  // namespace pide
