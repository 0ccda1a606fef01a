#include "pide/solvers.hpp"

#include <cmath>
#include <vector>

namespace pide {

namespace {

Vector inverse_diagonal(const SparseMatrix& a) {
  Vector d = a.diagonal();
  for (Eigen::Index i = 0; i < d.size(); ++i) d[i] = d[i] != 0.0 ? 1.0 / d[i] : 1.0;
  return d;
}

void check_system(const SparseMatrix& a, const Vector& b, const char* who) {
  if (a.rows() != a.cols() || a.rows() != b.size()) {
    throw std::invalid_argument(std::string(who) + ": dimension mismatch");
  }
}

Vector bicgstab(const SparseMatrix& a, const Vector& b, const SolverConfig& cfg, LinearSolveInfo& info) {
  const Vector dinv = inverse_diagonal(a);
  const double bnorm = b.norm();
  Vector x = Vector::Zero(b.size());
  if (bnorm == 0.0) return x;

  Vector r = b;
  const Vector r_hat = r;
  Vector p = Vector::Zero(b.size());
  Vector v = Vector::Zero(b.size());
  double rho = 1.0, alpha = 1.0, omega = 1.0;
  double rel = 1.0;
  for (int it = 1; it <= cfg.linear_max_iters; ++it) {
    const double rho_new = r_hat.dot(r);
    if (rho_new == 0.0 || omega == 0.0) {
      throw SolverError("bicgstab: breakdown", rel, it);
    }
    const double beta = (rho_new / rho) * (alpha / omega);
    rho = rho_new;
    p = r + beta * (p - omega * v);
    const Vector p_hat = dinv.cwiseProduct(p);
    v.noalias() = a * p_hat;
    const double rv = r_hat.dot(v);
    if (rv == 0.0) throw SolverError("bicgstab: breakdown", rel, it);
    alpha = rho / rv;
    Vector s = r - alpha * v;
    if (s.norm() / bnorm <= cfg.linear_tol) {
      x += alpha * p_hat;
      // Confirm against the true residual.
      rel = (b - a * x).norm() / bnorm;
      if (rel <= cfg.linear_tol) {
        info = {it, rel};
        return x;
      }
      r = b - a * x;
      continue;
    }
    const Vector s_hat = dinv.cwiseProduct(s);
    const Vector t = a * s_hat;
    const double tt = t.squaredNorm();
    omega = tt > 0.0 ? t.dot(s) / tt : 0.0;
    x += alpha * p_hat + omega * s_hat;
    r = s - omega * t;
    rel = r.norm() / bnorm;
    if (!std::isfinite(rel)) throw SolverError("bicgstab: non-finite residual", rel, it);
    if (rel <= cfg.linear_tol) {
      const double true_rel = (b - a * x).norm() / bnorm;
      if (true_rel <= cfg.linear_tol) {
        info = {it, true_rel};
        return x;
      }
      r = b - a * x;
    }
  }
  throw SolverError("bicgstab: no convergence within " + std::to_string(cfg.linear_max_iters) +
                        " iterations (relative residual " + std::to_string(rel) + ")",
                    rel, cfg.linear_max_iters);
}

// Right-preconditioned GMRES(m) with modified Gram-Schmidt and Givens rotations.
Vector gmres(const SparseMatrix& a, const Vector& b, const SolverConfig& cfg, LinearSolveInfo& info) {
  const Vector dinv = inverse_diagonal(a);
  const double bnorm = b.norm();
  const Eigen::Index n = b.size();
  Vector x = Vector::Zero(n);
  if (bnorm == 0.0) return x;
  const int m = std::max(1, cfg.gmres_restart);
  int total = 0;
  double rel = 1.0;
  while (total < cfg.linear_max_iters) {
    Vector r = b - a * x;
    double beta = r.norm();
    rel = beta / bnorm;
    if (rel <= cfg.linear_tol) {
      info = {total, rel};
      return x;
    }
    std::vector<Vector> basis;
    basis.reserve(static_cast<std::size_t>(m + 1));
    basis.push_back(r / beta);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(m + 1, m);
    Vector cs = Vector::Zero(m), sn = Vector::Zero(m), g = Vector::Zero(m + 1);
    g[0] = beta;
    int k = 0;
    for (; k < m && total < cfg.linear_max_iters; ++k, ++total) {
      Vector w = a * dinv.cwiseProduct(basis[static_cast<std::size_t>(k)]);
      for (int j = 0; j <= k; ++j) {
        h(j, k) = w.dot(basis[static_cast<std::size_t>(j)]);
        w -= h(j, k) * basis[static_cast<std::size_t>(j)];
      }
      h(k + 1, k) = w.norm();
      for (int j = 0; j < k; ++j) {
        const double tmp = cs[j] * h(j, k) + sn[j] * h(j + 1, k);
        h(j + 1, k) = -sn[j] * h(j, k) + cs[j] * h(j + 1, k);
        h(j, k) = tmp;
      }
      const double denom = std::hypot(h(k, k), h(k + 1, k));
      if (denom == 0.0) throw SolverError("gmres: breakdown", rel, total);
      cs[k] = h(k, k) / denom;
      sn[k] = h(k + 1, k) / denom;
      h(k, k) = denom;
      h(k + 1, k) = 0.0;
      g[k + 1] = -sn[k] * g[k];
      g[k] = cs[k] * g[k];
      const double hk1 = w.norm();
      if (hk1 > 0.0) basis.push_back(w / hk1);
      rel = std::abs(g[k + 1]) / bnorm;
      if (rel <= cfg.linear_tol || hk1 == 0.0) {
        ++k;
        ++total;
        break;
      }
    }
    const Vector y = h.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(g.head(k));
    Vector update = Vector::Zero(n);
    for (int j = 0; j < k; ++j) update += y[j] * basis[static_cast<std::size_t>(j)];
    x += dinv.cwiseProduct(update);
  }
  rel = (b - a * x).norm() / bnorm;
  if (rel <= cfg.linear_tol) {
    info = {total, rel};
    return x;
  }
  throw SolverError("gmres: no convergence within " + std::to_string(cfg.linear_max_iters) +
                        " iterations (relative residual " + std::to_string(rel) + ")",
                    rel, total);
}

}  // namespace

void SolverConfig::validate() const {
  if (!(linear_tol > 0.0) || !(newton_tol > 0.0)) throw std::invalid_argument("SolverConfig: tolerances must be positive");
  if (linear_max_iters < 1 || newton_max_iters < 1 || gmres_restart < 1) {
    throw std::invalid_argument("SolverConfig: iteration caps must be >= 1");
  }
}

Vector solve_spd(const SparseMatrix& a, const Vector& b, const SolverConfig& config, LinearSolveInfo* info,
                 const IterationObserver& observer) {
  check_system(a, b, "solve_spd");
  const Vector dinv = inverse_diagonal(a);
  const double bnorm = b.norm();
  Vector x = Vector::Zero(b.size());
  LinearSolveInfo local;
  if (bnorm == 0.0) {
    if (info) *info = local;
    return x;
  }
  Vector r = b;
  Vector z = dinv.cwiseProduct(r);
  Vector p = z;
  Vector ap(b.size());
  double rz = r.dot(z);
  double rel = 1.0;
  for (int it = 1; it <= config.linear_max_iters; ++it) {
    ap.noalias() = a * p;
    const double curvature = p.dot(ap);
    if (!(curvature > 0.0)) {
      throw SolverError("solve_spd: non-positive curvature, matrix is not positive definite", rel, it);
    }
    const double alpha = rz / curvature;
    x += alpha * p;
    r -= alpha * ap;
    if (observer) observer(it, x);
    // Recompute the true residual periodically to stop drift.
    if (it % 50 == 0) r = b - a * x;
    rel = r.norm() / bnorm;
    if (!std::isfinite(rel)) throw SolverError("solve_spd: non-finite residual", rel, it);
    if (rel <= config.linear_tol) {
      const double true_rel = (b - a * x).norm() / bnorm;
      if (true_rel <= config.linear_tol) {
        local = {it, true_rel};
        if (info) *info = local;
        return x;
      }
      r = b - a * x;
    }
    z = dinv.cwiseProduct(r);
    const double rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  throw SolverError("solve_spd: no convergence within " + std::to_string(config.linear_max_iters) +
                        " iterations (relative residual " + std::to_string(rel) + ")",
                    rel, config.linear_max_iters);
}

Vector solve_nonsymmetric(const SparseMatrix& a, const Vector& b, const SolverConfig& config,
                          LinearSolveInfo* info) {
  check_system(a, b, "solve_nonsymmetric");
  LinearSolveInfo local;
  Vector x;
  if (config.nonsymmetric_method == NonsymmetricMethod::gmres_restarted) {
    x = gmres(a, b, config, local);
  } else {
    try {
      x = bicgstab(a, b, config, local);
    } catch (const SolverError&) {
      if (!config.fallback_to_gmres) throw;
      x = gmres(a, b, config, local);
    }
  }
  if (info) *info = local;
  return x;
}

NewtonResult newton_solve(const std::function<Vector(const Vector&)>& residual,
                          const std::function<SparseMatrix(const Vector&)>& jacobian, Vector initial_guess,
                          const SolverConfig& config, bool symmetric_jacobian) {
  NewtonResult res;
  res.solution = std::move(initial_guess);
  double last_residual = 0.0;
  for (int it = 1; it <= config.newton_max_iters; ++it) {
    const Vector r = residual(res.solution);
    last_residual = r.lpNorm<Eigen::Infinity>();
    if (!std::isfinite(last_residual)) throw SolverError("newton_solve: non-finite residual", last_residual, it);
    const SparseMatrix j = jacobian(res.solution);
    LinearSolveInfo lin;
    const Vector rhs = -r;
    const Vector dx = symmetric_jacobian ? solve_spd(j, rhs, config, &lin) : solve_nonsymmetric(j, rhs, config, &lin);
    res.solution += dx;
    res.linear_iterations += lin.iterations;
    res.iterations = it;
    res.last_increment = dx.lpNorm<Eigen::Infinity>();
    res.increments.push_back(res.last_increment);
    if (res.last_increment <= config.newton_tol) return res;
  }
  throw SolverError("newton_solve: no convergence within " + std::to_string(config.newton_max_iters) +
                        " iterations (residual max-norm " + std::to_string(last_residual) + ")",
                    last_residual, config.newton_max_iters);
}

}  // namespace pide
