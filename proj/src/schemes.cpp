#include "pide/schemes.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace pide {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// y += a * x for matrices sharing one sparsity pattern.
void add_same_pattern(SparseMatrix& y, double a, const SparseMatrix& x) {
  const auto nnz = static_cast<std::size_t>(y.nonZeros());
  double* yv = y.valuePtr();
  const double* xv = x.valuePtr();
  for (std::size_t k = 0; k < nnz; ++k) yv[k] += a * xv[k];
}

SparseMatrix time_matrix(const SparseMatrix& mass, const SparseMatrix& stiffness, double dt) {
  SparseMatrix s = stiffness;
  add_same_pattern(s, 1.0 / dt, mass);
  return s;
}

Vector full_B(const FeSpace& space, const Vector& u, const ProblemSpec& spec) {
  const QuadField uq = quad_field(space, FeFunction(space.mesh_ptr(), u));
  return assemble_B_vector(space, uq, uq, spec, FormVariant::full_B);
}

Vector load_at(const FeSpace& space, const ProblemSpec& spec, double t) {
  return assemble_load(space, [&](const Vec2& x) { return spec.forcing(x, t); });
}

void refresh_stiffness(SchemeState& s, const ProblemSpec& spec) {
  if (spec.diffusion_time_independent) return;
  const double t = s.time();
  s.stiffness_h = assemble_stiffness(*s.fine, spec.diffusion, t);
  if (s.coarse) s.stiffness_H = assemble_stiffness(*s.coarse, spec.diffusion, t);
}

// Solves M(U - U_prev)/dt + A U + past + dt w_nn B(U) = F for U by Newton.
Vector solve_nonlinear_level(const FeSpace& space, const SparseMatrix& mass, const SparseMatrix& stiffness,
                             const Vector& prev, const Vector& past, double dt, double wnn, const Vector& load,
                             const ProblemSpec& spec, const SolverConfig& cfg, StepRecord& rec) {
  const auto& mask = space.mesh().boundary_mask();
  const SparseMatrix base = time_matrix(mass, stiffness, dt);
  const Vector fixed = mass * prev / dt + load - past;
  const double c = dt * wnn;

  auto residual = [&](const Vector& u) -> Vector {
    Vector r = base * u - fixed;
    if (spec.has_memory()) r += c * full_B(space, u, spec);
    // Dirichlet rows: r_b = u_b.
    for (Eigen::Index i = 0; i < r.size(); ++i) {
      if (mask[static_cast<std::size_t>(i)] != 0) r[i] = u[i];
    }
    return r;
  };
  auto jacobian = [&](const Vector& u) -> SparseMatrix {
    SparseMatrix j = base;
    if (spec.has_memory()) {
      const QuadField uq = quad_field(space, FeFunction(space.mesh_ptr(), u));
      add_same_pattern(j, c, assemble_B_jacobian(space, uq, spec));
    }
    apply_dirichlet(j, mask);
    return j;
  };
  Vector guess = prev;
  zero_boundary_entries(guess, mask);
  NewtonResult nr = newton_solve(residual, jacobian, std::move(guess), cfg);
  rec.newton_iterations += nr.iterations;
  rec.linear_iterations += nr.linear_iterations;
  return std::move(nr.solution);
}

// Coarse step shared by the two-grid schemes. For 4.1 and 4.2 the coarse
// history holds B(U_H^i) vectors; for 4.3 it holds the coarse states and the
// past memory sum is re-assembled from them.
void coarse_step(SchemeState& s, const ProblemSpec& spec, const std::vector<double>& w) {
  const FeSpace& cs = *s.coarse;
  const int n = s.n;
  Vector past;
  if (s.scheme == Scheme::twogrid_43) {
    past = Vector::Zero(cs.size());
    for (int i = 1; i < n; ++i) {
      past.noalias() += w[static_cast<std::size_t>(i - 1)] * full_B(cs, s.coarse_history.entry(i), spec);
    }
    past *= s.dt;
  } else {
    past = accumulate_memory(s.coarse_history, w, n - 1, s.dt, cs.size());
  }
  const Vector load = load_at(cs, spec, s.time());
  Vector u = solve_nonlinear_level(cs, s.mass_H, s.stiffness_H, s.U_H.coeffs, past, s.dt, w.back(), load, spec,
                                   s.solver, s.last);
  if (s.scheme == Scheme::twogrid_43) {
    s.coarse_history.append(u);
  } else {
    s.coarse_history.append(full_B(cs, u, spec));
  }
  s.U_H.coeffs = std::move(u);
}

const SparseMatrix& constant_fine_system(SchemeState& s) {
  if (s.fine_system_assemblies == 0 || !s.fine_system.nonZeros()) {
    s.fine_system = time_matrix(s.mass_h, s.stiffness_h, s.dt);
    apply_dirichlet(s.fine_system, s.fine->mesh().boundary_mask());
    ++s.fine_system_assemblies;
  }
  return s.fine_system;
}

template <typename Body>
void timed_phase(SchemeState& s, const char* phase, double& seconds, Body&& body) {
  const auto start = Clock::now();
  try {
    body();
  } catch (const StepError&) {
    throw;
  } catch (const std::exception& e) {
    throw StepError(s.n, phase, e.what());
  }
  seconds += seconds_since(start);
}

void begin_step(SchemeState& s, const ProblemSpec& spec) {
  if (s.n >= s.N) throw StepError(s.n + 1, "setup", "final time already reached");
  ++s.n;
  s.last = StepRecord{};
  s.last.n = s.n;
  s.last.fine_history_entries = s.fine_history.size();
  s.last.coarse_history_entries = s.coarse_history.size();
  refresh_stiffness(s, spec);
}

void end_step(SchemeState& s) { s.last.history_bytes = s.history_bytes(); }

void require_two_grid(const SchemeState& s) {
  if (!s.coarse || !s.coarse_at_fine) throw StepError(s.n, "setup", "two-grid scheme without a coarse grid");
}

}  // namespace

std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::standard: return "standard";
    case Scheme::twogrid_41: return "twogrid_41";
    case Scheme::twogrid_42: return "twogrid_42";
    case Scheme::twogrid_43: return "twogrid_43";
  }
  return "unknown";
}

Scheme parse_scheme(const std::string& name) {
  if (name == "standard") return Scheme::standard;
  if (name == "twogrid_41" || name == "4.1" || name == "41") return Scheme::twogrid_41;
  if (name == "twogrid_42" || name == "4.2" || name == "42") return Scheme::twogrid_42;
  if (name == "twogrid_43" || name == "4.3" || name == "43") return Scheme::twogrid_43;
  throw std::invalid_argument("unknown scheme '" + name + "' (expected standard, twogrid_41, twogrid_42, twogrid_43)");
}

StepsizeCheck check_stepsize(double dt, double T, const StabilityConstants& c) {
  if (!(dt > 0.0) || !(T > 0.0) || !(c.nu0 > 0.0) || !(c.mu0 > 0.0) || !(c.K1 > 0.0)) {
    throw std::invalid_argument("check_stepsize: dt, T and all constants must be positive");
  }
  StepsizeCheck out;
  const double ratio = (c.nu0 * c.nu0) / (c.mu0 * c.mu0 * c.K1 * c.K1 * T);
  out.l2_threshold = std::min(0.5, 7.0 * ratio / 8.0);
  out.h1_threshold = ratio / 2.0;
  out.l2_ok = dt <= out.l2_threshold;
  out.h1_ok = dt <= out.h1_threshold;
  if (!out.l2_ok) {
    out.classification = StepsizeClass::inadmissible;
  } else {
    out.classification = out.h1_ok ? StepsizeClass::admissible_H1 : StepsizeClass::admissible_L2;
  }
  return out;
}

double stability_amplification(double t_n, const StabilityConstants& c) {
  const double a = 2.0 * t_n;
  const double b = 2.0 * c.mu0 * c.K1 * t_n / c.nu0;
  return 6.0 * std::exp(std::max(a, b * b));
}

bool StabilityDiagnostics::holds() const { return first_violation() == 0; }

int StabilityDiagnostics::first_violation() const {
  for (std::size_t k = 0; k < lhs.size(); ++k) {
    if (!(lhs[k] <= rhs[k])) return static_cast<int>(k) + 1;
  }
  return 0;
}

int step_count(double dt, double T) {
  if (!(dt > 0.0) || !(T > 0.0)) throw std::invalid_argument("time step and final time must be positive");
  const double q = T / dt;
  const double r = std::round(q);
  if (r < 1.0 || std::abs(r * dt - T) > 1e-12 * std::max(1.0, T)) {
    throw std::invalid_argument("T / dt = " + std::to_string(q) + " is not an integer");
  }
  return static_cast<int>(r);
}

SchemeState make_state(Scheme scheme, const ProblemSpec& spec, MeshPtr coarse, MeshPtr fine, double dt, double T,
                       const SolverConfig& solver) {
  spec.validate(fine->domain());
  solver.validate();
  const bool two_grid = scheme != Scheme::standard;
  const HistoryMode fine_mode =
      scheme == Scheme::twogrid_43 && spec.alpha_is_zero() ? HistoryMode::coarse_only : HistoryMode::fine_history;
  SchemeState s(scheme, MemoryWeights(spec.kernel, dt), MemoryHistory(HistoryMode::fine_history, Grid::coarse),
                MemoryHistory(fine_mode, Grid::fine));
  s.dt = dt;
  s.T = T;
  s.N = step_count(dt, T);
  s.solver = solver;
  s.fine = make_space(std::move(fine));
  s.mass_h = assemble_mass(*s.fine);
  s.stiffness_h = assemble_stiffness(*s.fine, spec.diffusion, 0.0);
  s.U_h = interpolate(s.fine->mesh_ptr(), spec.u0);
  zero_boundary(s.U_h);
  if (two_grid) {
    if (!coarse) throw std::invalid_argument("make_state: two-grid scheme requires a coarse mesh");
    s.coarse = make_space(std::move(coarse));
    s.mass_H = assemble_mass(*s.coarse);
    s.stiffness_H = assemble_stiffness(*s.coarse, spec.diffusion, 0.0);
    s.U_H = interpolate(s.coarse->mesh_ptr(), spec.u0);
    zero_boundary(s.U_H);
    s.coarse_at_fine.emplace(*s.fine, s.coarse);
  }
  return s;
}

void step_standard(SchemeState& s, const ProblemSpec& spec) {
  begin_step(s, spec);
  const std::vector<double> w = s.weights.weights_for_step(s.n);
  timed_phase(s, "fine", s.last.fine_seconds, [&] {
    const FeSpace& fs = *s.fine;
    const Vector past = accumulate_memory(s.fine_history, w, s.n - 1, s.dt, fs.size());
    const Vector load = load_at(fs, spec, s.time());
    Vector u = solve_nonlinear_level(fs, s.mass_h, s.stiffness_h, s.U_h.coeffs, past, s.dt, w.back(), load, spec,
                                     s.solver, s.last);
    s.fine_history.append(full_B(fs, u, spec));
    s.U_h.coeffs = std::move(u);
  });
  end_step(s);
}

void step_twogrid_41(SchemeState& s, const ProblemSpec& spec) {
  require_two_grid(s);
  begin_step(s, spec);
  const std::vector<double> w = s.weights.weights_for_step(s.n);
  const double wnn = w.back();
  timed_phase(s, "coarse", s.last.coarse_seconds, [&] { coarse_step(s, spec, w); });
  timed_phase(s, "fine", s.last.fine_seconds, [&] {
    const FeSpace& fs = *s.fine;
    const QuadField wq = s.coarse_at_fine->apply(s.U_H);
    // B~(U_H^n; u, v) = C u + d, C from the alpha and gamma terms, d from beta and g.
    const SparseMatrix c = assemble_Btilde_matrix(fs, wq, spec, FormVariant::linearized_Btilde);
    const Vector d = assemble_B_vector(fs, wq, zero_quad_field(fs), spec, FormVariant::lower_order_N);
    const Vector past = accumulate_memory(s.fine_history, w, s.n - 1, s.dt, fs.size());

    SparseMatrix a = time_matrix(s.mass_h, s.stiffness_h, s.dt);
    add_same_pattern(a, s.dt * wnn, c);
    Vector rhs = s.mass_h * s.U_h.coeffs / s.dt + load_at(fs, spec, s.time()) - past - s.dt * wnn * d;
    apply_dirichlet(a, rhs, fs.mesh().boundary_mask());
    LinearSolveInfo info;
    Vector u = solve_nonsymmetric(a, rhs, s.solver, &info);
    s.last.linear_iterations += info.iterations;
    s.fine_history.append(c * u + d);
    s.U_h.coeffs = std::move(u);
  });
  end_step(s);
}

void step_twogrid_42(SchemeState& s, const ProblemSpec& spec) {
  require_two_grid(s);
  begin_step(s, spec);
  const std::vector<double> w = s.weights.weights_for_step(s.n);
  const double wnn = w.back();
  timed_phase(s, "coarse", s.last.coarse_seconds, [&] { coarse_step(s, spec, w); });
  timed_phase(s, "fine", s.last.fine_seconds, [&] {
    const FeSpace& fs = *s.fine;
    const QuadField wq = s.coarse_at_fine->apply(s.U_H);
    const Vector current = assemble_B_vector(fs, wq, wq, spec, FormVariant::linearized_Btilde);
    const Vector past = accumulate_memory(s.fine_history, w, s.n - 1, s.dt, fs.size());
    Vector rhs = s.mass_h * s.U_h.coeffs / s.dt + load_at(fs, spec, s.time()) - past - s.dt * wnn * current;
    zero_boundary_entries(rhs, fs.mesh().boundary_mask());
    if (!spec.diffusion_time_independent) s.fine_system_assemblies = 0;
    LinearSolveInfo info;
    Vector u = solve_spd(constant_fine_system(s), rhs, s.solver, &info);
    s.last.linear_iterations += info.iterations;
    s.fine_history.append(full_B(fs, u, spec));
    s.U_h.coeffs = std::move(u);
  });
  end_step(s);
}

void step_twogrid_43(SchemeState& s, const ProblemSpec& spec) {
  require_two_grid(s);
  begin_step(s, spec);
  const std::vector<double> w = s.weights.weights_for_step(s.n);
  const double wnn = w.back();
  timed_phase(s, "coarse", s.last.coarse_seconds, [&] { coarse_step(s, spec, w); });
  timed_phase(s, "fine", s.last.fine_seconds, [&] {
    const FeSpace& fs = *s.fine;
    const auto& mask = fs.mesh().boundary_mask();
    // dt sum_{i<=n} omega_ni N(U_H^i; U_H^i, v): coarse states only.
    std::vector<const Vector*> states;
    states.reserve(static_cast<std::size_t>(s.n));
    for (int i = 1; i <= s.n; ++i) states.push_back(&s.coarse_history.entry(i));
    Vector memory = s.dt * assemble_weighted_lower_order(fs, *s.coarse_at_fine, states, w, spec);
    Vector rhs = s.mass_h * s.U_h.coeffs / s.dt + load_at(fs, spec, s.time()) - memory;

    if (spec.alpha_is_zero()) {
      zero_boundary_entries(rhs, mask);
      if (!spec.diffusion_time_independent) s.fine_system_assemblies = 0;
      LinearSolveInfo info;
      Vector u = solve_spd(constant_fine_system(s), rhs, s.solver, &info);
      s.last.linear_iterations += info.iterations;
      s.U_h.coeffs = std::move(u);
      return;
    }
    // alpha != 0: B~s(U_H^i; U_h^i, v) for i < n are cached fine vectors,
    // the current one enters the matrix.
    const QuadField wq = s.coarse_at_fine->apply(s.U_H);
    const SparseMatrix bs = assemble_Btilde_matrix(fs, wq, spec, FormVariant::symmetric_Bs);
    rhs -= accumulate_memory(s.fine_history, w, s.n - 1, s.dt, fs.size());
    SparseMatrix a = time_matrix(s.mass_h, s.stiffness_h, s.dt);
    add_same_pattern(a, s.dt * wnn, bs);
    apply_dirichlet(a, rhs, mask);
    LinearSolveInfo info;
    Vector u = solve_spd(a, rhs, s.solver, &info);
    s.last.linear_iterations += info.iterations;
    s.fine_history.append(bs * u);
    s.U_h.coeffs = std::move(u);
  });
  end_step(s);
}

void step(SchemeState& s, const ProblemSpec& spec) {
  switch (s.scheme) {
    case Scheme::standard: step_standard(s, spec); return;
    case Scheme::twogrid_41: step_twogrid_41(s, spec); return;
    case Scheme::twogrid_42: step_twogrid_42(s, spec); return;
    case Scheme::twogrid_43: step_twogrid_43(s, spec); return;
  }
}

RunResult run(Scheme scheme, const ProblemSpec& spec, MeshPtr coarse, MeshPtr fine, double dt, double T,
              const RunOptions& options) {
  const auto start = Clock::now();
  SchemeState s = make_state(scheme, spec, std::move(coarse), std::move(fine), dt, T, options.solver);
  RunResult out;
  out.fine_nodes = s.fine->size();
  out.coarse_nodes = s.coarse ? s.coarse->size() : 0;

  // Discrete norms: ||v||^2 = v^T M v, ||v||_1^2 = v^T (M + L) v with L the
  // Laplacian stiffness.
  std::optional<SparseMatrix> laplacian;
  double sum_increments = 0.0;
  double sum_h1 = 0.0;
  double sum_f = 0.0;
  double u0_sq = 0.0;
  const auto mnorm_sq = [&](const Vector& v) { return v.dot(s.mass_h * v); };
  if (options.constants) {
    laplacian = assemble_stiffness(*s.fine, identity_diffusion(), 0.0);
    out.stability.emplace();
    out.stability->constants = *options.constants;
    u0_sq = mnorm_sq(s.U_h.coeffs);
  }
  out.sup_l2_norm = std::sqrt(mnorm_sq(s.U_h.coeffs));

  const auto& rule = s.fine->rule();
  for (int k = 0; k < s.N; ++k) {
    const Vector prev = s.U_h.coeffs;
    step(s, spec);
    out.steps.push_back(s.last);
    out.coarse_seconds += s.last.coarse_seconds;
    out.fine_seconds += s.last.fine_seconds;
    const Vector& u = s.U_h.coeffs;
    if (!u.allFinite()) out.finite = false;
    const double l2_sq = mnorm_sq(u);
    out.sup_l2_norm = std::max(out.sup_l2_norm, std::sqrt(l2_sq));

    if (out.stability) {
      const double t = s.time();
      const Vector diff = u - prev;
      sum_increments += mnorm_sq(diff);
      sum_h1 += s.dt * (l2_sq + u.dot(*laplacian * u));
      double f_sq = 0.0;
      const FeSpace& fs = *s.fine;
      for (int e = 0; e < fs.mesh().num_triangles(); ++e) {
        for (int q = 0; q < rule.size(); ++q) {
          const double fv = spec.forcing(fs.quad_point(e, q), t);
          f_sq += rule.weights[static_cast<std::size_t>(q)] * fs.area(e) * fv * fv;
        }
      }
      sum_f += s.dt * f_sq;
      const double en = stability_amplification(t, *options.constants);
      out.stability->En.push_back(en);
      out.stability->lhs.push_back(std::sqrt(l2_sq) + std::sqrt(sum_increments) +
                                   0.5 * std::sqrt(options.constants->nu0) * std::sqrt(sum_h1));
      out.stability->rhs.push_back(std::sqrt(en) * std::sqrt(u0_sq + sum_f));
    }
  }

  out.fine_solution = s.U_h;
  if (s.coarse) out.coarse_solution = s.U_H;
  out.peak_fine_history_bytes = s.fine_history.peak_bytes();
  out.peak_coarse_history_bytes = s.coarse_history.peak_bytes();
  out.peak_history_bytes = out.peak_fine_history_bytes + out.peak_coarse_history_bytes;
  out.peak_fine_history_entries = s.fine_history.peak_entries();
  out.wall_seconds = seconds_since(start);
  return out;
}

}  // namespace pide
