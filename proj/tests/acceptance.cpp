// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include "oracles.hpp"
#include "pide/config.hpp"
#include "pide/schemes.hpp"
#include "pide/verification.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace pide;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[FAILED: " << what << "] ";
    }
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// H1 errors at T = 1 of the sine-memory problem, dt = 2h.
const double kStandardReference[] = {2.17183e-2, 1.11115e-2, 5.58847e-3, 2.79844e-3, 1.39977e-3, 6.99958e-4};
const double kStandardOrders[] = {0.95, 0.99, 1.00, 1.00, 1.00};
const double kTwoGridReference[] = {2.17236e-2, 1.11164e-2, 5.59226e-3, 2.80089e-3, 1.40136e-3, 7.00760e-4};

const BenchmarkProblem& sine() {
  static const BenchmarkProblem p = sine_memory_problem(ForcingMode::operator_derived);
  return p;
}

const ConvergenceReport& standard_report() {
  static const ConvergenceReport r = run_convergence_study(Scheme::standard, table2_rows(), sine());
  return r;
}

const ConvergenceReport& twogrid_report() {
  static const ConvergenceReport r = run_convergence_study(Scheme::twogrid_43, table1_rows(), sine());
  return r;
}

void check_table(Outcome& o, const ConvergenceReport& r, const double* reference) {
  o.require(r.all_ok(), "row failure");
  for (std::size_t k = 0; k < r.rows.size(); ++k) {
    const double e = r.rows[k].errors.h1;
    const double rel = std::abs(e - reference[k]) / reference[k];
    o.detail << "h=" << reciprocal_label(r.rows[k].row.h()) << ":" << fmt("%.5e", e) << "(" << fmt("%+.2f%%", 100 * rel)
             << ") ";
    o.require(rel <= 0.05, "error off reference by more than 5% at h=" + reciprocal_label(r.rows[k].row.h()));
  }
}

Outcome standard_table() {
  Outcome o;
  const ConvergenceReport& r = standard_report();
  check_table(o, r, kStandardReference);
  o.detail << "orders";
  for (std::size_t k = 0; k < r.h_order.size(); ++k) {
    o.detail << " " << fmt("%.3f", r.h_order[k]);
    o.require(std::abs(r.h_order[k] - kStandardOrders[k]) <= 0.05, "order of pair " + std::to_string(k + 1));
  }
  return o;
}

Outcome twogrid_table() {
  Outcome o;
  const ConvergenceReport& r = twogrid_report();
  check_table(o, r, kTwoGridReference);
  o.detail << "h-orders";
  for (std::size_t k = 0; k < r.h_order.size(); ++k) {
    o.detail << " " << fmt("%.3f", r.h_order[k]);
    o.require(std::abs(r.h_order[k] - 1.0) <= 0.05, "h-order of pair " + std::to_string(k + 1));
  }
  o.detail << " H-orders";
  for (std::size_t k = 0; k < r.H_order.size(); ++k) {
    o.detail << " " << fmt("%.3f", r.H_order[k]);
    o.require(std::abs(r.H_order[k] - 2.0) <= 0.1, "H-order of pair " + std::to_string(k + 1));
  }
  return o;
}

Outcome agreement() {
  Outcome o;
  const ConvergenceReport& a = standard_report();
  const ConvergenceReport& b = twogrid_report();
  o.require(a.rows.size() == b.rows.size(), "row lists differ");
  double worst = 0.0;
  for (std::size_t k = 0; k < std::min(a.rows.size(), b.rows.size()); ++k) {
    o.require(a.rows[k].row.fine_n == b.rows[k].row.fine_n && a.rows[k].row.dt == b.rows[k].row.dt,
              "rows not matched in (h, dt)");
    const double rel = std::abs(b.rows[k].errors.h1 - a.rows[k].errors.h1) / a.rows[k].errors.h1;
    worst = std::max(worst, rel);
    o.require(rel <= 0.02, "difference above 2% at h=" + reciprocal_label(a.rows[k].row.h()));
  }
  o.detail << "max relative H1 difference " << fmt("%.3f%%", 100 * worst) << " over " << a.rows.size() << " rows";
  return o;
}

Outcome storage() {
  Outcome o;
  // Per-step instrumentation on a short run.
  auto fine = build_mesh(16, 16);
  auto coarse = build_mesh(8, 8);
  const RunResult st = run(Scheme::standard, sine().spec, nullptr, fine, 1.0 / 16.0, 1.0);
  const RunResult tg = run(Scheme::twogrid_43, sine().spec, coarse, fine, 1.0 / 16.0, 1.0);
  for (const StepRecord& r : st.steps) o.require(r.fine_history_entries == r.n - 1, "standard fine entries != n-1");
  for (const StepRecord& r : tg.steps) o.require(r.fine_history_entries == 0, "two-grid fine entries != 0");
  o.require(tg.peak_fine_history_bytes == 0, "two-grid fine bytes != 0");

  // Peak history ratio on every matched row of the two tables.
  const ConvergenceReport& a = standard_report();
  const ConvergenceReport& b = twogrid_report();
  double worst_margin = -1.0;
  for (std::size_t k = 0; k < std::min(a.rows.size(), b.rows.size()); ++k) {
    o.require(b.rows[k].peak_fine_history_entries == 0, "fine history used in a table row");
    const double ratio =
        static_cast<double>(b.rows[k].peak_history_bytes) / static_cast<double>(a.rows[k].peak_history_bytes);
    const double bound = static_cast<double>(b.rows[k].coarse_nodes) / b.rows[k].fine_nodes;
    worst_margin = std::max(worst_margin, ratio - bound);
    o.require(ratio <= bound + 1e-12, "history ratio above coarse/fine nodes at h=" + reciprocal_label(a.rows[k].row.h()));
    if (k + 1 == a.rows.size()) {
      o.detail << "h=" << reciprocal_label(a.rows[k].row.h()) << ": " << b.rows[k].peak_history_bytes << " B vs "
               << a.rows[k].peak_history_bytes << " B, ratio " << fmt("%.4f", ratio) << " <= " << fmt("%.4f", bound)
               << "; ";
    }
  }
  o.detail << "max(ratio - bound) = " << fmt("%.2e", worst_margin);
  return o;
}

Outcome stability() {
  Outcome o;
  const StabilityConstants c = sine_memory_constants();
  const double dt = 1.0 / 256.0;
  const StepsizeCheck chk = check_stepsize(dt, 1.0, c);
  o.require(chk.classification != StepsizeClass::inadmissible, "step size inadmissible");
  RunOptions opts;
  opts.constants = c;
  for (Scheme s : {Scheme::standard, Scheme::twogrid_43}) {
    const RunResult r = run(s, sine().spec, build_mesh(8, 8), build_mesh(16, 16), dt, 1.0, opts);
    o.require(r.stability && r.stability->lhs.size() == 256, "diagnostics missing");
    o.require(r.stability && r.stability->holds(),
              "bound violated at step " + std::to_string(r.stability ? r.stability->first_violation() : -1));
    o.require(r.finite, "non-finite value");
    double worst = 0.0;
    for (std::size_t k = 0; r.stability && k < r.stability->lhs.size(); ++k) {
      worst = std::max(worst, r.stability->lhs[k] / r.stability->rhs[k]);
    }
    o.detail << to_string(s) << ": 256 steps, max lhs/rhs " << fmt("%.3e", worst) << "; ";
  }
  o.detail << "dt=1/256 vs L2 threshold " << fmt("%.4f", chk.l2_threshold);
  return o;
}

Outcome oracles() {
  Outcome o;
  double worst_m = 0.0, worst_b = 0.0, worst_j = 0.0;
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> d(-1.5, 1.5);
  const ProblemSpec poly = oracle::polynomial_spec();
  for (int n = 1; n <= 4; ++n) {
    auto mesh = build_mesh(n, n);
    auto space = make_space(mesh);
    const Eigen::MatrixXd m = oracle::dense(assemble_mass(*space));
    const Eigen::MatrixXd k = oracle::dense(assemble_stiffness(*space, identity_diffusion(), 0.0));
    worst_m = std::max(worst_m, (m - oracle::mass(*mesh, oracle::collapsed_rule(4))).cwiseAbs().maxCoeff());
    worst_m = std::max(worst_m, (k - oracle::stiffness(*mesh, Mat2::Identity())).cwiseAbs().maxCoeff());
    Vector u(mesh->num_nodes());
    for (auto& v : u) v = d(rng);
    const QuadField uq = quad_field(*space, FeFunction(mesh, u));
    worst_b = std::max(worst_b, (assemble_B_vector(*space, uq, uq, poly, FormVariant::full_B) -
                                 oracle::b_vector(*mesh, u, poly, oracle::collapsed_rule(4)))
                                    .lpNorm<Eigen::Infinity>());
    worst_b = std::max(worst_b, (assemble_B_vector(*space, uq, uq, sine().spec, FormVariant::full_B) -
                                 oracle::b_vector(*mesh, u, sine().spec, oracle::six_point_rule()))
                                    .lpNorm<Eigen::Infinity>());
  }
  o.require(worst_m <= 1e-12, "mass/stiffness oracle");
  o.require(worst_b <= 1e-12, "B-vector oracle");

  auto mesh = build_mesh(3, 3);
  auto space = make_space(mesh);
  Vector u(mesh->num_nodes());
  for (auto& v : u) v = d(rng);
  const Eigen::MatrixXd j = oracle::dense(assemble_B_jacobian(*space, quad_field(*space, FeFunction(mesh, u)), sine().spec));
  Eigen::MatrixXd fd(j.rows(), j.cols());
  const double eps = 1e-6;
  for (int k = 0; k < mesh->num_nodes(); ++k) {
    Vector up = u, um = u;
    up[k] += eps;
    um[k] -= eps;
    const QuadField qp = quad_field(*space, FeFunction(mesh, up));
    const QuadField qm = quad_field(*space, FeFunction(mesh, um));
    fd.col(k) = (assemble_B_vector(*space, qp, qp, sine().spec, FormVariant::full_B) -
                 assemble_B_vector(*space, qm, qm, sine().spec, FormVariant::full_B)) /
                (2 * eps);
  }
  worst_j = (j - fd).cwiseAbs().maxCoeff() / j.cwiseAbs().maxCoeff();
  o.require(worst_j <= 1e-6, "Jacobian vs finite differences");

  double min_order = 1e300, prev = 0.0;
  for (int k = 3; k <= 9; ++k) {
    const int n = 1 << k;
    MemoryWeights w([](double t) { return std::exp(-t); }, 1.0 / n);
    const auto om = w.weights_for_step(n);
    double s = 0.0;
    for (int i = 1; i <= n; ++i) s += om[i - 1] * std::cos(static_cast<double>(i) / n) / n;
    const double err = std::abs(s - oracle::convolution_exact(1.0));
    if (k > 3) min_order = std::min(min_order, std::log2(prev / err));
    prev = err;
  }
  o.require(min_order >= 0.9, "memory quadrature order");
  o.detail << "mass/stiffness " << fmt("%.1e", worst_m) << ", B " << fmt("%.1e", worst_b) << ", Jacobian rel "
           << fmt("%.1e", worst_j) << ", memory quadrature min order " << fmt("%.3f", min_order);
  return o;
}

Outcome degeneracy() {
  Outcome o;
  const Scheme all[] = {Scheme::standard, Scheme::twogrid_41, Scheme::twogrid_42, Scheme::twogrid_43};
  const BenchmarkProblem zero = zero_problem();
  for (Scheme s : all) {
    const RunResult r = run(s, zero.spec, build_mesh(4, 4), build_mesh(8, 8), 0.125, 1.0);
    o.require(r.fine_solution.coeffs.lpNorm<Eigen::Infinity>() == 0.0, "zero problem nonzero for " + to_string(s));
  }
  o.detail << "zero trajectory for all schemes; ";

  // Single interior node: U^n = (1 + lambda dt)^{-n} U^0 exactly.
  ProblemSpec heat;
  heat.diffusion = identity_diffusion();
  heat.kernel = [](double t) { return std::exp(-t); };
  heat.forcing = [](const Vec2&, double) { return 0.0; };
  heat.u0 = [](const Vec2& x) { return (x - Vec2(0.5, 0.5)).norm() < 1e-12 ? 1.0 : 0.0; };
  auto mesh = build_mesh(2, 2);
  auto space = make_space(mesh);
  const double lambda =
      assemble_stiffness(*space, identity_diffusion(), 0.0).coeff(4, 4) / assemble_mass(*space).coeff(4, 4);
  double min_order = 1e300, worst_exact = 0.0;
  for (Scheme s : all) {
    double prev = 0.0;
    for (int k = 4; k <= 8; ++k) {
      const int n = 1 << k;
      const double dt = 0.1 / n;
      const double u = run(s, heat, mesh, mesh, dt, 0.1).fine_solution.coeffs[4];
      worst_exact = std::max(worst_exact, std::abs(u - std::pow(1.0 + lambda * dt, -n)));
      const double err = std::abs(u - std::exp(-lambda * 0.1));
      if (k > 4) min_order = std::min(min_order, std::log2(prev / err));
      prev = err;
    }
  }
  o.require(worst_exact <= 1e-12, "backward Euler amplification");
  o.require(std::abs(min_order - 1.0) <= 0.1, "first-order time convergence");
  o.detail << "no memory: |U - (1+lambda dt)^-n| <= " << fmt("%.1e", worst_exact) << ", min dt-order "
           << fmt("%.3f", min_order) << "; ";

  const BenchmarkProblem lin = linear_memory_problem(0.5);
  auto m8 = build_mesh(8, 8);
  const RunResult a = run(Scheme::standard, lin.spec, nullptr, m8, 0.125, 1.0);
  const RunResult b = run(Scheme::twogrid_41, lin.spec, m8, m8, 0.125, 1.0);
  const double diff = (a.fine_solution.coeffs - b.fine_solution.coeffs).lpNorm<Eigen::Infinity>();
  o.require(diff <= 1e-8, "linear memory: 4.1 differs from standard");
  o.detail << "linear memory same mesh: max |4.1 - standard| = " << fmt("%.1e", diff);
  return o;
}

Outcome forcing() {
  Outcome o;
  const BenchmarkProblem closed = sine_memory_problem(ForcingMode::closed_form);
  const BenchmarkProblem op = sine_memory_problem(ForcingMode::operator_derived);
  std::mt19937 rng(12345);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  double worst = 0.0;
  Vec2 wx(0, 0);
  double wt = 0.0;
  for (int k = 0; k < 100; ++k) {
    const Vec2 x(d(rng), d(rng));
    const double t = d(rng);
    const double diff = std::abs(closed.spec.forcing(x, t) - op.spec.forcing(x, t));
    if (diff > worst) worst = diff, wx = x, wt = t;
  }
  o.require(worst <= 1e-6, "forcings disagree");
  o.detail << "100 samples, max |closed - operator| = " << fmt("%.2e", worst) << " at (" << fmt("%.3f", wx.x()) << ", "
           << fmt("%.3f", wx.y()) << ", t=" << fmt("%.3f", wt) << ")";
  if (worst > 1e-6) {
    const double m = op.manufactured.exact.u_t(wx, wt);
    o.detail << "; u_t term " << m << ", memory integrand at s=t " << memory_operator_value(op.manufactured.exact, op.spec, wx, wt);
  }
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> check;
  };
  const std::vector<Criterion> criteria = {
      {"standard-scheme convergence table", standard_table},
      {"two-grid coarse-memory convergence table", twogrid_table},
      {"two-grid vs standard agreement", agreement},
      {"fine-grid history economization", storage},
      {"discrete stability bound", stability},
      {"assembly, Jacobian and memory oracles", oracles},
      {"degenerate cases", degeneracy},
      {"forcing cross-validation", forcing},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].check();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "exception: " << e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %zu. %s (%.1f s): %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].name, secs,
                o.detail.str().c_str());
    std::fflush(stdout);
    if (!o.pass) ++failures;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
