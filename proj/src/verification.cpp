#include "pide/verification.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <ostream>
#include <thread>

namespace pide {

namespace {

const GaussLegendre& cached_gauss_legendre(int n) {
  thread_local std::map<int, GaussLegendre> cache;
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, gauss_legendre(n)).first;
  return it->second;
}

template <typename F>
double time_integral(F&& f, double t, int points) {
  if (t <= 0.0) return 0.0;
  const int panels = std::max(1, static_cast<int>(std::ceil(t - 1e-12)));
  return integrate_gl(std::forward<F>(f), 0.0, t, cached_gauss_legendre(points), panels);
}

// (div D)_j = sum_i d_i D_ij by central differences.
Vec2 diffusion_divergence(const ProblemSpec& spec, const Vec2& x, double t) {
  constexpr double eps = 1e-6;
  const Vec2 ex(eps, 0.0), ey(0.0, eps);
  const Mat2 dx = (spec.diffusion(x + ex, t) - spec.diffusion(x - ex, t)) / (2.0 * eps);
  const Mat2 dy = (spec.diffusion(x + ey, t) - spec.diffusion(x - ey, t)) / (2.0 * eps);
  return {dx(0, 0) + dy(1, 0), dx(0, 1) + dy(1, 1)};
}

ProblemSpec sine_memory_coefficients(double beta_scale = 1.0, double gamma_scale = 1.0, double g_scale = 1.0) {
  ProblemSpec s;
  s.diffusion = identity_diffusion();
  if (beta_scale != 0.0) {
    s.beta = [beta_scale](double u) -> Vec2 { return beta_scale * Vec2(std::sin(u), 1.0 - std::cos(u)); };
    s.d_beta = [beta_scale](double u) -> Vec2 { return beta_scale * Vec2(std::cos(u), std::sin(u)); };
  }
  if (gamma_scale != 0.0) {
    s.gamma = [gamma_scale](double u) -> Vec2 { return gamma_scale * Vec2(1.0 - std::cos(u), std::sin(u)); };
    s.d_gamma = [gamma_scale](double u) -> Vec2 { return gamma_scale * Vec2(std::sin(u), std::cos(u)); };
  }
  if (g_scale != 0.0) {
    s.g = [g_scale](double u) { return g_scale * std::sin(u); };
    s.d_g = [g_scale](double u) { return g_scale * std::cos(u); };
  }
  s.kernel = [](double t) { return std::exp(-t); };
  return s;
}

ManufacturedSolution scaled_bubble(double amp) {
  ManufacturedSolution m;
  m.u = [amp](const Vec2& x, double t) {
    return amp * x.x() * (1.0 - x.x()) * x.y() * (1.0 - x.y()) * std::exp(-t);
  };
  m.grad = [amp](const Vec2& x, double t) {
    const double e = amp * std::exp(-t);
    return Vec2((1.0 - 2.0 * x.x()) * x.y() * (1.0 - x.y()) * e, x.x() * (1.0 - x.x()) * (1.0 - 2.0 * x.y()) * e);
  };
  m.hessian = [amp](const Vec2& x, double t) {
    const double e = amp * std::exp(-t);
    Mat2 h;
    h(0, 0) = -2.0 * x.y() * (1.0 - x.y()) * e;
    h(1, 1) = -2.0 * x.x() * (1.0 - x.x()) * e;
    h(0, 1) = h(1, 0) = (1.0 - 2.0 * x.x()) * (1.0 - 2.0 * x.y()) * e;
    return h;
  };
  m.u_t = [amp](const Vec2& x, double t) {
    return -amp * x.x() * (1.0 - x.x()) * x.y() * (1.0 - x.y()) * std::exp(-t);
  };
  return m;
}

// Attaches exact solution, initial data and forcing to a coefficient set.
BenchmarkProblem finish(ProblemSpec spec, ManufacturedSolution exact, ForcingMode mode, std::string name,
                        std::function<double(const Vec2&, double)> closed_form = {}) {
  BenchmarkProblem bp;
  bp.manufactured.exact = std::move(exact);
  bp.manufactured.mode = mode;
  bp.manufactured.closed_form = std::move(closed_form);
  spec.name = std::move(name);
  spec.exact_solution = bp.manufactured.exact.u;
  spec.exact_gradient = bp.manufactured.exact.grad;
  auto u = bp.manufactured.exact.u;
  spec.u0 = [u](const Vec2& x) { return u(x, 0.0); };
  bp.spec = std::move(spec);
  // The forcing captures copies so the problem stays self-contained when moved.
  const ManufacturedProblem mp = bp.manufactured;
  ProblemSpec coeffs = bp.spec;
  coeffs.forcing = nullptr;
  bp.spec.forcing = [mp, coeffs](const Vec2& x, double t) { return forcing_value(mp, coeffs, x, t); };
  return bp;
}

}  // namespace

std::string to_string(ForcingMode m) {
  return m == ForcingMode::closed_form ? "paper" : "operator";
}

ForcingMode parse_forcing_mode(const std::string& name) {
  if (name == "paper" || name == "closed_form") return ForcingMode::closed_form;
  if (name == "operator" || name == "operator_derived") return ForcingMode::operator_derived;
  throw std::invalid_argument("unknown forcing mode '" + name + "' (expected paper or operator)");
}

double memory_operator_value(const ManufacturedSolution& exact, const ProblemSpec& spec, const Vec2& x, double s) {
  const double u = exact.u(x, s);
  const Vec2 du = exact.grad(x, s);
  double v = 0.0;
  if (spec.alpha) {
    const Mat2 hess = exact.hessian(x, s);
    v -= du.dot(spec.d_alpha(u) * du) + (spec.alpha(u).cwiseProduct(hess)).sum();
  }
  if (spec.beta) v -= spec.d_beta(u).dot(du);
  if (spec.gamma) v += spec.gamma(u).dot(du);
  if (spec.g) v += spec.g(u);
  return v;
}

double forcing_value(const ManufacturedProblem& mp, const ProblemSpec& spec, const Vec2& x, double t) {
  if (mp.mode == ForcingMode::closed_form) {
    if (!mp.closed_form) throw std::invalid_argument("forcing_value: problem has no closed-form forcing");
    return mp.closed_form(x, t);
  }
  const ManufacturedSolution& ex = mp.exact;
  const Mat2 d = spec.diffusion(x, t);
  double f = ex.u_t(x, t) - (d.cwiseProduct(ex.hessian(x, t))).sum() -
             diffusion_divergence(spec, x, t).dot(ex.grad(x, t));
  if (spec.has_memory()) {
    f += time_integral(
        [&](double s) { return spec.kernel(t - s) * memory_operator_value(ex, spec, x, s); }, t,
        mp.time_quadrature_points);
  }
  return f;
}

ManufacturedSolution bubble_solution() { return scaled_bubble(1.0); }

BenchmarkProblem sine_memory_problem(ForcingMode mode) {
  const int points = 12;
  auto closed = [points](const Vec2& x, double t) {
    const double x1 = x.x(), x2 = x.y();
    const double p = x1 * (1.0 - x1) * x2 * (1.0 - x2);
    const double q = (1.0 - 2.0 * x1) * x2 * (1.0 - x2);
    const double e = std::exp(-t);
    const double icos = time_integral([&](double s) { return std::cos(p * std::exp(-s)); }, t, points);
    const double isin = time_integral([&](double s) { return std::exp(s) * std::sin(p * std::exp(-s)); }, t, points);
    return (2.0 * x1 * (1.0 - x1) - p + 2.0 * x2 * (1.0 - x2) + q * t) * e - 2.0 * q * e * icos + e * isin;
  };
  return finish(sine_memory_coefficients(), bubble_solution(), mode, "sine_memory", closed);
}

BenchmarkProblem heat_no_memory_problem() {
  ProblemSpec s;
  s.diffusion = identity_diffusion();
  s.kernel = [](double t) { return std::exp(-t); };
  return finish(std::move(s), bubble_solution(), ForcingMode::operator_derived, "heat_no_memory");
}

BenchmarkProblem zero_problem() {
  ProblemSpec s = sine_memory_coefficients();
  ManufacturedSolution zero;
  zero.u = [](const Vec2&, double) { return 0.0; };
  zero.grad = [](const Vec2&, double) { return Vec2(0.0, 0.0); };
  zero.hessian = [](const Vec2&, double) { return Mat2::Zero().eval(); };
  zero.u_t = [](const Vec2&, double) { return 0.0; };
  BenchmarkProblem bp = finish(std::move(s), zero, ForcingMode::operator_derived, "zero");
  bp.spec.forcing = [](const Vec2&, double) { return 0.0; };
  return bp;
}

BenchmarkProblem linear_memory_problem(double a) {
  ProblemSpec s;
  s.diffusion = identity_diffusion();
  s.kernel = [](double t) { return std::exp(-t); };
  s.alpha = [a](double) { return (a * Mat2::Identity()).eval(); };
  s.d_alpha = [](double) { return Mat2::Zero().eval(); };
  return finish(std::move(s), bubble_solution(), ForcingMode::operator_derived, "linear_memory");
}

BenchmarkProblem custom_problem(const CustomProblemParams& p) {
  if (!(p.diffusion > 0.0)) throw std::invalid_argument("custom problem: diffusion must be positive");
  ProblemSpec s = sine_memory_coefficients(p.beta_scale, p.gamma_scale, p.g_scale);
  const double d = p.diffusion;
  s.diffusion = [d](const Vec2&, double) { return (d * Mat2::Identity()).eval(); };
  const double rate = p.kernel_rate;
  s.kernel = [rate](double t) { return std::exp(-rate * t); };
  if (p.alpha_scale != 0.0) {
    const double a = p.alpha_scale;
    s.alpha = [a](double) { return (a * Mat2::Identity()).eval(); };
    s.d_alpha = [](double) { return Mat2::Zero().eval(); };
  }
  return finish(std::move(s), scaled_bubble(p.amplitude), ForcingMode::operator_derived, "custom");
}

ErrorNorms error_norms(const FeFunction& numeric, const std::function<double(const Vec2&, double)>& u,
                       const std::function<Vec2(const Vec2&, double)>& grad, double t) {
  const Mesh& mesh = *numeric.mesh;
  const QuadratureRule& rule = triangle_rule_degree4();
  double l2 = 0.0, semi = 0.0;
  for (int e = 0; e < mesh.num_triangles(); ++e) {
    const auto& tri = mesh.triangle(e);
    const Vec2& p0 = mesh.node(tri[0]);
    const Vec2& p1 = mesh.node(tri[1]);
    const Vec2& p2 = mesh.node(tri[2]);
    const double det = (p1 - p0).x() * (p2 - p0).y() - (p1 - p0).y() * (p2 - p0).x();
    const double area = 0.5 * det;
    const std::array<Vec2, 3> gr = {Vec2(p1.y() - p2.y(), p2.x() - p1.x()) / det,
                                    Vec2(p2.y() - p0.y(), p0.x() - p2.x()) / det,
                                    Vec2(p0.y() - p1.y(), p1.x() - p0.x()) / det};
    const double c0 = numeric.coeffs[tri[0]], c1 = numeric.coeffs[tri[1]], c2 = numeric.coeffs[tri[2]];
    const Vec2 guh = c0 * gr[0] + c1 * gr[1] + c2 * gr[2];
    for (int q = 0; q < rule.size(); ++q) {
      const auto& lam = rule.points[static_cast<std::size_t>(q)];
      const Vec2 x = lam[0] * p0 + lam[1] * p1 + lam[2] * p2;
      const double w = rule.weights[static_cast<std::size_t>(q)] * area;
      const double ev = lam[0] * c0 + lam[1] * c1 + lam[2] * c2 - u(x, t);
      l2 += w * ev * ev;
      semi += w * (guh - grad(x, t)).squaredNorm();
    }
  }
  return {std::sqrt(l2), std::sqrt(semi), std::sqrt(l2 + semi)};
}

std::vector<StudyRow> table1_rows(bool large_rows) {
  std::vector<StudyRow> rows;
  const int last = large_rows ? 9 : 7;
  for (int l = 2; l <= last; ++l) {
    const int n = 1 << l;
    const double h = 1.0 / n;
    const double nominal = 0.5 * std::sqrt(h);
    // Coarse reciprocal rounded up: 1/4, 1/6, 1/8, 1/12, 1/16, 1/23, 1/32, 1/46.
    const int coarse = static_cast<int>(std::ceil(1.0 / nominal - 1e-9));
    rows.push_back({coarse, n, 2.0 * h, nominal});
  }
  return rows;
}

std::vector<StudyRow> table2_rows(bool large_rows) {
  std::vector<StudyRow> rows;
  const int last = large_rows ? 9 : 7;
  for (int l = 2; l <= last; ++l) {
    const int n = 1 << l;
    rows.push_back({0, n, 2.0 / n, 0.0});
  }
  return rows;
}

double observed_order(double e_k, double e_k1, double p_k, double p_k1) {
  if (!(e_k > 0.0) || !(e_k1 > 0.0) || !(p_k > 0.0) || !(p_k1 > 0.0) || p_k == p_k1) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  return std::log(e_k / e_k1) / std::log(p_k / p_k1);
}

bool ConvergenceReport::all_ok() const {
  for (const auto& r : rows) {
    if (!r.ok) return false;
  }
  return true;
}

ConvergenceReport run_convergence_study(Scheme scheme, const std::vector<StudyRow>& rows,
                                        const BenchmarkProblem& problem, const StudyOptions& options) {
  ConvergenceReport report;
  report.scheme = scheme;
  report.problem = problem.spec.name;
  report.T = options.T;
  report.rows.resize(rows.size());
  if (!problem.spec.exact_solution || !problem.spec.exact_gradient) {
    throw std::invalid_argument("run_convergence_study: problem has no exact solution");
  }

  auto run_row = [&](std::size_t k) {
    RowResult& out = report.rows[k];
    out.row = rows[k];
    try {
      const Rectangle dom = Rectangle::unit_square();
      MeshPtr fine = build_mesh(rows[k].fine_n, rows[k].fine_n, dom);
      MeshPtr coarse = scheme == Scheme::standard ? nullptr : build_mesh(rows[k].coarse_n, rows[k].coarse_n, dom);
      RunOptions ro;
      ro.solver = options.solver;
      ro.constants = options.constants;
      const RunResult res = run(scheme, problem.spec, coarse, fine, rows[k].dt, options.T, ro);
      out.errors = error_norms(res.fine_solution, *problem.spec.exact_solution, *problem.spec.exact_gradient, options.T);
      out.wall_seconds = res.wall_seconds;
      out.peak_history_bytes = res.peak_history_bytes;
      out.peak_fine_history_bytes = res.peak_fine_history_bytes;
      out.peak_coarse_history_bytes = res.peak_coarse_history_bytes;
      out.peak_fine_history_entries = res.peak_fine_history_entries;
      out.steps = static_cast<int>(res.steps.size());
      out.coarse_nodes = res.coarse_nodes;
      out.fine_nodes = res.fine_nodes;
      out.finite = res.finite;
      if (res.stability) out.stability_holds = res.stability->holds();
      out.ok = res.finite;
      if (!res.finite) out.message = "non-finite solution";
    } catch (const std::exception& e) {
      out.ok = false;
      out.message = e.what();
    }
  };

  const int threads = std::max(1, std::min<int>(options.threads, static_cast<int>(rows.size())));
  if (threads == 1) {
    for (std::size_t k = 0; k < rows.size(); ++k) run_row(k);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) {
      pool.emplace_back([&] {
        for (std::size_t k = next++; k < rows.size(); k = next++) run_row(k);
      });
    }
    for (auto& th : pool) th.join();
  }

  for (std::size_t k = 0; k + 1 < report.rows.size(); ++k) {
    const RowResult& a = report.rows[k];
    const RowResult& b = report.rows[k + 1];
    const double ea = a.ok ? a.errors.h1 : 0.0;
    const double eb = b.ok ? b.errors.h1 : 0.0;
    report.h_order.push_back(observed_order(ea, eb, a.row.h(), b.row.h()));
    report.H_order.push_back(scheme == Scheme::standard
                                 ? std::numeric_limits<double>::quiet_NaN()
                                 : observed_order(ea, eb, a.row.H_for_order(), b.row.H_for_order()));
    report.dt_order.push_back(observed_order(ea, eb, a.row.dt, b.row.dt));
  }
  return report;
}

std::string reciprocal_label(double v) {
  char buf[64];
  if (v > 0.0) {
    const double r = 1.0 / v;
    if (std::abs(r - std::round(r)) < 1e-9 * std::max(1.0, r)) {
      std::snprintf(buf, sizeof buf, "1/%lld", static_cast<long long>(std::llround(r)));
      return buf;
    }
  }
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

namespace {

std::string sci(double v) {
  if (!std::isfinite(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.5e", v);
  return buf;
}

std::string fixed2(double v) {
  if (!std::isfinite(v)) return "--";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

void write_csv(const ConvergenceReport& report, std::ostream& os, bool with_timings) {
  os << kCsvSchema << '\n';
  os << "scheme,problem,H,h,dt,l2_error,h1_error,h_order,H_order,dt_order,peak_history_bytes,"
        "fine_history_peak_entries,coarse_nodes,fine_nodes,status";
  if (with_timings) os << ",wall_seconds";
  os << '\n';
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t k = 0; k < report.rows.size(); ++k) {
    const RowResult& r = report.rows[k];
    const bool std_scheme = report.scheme == Scheme::standard;
    os << to_string(report.scheme) << ',' << report.problem << ',' << (std_scheme ? "" : sci(r.row.H())) << ','
       << sci(r.row.h()) << ',' << sci(r.row.dt) << ',' << (r.ok ? sci(r.errors.l2) : "") << ','
       << (r.ok ? sci(r.errors.h1) : "") << ',' << sci(k > 0 ? report.h_order[k - 1] : nan) << ','
       << sci(k > 0 ? report.H_order[k - 1] : nan) << ',' << sci(k > 0 ? report.dt_order[k - 1] : nan) << ','
       << r.peak_history_bytes << ',' << r.peak_fine_history_entries << ',' << r.coarse_nodes << ','
       << r.fine_nodes << ',' << (r.ok ? "ok" : "failed");
    if (with_timings) os << ',' << sci(r.wall_seconds);
    os << '\n';
  }
}

void write_markdown(const ConvergenceReport& report, std::ostream& os) {
  const bool two_grid = report.scheme != Scheme::standard;
  if (two_grid) {
    os << "| H | h | Δt | ‖U_h^T − u(T)‖₁ | h order | H order | Δt order |\n";
    os << "|---|---|---|---|---|---|---|\n";
  } else {
    os << "| h | Δt | ‖U_h^T − u(T)‖₁ | h order | Δt order |\n";
    os << "|---|---|---|---|---|\n";
  }
  for (std::size_t k = 0; k < report.rows.size(); ++k) {
    const RowResult& r = report.rows[k];
    const std::string err = r.ok ? sci(r.errors.h1) : "failed";
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const std::string ho = fixed2(k > 0 ? report.h_order[k - 1] : nan);
    const std::string Ho = fixed2(k > 0 ? report.H_order[k - 1] : nan);
    const std::string to = fixed2(k > 0 ? report.dt_order[k - 1] : nan);
    os << "| ";
    if (two_grid) os << reciprocal_label(r.row.H()) << " | ";
    os << reciprocal_label(r.row.h()) << " | " << reciprocal_label(r.row.dt) << " | " << err << " | " << ho;
    if (two_grid) os << " | " << Ho;
    os << " | " << to << " |\n";
  }
}

}  // namespace pide
