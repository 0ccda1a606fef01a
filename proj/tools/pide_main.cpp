#include "pide/config.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>

using namespace pide;

namespace {

void print_summary(const RunConfig& cfg, const ConvergenceReport& report) {
  std::printf("scheme %s, problem %s, T = %g, forcing %s\n", to_string(report.scheme).c_str(), report.problem.c_str(),
              report.T, to_string(cfg.forcing).c_str());
  for (std::size_t k = 0; k < report.rows.size(); ++k) {
    const RowResult& r = report.rows[k];
    std::printf("  H=%-6s h=%-6s dt=%-6s ", report.scheme == Scheme::standard ? "-" : reciprocal_label(r.row.H()).c_str(),
                reciprocal_label(r.row.h()).c_str(), reciprocal_label(r.row.dt).c_str());
    if (!r.ok) {
      std::printf("FAILED: %s\n", r.message.c_str());
      continue;
    }
    std::printf("L2 %.5e  H1 %.5e", r.errors.l2, r.errors.h1);
    if (k > 0) {
      std::printf("  h-order %.2f", report.h_order[k - 1]);
      if (report.scheme != Scheme::standard) std::printf("  H-order %.2f", report.H_order[k - 1]);
    }
    std::printf("  history %zu B", r.peak_history_bytes);
    if (cfg.benchmark) {
      // A standard run keeps one fine vector per step.
      const double standard_bytes = static_cast<double>(r.steps) * r.fine_nodes * sizeof(double);
      std::printf(" (fine %zu B, coarse %zu B, ratio to standard %.4f, coarse/fine nodes %.4f)  wall %.3f s",
                  r.peak_fine_history_bytes, r.peak_coarse_history_bytes,
                  standard_bytes > 0 ? static_cast<double>(r.peak_history_bytes) / standard_bytes : 0.0,
                  report.scheme == Scheme::standard ? 1.0 : static_cast<double>(r.coarse_nodes) / r.fine_nodes,
                  r.wall_seconds);
    }
    if (r.stability_holds) std::printf("  stability %s", *r.stability_holds ? "holds" : "VIOLATED");
    std::printf("\n");
  }
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;
  try {
    cfg = parse_config(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "pide: " << e.what() << "\n";
    return 2;
  }
  if (cfg.help) {
    std::cout << cfg.help_text;
    return 0;
  }

  const auto rows = cfg.active_rows();
  if (rows.empty()) {
    std::cerr << "pide: no rows to run\n";
    return 2;
  }
  if (cfg.constants) {
    for (const auto& r : rows) {
      const StepsizeCheck c = check_stepsize(r.dt, cfg.T, *cfg.constants);
      if (c.classification == StepsizeClass::inadmissible && cfg.stability) {
        std::fprintf(stderr, "pide: warning: dt = %s exceeds the L2 stability threshold %.4g\n",
                     reciprocal_label(r.dt).c_str(), c.l2_threshold);
      }
    }
  }

  ConvergenceReport report;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const BenchmarkProblem problem = make_problem(cfg);
    StudyOptions opts;
    opts.T = cfg.T;
    opts.solver = cfg.solver;
    if (cfg.stability) opts.constants = cfg.constants;
    opts.threads = cfg.threads;
    report = run_convergence_study(cfg.scheme, rows, problem, opts);
  } catch (const std::exception& e) {
    std::cerr << "pide: " << e.what() << "\n";
    return 1;
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  print_summary(cfg, report);
  std::printf("total wall time %.2f s\n", wall);

  if (!cfg.out_csv.empty()) {
    std::ofstream os(cfg.out_csv);
    if (!os) {
      std::cerr << "pide: cannot write " << cfg.out_csv << "\n";
      return 1;
    }
    write_csv(report, os, cfg.benchmark);
  }
  if (!cfg.out_md.empty()) {
    std::ofstream os(cfg.out_md);
    if (!os) {
      std::cerr << "pide: cannot write " << cfg.out_md << "\n";
      return 1;
    }
    write_markdown(report, os);
  }

  bool stable = true;
  for (const auto& r : report.rows) {
    if (r.stability_holds && !*r.stability_holds) stable = false;
  }
  return report.all_ok() && stable ? 0 : 1;
}
