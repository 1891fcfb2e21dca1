// Convergence-study driver. Prints a table to stdout and, with --out, writes
// the CSV. --self-test runs randomized sanity checks seeded by --seed.

#include <cstdio>
#include <iostream>
#include <random>
#include <string>

#include "CLI11.hpp"
#include "eerk/eerk.hpp"

namespace {

int self_test(unsigned seed, double tol) {
  using namespace eerk;
  int failures = 0;
  auto report = [&failures](const char* what, double value, double limit) {
    const bool ok = value <= limit;
    if (!ok) ++failures;
    std::printf("%-40s %.3e (limit %.1e) %s\n", what, value, limit, ok ? "ok" : "FAILED");
  };

  const SemidiscreteOperators ops = assemble_1d_dirichlet(200);
  report("linearity defect, 1D operator", linearity_defect(ops.A, 8, seed), 1e-12);
  const SemidiscreteOperators ops2 = assemble_2d_ninepoint(12);
  report("linearity defect, 2D operator", linearity_defect(ops2.A, 8, seed + 1), 1e-12);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  std::vector<Vector> v(4, Vector(ops.A.dimension()));
  for (auto& x : v)
    for (Index i = 0; i < x.size(); ++i) x[i] = uni(rng);
  const double tau = 0.01;
  KrylovOptions opt;
  opt.tol = tol;
  const Vector krylov = phi_combination(ops.A, tau, v, opt).value;
  const Vector dense = phi_combination_dense(dense_operator(ops), tau, v);
  report("krylov vs dense, relative", (krylov - dense).norm() / dense.norm(), 1e-8);
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exponential Runge-Kutta convergence studies with boundary corrections"};
  argv = app.ensure_utf8(argv);

  eerk::RunConfig cfg;
  std::string technique = "corrected";
  std::string traces = "exact";
  std::string reading = "derived";
  std::string k_list = "1/20,1/40,1/80,1/160";
  int nx = 0;
  unsigned seed = 1;
  bool run_self_test = false;

  app.add_option("--problem", cfg.problem, "Test problem")
      ->check(CLI::IsMember({"heat1d-dd", "heat1d-dn", "heat2d"}))
      ->capture_default_str();
  app.add_option("--method", cfg.method, "Tableau")
      ->check(CLI::IsMember(eerk::builtin_names()))
      ->capture_default_str();
  app.add_option("--technique", technique, "Boundary treatment")
      ->check(CLI::IsMember({"mol", "corrected"}))
      ->capture_default_str();
  app.add_option("--p", cfg.p, "Correction order for the corrected technique")
      ->check(CLI::Range(1, 3))
      ->capture_default_str();
  app.add_option("--traces", traces, "Boundary trace source")
      ->check(CLI::IsMember({"exact", "numeric"}))
      ->capture_default_str();
  app.add_option("--bdf", cfg.bdf_order, "BDF order for numeric traces (0: 2 in 1D, 4 in 2D)")
      ->check(CLI::IsMember({0, 2, 4}))
      ->capture_default_str();
  app.add_option("--nx", nx, "Interior nodes per direction (default 1000 in 1D, 40 in 2D)")
      ->check(CLI::PositiveNumber);
  app.add_option("--k-list", k_list, "Comma-separated stepsizes, fractions allowed")->capture_default_str();
  app.add_option("--tol", cfg.tol, "Krylov tolerance")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--reading", reading, "b-term variant for p = 3")
      ->check(CLI::IsMember({"derived", "alternate"}))
      ->capture_default_str();
  app.add_option("--T", cfg.final_time, "Final time")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--out", cfg.out, "CSV output path");
  app.add_option("--seed", seed, "Seed for --self-test")->capture_default_str();
  app.add_flag("--self-test", run_self_test, "Run randomized sanity checks and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help and --version exit 0; every usage error maps to 1.
    return app.exit(e) == 0 ? 0 : 1;
  }

  if (run_self_test) return self_test(seed, cfg.tol);

  try {
    cfg.technique = technique == "mol" ? eerk::Technique::mol : eerk::Technique::corrected;
    cfg.traces = traces == "exact" ? eerk::TraceMode::exact : eerk::TraceMode::numeric;
    cfg.reading = reading == "derived" ? eerk::BTermReading::derived : eerk::BTermReading::alternate;
    cfg.ks = eerk::parse_k_list(k_list);
    cfg.nx = nx > 0 ? nx : (cfg.problem == "heat2d" ? 40 : 1000);

    const eerk::ConvergenceReport report = eerk::run_convergence(cfg);
    std::printf("%s  %s  %s  nx=%d\n", report.problem.c_str(), report.method.c_str(), report.technique.c_str(),
                cfg.nx);
    std::printf("%12s %14s %8s %10s %10s\n", "k", "error_max", "order", "seconds", "krylov");
    for (const auto& row : report.rows) {
      if (!row.failure.empty()) {
        std::printf("%12.6g  failed: %s\n", row.k, row.failure.c_str());
        continue;
      }
      std::string order = row.observed_order ? std::to_string(*row.observed_order) : "";
      if (row.order_generalized) order += "*";
      std::printf("%12.6g %14.6e %8s %10.3f %10ld\n", row.k, row.error_max, order.c_str(), row.wall_seconds,
                  row.krylov_iters);
    }
    for (const auto& w : report.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    if (!cfg.out.empty()) eerk::export_csv(report, cfg.out);
    for (const auto& row : report.rows)
      if (!row.failure.empty()) return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
