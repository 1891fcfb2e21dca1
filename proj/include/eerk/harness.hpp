#pragma once

// Convergence studies: integrate over a list of stepsizes, measure the
// max-norm error at the final time and the observed orders.

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "eerk/problems.hpp"
#include "eerk/stepper.hpp"
#include "eerk/tableau.hpp"

namespace eerk {

struct RunConfig {
  std::string problem = "heat1d-dd";
  std::string method = "rk2";
  Technique technique = Technique::corrected;
  int p = 2;
  TraceMode traces = TraceMode::exact;
  int bdf_order = 0;  // 0: 2 in 1D, 4 in 2D
  int nx = 1000;
  std::vector<double> ks;
  double tol = 1e-10;
  BTermReading reading = BTermReading::derived;
  double final_time = 1.0;
  std::string out;

  void validate() const {
    if (ks.empty()) throw std::invalid_argument("RunConfig: empty stepsize list");
    for (std::size_t i = 0; i < ks.size(); ++i) {
      if (!(ks[i] > 0.0)) throw std::invalid_argument("RunConfig: stepsizes must be positive");
      if (i > 0 && !(ks[i] < ks[i - 1])) throw std::invalid_argument("RunConfig: stepsizes must strictly decrease");
    }
    if (nx < 2) throw std::invalid_argument("RunConfig: nx must be at least 2");
    if (!(tol > 0.0)) throw std::invalid_argument("RunConfig: tolerance must be positive");
    if (technique == Technique::corrected && (p < 1 || p > 3)) throw std::invalid_argument("RunConfig: p must be 1, 2 or 3");
  }

  std::string technique_label() const {
    return technique == Technique::mol ? "mol" : "corrected-p" + std::to_string(p);
  }
};

struct ConvergenceRow {
  double k = 0.0;
  double error_max = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> observed_order;
  bool order_generalized = false;  // stepsizes not halved; log(e ratio)/log(k ratio)
  double wall_seconds = 0.0;
  long krylov_iters = 0;
  std::string failure;  // empty on success
};

struct ConvergenceReport {
  std::string problem;
  std::string method;
  std::string technique;
  std::vector<ConvergenceRow> rows;
  std::vector<std::string> warnings;
};

inline void fill_orders(std::vector<ConvergenceRow>& rows) {
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i].observed_order.reset();
    rows[i].order_generalized = false;
    if (i == 0) continue;
    const ConvergenceRow& a = rows[i - 1];
    ConvergenceRow& b = rows[i];
    if (!a.failure.empty() || !b.failure.empty() || !(a.error_max > 0.0) || !(b.error_max > 0.0)) continue;
    const double ratio = a.k / b.k;
    if (std::abs(ratio - 2.0) <= 1e-12) {
      b.observed_order = std::log2(a.error_max / b.error_max);
    } else {
      b.observed_order = std::log(a.error_max / b.error_max) / std::log(ratio);
      b.order_generalized = true;
    }
  }
}

inline ConvergenceReport run_convergence(const RunConfig& cfg) {
  cfg.validate();
  const ManufacturedProblem prob = make_problem(parse_problem(cfg.problem));
  const SemidiscreteOperators ops = discretize(prob, cfg.nx);
  const EERKTableau tab = builtin(cfg.method);
  IntegrateConfig ic;
  ic.technique = cfg.technique;
  ic.p = cfg.p;
  ic.traces = cfg.traces;
  ic.bdf_order = cfg.bdf_order != 0 ? cfg.bdf_order : (prob.dimension == 2 ? 4 : 2);
  ic.stepper.krylov.tol = cfg.tol;
  ic.stepper.reading = cfg.reading;

  ConvergenceReport report;
  report.problem = cfg.problem;
  report.method = cfg.method;
  report.technique = cfg.technique_label();
  const Vector exact = prob.exact_state(ops.grid, cfg.final_time);
  for (double k : cfg.ks) {
    ConvergenceRow row;
    row.k = k;
    try {
      const IntegrationResult r = integrate(prob, ops, tab, k, cfg.final_time, ic);
      row.error_max = (r.U - exact).lpNorm<Eigen::Infinity>();
      row.wall_seconds = r.wall_seconds;
      row.krylov_iters = r.krylov_iterations;
      for (const auto& w : r.warnings) report.warnings.push_back("k = " + std::to_string(k) + ": " + w);
    } catch (const std::exception& e) {
      row.failure = e.what();
    }
    report.rows.push_back(std::move(row));
  }
  fill_orders(report.rows);
  return report;
}

inline constexpr const char* kCsvHeader = "k,error_max,observed_order,wall_seconds,krylov_iters";

inline std::string format_csv(const ConvergenceReport& report) {
  if (report.rows.empty()) throw std::invalid_argument("export_csv: empty report");
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  os << kCsvHeader << '\n';
  for (const auto& row : report.rows) {
    os << row.k << ',';
    if (row.failure.empty()) {
      os << row.error_max;
    } else {
      os << "nan";
    }
    os << ',';
    if (row.observed_order) os << *row.observed_order;
    os << ',' << row.wall_seconds << ',' << row.krylov_iters << '\n';
  }
  return os.str();
}

inline void export_csv(const ConvergenceReport& report, const std::string& path) {
  const std::string text = format_csv(report);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("export_csv: cannot open '" + path + "'");
  out << text;
  out.close();
  if (!out) throw std::runtime_error("export_csv: write failed for '" + path + "'");
}

inline std::vector<ConvergenceRow> parse_csv(const std::string& text) {
  std::istringstream in(text);
  in.imbue(std::locale::classic());
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw std::invalid_argument("read_csv: bad header");
  std::vector<ConvergenceRow> rows;
  auto to_double = [](const std::string& s) {
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("read_csv: bad number '" + s + "'");
    return v;
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (cells.size() != 5) throw std::invalid_argument("read_csv: expected 5 columns in '" + line + "'");
    ConvergenceRow row;
    row.k = to_double(cells[0]);
    row.error_max = to_double(cells[1]);
    if (std::isnan(row.error_max)) row.failure = "failed";
    if (!cells[2].empty()) row.observed_order = to_double(cells[2]);
    row.wall_seconds = to_double(cells[3]);
    row.krylov_iters = std::stol(cells[4]);
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::vector<ConvergenceRow> read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_csv: cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str());
}

/// Error-versus-time series per (method, technique), one column per report in
/// input order. No interpolation: each column keeps its own points. A report
/// naming a method this library does not implement is emitted as absent.
struct EfficiencyColumn {
  std::string key;  // method/technique
  bool absent = false;
  std::vector<std::pair<double, double>> points;  // (error_max, wall_seconds)
};

struct EfficiencyTable {
  std::string problem;
  std::vector<EfficiencyColumn> columns;

  const EfficiencyColumn* find(const std::string& key) const {
    for (const auto& c : columns)
      if (c.key == key) return &c;
    return nullptr;
  }
};

inline bool is_builtin_method(const std::string& name) {
  for (const auto& n : builtin_names())
    if (n == name) return true;
  return false;
}

inline EfficiencyTable efficiency_table(const std::vector<ConvergenceReport>& reports) {
  if (reports.size() < 2) throw std::invalid_argument("efficiency_table: at least two reports required");
  EfficiencyTable table;
  table.problem = reports.front().problem;
  for (const auto& r : reports) {
    if (r.problem != table.problem) throw std::invalid_argument("efficiency_table: reports cover different problems");
    EfficiencyColumn col;
    col.key = r.method + "/" + r.technique;
    col.absent = !is_builtin_method(r.method);
    if (!col.absent) {
      for (const auto& row : r.rows) {
        if (row.failure.empty()) col.points.emplace_back(row.error_max, row.wall_seconds);
      }
    }
    table.columns.push_back(std::move(col));
  }
  return table;
}

inline std::vector<double> parse_k_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto slash = item.find('/');
    double v;
    if (slash != std::string::npos) {
      v = std::stod(item.substr(0, slash)) / std::stod(item.substr(slash + 1));
    } else {
      v = std::stod(item);
    }
    out.push_back(v);
  }
  if (out.empty()) throw std::invalid_argument("empty stepsize list");
  return out;
}

}  // namespace eerk
