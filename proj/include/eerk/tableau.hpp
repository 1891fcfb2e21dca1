#pragma once

// Explicit exponential Runge-Kutta methods in coefficient form
//
//     a_ij(z) = sum_l lambda(i, j, l) phi_l(c_i z),   b_i(z) = sum_l mu(i, l) phi_l(z).
//
// Stages i, j are 0-based; the phi index l is 1-based (l = 1..s). Entries
// with l > s read as zero.

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "eerk/rational.hpp"

namespace eerk {

class EERKTableau {
 public:
  EERKTableau(std::string name, int classical_order, std::vector<double> c)
      : name_(std::move(name)), q_(classical_order), c_(std::move(c)) {
    s_ = static_cast<int>(c_.size());
    if (s_ < 1) throw std::invalid_argument("EERKTableau: at least one stage required");
    if (q_ < 1) throw std::invalid_argument("EERKTableau: classical order must be positive");
    for (double ci : c_) {
      if (!std::isfinite(ci) || ci < 0.0 || ci > 1.0) {
        throw std::invalid_argument("EERKTableau: nodes must lie in [0, 1]");
      }
    }
    lambda_.assign(static_cast<std::size_t>(s_ * s_ * s_), 0.0);
    mu_.assign(static_cast<std::size_t>(s_ * s_), 0.0);
  }

  const std::string& name() const { return name_; }
  int stages() const { return s_; }
  int classical_order() const { return q_; }
  double c(int i) const { return c_.at(static_cast<std::size_t>(i)); }
  const std::vector<double>& nodes() const { return c_; }

  double lambda(int i, int j, int l) const {
    check_stage(i);
    check_stage(j);
    if (l < 1) throw std::out_of_range("EERKTableau: phi index starts at 1");
    if (l > s_) return 0.0;
    return lambda_[lambda_index(i, j, l)];
  }
  double mu(int i, int l) const {
    check_stage(i);
    if (l < 1) throw std::out_of_range("EERKTableau: phi index starts at 1");
    if (l > s_) return 0.0;
    return mu_[mu_index(i, l)];
  }

  EERKTableau& set_lambda(int i, int j, int l, double value) {
    check_stage(i);
    check_stage(j);
    if (l < 1 || l > s_) throw std::out_of_range("EERKTableau: phi index out of range");
    if (j >= i && value != 0.0) throw std::invalid_argument("EERKTableau: lambda(i, j, l) must vanish for j >= i");
    if (!std::isfinite(value)) throw std::invalid_argument("EERKTableau: non-finite coefficient");
    lambda_[lambda_index(i, j, l)] = value;
    return *this;
  }
  EERKTableau& set_mu(int i, int l, double value) {
    check_stage(i);
    if (l < 1 || l > s_) throw std::out_of_range("EERKTableau: phi index out of range");
    if (!std::isfinite(value)) throw std::invalid_argument("EERKTableau: non-finite coefficient");
    mu_[mu_index(i, l)] = value;
    return *this;
  }

  /// Largest |sum_{j,l} lambda(i, j, l) / l! - c_i| over the stages.
  double consistency_residual() const;

  /// Throws unless the stage coefficients satisfy sum_j a_ij(0) = c_i.
  void require_consistent(double tol = 1e-12) const {
    const double r = consistency_residual();
    if (!(r <= tol)) {
      throw std::invalid_argument("EERKTableau '" + name_ + "': sum_j a_ij(0) != c_i (residual " +
                                  std::to_string(r) + ")");
    }
  }

  friend bool operator==(const EERKTableau&, const EERKTableau&) = default;

 private:
  void check_stage(int i) const {
    if (i < 0 || i >= s_) throw std::out_of_range("EERKTableau: stage index out of range");
  }
  std::size_t lambda_index(int i, int j, int l) const {
    return static_cast<std::size_t>((i * s_ + j) * s_ + (l - 1));
  }
  std::size_t mu_index(int i, int l) const { return static_cast<std::size_t>(i * s_ + (l - 1)); }

  std::string name_;
  int q_ = 1;
  int s_ = 0;
  std::vector<double> c_;
  std::vector<double> lambda_;
  std::vector<double> mu_;
};

inline double EERKTableau::consistency_residual() const {
  double worst = 0.0;
  for (int i = 0; i < s_; ++i) {
    double sum = 0.0;
    double inv_fact = 1.0;
    for (int l = 1; l <= s_; ++l) {
      inv_fact /= l;
      for (int j = 0; j < i; ++j) sum += lambda(i, j, l) * inv_fact;
    }
    worst = std::max(worst, std::abs(sum - c_[static_cast<std::size_t>(i)]));
  }
  return worst;
}

namespace tableaus {

inline EERKTableau rk2() {
  EERKTableau t("rk2", 2, {0.0, 0.5});
  t.set_lambda(1, 0, 1, 0.5);
  t.set_mu(1, 1, 1.0);
  return t;
}

inline EERKTableau rk2b() {
  EERKTableau t("rk2b", 2, {0.0, 0.5});
  t.set_lambda(1, 0, 1, 0.5);
  t.set_mu(0, 1, 1.0);
  t.set_mu(0, 2, -2.0);
  t.set_mu(1, 2, 2.0);
  return t;
}

inline EERKTableau krogstad() {
  EERKTableau t("krogstad", 4, {0.0, 0.5, 0.5, 1.0});
  t.set_lambda(1, 0, 1, 0.5);
  t.set_lambda(2, 0, 1, 0.5);
  t.set_lambda(2, 0, 2, -1.0);
  t.set_lambda(2, 1, 2, 1.0);
  t.set_lambda(3, 0, 1, 1.0);
  t.set_lambda(3, 0, 2, -2.0);
  t.set_lambda(3, 2, 2, 2.0);
  t.set_mu(0, 1, 1.0);
  t.set_mu(0, 2, -3.0);
  t.set_mu(0, 3, 4.0);
  t.set_mu(1, 2, 2.0);
  t.set_mu(1, 3, -4.0);
  t.set_mu(2, 2, 2.0);
  t.set_mu(2, 3, -4.0);
  t.set_mu(3, 2, -1.0);
  t.set_mu(3, 3, 4.0);
  return t;
}

}  // namespace tableaus

inline std::vector<std::string> builtin_names() { return {"rk2", "rk2b", "krogstad"}; }

inline EERKTableau builtin(const std::string& name) {
  if (name == "rk2") return tableaus::rk2();
  if (name == "rk2b") return tableaus::rk2b();
  if (name == "krogstad") return tableaus::krogstad();
  throw std::invalid_argument("unknown tableau '" + name + "' (expected rk2, rk2b or krogstad)");
}

inline constexpr double kConditionTolerance = 1e-13;

struct ConditionReport {
  struct Entry {
    std::string condition;
    double residual = 0.0;
    bool satisfied = false;
  };
  std::vector<Entry> entries;

  void add(std::string condition, double residual) {
    const double r = std::abs(residual);
    entries.push_back({std::move(condition), r, r <= kConditionTolerance});
  }
  bool all_satisfied() const {
    for (const auto& e : entries) {
      if (!e.satisfied) return false;
    }
    return true;
  }
  double max_residual() const {
    double m = 0.0;
    for (const auto& e : entries) m = std::max(m, e.residual);
    return m;
  }
  const Entry& at(const std::string& condition) const {
    for (const auto& e : entries) {
      if (e.condition == condition) return e;
    }
    throw std::out_of_range("ConditionReport: no entry '" + condition + "'");
  }
};

/// sum_{i,l} mu(i, l) / (l + r - 1)! = 1 / r! for r = 1..q, reported as
/// "order_r".
inline ConditionReport check_order_conditions(const EERKTableau& t, int q) {
  if (q < 1 || q > 4) throw std::invalid_argument("check_order_conditions: q must be in 1..4");
  ConditionReport report;
  const int s = t.stages();
  for (int r = 1; r <= q; ++r) {
    double sum = 0.0;
    for (int i = 0; i < s; ++i) {
      for (int l = 1; l <= s; ++l) sum += t.mu(i, l) * rational_factorial_inverse(l + r - 1).to_double();
    }
    report.add("order_" + std::to_string(r), sum - rational_factorial_inverse(r).to_double());
  }
  return report;
}

inline double mu_column_sum(const EERKTableau& t, int l) {
  double sum = 0.0;
  for (int i = 0; i < t.stages(); ++i) sum += t.mu(i, l);
  return sum;
}

inline double lambda_row_sum(const EERKTableau& t, int i, int l) {
  double sum = 0.0;
  for (int j = 0; j < i; ++j) sum += t.lambda(i, j, l);
  return sum;
}

/// Entries: "mu_1", "mu_l" (column sums of mu), "lambda_i_l" (stage row sums,
/// i and l 1-based) and "consistency_i" (sum_{j,l} lambda / l! - c_i).
inline ConditionReport check_simplifying(const EERKTableau& t) {
  ConditionReport report;
  const int s = t.stages();
  for (int l = 1; l <= s; ++l) {
    report.add("mu_" + std::to_string(l), mu_column_sum(t, l) - (l == 1 ? 1.0 : 0.0));
  }
  for (int i = 0; i < s; ++i) {
    for (int l = 1; l <= s; ++l) {
      report.add("lambda_" + std::to_string(i + 1) + "_" + std::to_string(l),
                 lambda_row_sum(t, i, l) - (l == 1 ? t.c(i) : 0.0));
    }
  }
  for (int i = 0; i < s; ++i) {
    double sum = 0.0;
    for (int j = 0; j < i; ++j) {
      for (int l = 1; l <= s; ++l) sum += t.lambda(i, j, l) * rational_factorial_inverse(l).to_double();
    }
    report.add("consistency_" + std::to_string(i + 1), sum - t.c(i));
  }
  return report;
}

inline bool satisfies_mu_conditions(const EERKTableau& t) {
  for (const auto& e : check_simplifying(t).entries) {
    if (e.condition.rfind("mu_", 0) == 0 && !e.satisfied) return false;
  }
  return true;
}

inline bool satisfies_lambda_conditions(const EERKTableau& t) {
  for (const auto& e : check_simplifying(t).entries) {
    if (e.condition.rfind("lambda_", 0) == 0 && !e.satisfied) return false;
  }
  return true;
}

/// The s x s system M x = r with M(r, l) = 1/(l + r - 1)!, r_r = 1/r!, in the
/// unknowns x_l = sum_i mu(i, l), solved exactly.
struct ColumnSumSystem {
  std::vector<std::vector<Rational>> matrix;
  std::vector<Rational> rhs;
  std::vector<Rational> solution;
};

inline ColumnSumSystem column_sum_system(int s) {
  if (s < 1 || s > 8) throw std::invalid_argument("column_sum_system: s must be in 1..8");
  ColumnSumSystem sys;
  sys.matrix.assign(static_cast<std::size_t>(s), std::vector<Rational>(static_cast<std::size_t>(s)));
  sys.rhs.resize(static_cast<std::size_t>(s));
  for (int r = 1; r <= s; ++r) {
    for (int l = 1; l <= s; ++l) {
      sys.matrix[static_cast<std::size_t>(r - 1)][static_cast<std::size_t>(l - 1)] =
          rational_factorial_inverse(l + r - 1);
    }
    sys.rhs[static_cast<std::size_t>(r - 1)] = rational_factorial_inverse(r);
  }
  // Gaussian elimination; pivots are nonzero for this Hilbert-type matrix,
  // but a row swap is kept for safety.
  auto a = sys.matrix;
  auto b = sys.rhs;
  const std::size_t n = static_cast<std::size_t>(s);
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    while (piv < n && a[piv][col].is_zero()) ++piv;
    if (piv == n) throw std::domain_error("column_sum_system: singular system");
    std::swap(a[piv], a[col]);
    std::swap(b[piv], b[col]);
    for (std::size_t row = col + 1; row < n; ++row) {
      if (a[row][col].is_zero()) continue;
      const Rational factor = a[row][col] / a[col][col];
      for (std::size_t k = col; k < n; ++k) a[row][k] -= factor * a[col][k];
      b[row] -= factor * b[col];
    }
  }
  sys.solution.assign(n, Rational(0));
  for (std::size_t row = n; row-- > 0;) {
    Rational acc = b[row];
    for (std::size_t k = row + 1; k < n; ++k) acc -= a[row][k] * sys.solution[k];
    sys.solution[row] = acc / a[row][row];
  }
  return sys;
}

/// For s <= q <= 4 the order conditions force sum_i mu(i, 1) = 1 and
/// sum_i mu(i, l) = 0 for l >= 2. Verifies that the exact solution of the
/// column-sum system is e_1 and that the tableau's column sums match it.
/// Throws std::domain_error when s > q (the statement does not apply).
inline bool theorem1_verify(const EERKTableau& t) {
  const int s = t.stages();
  const int q = t.classical_order();
  if (s > q) throw std::domain_error("theorem1_verify: requires s <= q (got s = " + std::to_string(s) +
                                     ", q = " + std::to_string(q) + ")");
  if (q > 4) throw std::domain_error("theorem1_verify: requires q <= 4");
  const ColumnSumSystem sys = column_sum_system(s);
  for (int l = 1; l <= s; ++l) {
    const Rational expected(l == 1 ? 1 : 0);
    if (!(sys.solution[static_cast<std::size_t>(l - 1)] == expected)) return false;
    if (std::abs(mu_column_sum(t, l) - expected.to_double()) > 1e-12) return false;
  }
  return true;
}

/// Tableau-derived scalars used by the boundary corrections. Index vectors
/// are 1-based in the phi index (element 0 unused) and zero past s.
struct TableauScalars {
  int s = 0;
  std::vector<double> m;        // m[n] = sum_i mu(i, n) c_i, n = 1..s+2
  std::vector<std::vector<double>> lambda_c;  // lambda_c[l][i] = sum_j lambda(i, j, l) c_j, l = 1..s+1
  std::vector<double> gamma;    // gamma[i] = sum_{j,l} lambda(i, j, l) c_j / l!
  std::vector<double> big_lambda;  // big_lambda[i] = sum_{j,l} lambda(i, j, l) / (l + 1)!

  explicit TableauScalars(const EERKTableau& t) : s(t.stages()) {
    const int ext = s + 3;
    m.assign(static_cast<std::size_t>(ext), 0.0);
    for (int n = 1; n <= s; ++n) {
      for (int i = 0; i < s; ++i) m[static_cast<std::size_t>(n)] += t.mu(i, n) * t.c(i);
    }
    lambda_c.assign(static_cast<std::size_t>(ext), std::vector<double>(static_cast<std::size_t>(s), 0.0));
    gamma.assign(static_cast<std::size_t>(s), 0.0);
    big_lambda.assign(static_cast<std::size_t>(s), 0.0);
    for (int i = 0; i < s; ++i) {
      for (int l = 1; l <= s; ++l) {
        const double fl = rational_factorial_inverse(l).to_double();
        const double fl1 = rational_factorial_inverse(l + 1).to_double();
        for (int j = 0; j < i; ++j) {
          const double lam = t.lambda(i, j, l);
          lambda_c[static_cast<std::size_t>(l)][static_cast<std::size_t>(i)] += lam * t.c(j);
          gamma[static_cast<std::size_t>(i)] += lam * t.c(j) * fl;
          big_lambda[static_cast<std::size_t>(i)] += lam * fl1;
        }
      }
    }
  }

  double m_at(int n) const {
    return n >= 1 && n < static_cast<int>(m.size()) ? m[static_cast<std::size_t>(n)] : 0.0;
  }
  double lambda_c_at(int l, int i) const {
    return l >= 1 && l < static_cast<int>(lambda_c.size()) ? lambda_c[static_cast<std::size_t>(l)][static_cast<std::size_t>(i)]
                                                          : 0.0;
  }
};

/// Plain text form:
///   name <label>
///   s <stages>
///   q <order>
///   c <c_1> ... <c_s>
///   lambda <i> <j> <l> <value>   (1-based, nonzero entries only)
///   mu <i> <l> <value>
/// Blank lines and lines starting with '#' are ignored.
inline std::string to_text(const EERKTableau& t) {
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  os << "name " << t.name() << "\n";
  os << "s " << t.stages() << "\n";
  os << "q " << t.classical_order() << "\n";
  os << "c";
  for (double ci : t.nodes()) os << ' ' << ci;
  os << "\n";
  const int s = t.stages();
  for (int i = 0; i < s; ++i) {
    for (int j = 0; j < i; ++j) {
      for (int l = 1; l <= s; ++l) {
        if (t.lambda(i, j, l) != 0.0) {
          os << "lambda " << i + 1 << ' ' << j + 1 << ' ' << l << ' ' << t.lambda(i, j, l) << "\n";
        }
      }
    }
  }
  for (int i = 0; i < s; ++i) {
    for (int l = 1; l <= s; ++l) {
      if (t.mu(i, l) != 0.0) os << "mu " << i + 1 << ' ' << l << ' ' << t.mu(i, l) << "\n";
    }
  }
  return os.str();
}

inline EERKTableau from_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::string name;
  int s = -1;
  int q = -1;
  std::vector<double> c;
  struct LambdaEntry { int i, j, l; double v; };
  struct MuEntry { int i, l; double v; };
  std::vector<LambdaEntry> lambdas;
  std::vector<MuEntry> mus;
  int line_no = 0;
  auto fail = [&line_no](const std::string& what) {
    throw std::invalid_argument("tableau text, line " + std::to_string(line_no) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key) || key[0] == '#') continue;
    if (key == "name") {
      if (!(ls >> name)) fail("missing name");
    } else if (key == "s") {
      if (!(ls >> s)) fail("bad stage count");
    } else if (key == "q") {
      if (!(ls >> q)) fail("bad order");
    } else if (key == "c") {
      double v;
      while (ls >> v) c.push_back(v);
    } else if (key == "lambda") {
      LambdaEntry e{};
      if (!(ls >> e.i >> e.j >> e.l >> e.v)) fail("bad lambda entry");
      lambdas.push_back(e);
    } else if (key == "mu") {
      MuEntry e{};
      if (!(ls >> e.i >> e.l >> e.v)) fail("bad mu entry");
      mus.push_back(e);
    } else {
      fail("unknown key '" + key + "'");
    }
  }
  if (name.empty() || s < 1 || q < 1) throw std::invalid_argument("tableau text: name, s and q are required");
  if (static_cast<int>(c.size()) != s) throw std::invalid_argument("tableau text: expected " + std::to_string(s) + " nodes");
  EERKTableau t(name, q, c);
  for (const auto& e : lambdas) t.set_lambda(e.i - 1, e.j - 1, e.l, e.v);
  for (const auto& e : mus) t.set_mu(e.i - 1, e.l, e.v);
  return t;
}

}  // namespace eerk
