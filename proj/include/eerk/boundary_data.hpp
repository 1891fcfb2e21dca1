#pragma once

// Boundary quantities for the corrected steppers.
//
// Every entry of BoundaryTraces is a vector over the boundary nodes holding
// the boundary operator applied to a field: its value at Dirichlet nodes, its
// normal-axis derivative at Neumann nodes. Fields are built as spatial jets
// about each node, so composites such as A(f_t + f_u u') come out of the same
// arithmetic whether the jets are exact or partly reconstructed from the
// numerical solution.

#include <array>
#include <cmath>
#include <deque>
#include <limits>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "eerk/jet.hpp"
#include "eerk/problems.hpp"
#include "eerk/space_disc.hpp"

namespace eerk {

struct BoundaryTraces {
  double t = 0.0;
  bool third_order = false;  // u_ttt, f2, the A- and f_u-products are valid

  Vector u, u_t, u_tt, u_ttt;
  Vector f, f_dot;           // f_dot = f_t + f_u u_t
  Vector Af, Af_dot;
  Vector fu_fdot, fu_utt, fu_Af;
  Vector f2;                 // f_tt + 2 f_tu u_t + f_uu u_t^2
  Vector f2_alternate;         // f_tt + 2 f_t f_u u_t + f_uu u_t^2
  Vector fu_ut_sq;           // f_u u_t^2
  Vector f2_fu;              // f_tt + 2 f_tu u_t + f_u u_t^2

  // Pointwise values at the node, not passed through the boundary operator.
  Vector f_t, f_u, f_tt, f_tu, f_uu;

  explicit BoundaryTraces(Index nb = 0) {
    for (Vector* v : fields()) *v = Vector::Zero(nb);
  }

  Index size() const { return u.size(); }

  /// boundary of (u_t - f), i.e. of A u.
  Vector au() const { return u_t - f; }
  /// boundary of (u_tt - f_t - f_u u_t).
  Vector second() const { return u_tt - f_dot; }
  /// boundary of (u_ttt - f_tt - 2 f_tu u_t - f_uu u_t^2 - f_u u_tt).
  Vector third() const { return u_ttt - f2 - fu_utt; }

  std::vector<Vector*> fields() {
    return {&u, &u_t, &u_tt, &u_ttt, &f, &f_dot, &Af, &Af_dot, &fu_fdot, &fu_utt, &fu_Af,
            &f2, &f2_alternate, &fu_ut_sq, &f2_fu, &f_t, &f_u, &f_tt, &f_tu, &f_uu};
  }
};

inline double apply_boundary_operator(const Jet& j, const BoundaryNode& b) {
  if (b.kind == BoundaryKind::dirichlet) return j.value();
  return b.normal_axis == 0 ? j.derivative(1, 0) : j.derivative(0, 1);
}

/// Fills node b of tr from jets of u, u_t, u_tt, u_ttt about the node.
inline void assemble_node_traces(BoundaryTraces& tr, Index b, const BoundaryNode& node, const ReactionTerm& r,
                                 double t, const std::array<Jet, 4>& uj) {
  const Jet x = Jet::variable(0, node.x);
  const Jet y = Jet::variable(1, node.y);
  const Jet f = r.jf(x, y, t, uj[0]);
  const Jet ft = r.jf_t(x, y, t, uj[0]);
  const Jet fu = r.jf_u(x, y, t, uj[0]);
  const Jet ftt = r.jf_tt(x, y, t, uj[0]);
  const Jet ftu = r.jf_tu(x, y, t, uj[0]);
  const Jet fuu = r.jf_uu(x, y, t, uj[0]);
  const Jet fdot = ft + fu * uj[1];
  const Jet af = laplacian(f);
  const Jet ut_sq = uj[1] * uj[1];
  auto op = [&node](const Jet& j) { return apply_boundary_operator(j, node); };

  tr.u(b) = op(uj[0]);
  tr.u_t(b) = op(uj[1]);
  tr.u_tt(b) = op(uj[2]);
  tr.u_ttt(b) = op(uj[3]);
  tr.f(b) = op(f);
  tr.f_dot(b) = op(fdot);
  tr.Af(b) = op(af);
  tr.Af_dot(b) = op(laplacian(fdot));
  tr.fu_fdot(b) = op(fu * fdot);
  tr.fu_utt(b) = op(fu * uj[2]);
  tr.fu_Af(b) = op(fu * af);
  tr.f2(b) = op(ftt + 2.0 * (ftu * uj[1]) + fuu * ut_sq);
  tr.f2_alternate(b) = op(ftt + 2.0 * (ft * fu * uj[1]) + fuu * ut_sq);
  tr.fu_ut_sq(b) = op(fu * ut_sq);
  tr.f2_fu(b) = op(ftt + 2.0 * (ftu * uj[1]) + fu * ut_sq);
  tr.f_t(b) = ft.value();
  tr.f_u(b) = fu.value();
  tr.f_tt(b) = ftt.value();
  tr.f_tu(b) = ftu.value();
  tr.f_uu(b) = fuu.value();
}

/// All traces evaluated from the exact solution.
inline BoundaryTraces exact_traces(const ManufacturedProblem& p, const Grid& grid, double t) {
  BoundaryTraces tr(grid.boundary_size());
  tr.t = t;
  tr.third_order = true;
  for (Index b = 0; b < grid.boundary_size(); ++b) {
    const BoundaryNode& node = grid.boundary[static_cast<std::size_t>(b)];
    const std::array<Jet, 4> uj{p.jet(node.x, node.y, t, 0), p.jet(node.x, node.y, t, 1), p.jet(node.x, node.y, t, 2),
                                p.jet(node.x, node.y, t, 3)};
    assemble_node_traces(tr, b, node, p.reaction, t, uj);
  }
  return tr;
}

/// Uniformly spaced history of boundary vectors, newest first.
class TraceHistory {
 public:
  explicit TraceHistory(double k, std::size_t depth = 7) : k_(k), depth_(depth) {
    if (!(k > 0.0)) throw std::invalid_argument("TraceHistory: step must be positive");
    if (depth < 5) throw std::invalid_argument("TraceHistory: depth must be at least 5");
  }

  void push(double t, Vector values) {
    if (!entries_.empty()) {
      const double expected = entries_.front().first + k_;
      if (std::abs(t - expected) > 1e-9 * std::max(1.0, std::abs(t))) {
        throw std::invalid_argument("TraceHistory: non-uniform time levels");
      }
      if (values.size() != entries_.front().second.size()) {
        throw std::invalid_argument("TraceHistory: vector length changed");
      }
    }
    entries_.emplace_front(t, std::move(values));
    if (entries_.size() > depth_) entries_.pop_back();
  }

  std::size_t size() const { return entries_.size(); }
  std::size_t depth() const { return depth_; }
  double step() const { return k_; }
  const Vector& at(std::size_t lag) const { return entries_.at(lag).second; }
  double time(std::size_t lag) const { return entries_.at(lag).first; }

 private:
  double k_;
  std::size_t depth_;
  std::deque<std::pair<double, Vector>> entries_;
};

enum class BdfFormula {
  first_bdf2,   // (3 y_n - 4 y_{n-1} + y_{n-2}) / (2k)
  first_bdf4,   // (25 y_n - 48 y_{n-1} + 36 y_{n-2} - 16 y_{n-3} + 3 y_{n-4}) / (12k)
  second_bdf4,  // bdf4 applied to bdf2 first derivatives at t_n .. t_{n-4}
};

inline std::size_t bdf_width(BdfFormula f) {
  switch (f) {
    case BdfFormula::first_bdf2: return 3;
    case BdfFormula::first_bdf4: return 5;
    case BdfFormula::second_bdf4: return 7;
  }
  return 0;
}

namespace detail {

inline Vector bdf2_at(const TraceHistory& h, std::size_t lag) {
  return (3.0 * h.at(lag) - 4.0 * h.at(lag + 1) + h.at(lag + 2)) / (2.0 * h.step());
}

template <class Get>
Vector bdf4_of(Get&& y, double k) {
  return (25.0 * y(0) - 48.0 * y(1) + 36.0 * y(2) - 16.0 * y(3) + 3.0 * y(4)) / (12.0 * k);
}

}  // namespace detail

inline Vector bdf_time_derivative(const TraceHistory& h, BdfFormula formula) {
  if (h.size() < bdf_width(formula)) {
    throw std::logic_error("bdf_time_derivative: history holds " + std::to_string(h.size()) + " levels, formula needs " +
                           std::to_string(bdf_width(formula)));
  }
  switch (formula) {
    case BdfFormula::first_bdf2: return detail::bdf2_at(h, 0);
    case BdfFormula::first_bdf4:
      return detail::bdf4_of([&h](std::size_t lag) -> const Vector& { return h.at(lag); }, h.step());
    case BdfFormula::second_bdf4:
      return detail::bdf4_of([&h](std::size_t lag) { return detail::bdf2_at(h, lag); }, h.step());
  }
  throw std::invalid_argument("bdf_time_derivative: unknown formula");
}

/// Per-step supplier of boundary traces. Calls are made once per time level,
/// in order, with the numerical solution at that level.
class TraceProvider {
 public:
  virtual ~TraceProvider() = default;
  virtual BoundaryTraces traces(int n, double t, const Vector& U) = 0;
  virtual const std::vector<std::string>& warnings() const { return warnings_; }

 protected:
  std::vector<std::string> warnings_;
};

class ExactTraceProvider : public TraceProvider {
 public:
  ExactTraceProvider(const ManufacturedProblem& p, const Grid& grid) : problem_(p), grid_(grid) {}
  BoundaryTraces traces(int, double t, const Vector&) override { return exact_traces(problem_, grid_, t); }

 private:
  const ManufacturedProblem& problem_;
  const Grid& grid_;
};

/// Reconstructs the traces from boundary data and the numerical solution:
///  - tangential behaviour and all time derivatives of the data are taken
///    from g;
///  - at Dirichlet nodes (off corners) the normal derivative of u comes from
///    a one-sided five-point difference on U, and its time derivative from
///    BDF in time;
///  - at Neumann nodes u comes from U and u_t from BDF in time;
///  - second normal derivatives come from the equation
///    u_nn = u_t - f - (tangential second derivative).
/// The first levels, where the history is too short, use the trapezoidal
/// bootstrap (bdf order 2) or the exact values (bdf order 4).
class NumericTraceProvider : public TraceProvider {
 public:
  NumericTraceProvider(const ManufacturedProblem& p, const SemidiscreteOperators& ops, double k, int bdf_order,
                       bool third_order, double cfl_constant = 100.0)
      : problem_(p), ops_(ops), k_(k), bdf_order_(bdf_order), third_order_(third_order), history_(k) {
    if (bdf_order != 2 && bdf_order != 4) throw std::invalid_argument("NumericTraceProvider: bdf order must be 2 or 4");
    bool spatial = false;
    for (const auto& b : ops.grid.boundary) {
      if (b.kind == BoundaryKind::neumann && third_order) {
        throw std::invalid_argument(
            "NumericTraceProvider: third-order traces at Neumann nodes need the Laplacian of f_t + f_u u_t, "
            "which is not reconstructed from data");
      }
      if (b.kind == BoundaryKind::neumann && ops.grid.dimension != 1) {
        throw std::invalid_argument("NumericTraceProvider: Neumann nodes supported in 1D only");
      }
      if (b.kind == BoundaryKind::dirichlet && !b.corner && third_order) {
        spatial = true;
        for (Index idx : b.inward) {
          if (idx < 0) throw std::invalid_argument("NumericTraceProvider: grid too coarse for one-sided differences");
        }
      }
    }
    // First space derivatives: gamma = 1.
    const double ratio = k / ops.grid.h;
    if (spatial && ratio > cfl_constant) {
      std::ostringstream os;
      os << "CFL guard: k/h = " << ratio << " exceeds " << cfl_constant;
      warnings_.push_back(os.str());
    }
  }

  BoundaryTraces traces(int n, double t, const Vector& U) override {
    if (n != next_) throw std::logic_error("NumericTraceProvider: time levels must be visited in order");
    ++next_;
    const Grid& grid = ops_.grid;
    const Index nb = grid.boundary_size();

    Vector monitored = Vector::Zero(nb);
    for (Index b = 0; b < nb; ++b) {
      const BoundaryNode& node = grid.boundary[static_cast<std::size_t>(b)];
      if (node.kind == BoundaryKind::neumann) {
        monitored(b) = U(node.self);
      } else if (!node.corner && third_order_) {
        monitored(b) = normal_derivative(node, t, U);
      }
    }
    history_.push(t, monitored);

    Vector rate;
    if (bdf_order_ == 2) {
      if (n == 0) {
        rate = exact_rate(t);
      } else if (n == 1) {
        rate = 2.0 * (history_.at(0) - history_.at(1)) / k_ - previous_rate_;
      } else {
        rate = bdf_time_derivative(history_, BdfFormula::first_bdf2);
      }
    } else {
      rate = n < 4 ? exact_rate(t) : bdf_time_derivative(history_, BdfFormula::first_bdf4);
    }
    previous_rate_ = rate;

    BoundaryTraces tr(nb);
    tr.t = t;
    tr.third_order = third_order_;
    const ReactionTerm& r = problem_.reaction;
    for (Index b = 0; b < nb; ++b) {
      const BoundaryNode& node = grid.boundary[static_cast<std::size_t>(b)];
      std::array<Jet, 4> uj;
      for (int d = 0; d < 4; ++d) uj[static_cast<std::size_t>(d)] = data_jet(node, t, d);
      const int ax = node.normal_axis;
      auto normal = [ax](Jet& j, int order) -> double& { return ax == 0 ? j(order, 0) : j(0, order); };
      if (node.kind == BoundaryKind::neumann) {
        // value from U and u_t from BDF; the normal slopes are the data.
        uj[0](0, 0) = monitored(b);
        uj[1](0, 0) = rate(b);
        uj[2](0, 0) = 0.0;
        uj[3](0, 0) = 0.0;
        const double f = r.f(node.x, node.y, t, uj[0].value());
        normal(uj[0], 2) = 0.5 * (uj[1].value() - f);
      } else if (!node.corner && third_order_) {
        normal(uj[0], 1) = monitored(b);
        normal(uj[1], 1) = rate(b);
        const double ut = uj[1].value();
        const double utt = uj[2].value();
        const double f = r.f(node.x, node.y, t, uj[0].value());
        const double fdot = r.f_t(node.x, node.y, t, uj[0].value()) + r.f_u(node.x, node.y, t, uj[0].value()) * ut;
        const int tan = 1 - ax;
        auto tangential2 = [tan, &grid](const Jet& j) {
          if (grid.dimension == 1) return 0.0;
          return 2.0 * (tan == 0 ? j(2, 0) : j(0, 2));
        };
        normal(uj[0], 2) = 0.5 * (ut - f - tangential2(uj[0]));
        normal(uj[1], 2) = 0.5 * (utt - fdot - tangential2(uj[1]));
      }
      assemble_node_traces(tr, b, node, r, t, uj);
    }
    return tr;
  }

 private:
  // Pure-tangential part of the exact jet: what the boundary data determine.
  Jet data_jet(const BoundaryNode& node, double t, int dt) const {
    const Jet full = problem_.jet(node.x, node.y, t, dt);
    Jet out(full.value());
    // The Neumann datum is the normal slope.
    if (node.kind == BoundaryKind::neumann) {
      if (node.normal_axis == 0) {
        out(1, 0) = full(1, 0);
      } else {
        out(0, 1) = full(0, 1);
      }
    }
    if (ops_.grid.dimension == 1) return out;
    const bool keep_x = node.corner || node.normal_axis == 1;
    const bool keep_y = node.corner || node.normal_axis == 0;
    for (int d = 1; d <= Jet::degree; ++d) {
      if (keep_x) out(d, 0) = full(d, 0);
      if (keep_y) out(0, d) = full(0, d);
    }
    return out;
  }

  // d/d(normal axis) from the datum and four inward unknowns.
  double normal_derivative(const BoundaryNode& node, double t, const Vector& U) const {
    const double u0 = problem_.boundary_datum(node, t, 0);
    const double d = (-25.0 * u0 + 48.0 * U(node.inward[0]) - 36.0 * U(node.inward[1]) + 16.0 * U(node.inward[2]) -
                      3.0 * U(node.inward[3])) /
                     (12.0 * ops_.grid.h);
    return -node.outward * d;
  }

  // Time derivative of the monitored quantities from the exact solution; used
  // only while the history is too short.
  Vector exact_rate(double t) const {
    const Grid& grid = ops_.grid;
    Vector out = Vector::Zero(grid.boundary_size());
    for (Index b = 0; b < grid.boundary_size(); ++b) {
      const BoundaryNode& node = grid.boundary[static_cast<std::size_t>(b)];
      if (node.kind == BoundaryKind::neumann) {
        out(b) = problem_.exact(node.x, node.y, t, 1);
      } else if (!node.corner && third_order_) {
        const Jet j = problem_.jet(node.x, node.y, t, 1);
        out(b) = node.normal_axis == 0 ? j.derivative(1, 0) : j.derivative(0, 1);
      }
    }
    return out;
  }

  const ManufacturedProblem& problem_;
  const SemidiscreteOperators& ops_;
  double k_;
  int bdf_order_;
  bool third_order_;
  TraceHistory history_;
  Vector previous_rate_;
  int next_ = 0;
};

enum class TraceMode { exact, numeric };

inline std::unique_ptr<TraceProvider> make_trace_provider(TraceMode mode, const ManufacturedProblem& p,
                                                          const SemidiscreteOperators& ops, double k, int p_order,
                                                          int bdf_order) {
  if (mode == TraceMode::exact) return std::make_unique<ExactTraceProvider>(p, ops.grid);
  return std::make_unique<NumericTraceProvider>(p, ops, k, bdf_order, p_order >= 3);
}

}  // namespace eerk
