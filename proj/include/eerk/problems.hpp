#pragma once

// Manufactured-solution test problems u_t = Laplace(u) + f(x, t, u) on the
// unit interval / square. The reaction term carries the source, so f here is
// u^2 + h(x, t) and its time derivatives include those of h.

#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include "eerk/jet.hpp"
#include "eerk/space_disc.hpp"

namespace eerk {

/// f and its partial derivatives through second order, pointwise and on
/// spatial jets. Coordinates are (x, y); y is ignored in 1D.
struct ReactionTerm {
  using Scalar = std::function<double(double x, double y, double t, double u)>;
  using JetMap = std::function<Jet(const Jet& x, const Jet& y, double t, const Jet& u)>;

  Scalar f, f_t, f_u, f_tt, f_tu, f_uu;
  JetMap jf, jf_t, jf_u, jf_tt, jf_tu, jf_uu;
};

/// Source h and its first two time derivatives, for both scalar and jet
/// arguments.
struct SourceTerm {
  std::function<double(double x, double y, double t, int dt)> scalar;
  std::function<Jet(const Jet& x, const Jet& y, double t, int dt)> jet;
};

/// f(x, t, u) = u^2 + h(x, t).
inline ReactionTerm quadratic_reaction(SourceTerm h) {
  ReactionTerm r;
  auto hs = h.scalar;
  auto hj = h.jet;
  r.f = [hs](double x, double y, double t, double u) { return u * u + hs(x, y, t, 0); };
  r.f_t = [hs](double x, double y, double t, double) { return hs(x, y, t, 1); };
  r.f_u = [](double, double, double, double u) { return 2.0 * u; };
  r.f_tt = [hs](double x, double y, double t, double) { return hs(x, y, t, 2); };
  r.f_tu = [](double, double, double, double) { return 0.0; };
  r.f_uu = [](double, double, double, double) { return 2.0; };
  r.jf = [hj](const Jet& x, const Jet& y, double t, const Jet& u) { return u * u + hj(x, y, t, 0); };
  r.jf_t = [hj](const Jet& x, const Jet& y, double t, const Jet&) { return hj(x, y, t, 1); };
  r.jf_u = [](const Jet&, const Jet&, double, const Jet& u) { return 2.0 * u; };
  r.jf_tt = [hj](const Jet& x, const Jet& y, double t, const Jet&) { return hj(x, y, t, 2); };
  r.jf_tu = [](const Jet&, const Jet&, double, const Jet&) { return Jet(0.0); };
  r.jf_uu = [](const Jet&, const Jet&, double, const Jet&) { return Jet(2.0); };
  return r;
}

/// f = 0.
inline ReactionTerm zero_reaction() {
  ReactionTerm r;
  auto zs = [](double, double, double, double) { return 0.0; };
  auto zj = [](const Jet&, const Jet&, double, const Jet&) { return Jet(0.0); };
  r.f = r.f_t = r.f_u = r.f_tt = r.f_tu = r.f_uu = zs;
  r.jf = r.jf_t = r.jf_u = r.jf_tt = r.jf_tu = r.jf_uu = zj;
  return r;
}

enum class ProblemKind { heat1d_dd, heat1d_dn, heat2d };

struct ManufacturedProblem {
  std::string name;
  int dimension = 1;
  BoundaryKind left = BoundaryKind::dirichlet;   // 1D: x = 0
  BoundaryKind right = BoundaryKind::dirichlet;  // 1D: x = 1
  double final_time = 1.0;
  /// d^dt u / dt^dt at (x, y, t), dt = 0..3.
  std::function<double(double x, double y, double t, int dt)> exact;
  std::function<Jet(const Jet& x, const Jet& y, double t, int dt)> exact_jet;
  ReactionTerm reaction;

  double u(double x, double y, double t) const { return exact(x, y, t, 0); }

  /// Jet of d^dt u / dt^dt about (x, y).
  Jet jet(double x, double y, double t, int dt) const {
    return exact_jet(Jet::variable(0, x), Jet::variable(1, y), t, dt);
  }

  /// The boundary datum of a node and its time derivatives: the value at
  /// Dirichlet nodes, d/d(normal axis) at Neumann nodes.
  double boundary_datum(const BoundaryNode& b, double t, int dt) const {
    if (b.kind == BoundaryKind::dirichlet) return exact(b.x, b.y, t, dt);
    const Jet j = jet(b.x, b.y, t, dt);
    return b.normal_axis == 0 ? j.derivative(1, 0) : j.derivative(0, 1);
  }

  Vector boundary_data(const Grid& grid, double t, int dt = 0) const {
    Vector g(grid.boundary_size());
    for (Index i = 0; i < g.size(); ++i) g(i) = boundary_datum(grid.boundary[static_cast<std::size_t>(i)], t, dt);
    return g;
  }

  Vector initial_state(const Grid& grid) const {
    return grid.project([this](double x, double y) { return u(x, y, 0.0); });
  }
  Vector exact_state(const Grid& grid, double t) const {
    return grid.project([this, t](double x, double y) { return u(x, y, t); });
  }
};

namespace detail {

// u = cos(s), s = x (+ y) + t; time derivatives shift the phase.
template <class T>
T cosine_solution(const T& x, const T& y, int dimension, double t, int dt) {
  using std::cos;
  const double shift = t + dt * std::numbers::pi / 2;
  return dimension == 1 ? cos(x + shift) : cos(x + y + shift);
}

// h = u_t - Laplace(u) - u^2 = -sin(s) + d cos(s) - cos(s)^2 and its time
// derivatives; cos^2 = (1 + cos 2s) / 2.
template <class T>
T cosine_source(const T& x, const T& y, int dimension, double t, int dt) {
  using std::cos;
  using std::sin;
  const T s = dimension == 1 ? x + t : x + y + t;
  const double phase = dt * std::numbers::pi / 2;
  const T squared = dt == 0 ? cos(s) * cos(s) : std::ldexp(1.0, dt - 1) * cos(2.0 * s + phase);
  return -sin(s + phase) + static_cast<double>(dimension) * cos(s + phase) - squared;
}

inline ManufacturedProblem cosine_problem(std::string name, int dimension, BoundaryKind right) {
  ManufacturedProblem p;
  p.name = std::move(name);
  p.dimension = dimension;
  p.right = right;
  p.exact = [dimension](double x, double y, double t, int dt) { return cosine_solution(x, y, dimension, t, dt); };
  p.exact_jet = [dimension](const Jet& x, const Jet& y, double t, int dt) {
    return cosine_solution(x, y, dimension, t, dt);
  };
  SourceTerm h;
  h.scalar = [dimension](double x, double y, double t, int dt) { return cosine_source(x, y, dimension, t, dt); };
  h.jet = [dimension](const Jet& x, const Jet& y, double t, int dt) {
    return cosine_source(x, y, dimension, t, dt);
  };
  p.reaction = quadratic_reaction(std::move(h));
  return p;
}

}  // namespace detail

/// u = cos(x + t) on [0, 1], u_t = u_xx + u^2 + h. Dirichlet data at both
/// ends, or Dirichlet at 0 and u_x(1, t) = -sin(1 + t).
inline ManufacturedProblem problem_1d(BoundaryKind right) {
  return detail::cosine_problem(right == BoundaryKind::dirichlet ? "heat1d-dd" : "heat1d-dn", 1, right);
}

/// u = cos(t + x + y) on the unit square with Dirichlet data on all sides.
inline ManufacturedProblem problem_2d() { return detail::cosine_problem("heat2d", 2, BoundaryKind::dirichlet); }

/// u = 0 with f = u^2: homogeneous data, f vanishing with all its derivatives
/// on the boundary.
inline ManufacturedProblem problem_zero(int dimension, BoundaryKind right = BoundaryKind::dirichlet) {
  ManufacturedProblem p;
  p.name = "zero";
  p.dimension = dimension;
  p.right = right;
  p.exact = [](double, double, double, int) { return 0.0; };
  p.exact_jet = [](const Jet&, const Jet&, double, int) { return Jet(0.0); };
  SourceTerm h;
  h.scalar = [](double, double, double, int) { return 0.0; };
  h.jet = [](const Jet&, const Jet&, double, int) { return Jet(0.0); };
  p.reaction = quadratic_reaction(std::move(h));
  return p;
}

/// Steady u = 1 + x (+ y) with f = 0: time-constant boundary data.
inline ManufacturedProblem problem_steady_linear(int dimension) {
  ManufacturedProblem p;
  p.name = "steady-linear";
  p.dimension = dimension;
  p.exact = [dimension](double x, double y, double, int dt) {
    if (dt > 0) return 0.0;
    return 1.0 + x + (dimension == 2 ? y : 0.0);
  };
  p.exact_jet = [dimension](const Jet& x, const Jet& y, double, int dt) {
    if (dt > 0) return Jet(0.0);
    return dimension == 2 ? 1.0 + x + y : 1.0 + x;
  };
  p.reaction = zero_reaction();
  return p;
}

inline ManufacturedProblem make_problem(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::heat1d_dd: return problem_1d(BoundaryKind::dirichlet);
    case ProblemKind::heat1d_dn: return problem_1d(BoundaryKind::neumann);
    case ProblemKind::heat2d: return problem_2d();
  }
  throw std::invalid_argument("unknown problem kind");
}

inline ProblemKind parse_problem(const std::string& label) {
  if (label == "heat1d-dd") return ProblemKind::heat1d_dd;
  if (label == "heat1d-dn") return ProblemKind::heat1d_dn;
  if (label == "heat2d") return ProblemKind::heat2d;
  throw std::invalid_argument("unknown problem '" + label + "' (expected heat1d-dd, heat1d-dn or heat2d)");
}

/// Space discretization matching the problem's geometry and boundary kinds;
/// n interior nodes per direction.
inline SemidiscreteOperators discretize(const ManufacturedProblem& p, int n) {
  if (p.dimension == 2) return assemble_2d_ninepoint(n);
  if (p.left != BoundaryKind::dirichlet) throw std::invalid_argument("discretize: left boundary must be Dirichlet");
  return p.right == BoundaryKind::dirichlet ? assemble_1d_dirichlet(n) : assemble_1d_dirichlet_neumann(n);
}

/// u_t - Laplace(u) - f(x, t, u) at a point, through jets.
inline double pde_residual(const ManufacturedProblem& p, double x, double y, double t) {
  const Jet u = p.jet(x, y, t, 0);
  const double ut = p.exact(x, y, t, 1);
  const double lap = laplacian(u).value();
  return ut - lap - p.reaction.f(x, y, t, u.value());
}

/// Largest PDE residual over random points in the domain and t in [0, T].
inline double max_pde_residual(const ManufacturedProblem& p, int samples, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    const double x = unit(rng);
    const double y = p.dimension == 2 ? unit(rng) : 0.0;
    const double t = p.final_time * unit(rng);
    worst = std::max(worst, std::abs(pde_residual(p, x, y, t)));
  }
  return worst;
}

/// Largest deviation between the boundary data and the trace of the exact
/// solution, with the Neumann datum compared against a centered difference
/// of u (so the check is independent of the jet arithmetic).
inline double trace_consistency_defect(const ManufacturedProblem& p, const Grid& grid, double t) {
  double worst = 0.0;
  const double delta = 1e-5;
  for (const auto& b : grid.boundary) {
    double trace;
    if (b.kind == BoundaryKind::dirichlet) {
      trace = p.u(b.x, b.y, t);
    } else {
      const double dx = b.normal_axis == 0 ? delta : 0.0;
      const double dy = b.normal_axis == 1 ? delta : 0.0;
      trace = (p.u(b.x + dx, b.y + dy, t) - p.u(b.x - dx, b.y - dy, t)) / (2.0 * delta);
    }
    worst = std::max(worst, std::abs(trace - p.boundary_datum(b, t, 0)));
  }
  return worst;
}

/// Validates a problem before integration: PDE residual and trace checks.
inline void validate_problem(const ManufacturedProblem& p, const Grid& grid) {
  const double r = max_pde_residual(p, 64, 12345u);
  if (r > 1e-10) throw std::runtime_error("problem '" + p.name + "' fails the PDE residual check: " + std::to_string(r));
  for (double t : {0.0, 0.5 * p.final_time, p.final_time}) {
    const double d = trace_consistency_defect(p, grid, t);
    if (d > 1e-8) throw std::runtime_error("problem '" + p.name + "' fails the trace check: " + std::to_string(d));
  }
}

}  // namespace eerk
