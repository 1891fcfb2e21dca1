#include <gtest/gtest.h>

#include <cmath>

#include "eerk/boundary_data.hpp"
#include "eerk/problems.hpp"

namespace {

using namespace eerk;

Index node_at(const Grid& g, double x, double y = 0.0) {
  for (Index b = 0; b < g.boundary_size(); ++b) {
    const BoundaryNode& n = g.boundary[static_cast<std::size_t>(b)];
    if (std::abs(n.x - x) < 1e-14 && std::abs(n.y - y) < 1e-14) return b;
  }
  throw std::logic_error("no boundary node there");
}

// The same manufactured solution with f = u^2 alone (the source dropped), so
// that f_t = 0 as in a purely autonomous reaction.
ManufacturedProblem autonomous_variant() {
  ManufacturedProblem p = problem_1d(BoundaryKind::dirichlet);
  SourceTerm none;
  none.scalar = [](double, double, double, int) { return 0.0; };
  none.jet = [](const Jet&, const Jet&, double, int) { return Jet(0.0); };
  p.reaction = quadratic_reaction(none);
  return p;
}

TEST(ExactTraces, DirichletValues) {
  const ManufacturedProblem p = problem_1d(BoundaryKind::dirichlet);
  const SemidiscreteOperators ops = discretize(p, 20);
  const BoundaryTraces tr = exact_traces(p, ops.grid, 0.0);
  const Index b0 = node_at(ops.grid, 0.0);
  EXPECT_NEAR(tr.u(b0), 1.0, 1e-15);
  // boundary of A u = g' - f(t, g): -sin(0) - cos^2(0) - h(0, 0) with h(0, 0) = 0.
  EXPECT_NEAR(tr.au()(b0), -1.0, 1e-14);
  EXPECT_NEAR(tr.au()(b0), p.boundary_datum(ops.grid.boundary[0], 0.0, 1) - p.reaction.f(0, 0, 0, 1.0), 1e-14);
  for (double t : {0.0, 0.3, 1.0}) {
    const BoundaryTraces trt = exact_traces(p, ops.grid, t);
    EXPECT_LE((trt.u - p.boundary_data(ops.grid, t)).lpNorm<Eigen::Infinity>(), 1e-15);
  }
}

TEST(ExactTraces, SecondCompositeWithAutonomousReaction) {
  const ManufacturedProblem p = autonomous_variant();
  const SemidiscreteOperators ops = discretize(p, 20);
  const BoundaryTraces tr = exact_traces(p, ops.grid, 0.0);
  const Index b0 = node_at(ops.grid, 0.0);
  // u_tt - f_t - f_u u_t = -cos(0) - 0 - 2 cos(0) (-sin(0))
  EXPECT_NEAR(tr.second()(b0), -1.0, 1e-14);
}

TEST(ExactTraces, SecondCompositeWithSource) {
  const ManufacturedProblem p = problem_1d(BoundaryKind::dirichlet);
  const SemidiscreteOperators ops = discretize(p, 20);
  const BoundaryTraces tr = exact_traces(p, ops.grid, 0.0);
  const Index b0 = node_at(ops.grid, 0.0);
  // With the source, f_t = h_t = -cos - sin + 2 sin cos = -1 at the origin.
  EXPECT_NEAR(tr.f_t(b0), -1.0, 1e-14);
  EXPECT_NEAR(tr.second()(b0), 0.0, 1e-14);
}

// A^2 u = u_xxxx = cos(x + t) and A u = -cos(x + t) for this solution; the
// composites must reproduce them through the equation.
TEST(ExactTraces, CompositesSatisfyIdentities) {
  const ManufacturedProblem p = problem_1d(BoundaryKind::dirichlet);
  const SemidiscreteOperators ops = discretize(p, 20);
  for (double t : {0.0, 0.4, 0.9}) {
    const BoundaryTraces tr = exact_traces(p, ops.grid, t);
    for (Index b = 0; b < tr.size(); ++b) {
      const double x = ops.grid.boundary[static_cast<std::size_t>(b)].x;
      EXPECT_NEAR(tr.au()(b), -std::cos(x + t), 1e-12);
      EXPECT_NEAR(tr.second()(b) - tr.Af(b), std::cos(x + t), 1e-10);
    }
  }
}

TEST(ExactTraces, CompositesMatchPrimitives) {
  const ManufacturedProblem p = problem_2d();
  const SemidiscreteOperators ops = discretize(p, 9);
  const BoundaryTraces tr = exact_traces(p, ops.grid, 0.45);
  for (Index b = 0; b < tr.size(); ++b) {
    const double x = ops.grid.boundary[static_cast<std::size_t>(b)].x;
    const double y = ops.grid.boundary[static_cast<std::size_t>(b)].y;
    const double t = 0.45;
    const double u = p.u(x, y, t), ut = p.exact(x, y, t, 1), utt = p.exact(x, y, t, 2);
    const ReactionTerm& r = p.reaction;
    // Dirichlet nodes: the boundary operator is pointwise evaluation.
    EXPECT_NEAR(tr.f(b), r.f(x, y, t, u), 1e-13);
    EXPECT_NEAR(tr.f_dot(b), r.f_t(x, y, t, u) + r.f_u(x, y, t, u) * ut, 1e-13);
    EXPECT_NEAR(tr.fu_utt(b), r.f_u(x, y, t, u) * utt, 1e-13);
    EXPECT_NEAR(tr.f2(b), r.f_tt(x, y, t, u) + 2 * r.f_tu(x, y, t, u) * ut + r.f_uu(x, y, t, u) * ut * ut, 1e-12);
    // 2D: A u = -2 cos(x + y + t), A^2 u = 4 cos(x + y + t)
    EXPECT_NEAR(tr.au()(b), -2.0 * std::cos(x + y + t), 1e-12);
    EXPECT_NEAR(tr.second()(b) - tr.Af(b), 4.0 * std::cos(x + y + t), 1e-10);
  }
}

TEST(ExactTraces, NeumannNodeReadsNormalDerivative) {
  const ManufacturedProblem p = problem_1d(BoundaryKind::neumann);
  const SemidiscreteOperators ops = discretize(p, 20);
  const double t = 0.2;
  const BoundaryTraces tr = exact_traces(p, ops.grid, t);
  const Index b1 = node_at(ops.grid, 1.0);
  EXPECT_NEAR(tr.u(b1), -std::sin(1.0 + t), 1e-14);
  EXPECT_NEAR(tr.u_t(b1), -std::cos(1.0 + t), 1e-14);
  // d/dx of f = u^2 + h: 2 u u_x + h_x
  const double d = 1e-5;
  const auto f_at = [&](double x) { return p.reaction.f(x, 0, t, p.u(x, 0, t)); };
  EXPECT_NEAR(tr.f(b1), (f_at(1 + d) - f_at(1 - d)) / (2 * d), 1e-8);
}

TEST(Bdf, ExactOnPolynomials) {
  const double k = 0.1;
  TraceHistory h2(k);
  for (int i = 4; i >= 0; --i) {
    const double t = 1.0 - i * k;
    h2.push(t, Vector::Constant(1, t * t));
  }
  EXPECT_NEAR(bdf_time_derivative(h2, BdfFormula::first_bdf2)(0), 2.0, 1e-12);
  EXPECT_NEAR(bdf_time_derivative(h2, BdfFormula::first_bdf4)(0), 2.0, 1e-12);

  TraceHistory h4(k);
  for (int i = 4; i >= 0; --i) {
    const double t = 1.0 - i * k;
    h4.push(t, Vector::Constant(1, std::pow(t, 4)));
  }
  EXPECT_NEAR(bdf_time_derivative(h4, BdfFormula::first_bdf4)(0), 4.0, 1e-11);
}

TEST(Bdf, SecondDerivativeExactOnQuadratics) {
  const double k = 0.05;
  TraceHistory h(k);
  for (int i = 6; i >= 0; --i) {
    const double t = 0.7 - i * k;
    h.push(t, Vector::Constant(1, 3.0 * t * t - t + 2.0));
  }
  EXPECT_NEAR(bdf_time_derivative(h, BdfFormula::second_bdf4)(0), 6.0, 1e-9);
}

double bdf_error(BdfFormula f, double k) {
  TraceHistory h(k);
  const std::size_t width = bdf_width(f);
  for (std::size_t i = width; i-- > 0;) {
    const double t = 1.0 - static_cast<double>(i) * k;
    h.push(t, Vector::Constant(1, std::exp(t)));
  }
  return std::abs(bdf_time_derivative(h, f)(0) - std::exp(1.0));
}

TEST(Bdf, RefinementOrders) {
  struct Case {
    BdfFormula f;
    double order;
    double tol;
  };
  for (const Case& c : {Case{BdfFormula::first_bdf2, 2.0, 0.1}, Case{BdfFormula::first_bdf4, 4.0, 0.15},
                        Case{BdfFormula::second_bdf4, 2.0, 0.15}}) {
    std::vector<double> e;
    for (double k : {0.04, 0.02, 0.01}) e.push_back(bdf_error(c.f, k));
    for (std::size_t i = 1; i < e.size(); ++i) EXPECT_NEAR(std::log2(e[i - 1] / e[i]), c.order, c.tol);
  }
}

TEST(Bdf, HistoryChecks) {
  TraceHistory h(0.1);
  EXPECT_THROW(TraceHistory(0.1, 3), std::invalid_argument);
  EXPECT_THROW(TraceHistory(0.0), std::invalid_argument);
  h.push(0.0, Vector::Zero(2));
  EXPECT_THROW(h.push(0.25, Vector::Zero(2)), std::invalid_argument);
  EXPECT_THROW(h.push(0.1, Vector::Zero(3)), std::invalid_argument);
  h.push(0.1, Vector::Zero(2));
  EXPECT_THROW(bdf_time_derivative(h, BdfFormula::first_bdf2), std::logic_error);
  for (int i = 2; i < 10; ++i) h.push(0.1 * i, Vector::Zero(2));
  EXPECT_EQ(h.size(), h.depth());
  EXPECT_NEAR(h.time(0), 0.9, 1e-15);
}

// Feeds the numeric provider with the projected exact solution, so that only
// the time and space differentiation errors remain.
BoundaryTraces numeric_at(const ManufacturedProblem& p, const SemidiscreteOperators& ops, double k, int bdf,
                          bool third, double t_end) {
  NumericTraceProvider prov(p, ops, k, bdf, third);
  const int steps = static_cast<int>(std::llround(t_end / k));
  BoundaryTraces tr;
  for (int n = 0; n <= steps; ++n) tr = prov.traces(n, n * k, p.exact_state(ops.grid, n * k));
  return tr;
}

TEST(NumericTraces, DirichletValueIsDatum) {
  const ManufacturedProblem p = problem_2d();
  const SemidiscreteOperators ops = discretize(p, 12);
  const BoundaryTraces tr = numeric_at(p, ops, 0.05, 4, true, 0.5);
  EXPECT_LE((tr.u - p.boundary_data(ops.grid, 0.5)).lpNorm<Eigen::Infinity>(), 1e-15);
  EXPECT_LE((tr.u_t - p.boundary_data(ops.grid, 0.5, 1)).lpNorm<Eigen::Infinity>(), 1e-15);
}

TEST(NumericTraces, NeumannProductConvergesSecondOrder) {
  const ManufacturedProblem p = problem_1d(BoundaryKind::neumann);
  const SemidiscreteOperators ops = discretize(p, 50);
  const Index b1 = node_at(ops.grid, 1.0);
  const double t = 0.5;
  const BoundaryTraces ex = exact_traces(p, ops.grid, t);
  std::vector<double> err;
  for (double k : {1.0 / 20, 1.0 / 40, 1.0 / 80}) {
    const BoundaryTraces tr = numeric_at(p, ops, k, 2, false, t);
    err.push_back(std::abs(tr.fu_fdot(b1) - ex.fu_fdot(b1)) + std::abs(tr.f_dot(b1) - ex.f_dot(b1)));
  }
  for (std::size_t i = 1; i < err.size(); ++i) EXPECT_NEAR(std::log2(err[i - 1] / err[i]), 2.0, 0.15);
}

TEST(NumericTraces, MixedSpaceTimeTermConverges) {
  const ManufacturedProblem p = problem_1d(BoundaryKind::dirichlet);
  const double t = 0.5;
  std::vector<double> err;
  for (int n : {49, 99, 199}) {
    const SemidiscreteOperators ops = discretize(p, n);
    const double k = ops.grid.h;
    const BoundaryTraces ex = exact_traces(p, ops.grid, t);
    const BoundaryTraces tr = numeric_at(p, ops, k, 4, true, t);
    err.push_back((tr.Af_dot - ex.Af_dot).lpNorm<Eigen::Infinity>());
  }
  for (std::size_t i = 1; i < err.size(); ++i) EXPECT_GE(std::log2(err[i - 1] / err[i]), 2.0);
}

TEST(NumericTraces, CflGuardWarnsOnly) {
  const ManufacturedProblem p = problem_1d(BoundaryKind::dirichlet);
  const SemidiscreteOperators ops = discretize(p, 999);
  NumericTraceProvider coarse(p, ops, 0.5, 4, true);
  ASSERT_EQ(coarse.warnings().size(), 1u);
  EXPECT_NE(coarse.warnings()[0].find("k/h"), std::string::npos);
  NumericTraceProvider fine(p, ops, 0.05, 4, true);
  EXPECT_TRUE(fine.warnings().empty());
  // No spatial differentiation at second order: no guard.
  NumericTraceProvider p2(p, ops, 0.5, 2, false);
  EXPECT_TRUE(p2.warnings().empty());
}

TEST(NumericTraces, RejectsUnsupportedConfigurations) {
  const ManufacturedProblem p = problem_1d(BoundaryKind::neumann);
  const SemidiscreteOperators ops = discretize(p, 20);
  EXPECT_THROW(NumericTraceProvider(p, ops, 0.1, 4, true), std::invalid_argument);
  EXPECT_THROW(NumericTraceProvider(p, ops, 0.1, 3, false), std::invalid_argument);
  NumericTraceProvider prov(p, ops, 0.1, 2, false);
  prov.traces(0, 0.0, p.exact_state(ops.grid, 0.0));
  EXPECT_THROW(prov.traces(2, 0.2, p.exact_state(ops.grid, 0.2)), std::logic_error);
}

TEST(NumericTraces, FactoryMatchesMode) {
  const ManufacturedProblem p = problem_1d(BoundaryKind::dirichlet);
  const SemidiscreteOperators ops = discretize(p, 20);
  auto exact = make_trace_provider(TraceMode::exact, p, ops, 0.1, 2, 2);
  auto numeric = make_trace_provider(TraceMode::numeric, p, ops, 0.1, 2, 2);
  const Vector u0 = p.exact_state(ops.grid, 0.0);
  const BoundaryTraces a = exact->traces(0, 0.0, u0);
  const BoundaryTraces b = numeric->traces(0, 0.0, u0);
  // At level 0 the numeric provider bootstraps from exact rates.
  EXPECT_LE((a.u - b.u).lpNorm<Eigen::Infinity>(), 1e-15);
  EXPECT_LE((a.au() - b.au()).lpNorm<Eigen::Infinity>(), 1e-14);
}

}  // namespace
