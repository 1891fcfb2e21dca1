#pragma once

// One EERK step in "slot" form:
//
//     K_i   = e^{c_i k A} U + k sum_l phi_l(c_i k A) S_{i,l},
//     U_new = e^{k A} U     + k sum_l phi_l(k A) R_l,
//
// with S_{i,l} = sum_j lambda(i, j, l) F_j + lift, R_l = sum_i mu(i, l) F_i +
// lift and F_j = P f(t_n + c_j k, K_j). Techniques differ only in the lifts,
// which are C c + D d for boundary-space vectors c, d fixed at the start of
// the step (a LiftPlan). The standard method of lines puts the boundary
// forcing of the semidiscrete system at the stage times into the plan.

#include <chrono>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "eerk/boundary_data.hpp"
#include "eerk/krylov.hpp"
#include "eerk/problems.hpp"
#include "eerk/space_disc.hpp"
#include "eerk/tableau.hpp"

namespace eerk {

enum class Technique { mol, corrected };

/// Variant of the boundary terms of the third-order update. derived follows
/// the expansion of the unsimplified scheme. alternate uses 2 f_t f_u u',
/// 2 (sum lambda / (l+1)! - c_i) A f, f_u [u', u'] and the slot index inside
/// lambda for l >= 5; it loses one order against the unsimplified scheme.
enum class BTermReading { derived, alternate };

struct StepperOptions {
  KrylovOptions krylov{};
  BTermReading reading = BTermReading::derived;
};

struct StepState {
  int n = 0;
  double t = 0.0;
  Vector U;
};

struct StepStats {
  long krylov_iterations = 0;
  long phi_evaluations = 0;

  StepStats& operator+=(const StepStats& o) {
    krylov_iterations += o.krylov_iterations;
    phi_evaluations += o.phi_evaluations;
    return *this;
  }
};

/// Boundary-space coefficients of the C and D lifts, per phi slot l >= 1.
struct SlotLifts {
  std::vector<Vector> c;
  std::vector<Vector> d;

  SlotLifts() = default;
  SlotLifts(int slots, Index nb) : c(static_cast<std::size_t>(slots + 1), Vector::Zero(nb)),
                                   d(static_cast<std::size_t>(slots + 1), Vector::Zero(nb)) {}

  int slots() const { return static_cast<int>(c.size()) - 1; }
  void add_c(int l, double scale, const Vector& v) { c.at(static_cast<std::size_t>(l)).noalias() += scale * v; }
  void add_d(int l, double scale, const Vector& v) { d.at(static_cast<std::size_t>(l)).noalias() += scale * v; }
  bool is_zero() const {
    for (std::size_t l = 0; l < c.size(); ++l) {
      if (c[l].squaredNorm() > 0.0 || d[l].squaredNorm() > 0.0) return false;
    }
    return true;
  }
};

inline SlotLifts operator-(const SlotLifts& a, const SlotLifts& b) {
  if (a.slots() != b.slots()) throw std::invalid_argument("SlotLifts: slot count mismatch");
  SlotLifts out = a;
  for (std::size_t l = 0; l < a.c.size(); ++l) {
    out.c[l] -= b.c[l];
    out.d[l] -= b.d[l];
  }
  return out;
}

struct LiftPlan {
  std::vector<SlotLifts> stages;
  SlotLifts update;
};

/// Boundary terms b_{l,n,c}, b_{l,n,d} (l = 2 .. s + 2) of the third-order
/// update; index 0 and 1 unused.
struct BoundaryCorrectionTerms {
  std::vector<Vector> c;
  std::vector<Vector> d;
};

namespace detail {

inline int plan_slots(const EERKTableau& t) { return t.stages() + 3; }

// e^{tau A} base + k sum_l phi_l(tau A) slots[l].
inline Vector phi_step(const LinearOperator& a, double tau, double k, const Vector& base, const std::vector<Vector>& slots,
                       const KrylovOptions& opt, StepStats& stats) {
  if (tau == 0.0) {
    Vector out = base;
    double inv_fact = 1.0;
    for (std::size_t l = 1; l < slots.size(); ++l) {
      inv_fact /= static_cast<double>(l);
      out.noalias() += (k * inv_fact) * slots[l];
    }
    return out;
  }
  std::vector<Vector> v;
  v.reserve(slots.size());
  v.push_back(base);
  double tau_pow = 1.0;
  for (std::size_t l = 1; l < slots.size(); ++l) {
    tau_pow *= tau;
    v.push_back((k / tau_pow) * slots[l]);
  }
  PhiResult r = phi_combination(a, tau, v, opt);
  stats.krylov_iterations += r.iterations;
  stats.phi_evaluations += 1;
  return std::move(r.value);
}

inline Vector nodal_reaction(const ReactionTerm& r, const Grid& g, double t, const Vector& K) {
  Vector out(K.size());
  for (Index i = 0; i < K.size(); ++i) out(i) = r.f(g.x(i), g.y(i), t, K(i));
  return out;
}

inline std::vector<Vector> lifted(const SemidiscreteOperators& ops, const SlotLifts& lifts) {
  std::vector<Vector> out(lifts.c.size(), Vector::Zero(ops.size()));
  for (std::size_t l = 1; l < lifts.c.size(); ++l) {
    if (lifts.c[l].squaredNorm() > 0.0 || lifts.d[l].squaredNorm() > 0.0) out[l] = ops.lift(lifts.c[l], lifts.d[l]);
  }
  return out;
}

struct EngineRun {
  Vector U;
  std::vector<Vector> K;
  std::vector<Vector> F;
};

inline EngineRun run_engine(const EERKTableau& tab, const SemidiscreteOperators& ops, const ReactionTerm& r,
                            const StepState& state, double k, const LiftPlan& plan, const KrylovOptions& opt,
                            StepStats& stats) {
  const int s = tab.stages();
  EngineRun run;
  run.K.resize(static_cast<std::size_t>(s));
  run.F.resize(static_cast<std::size_t>(s));
  for (int i = 0; i < s; ++i) {
    std::vector<Vector> slots = lifted(ops, plan.stages.at(static_cast<std::size_t>(i)));
    for (int l = 1; l <= s; ++l) {
      for (int j = 0; j < i; ++j) {
        const double lam = tab.lambda(i, j, l);
        if (lam != 0.0) slots[static_cast<std::size_t>(l)].noalias() += lam * run.F[static_cast<std::size_t>(j)];
      }
    }
    const double ci = tab.c(i);
    run.K[static_cast<std::size_t>(i)] = phi_step(ops.A, ci * k, k, state.U, slots, opt, stats);
    run.F[static_cast<std::size_t>(i)] = nodal_reaction(r, ops.grid, state.t + ci * k, run.K[static_cast<std::size_t>(i)]);
  }
  std::vector<Vector> slots = lifted(ops, plan.update);
  for (int l = 1; l <= s; ++l) {
    for (int i = 0; i < s; ++i) {
      const double mu = tab.mu(i, l);
      if (mu != 0.0) slots[static_cast<std::size_t>(l)].noalias() += mu * run.F[static_cast<std::size_t>(i)];
    }
  }
  run.U = phi_step(ops.A, k, k, state.U, slots, opt, stats);
  return run;
}

inline void require_technique(const EERKTableau& tab, int p) {
  tab.require_consistent();
  if (p < 1 || p > 3) throw std::invalid_argument("corrected step: p must be 1, 2 or 3");
  if (tab.classical_order() < p) {
    throw std::invalid_argument("corrected step: p = " + std::to_string(p) + " needs classical order >= p, tableau '" +
                                tab.name() + "' has " + std::to_string(tab.classical_order()));
  }
  if (!satisfies_mu_conditions(tab)) {
    throw std::invalid_argument("corrected step: tableau '" + tab.name() + "' violates the mu column-sum conditions");
  }
  if (p >= 2 && !satisfies_lambda_conditions(tab)) {
    throw std::invalid_argument("corrected step: tableau '" + tab.name() + "' violates the lambda row-sum conditions");
  }
}

}  // namespace detail

/// Boundary forcing of the semidiscrete system U' = A U + C g - D (u_t - f) +
/// P f at time t, from data only: g and, at Dirichlet nodes, g_t - f(t, g).
inline void boundary_forcing(const ManufacturedProblem& p, const Grid& grid, double t, Vector& c, Vector& d) {
  c = p.boundary_data(grid, t, 0);
  d = Vector::Zero(grid.boundary_size());
  for (Index b = 0; b < grid.boundary_size(); ++b) {
    const BoundaryNode& node = grid.boundary[static_cast<std::size_t>(b)];
    if (node.kind != BoundaryKind::dirichlet) continue;
    const double g = c(b);
    d(b) = -(p.boundary_datum(node, t, 1) - p.reaction.f(node.x, node.y, t, g));
  }
}

/// Plan of the standard method of lines: every F_j carries the boundary
/// forcing at its own stage time.
inline LiftPlan mol_plan(const EERKTableau& tab, const SemidiscreteOperators& ops, const ManufacturedProblem& p,
                         double t_n, double k) {
  const int s = tab.stages();
  const int slots = detail::plan_slots(tab);
  const Index nb = ops.boundary_size();
  std::vector<Vector> gc(static_cast<std::size_t>(s)), gd(static_cast<std::size_t>(s));
  for (int j = 0; j < s; ++j) boundary_forcing(p, ops.grid, t_n + tab.c(j) * k, gc[static_cast<std::size_t>(j)],
                                               gd[static_cast<std::size_t>(j)]);
  LiftPlan plan;
  plan.stages.assign(static_cast<std::size_t>(s), SlotLifts(slots, nb));
  plan.update = SlotLifts(slots, nb);
  for (int l = 1; l <= s; ++l) {
    for (int i = 0; i < s; ++i) {
      for (int j = 0; j < i; ++j) {
        const double lam = tab.lambda(i, j, l);
        if (lam == 0.0) continue;
        plan.stages[static_cast<std::size_t>(i)].add_c(l, lam, gc[static_cast<std::size_t>(j)]);
        plan.stages[static_cast<std::size_t>(i)].add_d(l, lam, gd[static_cast<std::size_t>(j)]);
      }
      const double mu = tab.mu(i, l);
      if (mu == 0.0) continue;
      plan.update.add_c(l, mu, gc[static_cast<std::size_t>(i)]);
      plan.update.add_d(l, mu, gd[static_cast<std::size_t>(i)]);
    }
  }
  return plan;
}

/// b_{l,n,c} and b_{l,n,d} of the third-order update.
inline BoundaryCorrectionTerms assemble_b_terms(const EERKTableau& tab, const TableauScalars& sc,
                                                const BoundaryTraces& tr, double k,
                                                BTermReading reading = BTermReading::derived) {
  const int s = tab.stages();
  const Index nb = tr.size();
  const bool alternate = reading == BTermReading::alternate;
  BoundaryCorrectionTerms b;
  b.c.assign(static_cast<std::size_t>(s + 3), Vector::Zero(nb));
  b.d.assign(static_cast<std::size_t>(s + 3), Vector::Zero(nb));

  // sum_i mu(i, n) times the k^2 part of f_{n,i,2}, over k^2:
  //   (Gamma_i - c_i^2/2) f_u f' + c_i^2/2 f_u u'' + c_i (2 Lambda_i - c_i)/2 f_u A f + c_i^2/2 f2.
  // lambda_slot > 0 selects the alternate variant for l >= 5 (lambda at that
  // slot instead of the full Lambda_i).
  auto q_term = [&](int n, bool alternate_variant, int lambda_slot) {
    double alpha = 0.0, beta = 0.0, gamma = 0.0;
    for (int i = 0; i < s; ++i) {
      const double mu = tab.mu(i, n);
      if (mu == 0.0) continue;
      const double ci = tab.c(i);
      alpha += mu * (sc.gamma[static_cast<std::size_t>(i)] - 0.5 * ci * ci);
      beta += mu * 0.5 * ci * ci;
      double big_lambda = sc.big_lambda[static_cast<std::size_t>(i)];
      if (alternate_variant && lambda_slot > 0) {
        big_lambda = 0.0;
        if (lambda_slot <= s) {
          for (int j = 0; j < i; ++j) {
            big_lambda += tab.lambda(i, j, lambda_slot) * rational_factorial_inverse(lambda_slot + 1).to_double();
          }
        }
      }
      gamma += alternate_variant && lambda_slot == 0 ? mu * ci * (big_lambda - ci)
                                                   : mu * 0.5 * ci * (2.0 * big_lambda - ci);
    }
    const Vector& f2 = alternate_variant ? tr.f2_alternate : tr.f2;
    return Vector(alpha * tr.fu_fdot + beta * tr.fu_utt + gamma * tr.fu_Af + beta * f2);
  };

  const double m1 = sc.m_at(1), m2 = sc.m_at(2), m3 = sc.m_at(3);
  b.c[2] = tr.u_t + (k * m1) * tr.f_dot + (k * k) * q_term(1, false, 0);
  b.d[2] = tr.second() + (k * m1) * tr.Af_dot;
  b.c[3] = tr.u_tt + (m2 - 1.0) * tr.f_dot + k * q_term(2, alternate, 0) + (k * m1) * tr.Af_dot;
  b.d[3] = tr.third() + (m2 - 1.0) * tr.Af_dot;
  if (s + 2 >= 4) {
    const Vector bracket = alternate ? Vector(tr.u_ttt - tr.f2_fu - tr.fu_utt - tr.Af_dot)
                                   : Vector(tr.third() - tr.Af_dot);
    b.c[4] = m3 * tr.f_dot + k * bracket + k * q_term(3, alternate, 0) + (k * m2) * tr.Af_dot;
    b.d[4] = m3 * tr.Af_dot;
  }
  for (int l = 5; l <= s + 2; ++l) {
    b.c[static_cast<std::size_t>(l)] = sc.m_at(l - 1) * tr.f_dot + k * q_term(l - 1, alternate, alternate ? l : 0) +
                                       (k * sc.m_at(l - 2)) * tr.Af_dot;
    b.d[static_cast<std::size_t>(l)] = sc.m_at(l - 1) * tr.Af_dot;
  }
  return b;
}

/// Plan of the simplified corrected scheme of local order p + 1.
inline LiftPlan corrected_plan(int p, const EERKTableau& tab, const TableauScalars& sc, const BoundaryTraces& tr,
                               double k, BTermReading reading = BTermReading::derived) {
  const int s = tab.stages();
  const int slots = detail::plan_slots(tab);
  const Index nb = tr.size();
  if (p == 3 && !tr.third_order) throw std::invalid_argument("corrected p = 3 needs third-order boundary traces");
  LiftPlan plan;
  plan.stages.assign(static_cast<std::size_t>(s), SlotLifts(slots, nb));
  plan.update = SlotLifts(slots, nb);
  const Vector au = tr.au();
  const Vector second = tr.second();

  for (int i = 0; i < s; ++i) {
    SlotLifts& st = plan.stages[static_cast<std::size_t>(i)];
    const double ci = tab.c(i);
    if (ci == 0.0) continue;
    st.add_c(1, ci, tr.u);
    if (p == 1) continue;
    st.add_d(1, -ci, au);
    if (p == 2) {
      st.add_c(2, ci * ci * k, tr.u_t);
      continue;
    }
    st.add_c(2, ci * ci * k, tr.u_t);
    st.add_c(2, ci * k * k * sc.lambda_c_at(1, i), tr.f_dot);
    st.add_d(2, -ci * ci * k, second);
    st.add_c(3, ci * k * k * ci * ci, tr.u_tt);
    st.add_c(3, ci * k * k * (sc.lambda_c_at(2, i) - ci * ci), tr.f_dot);
    for (int l = 4; l <= s + 1; ++l) st.add_c(l, ci * k * k * sc.lambda_c_at(l - 1, i), tr.f_dot);
  }

  SlotLifts& up = plan.update;
  up.add_c(1, 1.0, tr.u);
  up.add_d(1, -1.0, au);
  if (p == 1) {
    up.add_c(2, k, tr.u_t);
  } else if (p == 2) {
    up.add_c(2, k, tr.u_t);
    up.add_c(2, k * k * sc.m_at(1), tr.f_dot);
    up.add_d(2, -k, second);
    up.add_c(3, k * k, tr.u_tt);
    up.add_c(3, k * k * (sc.m_at(2) - 1.0), tr.f_dot);
    for (int l = 4; l <= s + 1; ++l) up.add_c(l, k * k * sc.m_at(l - 1), tr.f_dot);
  } else {
    const BoundaryCorrectionTerms b = assemble_b_terms(tab, sc, tr, k, reading);
    up.add_c(2, k, b.c[2]);
    up.add_d(2, -k, b.d[2]);
    for (int l = 3; l <= s + 2; ++l) {
      up.add_c(l, k * k, b.c[static_cast<std::size_t>(l)]);
      up.add_d(l, -k * k, b.d[static_cast<std::size_t>(l)]);
    }
  }
  return plan;
}

/// Plan of the unsimplified corrected scheme, evaluated from the exact
/// solution. The nonlinear substitutions f(t_n + c_i k, u + c_i k u') and
/// f(t_n + c_i k, u + c_i k A u + ...) are used in their defining form.
inline LiftPlan unsimplified_plan(int p, const EERKTableau& tab, const TableauScalars& sc, const ManufacturedProblem& prob,
                                  const Grid& grid, double t, double k) {
  if (p < 1 || p > 3) throw std::invalid_argument("unsimplified step: p must be 1, 2 or 3");
  const int s = tab.stages();
  const int slots = detail::plan_slots(tab);
  const Index nb = grid.boundary_size();
  const ReactionTerm& r = prob.reaction;

  // Boundary images, one entry per node.
  Vector bu(nb), bau(nb), ba2u(nb), ba3u(nb), bf(nb), baf(nb), ba2f(nb);
  std::vector<Vector> bf1(static_cast<std::size_t>(s), Vector(nb)), baf1(static_cast<std::size_t>(s), Vector(nb)),
      bf2(static_cast<std::size_t>(s), Vector(nb));
  for (Index b = 0; b < nb; ++b) {
    const BoundaryNode& node = grid.boundary[static_cast<std::size_t>(b)];
    auto op = [&node](const Jet& j) { return apply_boundary_operator(j, node); };
    const Jet x = Jet::variable(0, node.x);
    const Jet y = Jet::variable(1, node.y);
    const Jet u = prob.jet(node.x, node.y, t, 0);
    const Jet ut = prob.jet(node.x, node.y, t, 1);
    const Jet au = laplacian(u);
    const Jet a2u = laplacian(au);
    const Jet f = r.jf(x, y, t, u);
    const Jet af = laplacian(f);
    bu(b) = op(u);
    bau(b) = op(au);
    ba2u(b) = op(a2u);
    ba3u(b) = op(laplacian(a2u));
    bf(b) = op(f);
    baf(b) = op(af);
    ba2f(b) = op(laplacian(af));
    std::vector<Jet> f1(static_cast<std::size_t>(s));
    for (int i = 0; i < s; ++i) {
      const double ci = tab.c(i);
      f1[static_cast<std::size_t>(i)] = r.jf(x, y, t + ci * k, u + (ci * k) * ut);
      bf1[static_cast<std::size_t>(i)](b) = op(f1[static_cast<std::size_t>(i)]);
      baf1[static_cast<std::size_t>(i)](b) = op(laplacian(f1[static_cast<std::size_t>(i)]));
    }
    for (int i = 0; i < s; ++i) {
      const double ci = tab.c(i);
      Jet arg = u + (ci * k) * au + (0.5 * ci * ci * k * k) * a2u;
      for (int j = 0; j < i; ++j) {
        for (int l = 1; l <= s; ++l) {
          const double lam = tab.lambda(i, j, l);
          if (lam == 0.0) continue;
          arg += (k * lam * rational_factorial_inverse(l).to_double()) * f1[static_cast<std::size_t>(j)];
          arg += (k * lam * ci * k * rational_factorial_inverse(l + 1).to_double()) * af;
        }
      }
      bf2[static_cast<std::size_t>(i)](b) = op(r.jf(x, y, t + ci * k, arg));
    }
  }
  (void)sc;

  LiftPlan plan;
  plan.stages.assign(static_cast<std::size_t>(s), SlotLifts(slots, nb));
  plan.update = SlotLifts(slots, nb);
  for (int i = 0; i < s; ++i) {
    SlotLifts& st = plan.stages[static_cast<std::size_t>(i)];
    const double ci = tab.c(i);
    st.add_c(1, ci, bu);
    if (p >= 2) {
      st.add_d(1, -ci, bau);
      st.add_c(2, ci * ci * k, bau);
    }
    if (p >= 3) {
      st.add_d(2, -ci * ci * k, ba2u);
      st.add_c(3, ci * ci * ci * k * k, ba2u);
    }
    for (int j = 0; j < i; ++j) {
      for (int l = 1; l <= s; ++l) {
        const double lam = tab.lambda(i, j, l);
        if (lam == 0.0 || p == 1) continue;
        if (p == 2) {
          st.add_c(l + 1, lam * ci * k, bf);
        } else {
          st.add_c(l + 1, lam * ci * k, bf1[static_cast<std::size_t>(j)]);
          st.add_d(l + 1, -lam * ci * k, baf);
          st.add_c(l + 2, lam * ci * ci * k * k, baf);
        }
      }
    }
  }

  SlotLifts& up = plan.update;
  up.add_c(1, 1.0, bu);
  up.add_d(1, -1.0, bau);
  up.add_c(2, k, bau);
  if (p >= 2) {
    up.add_d(2, -k, ba2u);
    up.add_c(3, k * k, ba2u);
  }
  if (p >= 3) {
    up.add_d(3, -k * k, ba3u);
    up.add_c(4, k * k * k, ba3u);
  }
  for (int i = 0; i < s; ++i) {
    for (int l = 1; l <= s; ++l) {
      const double mu = tab.mu(i, l);
      if (mu == 0.0) continue;
      if (p == 1) {
        up.add_c(l + 1, k * mu, bf);
      } else if (p == 2) {
        up.add_c(l + 1, k * mu, bf1[static_cast<std::size_t>(i)]);
        up.add_d(l + 1, -k * mu, baf);
        up.add_c(l + 2, k * k * mu, baf);
      } else {
        up.add_c(l + 1, k * mu, bf2[static_cast<std::size_t>(i)]);
        up.add_d(l + 1, -k * mu, baf1[static_cast<std::size_t>(i)]);
        up.add_c(l + 2, k * k * mu, baf1[static_cast<std::size_t>(i)]);
        up.add_d(l + 2, -k * k * mu, ba2f);
        up.add_c(l + 3, k * k * k * mu, ba2f);
      }
    }
  }
  return plan;
}

/// Runs one step with the given plan.
inline StepState step_with_plan(const EERKTableau& tab, const SemidiscreteOperators& ops, const ReactionTerm& r,
                                const StepState& state, double k, const LiftPlan& plan,
                                const StepperOptions& opt = {}, StepStats* stats = nullptr) {
  if (state.U.size() != ops.size()) throw std::invalid_argument("step: state dimension mismatch");
  StepStats local;
  detail::EngineRun run = detail::run_engine(tab, ops, r, state, k, plan, opt.krylov, local);
  if (stats) *stats += local;
  return {state.n + 1, state.t + k, std::move(run.U)};
}

inline StepState mol_step(const EERKTableau& tab, const SemidiscreteOperators& ops, const ManufacturedProblem& p,
                          const StepState& state, double k, const StepperOptions& opt = {},
                          StepStats* stats = nullptr) {
  tab.require_consistent();
  return step_with_plan(tab, ops, p.reaction, state, k, mol_plan(tab, ops, p, state.t, k), opt, stats);
}

inline StepState corrected_step(int p, const EERKTableau& tab, const SemidiscreteOperators& ops,
                                const ReactionTerm& r, const BoundaryTraces& traces, const StepState& state, double k,
                                const StepperOptions& opt = {}, StepStats* stats = nullptr) {
  detail::require_technique(tab, p);
  const TableauScalars sc(tab);
  return step_with_plan(tab, ops, r, state, k, corrected_plan(p, tab, sc, traces, k, opt.reading), opt, stats);
}

inline StepState corrected_step_p1(const EERKTableau& tab, const SemidiscreteOperators& ops, const ReactionTerm& r,
                                   const BoundaryTraces& traces, const StepState& state, double k,
                                   const StepperOptions& opt = {}, StepStats* stats = nullptr) {
  return corrected_step(1, tab, ops, r, traces, state, k, opt, stats);
}
inline StepState corrected_step_p2(const EERKTableau& tab, const SemidiscreteOperators& ops, const ReactionTerm& r,
                                   const BoundaryTraces& traces, const StepState& state, double k,
                                   const StepperOptions& opt = {}, StepStats* stats = nullptr) {
  return corrected_step(2, tab, ops, r, traces, state, k, opt, stats);
}
inline StepState corrected_step_p3(const EERKTableau& tab, const SemidiscreteOperators& ops, const ReactionTerm& r,
                                   const BoundaryTraces& traces, const StepState& state, double k,
                                   const StepperOptions& opt = {}, StepStats* stats = nullptr) {
  return corrected_step(3, tab, ops, r, traces, state, k, opt, stats);
}

inline StepState unsimplified_step(int p, const EERKTableau& tab, const SemidiscreteOperators& ops,
                                   const ManufacturedProblem& prob, const StepState& state, double k,
                                   const StepperOptions& opt = {}, StepStats* stats = nullptr) {
  tab.require_consistent();
  const TableauScalars sc(tab);
  return step_with_plan(tab, ops, prob.reaction, state, k, unsimplified_plan(p, tab, sc, prob, ops.grid, state.t, k),
                        opt, stats);
}

/// (unsimplified step) - (simplified step) from the same state, with exact
/// traces. The difference is propagated through the (linear) phi
/// combinations directly, so it is resolved far below the Krylov tolerance
/// of the steps themselves. With update_only the stage lifts of the
/// simplified scheme are used in both.
inline Vector step_difference(int p, const EERKTableau& tab, const SemidiscreteOperators& ops,
                              const ManufacturedProblem& prob, const StepState& state, double k,
                              const StepperOptions& opt = {}, bool update_only = false) {
  detail::require_technique(tab, p);
  const TableauScalars sc(tab);
  const BoundaryTraces tr = exact_traces(prob, ops.grid, state.t);
  const LiftPlan simple = corrected_plan(p, tab, sc, tr, k, opt.reading);
  const LiftPlan full = unsimplified_plan(p, tab, sc, prob, ops.grid, state.t, k);
  StepStats stats;
  const detail::EngineRun base = detail::run_engine(tab, ops, prob.reaction, state, k, simple, opt.krylov, stats);

  const int s = tab.stages();
  const Vector zero = Vector::Zero(ops.size());
  std::vector<Vector> dF(static_cast<std::size_t>(s), zero);
  if (!update_only) {
    for (int i = 0; i < s; ++i) {
      std::vector<Vector> slots =
          detail::lifted(ops, full.stages[static_cast<std::size_t>(i)] - simple.stages[static_cast<std::size_t>(i)]);
      for (int l = 1; l <= s; ++l) {
        for (int j = 0; j < i; ++j) {
          const double lam = tab.lambda(i, j, l);
          if (lam != 0.0) slots[static_cast<std::size_t>(l)].noalias() += lam * dF[static_cast<std::size_t>(j)];
        }
      }
      const double ci = tab.c(i);
      const Vector dK = detail::phi_step(ops.A, ci * k, k, zero, slots, opt.krylov, stats);
      const Vector& K = base.K[static_cast<std::size_t>(i)];
      const double ti = state.t + ci * k;
      dF[static_cast<std::size_t>(i)] =
          detail::nodal_reaction(prob.reaction, ops.grid, ti, K + dK) - base.F[static_cast<std::size_t>(i)];
    }
  }
  std::vector<Vector> slots = detail::lifted(ops, full.update - simple.update);
  for (int l = 1; l <= s; ++l) {
    for (int i = 0; i < s; ++i) {
      const double mu = tab.mu(i, l);
      if (mu != 0.0) slots[static_cast<std::size_t>(l)].noalias() += mu * dF[static_cast<std::size_t>(i)];
    }
  }
  return detail::phi_step(ops.A, k, k, zero, slots, opt.krylov, stats);
}

struct IntegrationResult {
  Vector U;
  double t = 0.0;
  int steps = 0;
  long krylov_iterations = 0;
  long phi_evaluations = 0;
  double wall_seconds = 0.0;
  std::vector<std::string> warnings;
};

struct IntegrateConfig {
  Technique technique = Technique::corrected;
  int p = 2;
  TraceMode traces = TraceMode::exact;
  int bdf_order = 2;  // numeric traces
  StepperOptions stepper{};
};

/// Integrates from U = P u(0) at t = 0 to T with constant step k.
inline IntegrationResult integrate(const ManufacturedProblem& prob, const SemidiscreteOperators& ops,
                                   const EERKTableau& tab, double k, double T, const IntegrateConfig& cfg) {
  if (!(k > 0.0) || !(T > 0.0)) throw std::invalid_argument("integrate: k and T must be positive");
  const double steps_real = T / k;
  const int steps = static_cast<int>(std::llround(steps_real));
  if (steps < 1 || std::abs(steps_real - steps) > 1e-9 * steps_real) {
    throw std::invalid_argument("integrate: k must divide T");
  }
  tab.require_consistent();
  if (cfg.technique == Technique::corrected) detail::require_technique(tab, cfg.p);
  validate_problem(prob, ops.grid);

  const auto start = std::chrono::steady_clock::now();
  const TableauScalars sc(tab);
  std::unique_ptr<TraceProvider> provider;
  if (cfg.technique == Technique::corrected) {
    provider = make_trace_provider(cfg.traces, prob, ops, k, cfg.p, cfg.bdf_order);
  }
  StepState state{0, 0.0, prob.initial_state(ops.grid)};
  StepStats stats;
  for (int n = 0; n < steps; ++n) {
    const double t = n * k;
    state.t = t;
    try {
      LiftPlan plan;
      if (cfg.technique == Technique::mol) {
        plan = mol_plan(tab, ops, prob, t, k);
      } else {
        const BoundaryTraces tr = provider->traces(n, t, state.U);
        plan = corrected_plan(cfg.p, tab, sc, tr, k, cfg.stepper.reading);
      }
      state = step_with_plan(tab, ops, prob.reaction, state, k, plan, cfg.stepper, &stats);
    } catch (const std::exception& e) {
      throw std::runtime_error("integration failed at step " + std::to_string(n) + ": " + e.what());
    }
    if (!state.U.allFinite()) throw std::runtime_error("integration failed at step " + std::to_string(n) + ": non-finite state");
  }
  IntegrationResult out;
  out.U = std::move(state.U);
  out.t = steps * k;
  out.steps = steps;
  out.krylov_iterations = stats.krylov_iterations;
  out.phi_evaluations = stats.phi_evaluations;
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (provider) out.warnings = provider->warnings();
  return out;
}

}  // namespace eerk
