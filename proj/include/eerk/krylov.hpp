#pragma once

// Krylov evaluation of phi-function combinations
//
//     w = sum_{l=0}^{q} tau^l phi_l(tau A) v_l
//
// through the augmented operator
//
//     A~ = [[A, eta W], [0, J]],  W = [v_q, ..., v_1],  J = upper shift (q x q),
//
// for which exp(tau A~) [v_0; e_q / eta] carries w in its first n entries.
// Two projections are available: shift-and-invert Arnoldi on
// (I - gamma A~)^{-1} (default when the operator provides a resolvent; its
// convergence does not degrade with the stiffness of A) and polynomial Arnoldi
// with expokit-style substepping.

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "eerk/linear_operator.hpp"

namespace eerk {

struct KrylovBasis {
  Matrix V;  // n x (m + 1); n x m when the iteration broke down
  Matrix H;  // (m + 1) x m upper Hessenberg
  double beta = 0.0;  // norm of the start vector
  int m = 0;
  bool breakdown = false;
};

enum class KrylovMethod { automatic, shift_invert, polynomial };

struct KrylovOptions {
  double tol = 1e-10;
  int m_max = 100;
  KrylovMethod method = KrylovMethod::automatic;
  double shift_factor = 0.1;  // gamma = shift_factor * tau
  int substep_dimension = 30;  // polynomial route
  long max_substeps = 100000;  // polynomial route; beyond this the step control has stalled
};

struct PhiResult {
  Vector value;
  int iterations = 0;
  double error_estimate = 0.0;
};

class KrylovConvergenceError : public std::runtime_error {
 public:
  KrylovConvergenceError(double residual, int dimension)
      : std::runtime_error("Krylov iteration did not converge within dimension " +
                           std::to_string(dimension) + " (residual estimate " +
                           std::to_string(residual) + ")"),
        residual_(residual),
        dimension_(dimension) {}
  double residual() const { return residual_; }
  int dimension() const { return dimension_; }

 private:
  double residual_;
  int dimension_;
};

namespace detail {

// Modified Gram-Schmidt Arnoldi with one reorthogonalization pass.
template <class Apply>
KrylovBasis arnoldi_process(Apply&& apply, const Vector& v, int m, double breakdown_tol) {
  const double beta = v.norm();
  if (!(beta > 0.0)) throw std::invalid_argument("arnoldi: zero start vector");
  const Index n = v.size();
  m = static_cast<int>(std::min<Index>(m, n));
  KrylovBasis kb;
  kb.beta = beta;
  kb.V = Matrix::Zero(n, m + 1);
  kb.H = Matrix::Zero(m + 1, m);
  kb.V.col(0) = v / beta;
  int done = m;
  for (int j = 0; j < m; ++j) {
    Vector w = apply(Vector(kb.V.col(j)));
    for (int pass = 0; pass < 2; ++pass) {
      for (int i = 0; i <= j; ++i) {
        const double d = kb.V.col(i).dot(w);
        kb.H(i, j) += d;
        w.noalias() -= d * kb.V.col(i);
      }
    }
    const double hn = w.norm();
    kb.H(j + 1, j) = hn;
    if (hn <= breakdown_tol) {
      kb.breakdown = true;
      done = j + 1;
      break;
    }
    kb.V.col(j + 1) = w / hn;
  }
  kb.m = done;
  if (kb.breakdown) {
    kb.V.conservativeResize(n, done);
    kb.H.conservativeResize(done + 1, done);
  }
  return kb;
}

// The augmented operator of the file comment, with matrix-free apply and
// block-triangular resolvent.
class AugmentedOperator {
 public:
  AugmentedOperator(const LinearOperator& a, const std::vector<Vector>& v) : a_(a) {
    if (v.empty()) throw std::invalid_argument("phi_combination: no vectors");
    n_ = a.dimension();
    for (const auto& vl : v) {
      if (vl.size() != n_) throw std::invalid_argument("phi_combination: vector length mismatch");
    }
    q_ = 0;
    double max_norm = 0.0;
    for (std::size_t l = 1; l < v.size(); ++l) {
      const double nl = v[l].norm();
      if (nl > 0.0) q_ = static_cast<int>(l);
      max_norm = std::max(max_norm, nl);
    }
    // Power-of-two scaling keeps eta W and the tail e_q / eta balanced
    // without rounding.
    eta_ = max_norm > 0.0 ? std::ldexp(1.0, -std::ilogb(max_norm)) : 1.0;
    w_.reserve(static_cast<std::size_t>(q_));
    for (int c = 0; c < q_; ++c) w_.push_back(eta_ * v[static_cast<std::size_t>(q_ - c)]);
    start_ = Vector::Zero(n_ + q_);
    start_.head(n_) = v[0];
    if (q_ > 0) start_(n_ + q_ - 1) = 1.0 / eta_;
  }

  Index dimension() const { return n_ + q_; }
  Index base_dimension() const { return n_; }
  const Vector& start() const { return start_; }
  bool trivial() const { return start_.norm() == 0.0; }

  Vector apply(const Vector& z) const {
    Vector out(n_ + q_);
    Vector top = a_.apply(z.head(n_));
    for (int c = 0; c < q_; ++c) top.noalias() += z(n_ + c) * w_[static_cast<std::size_t>(c)];
    out.head(n_) = top;
    for (int c = 0; c + 1 < q_; ++c) out(n_ + c) = z(n_ + c + 1);
    if (q_ > 0) out(n_ + q_ - 1) = 0.0;
    return out;
  }

  LinearOperator::Map resolvent(double gamma) const {
    auto inner = a_.resolvent(gamma);
    return [this, inner, gamma](const Vector& z) -> Vector {
      Vector out(n_ + q_);
      // (I - gamma J) y' = y, backward substitution.
      for (int c = q_ - 1; c >= 0; --c) {
        out(n_ + c) = z(n_ + c) + (c + 1 < q_ ? gamma * out(n_ + c + 1) : 0.0);
      }
      Vector rhs = z.head(n_);
      for (int c = 0; c < q_; ++c) rhs.noalias() += (gamma * out(n_ + c)) * w_[static_cast<std::size_t>(c)];
      out.head(n_) = inner(rhs);
      return out;
    };
  }

  double norm_bound() const {
    double wn = 0.0;
    for (const auto& w : w_) wn += w.lpNorm<Eigen::Infinity>();
    return a_.norm_bound() + wn + 1.0;
  }

 private:
  const LinearOperator& a_;
  Index n_ = 0;
  int q_ = 0;
  double eta_ = 1.0;
  std::vector<Vector> w_;
  Vector start_;
};

inline PhiResult phi_shift_invert(const AugmentedOperator& aug, double tau, const KrylovOptions& opt) {
  const double gamma = opt.shift_factor * tau;
  const auto zmap = aug.resolvent(gamma);
  const Index n_aug = aug.dimension();
  const Index n = aug.base_dimension();
  const int m_cap = static_cast<int>(std::min<Index>(opt.m_max, n_aug));
  const Vector& b = aug.start();
  const double beta = b.norm();

  Matrix V = Matrix::Zero(n_aug, m_cap + 1);
  Matrix H = Matrix::Zero(m_cap + 1, m_cap);
  V.col(0) = b / beta;
  Vector prev_top;
  double estimate = std::numeric_limits<double>::infinity();
  double top_norm = 0.0;
  for (int j = 0; j < m_cap; ++j) {
    Vector w = zmap(Vector(V.col(j)));
    for (int pass = 0; pass < 2; ++pass) {
      for (int i = 0; i <= j; ++i) {
        const double d = V.col(i).dot(w);
        H(i, j) += d;
        w.noalias() -= d * V.col(i);
      }
    }
    const double hn = w.norm();
    H(j + 1, j) = hn;
    const int m = j + 1;
    const bool breakdown = hn <= 1e-14 * H.col(j).head(m).norm() || m == n_aug;
    if (!breakdown) V.col(j + 1) = w / hn;

    const Matrix hm = H.topLeftCorner(m, m);
    const Matrix hinv = hm.partialPivLu().solve(Matrix::Identity(m, m));
    const Matrix proj = (tau / gamma) * (Matrix::Identity(m, m) - hinv);
    const Vector y = beta * proj.exp().col(0);
    Vector top = V.topLeftCorner(n, m) * y;
    top_norm = top.norm();
    if (breakdown) return {std::move(top), m, 0.0};
    if (m >= 2) {
      estimate = (top - prev_top).norm();
      if (estimate <= opt.tol * std::max(top_norm, std::numeric_limits<double>::min())) {
        return {std::move(top), m, estimate / std::max(top_norm, std::numeric_limits<double>::min())};
      }
    }
    prev_top = std::move(top);
  }
  throw KrylovConvergenceError(estimate / std::max(top_norm, std::numeric_limits<double>::min()), m_cap);
}

// expokit expv on the augmented operator: time stepping with local error
// estimates from the extended Hessenberg matrix.
inline PhiResult phi_polynomial(const AugmentedOperator& aug, double tau, const KrylovOptions& opt) {
  const Index n_aug = aug.dimension();
  const int m = static_cast<int>(std::min<Index>(std::min(opt.substep_dimension, opt.m_max), n_aug));
  const double anorm = aug.norm_bound();
  const double tol = opt.tol * aug.start().norm();
  const double gamma = 0.9;
  const double delta = 1.2;
  const int max_reject = 10;

  Vector w = aug.start();
  double beta = w.norm();
  double t_now = 0.0;
  double xm = 1.0 / m;
  const double fact = std::pow((m + 1) / std::exp(1.0), m + 1) * std::sqrt(2.0 * std::numbers::pi * (m + 1));
  double t_new = (1.0 / anorm) * std::pow((fact * tol) / (4.0 * beta * anorm), xm);
  auto round_step = [](double t) {
    const double s = std::pow(10.0, std::floor(std::log10(t)) - 1.0);
    return std::ceil(t / s) * s;
  };
  t_new = round_step(t_new);
  int iterations = 0;
  long substeps = 0;
  double total_error = 0.0;
  auto apply = [&aug](const Vector& z) { return aug.apply(z); };

  while (t_now < tau) {
    if (++substeps > opt.max_substeps) throw KrylovConvergenceError(total_error, m);
    double t_step = std::min(tau - t_now, t_new);
    if (beta == 0.0) break;
    KrylovBasis kb = arnoldi_process(apply, w, m, 1e-14 * anorm);
    iterations += kb.m;
    const int mb = kb.m;
    const bool happy = kb.breakdown;
    const int mx_full = happy ? mb : mb + 2;
    Matrix hx = Matrix::Zero(mx_full, mx_full);
    hx.topLeftCorner(mb + (happy ? 0 : 1), mb) = kb.H.topLeftCorner(mb + (happy ? 0 : 1), mb);
    double avnorm = 0.0;
    if (!happy) {
      hx(mb + 1, mb) = 1.0;
      avnorm = aug.apply(Vector(kb.V.col(mb))).norm();
    } else {
      t_step = tau - t_now;
    }
    Matrix f;
    double err_loc = 0.0;
    int reject = 0;
    for (;;) {
      f = (t_step * hx).exp();
      if (happy) {
        err_loc = 0.0;
        break;
      }
      const double p1 = std::abs(f(mb, 0)) * beta;
      const double p2 = std::abs(f(mb + 1, 0)) * beta * avnorm;
      if (p1 > 10.0 * p2) {
        err_loc = p2;
        xm = 1.0 / m;
      } else if (p1 > p2) {
        err_loc = (p1 * p2) / (p1 - p2);
        xm = 1.0 / m;
      } else {
        err_loc = p1;
        xm = 1.0 / std::max(m - 1, 1);
      }
      if (err_loc <= delta * t_step * tol) break;
      if (reject == max_reject) throw KrylovConvergenceError(err_loc / std::max(beta, 1e-300), m);
      t_step = round_step(gamma * t_step * std::pow(t_step * tol / err_loc, xm));
      ++reject;
    }
    const int mx = happy ? mb : mb + 1;
    w = kb.V.leftCols(mx) * (beta * f.col(0).head(mx));
    beta = w.norm();
    t_now += t_step;
    if (!happy && err_loc > 0.0) {
      t_new = round_step(gamma * t_step * std::pow(t_step * tol / err_loc, xm));
    } else {
      t_new = tau - t_now;
    }
    total_error += std::max(err_loc, anorm * std::numeric_limits<double>::epsilon());
  }
  Vector top = w.head(aug.base_dimension());
  const double scale = std::max(top.norm(), std::numeric_limits<double>::min());
  return {std::move(top), iterations, total_error / scale};
}

}  // namespace detail

/// Arnoldi decomposition A V_m = V_m H_m + h_{m+1,m} v_{m+1} e_m^T of the
/// Krylov space spanned by v, A v, ..., A^{m-1} v.
inline KrylovBasis arnoldi(const LinearOperator& a, const Vector& v, int m) {
  if (v.size() != a.dimension()) throw std::invalid_argument("arnoldi: vector length mismatch");
  if (m < 1 || m > a.dimension()) throw std::invalid_argument("arnoldi: m out of range");
  return detail::arnoldi_process([&a](const Vector& x) { return a.apply(x); }, v, m,
                                 1e-14 * std::max(a.norm_bound(), std::numeric_limits<double>::min()));
}

/// sum_{l=0}^{q} tau^l phi_l(tau A) v_l with v = {v_0, ..., v_q}.
inline PhiResult phi_combination(const LinearOperator& a, double tau, const std::vector<Vector>& v,
                                 const KrylovOptions& opt = {}) {
  if (!(tau > 0.0)) throw std::invalid_argument("phi_combination: tau must be positive");
  detail::AugmentedOperator aug(a, v);
  if (aug.trivial()) return {Vector::Zero(a.dimension()), 0, 0.0};
  KrylovMethod method = opt.method;
  if (method == KrylovMethod::automatic) {
    method = a.has_resolvent() ? KrylovMethod::shift_invert : KrylovMethod::polynomial;
  }
  if (method == KrylovMethod::shift_invert) return detail::phi_shift_invert(aug, tau, opt);
  return detail::phi_polynomial(aug, tau, opt);
}

}  // namespace eerk
