#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>

namespace eerk {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

/// A square linear map x -> A x on grid vectors.
///
/// Besides the action, an operator may carry a resolvent factory producing
/// r -> (I - gamma A)^{-1} r; shift-and-invert Krylov evaluation of matrix
/// functions uses it. Operators stored as B^{-1} L (mass/stiffness form) also
/// expose the mass solve. All members are immutable after construction; the
/// resolvent cache is internally synchronized, so an operator can be shared
/// between threads.
class LinearOperator {
 public:
  using Map = std::function<Vector(const Vector&)>;
  using ResolventFactory = std::function<Map(double gamma)>;

  LinearOperator(Index dimension, Map apply, double norm_bound,
                 ResolventFactory resolvent = {}, Map mass_solve = {})
      : dim_(dimension),
        apply_(std::move(apply)),
        norm_bound_(norm_bound),
        resolvent_(std::move(resolvent)),
        mass_solve_(std::move(mass_solve)) {
    if (dim_ <= 0) throw std::invalid_argument("LinearOperator: dimension must be positive");
    if (!apply_) throw std::invalid_argument("LinearOperator: missing apply");
  }

  Index dimension() const { return dim_; }

  Vector apply(const Vector& x) const {
    if (x.size() != dim_) {
      throw std::invalid_argument("LinearOperator::apply: expected length " +
                                  std::to_string(dim_) + ", got " + std::to_string(x.size()));
    }
    return apply_(x);
  }

  Vector operator()(const Vector& x) const { return apply(x); }

  /// Upper estimate of the infinity norm.
  double norm_bound() const { return norm_bound_; }

  bool has_resolvent() const { return static_cast<bool>(resolvent_); }
  Map resolvent(double gamma) const {
    if (!resolvent_) throw std::logic_error("LinearOperator: no resolvent available");
    return resolvent_(gamma);
  }

  bool has_mass_solve() const { return static_cast<bool>(mass_solve_); }
  const Map& mass_solve() const { return mass_solve_; }

  static LinearOperator from_sparse(SparseMatrix a);
  static LinearOperator from_dense(Matrix a);
  /// A = mass^{-1} stiffness, never formed explicitly. Both matrices are
  /// expected symmetric with mass positive definite and stiffness negative
  /// definite (as for compact finite-difference schemes).
  static LinearOperator from_mass_stiffness(SparseMatrix mass, SparseMatrix stiffness);

 private:
  Index dim_;
  Map apply_;
  double norm_bound_;
  ResolventFactory resolvent_;
  Map mass_solve_;
};

namespace detail {

// Memoizes one factorization per shift value.
template <class Factorization>
class ResolventCache {
 public:
  using Builder = std::function<std::shared_ptr<const Factorization>(double)>;
  explicit ResolventCache(Builder build) : build_(std::move(build)) {}

  std::shared_ptr<const Factorization> get(double gamma) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = cache_.find(gamma);
    if (it != cache_.end()) return it->second;
    auto fact = build_(gamma);
    cache_.emplace(gamma, fact);
    return fact;
  }

 private:
  Builder build_;
  std::mutex mutex_;
  std::map<double, std::shared_ptr<const Factorization>> cache_;
};

inline double sparse_inf_norm(const SparseMatrix& a) {
  Vector row_sums = Vector::Zero(a.rows());
  for (Index col = 0; col < a.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(a, col); it; ++it) row_sums(it.row()) += std::abs(it.value());
  }
  return row_sums.size() ? row_sums.maxCoeff() : 0.0;
}

// Bound on ||B^{-1}||_inf from strict row diagonal dominance, 0 if B is not
// strictly diagonally dominant.
inline double inverse_inf_bound(const SparseMatrix& b) {
  Vector diag = Vector::Zero(b.rows());
  Vector off = Vector::Zero(b.rows());
  for (Index col = 0; col < b.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(b, col); it; ++it) {
      if (it.row() == it.col()) {
        diag(it.row()) += std::abs(it.value());
      } else {
        off(it.row()) += std::abs(it.value());
      }
    }
  }
  double margin = (diag - off).minCoeff();
  return margin > 0.0 ? 1.0 / margin : 0.0;
}

}  // namespace detail

inline LinearOperator LinearOperator::from_sparse(SparseMatrix a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("LinearOperator::from_sparse: matrix not square");
  a.makeCompressed();
  auto mat = std::make_shared<const SparseMatrix>(std::move(a));
  using Lu = Eigen::SparseLU<SparseMatrix>;
  auto cache = std::make_shared<detail::ResolventCache<Lu>>([mat](double gamma) {
    SparseMatrix shifted = -gamma * (*mat);
    SparseMatrix eye(mat->rows(), mat->cols());
    eye.setIdentity();
    shifted += eye;
    shifted.makeCompressed();
    auto lu = std::make_shared<Lu>();
    lu->compute(shifted);
    if (lu->info() != Eigen::Success) throw std::runtime_error("resolvent factorization failed");
    return std::shared_ptr<const Lu>(lu);
  });
  const Index n = mat->rows();
  return LinearOperator(
      n, [mat](const Vector& x) -> Vector { return (*mat) * x; }, detail::sparse_inf_norm(*mat),
      [cache](double gamma) -> Map {
        auto lu = cache->get(gamma);
        return [lu](const Vector& r) -> Vector { return lu->solve(r); };
      });
}

inline LinearOperator LinearOperator::from_dense(Matrix a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("LinearOperator::from_dense: matrix not square");
  auto mat = std::make_shared<const Matrix>(std::move(a));
  using Lu = Eigen::PartialPivLU<Matrix>;
  auto cache = std::make_shared<detail::ResolventCache<Lu>>([mat](double gamma) {
    Matrix shifted = Matrix::Identity(mat->rows(), mat->cols()) - gamma * (*mat);
    return std::make_shared<const Lu>(shifted);
  });
  const double norm = mat->cwiseAbs().rowwise().sum().maxCoeff();
  return LinearOperator(
      mat->rows(), [mat](const Vector& x) -> Vector { return (*mat) * x; }, norm,
      [cache](double gamma) -> Map {
        auto lu = cache->get(gamma);
        return [lu](const Vector& r) -> Vector { return lu->solve(r); };
      });
}

inline LinearOperator LinearOperator::from_mass_stiffness(SparseMatrix mass, SparseMatrix stiffness) {
  if (mass.rows() != mass.cols() || stiffness.rows() != stiffness.cols() ||
      mass.rows() != stiffness.rows()) {
    throw std::invalid_argument("LinearOperator::from_mass_stiffness: incompatible shapes");
  }
  mass.makeCompressed();
  stiffness.makeCompressed();
  auto b = std::make_shared<const SparseMatrix>(std::move(mass));
  auto l = std::make_shared<const SparseMatrix>(std::move(stiffness));
  using Ldlt = Eigen::SimplicialLDLT<SparseMatrix>;
  auto mass_fact = std::make_shared<Ldlt>(*b);
  if (mass_fact->info() != Eigen::Success) throw std::runtime_error("mass matrix factorization failed");
  std::shared_ptr<const Ldlt> mass_ldlt = mass_fact;

  // (I - gamma B^{-1} L)^{-1} = (B - gamma L)^{-1} B.
  auto cache = std::make_shared<detail::ResolventCache<Ldlt>>([b, l](double gamma) {
    SparseMatrix shifted = (*b) - gamma * (*l);
    auto fact = std::make_shared<Ldlt>(shifted);
    if (fact->info() != Eigen::Success) throw std::runtime_error("resolvent factorization failed");
    return std::shared_ptr<const Ldlt>(fact);
  });

  double inv_bound = detail::inverse_inf_bound(*b);
  if (inv_bound == 0.0) inv_bound = 1.0 / std::abs(b->diagonal().minCoeff());
  const double norm = inv_bound * detail::sparse_inf_norm(*l);

  return LinearOperator(
      l->rows(),
      [l, mass_ldlt](const Vector& x) -> Vector {
        Vector y = (*l) * x;
        return mass_ldlt->solve(y);
      },
      norm,
      [cache, b](double gamma) -> Map {
        auto fact = cache->get(gamma);
        return [fact, b](const Vector& r) -> Vector {
          Vector rhs = (*b) * r;
          return fact->solve(rhs);
        };
      },
      [mass_ldlt](const Vector& r) -> Vector { return mass_ldlt->solve(r); });
}

/// Largest relative deviation from linearity over random probes:
/// |A(ax + by) - aAx - bAy| / (|a||Ax| + |b||Ay|) in the infinity norm.
inline double linearity_defect(const LinearOperator& op, int probes, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  double worst = 0.0;
  for (int p = 0; p < probes; ++p) {
    Vector x(op.dimension()), y(op.dimension());
    for (Index i = 0; i < x.size(); ++i) {
      x(i) = normal(rng);
      y(i) = normal(rng);
    }
    const double alpha = normal(rng);
    const double beta = normal(rng);
    const Vector ax = op.apply(x);
    const Vector ay = op.apply(y);
    const Vector lhs = op.apply(alpha * x + beta * y);
    const Vector rhs = alpha * ax + beta * ay;
    const double scale = std::abs(alpha) * ax.lpNorm<Eigen::Infinity>() +
                         std::abs(beta) * ay.lpNorm<Eigen::Infinity>();
    if (scale > 0.0) worst = std::max(worst, (lhs - rhs).lpNorm<Eigen::Infinity>() / scale);
  }
  return worst;
}

}  // namespace eerk
