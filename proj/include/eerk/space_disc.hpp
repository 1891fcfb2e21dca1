#pragma once

// Finite-difference space discretizations in the form
//
//     A U + C g = P f + D (boundary f),
//
// stored as a stiffness/mass pair: L U + Lb g = B P f + Bb (boundary f) with
// A = B^{-1} L, C = B^{-1} Lb, D = B^{-1} Bb. Schemes without a mass matrix
// use B = I.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <array>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "eerk/linear_operator.hpp"

namespace eerk {

enum class BoundaryKind { dirichlet, neumann };

inline const char* to_string(BoundaryKind k) { return k == BoundaryKind::dirichlet ? "dirichlet" : "neumann"; }

/// A node where boundary data lives. The boundary operator reads the value
/// at Dirichlet nodes and the outward-facing coordinate derivative
/// d/d(normal_axis) (not sign-adjusted) at Neumann nodes.
struct BoundaryNode {
  double x = 0.0;
  double y = 0.0;
  BoundaryKind kind = BoundaryKind::dirichlet;
  bool corner = false;
  int normal_axis = 0;    // coordinate axis normal to the side
  double outward = 1.0;   // +1 if the outward normal points along +axis
  Index self = -1;        // unknown index of this node, -1 if not an unknown
  std::array<Index, 4> inward{{-1, -1, -1, -1}};  // unknowns 1..4 steps inward along the normal
};

struct Grid {
  int dimension = 1;
  int n = 0;       // interior nodes per direction
  double h = 0.0;
  Vector x;        // coordinates of the unknowns
  Vector y;        // zero in 1D
  std::vector<BoundaryNode> boundary;

  Index size() const { return x.size(); }
  Index boundary_size() const { return static_cast<Index>(boundary.size()); }

  /// P_h: nodal values.
  Vector project(const std::function<double(double, double)>& f) const {
    Vector out(size());
    for (Index i = 0; i < size(); ++i) out(i) = f(x(i), y(i));
    return out;
  }
};

struct SemidiscreteOperators {
  std::string label;
  Grid grid;
  SparseMatrix stiffness;           // L
  SparseMatrix mass;                // B
  SparseMatrix stiffness_boundary;  // Lb
  SparseMatrix mass_boundary;       // Bb
  bool identity_mass = true;
  LinearOperator A;
  std::shared_ptr<const Eigen::SparseLU<SparseMatrix>> stiffness_lu;

  Index size() const { return grid.size(); }
  Index boundary_size() const { return grid.boundary_size(); }
  bool has_D() const { return mass_boundary.nonZeros() > 0; }

  Vector mass_solve(const Vector& r) const { return identity_mass ? r : A.mass_solve()(r); }

  /// C c + D d with a single mass solve.
  Vector lift(const Vector& c_values, const Vector& d_values) const {
    check_boundary(c_values);
    check_boundary(d_values);
    Vector r = stiffness_boundary * c_values;
    if (has_D()) r.noalias() += mass_boundary * d_values;
    return mass_solve(r);
  }
  Vector apply_C(const Vector& values) const {
    check_boundary(values);
    return mass_solve(stiffness_boundary * values);
  }
  Vector apply_D(const Vector& values) const {
    check_boundary(values);
    if (!has_D()) return Vector::Zero(size());
    return mass_solve(mass_boundary * values);
  }

 private:
  void check_boundary(const Vector& v) const {
    if (v.size() != boundary_size()) throw std::invalid_argument("boundary vector length mismatch");
  }
};

namespace detail {

inline SparseMatrix from_triplets(Index rows, Index cols, const std::vector<Eigen::Triplet<double>>& t) {
  SparseMatrix m(rows, cols);
  m.setFromTriplets(t.begin(), t.end());
  m.makeCompressed();
  return m;
}

inline SparseMatrix sparse_identity(Index n) {
  SparseMatrix m(n, n);
  m.setIdentity();
  return m;
}

inline void finish(SemidiscreteOperators& ops) {
  auto lu = std::make_shared<Eigen::SparseLU<SparseMatrix>>();
  lu->compute(ops.stiffness);
  if (lu->info() != Eigen::Success) throw std::runtime_error("stiffness factorization failed");
  ops.stiffness_lu = lu;
}

inline BoundaryNode boundary_1d(double x, BoundaryKind kind, double outward, Index self,
                                std::array<Index, 4> inward) {
  BoundaryNode b;
  b.x = x;
  b.kind = kind;
  b.normal_axis = 0;
  b.outward = outward;
  b.self = self;
  b.inward = inward;
  return b;
}

inline std::array<Index, 4> inward_1d(Index start, Index step, Index count) {
  std::array<Index, 4> out{{-1, -1, -1, -1}};
  for (Index s = 0; s < 4; ++s) {
    const Index idx = start + s * step;
    if (idx >= 0 && idx < count) out[static_cast<std::size_t>(s)] = idx;
  }
  return out;
}

}  // namespace detail

/// Second-order central differences on [0, 1], n interior unknowns, Dirichlet
/// at both ends.
inline SemidiscreteOperators assemble_1d_dirichlet(int n) {
  if (n < 2) throw std::invalid_argument("assemble_1d_dirichlet: n must be at least 2");
  const double h = 1.0 / (n + 1);
  const double s = 1.0 / (h * h);
  std::vector<Eigen::Triplet<double>> tl, tlb;
  for (int i = 0; i < n; ++i) {
    tl.emplace_back(i, i, -2.0 * s);
    if (i > 0) tl.emplace_back(i, i - 1, s);
    if (i + 1 < n) tl.emplace_back(i, i + 1, s);
  }
  tlb.emplace_back(0, 0, s);
  tlb.emplace_back(n - 1, 1, s);

  Grid g;
  g.dimension = 1;
  g.n = n;
  g.h = h;
  g.x.resize(n);
  for (int i = 0; i < n; ++i) g.x(i) = (i + 1) * h;
  g.y = Vector::Zero(n);
  g.boundary.push_back(detail::boundary_1d(0.0, BoundaryKind::dirichlet, -1.0, -1, detail::inward_1d(0, 1, n)));
  g.boundary.push_back(detail::boundary_1d(1.0, BoundaryKind::dirichlet, 1.0, -1, detail::inward_1d(n - 1, -1, n)));

  SparseMatrix l = detail::from_triplets(n, n, tl);
  SemidiscreteOperators ops{"1d-dirichlet-dirichlet",
                            std::move(g),
                            l,
                            detail::sparse_identity(n),
                            detail::from_triplets(n, 2, tlb),
                            SparseMatrix(n, 2),
                            true,
                            LinearOperator::from_sparse(l),
                            nullptr};
  detail::finish(ops);
  return ops;
}

/// Dirichlet at x = 0, Neumann u_x(1) = g1 at x = 1. The Neumann endpoint is
/// an unknown (n + 1 unknowns); its row uses the ghost value fixed by the
/// centered difference of the boundary condition.
inline SemidiscreteOperators assemble_1d_dirichlet_neumann(int n) {
  if (n < 2) throw std::invalid_argument("assemble_1d_dirichlet_neumann: n must be at least 2");
  const double h = 1.0 / (n + 1);
  const double s = 1.0 / (h * h);
  const int dim = n + 1;
  std::vector<Eigen::Triplet<double>> tl, tlb;
  for (int i = 0; i < n; ++i) {
    tl.emplace_back(i, i, -2.0 * s);
    if (i > 0) tl.emplace_back(i, i - 1, s);
    tl.emplace_back(i, i + 1, s);
  }
  tl.emplace_back(n, n - 1, 2.0 * s);
  tl.emplace_back(n, n, -2.0 * s);
  tlb.emplace_back(0, 0, s);
  tlb.emplace_back(n, 1, 2.0 / h);

  Grid g;
  g.dimension = 1;
  g.n = n;
  g.h = h;
  g.x.resize(dim);
  for (int i = 0; i < dim; ++i) g.x(i) = (i + 1) * h;
  g.x(n) = 1.0;
  g.y = Vector::Zero(dim);
  g.boundary.push_back(detail::boundary_1d(0.0, BoundaryKind::dirichlet, -1.0, -1, detail::inward_1d(0, 1, dim)));
  g.boundary.push_back(detail::boundary_1d(1.0, BoundaryKind::neumann, 1.0, n, detail::inward_1d(n - 1, -1, dim)));

  SparseMatrix l = detail::from_triplets(dim, dim, tl);
  SemidiscreteOperators ops{"1d-dirichlet-neumann",
                            std::move(g),
                            l,
                            detail::sparse_identity(dim),
                            detail::from_triplets(dim, 2, tlb),
                            SparseMatrix(dim, 2),
                            true,
                            LinearOperator::from_sparse(l),
                            nullptr};
  detail::finish(ops);
  return ops;
}

/// Fourth-order compact 9-point scheme on the unit square, n interior nodes
/// per direction, Dirichlet on all sides:
///   (1/(6h^2)) [1 4 1; 4 -20 4; 1 4 1] u = (1/12) [0 1 0; 1 8 1; 0 1 0] f.
/// Unknowns and boundary nodes (corners included) are both numbered row by
/// row: index = j * width + i with x the fast index.
inline SemidiscreteOperators assemble_2d_ninepoint(int n) {
  if (n < 3) throw std::invalid_argument("assemble_2d_ninepoint: n must be at least 3");
  const double h = 1.0 / (n + 1);
  const int full = n + 2;
  const Index dim = static_cast<Index>(n) * n;

  std::vector<Index> bindex(static_cast<std::size_t>(full * full), -1);
  Grid g;
  g.dimension = 2;
  g.n = n;
  g.h = h;
  g.x.resize(dim);
  g.y.resize(dim);
  auto unknown = [n](int i, int j) { return static_cast<Index>(j) * n + i; };
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      g.x(unknown(i, j)) = (i + 1) * h;
      g.y(unknown(i, j)) = (j + 1) * h;
    }
  }
  for (int jj = 0; jj < full; ++jj) {
    for (int ii = 0; ii < full; ++ii) {
      const bool on_x = ii == 0 || ii == full - 1;
      const bool on_y = jj == 0 || jj == full - 1;
      if (!on_x && !on_y) continue;
      BoundaryNode b;
      b.x = ii * h;
      b.y = jj * h;
      b.kind = BoundaryKind::dirichlet;
      b.corner = on_x && on_y;
      if (!b.corner) {
        b.normal_axis = on_x ? 0 : 1;
        b.outward = (on_x ? ii : jj) == 0 ? -1.0 : 1.0;
        for (int step = 1; step <= 4; ++step) {
          int ui = ii - 1;
          int uj = jj - 1;
          if (on_x) {
            ui = ii == 0 ? step - 1 : n - step;
          } else {
            uj = jj == 0 ? step - 1 : n - step;
          }
          if (ui >= 0 && ui < n && uj >= 0 && uj < n) b.inward[static_cast<std::size_t>(step - 1)] = unknown(ui, uj);
        }
      }
      bindex[static_cast<std::size_t>(jj * full + ii)] = static_cast<Index>(g.boundary.size());
      g.boundary.push_back(b);
    }
  }
  const Index nb = g.boundary_size();

  const double sl = 1.0 / (6.0 * h * h);
  const double sb = 1.0 / 12.0;
  std::vector<Eigen::Triplet<double>> tl, tb, tlb, tbb;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const Index row = unknown(i, j);
      for (int dj = -1; dj <= 1; ++dj) {
        for (int di = -1; di <= 1; ++di) {
          const int reach = std::abs(di) + std::abs(dj);
          const double wl = sl * (reach == 0 ? -20.0 : reach == 1 ? 4.0 : 1.0);
          const double wb = sb * (reach == 0 ? 8.0 : reach == 1 ? 1.0 : 0.0);
          const int ii = i + 1 + di;
          const int jj = j + 1 + dj;
          const Index b = bindex[static_cast<std::size_t>(jj * full + ii)];
          if (b < 0) {
            const Index col = unknown(ii - 1, jj - 1);
            tl.emplace_back(row, col, wl);
            if (wb != 0.0) tb.emplace_back(row, col, wb);
          } else {
            tlb.emplace_back(row, b, wl);
            if (wb != 0.0) tbb.emplace_back(row, b, wb);
          }
        }
      }
    }
  }
  SparseMatrix l = detail::from_triplets(dim, dim, tl);
  SparseMatrix bm = detail::from_triplets(dim, dim, tb);
  SemidiscreteOperators ops{"2d-ninepoint",
                            std::move(g),
                            l,
                            bm,
                            detail::from_triplets(dim, nb, tlb),
                            detail::from_triplets(dim, nb, tbb),
                            false,
                            LinearOperator::from_mass_stiffness(bm, l),
                            nullptr};
  detail::finish(ops);
  return ops;
}

/// Solves A U + C g = P f + D (boundary f) for U. boundary_f holds f at the
/// boundary nodes (only rows with a nonzero D use it).
inline Vector elliptic_projection(const SemidiscreteOperators& ops, const std::function<double(double, double)>& f,
                                  const Vector& g, const Vector& boundary_f) {
  if (g.size() != ops.boundary_size() || boundary_f.size() != ops.boundary_size()) {
    throw std::invalid_argument("elliptic_projection: boundary vector length mismatch");
  }
  Vector rhs = ops.mass * ops.grid.project(f) - ops.stiffness_boundary * g;
  if (ops.has_D()) rhs.noalias() += ops.mass_boundary * boundary_f;
  Vector u = ops.stiffness_lu->solve(rhs);
  if (ops.stiffness_lu->info() != Eigen::Success || !u.allFinite()) {
    throw std::runtime_error("elliptic_projection: singular system");
  }
  return u;
}

/// As above with boundary f taken pointwise at the boundary nodes.
inline Vector elliptic_projection(const SemidiscreteOperators& ops, const std::function<double(double, double)>& f,
                                  const Vector& g) {
  Vector bf(ops.boundary_size());
  for (Index b = 0; b < ops.boundary_size(); ++b) {
    bf(b) = f(ops.grid.boundary[static_cast<std::size_t>(b)].x, ops.grid.boundary[static_cast<std::size_t>(b)].y);
  }
  return elliptic_projection(ops, f, g, bf);
}

/// max |A P u + C g - P f - D (boundary f)|: the truncation error of the
/// scheme on a smooth u with A u = f.
inline double elliptic_residual(const SemidiscreteOperators& ops, const std::function<double(double, double)>& u,
                                const std::function<double(double, double)>& f, const Vector& g) {
  Vector bf(ops.boundary_size());
  for (Index b = 0; b < ops.boundary_size(); ++b) {
    bf(b) = f(ops.grid.boundary[static_cast<std::size_t>(b)].x, ops.grid.boundary[static_cast<std::size_t>(b)].y);
  }
  const Vector pu = ops.grid.project(u);
  Vector r = ops.stiffness * pu + ops.stiffness_boundary * g - ops.mass * ops.grid.project(f);
  if (ops.has_D()) r.noalias() -= ops.mass_boundary * bf;
  return ops.mass_solve(r).lpNorm<Eigen::Infinity>();
}

/// A as a dense matrix (small sizes only).
inline Matrix dense_operator(const SemidiscreteOperators& ops) {
  Matrix l = Matrix(ops.stiffness);
  if (ops.identity_mass) return l;
  return Matrix(ops.mass).ldlt().solve(l);
}

}  // namespace eerk
