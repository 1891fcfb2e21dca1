#pragma once

// phi-functions phi_l(z) = int_0^1 e^{(1-theta) z} theta^{l-1}/(l-1)! dtheta,
// phi_0 = exp, for scalars and dense matrices.

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "eerk/linear_operator.hpp"

namespace eerk {

/// Below this |z| the Taylor series is used; above it the upward recurrence.
inline constexpr double kPhiTaylorSwitch = 0.5;

inline double inverse_factorial(int n) {
  double f = 1.0;
  for (int k = 2; k <= n; ++k) f /= k;
  return f;
}

/// phi_l(z) for real z.
inline double phi_scalar(int l, double z) {
  if (l < 0) throw std::invalid_argument("phi_scalar: negative index");
  if (!std::isfinite(z)) throw std::domain_error("phi_scalar: non-finite argument");
  if (z > std::log(std::numeric_limits<double>::max())) {
    throw std::out_of_range("phi_scalar: exp(z) overflows");
  }
  if (std::abs(z) < kPhiTaylorSwitch) {
    // sum_{j>=0} z^j / (j + l)!
    double term = inverse_factorial(l);
    double sum = term;
    for (int j = 1; j < 200; ++j) {
      term *= z / (j + l);
      sum += term;
      if (std::abs(term) <= std::numeric_limits<double>::epsilon() * std::abs(sum) * 0.25) break;
    }
    return sum;
  }
  // phi_{j+1}(z) = (phi_j(z) - 1/j!) / z
  double phi = std::exp(z);
  double inv_fact = 1.0;
  for (int j = 0; j < l; ++j) {
    phi = (phi - inv_fact) / z;
    inv_fact /= (j + 1);
  }
  return phi;
}

/// [phi_0(M), ..., phi_{l_max}(M)] from one exponential of the block matrix
/// [[M, I, 0, ...], [0, 0, I, ...], ..., [0, ..., 0]], whose first block row
/// holds the phi-functions. The exponential uses scaling and squaring with a
/// Pade approximant.
inline std::vector<Matrix> phi_dense(int l_max, const Matrix& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("phi_dense: matrix not square");
  if (l_max < 0) throw std::invalid_argument("phi_dense: negative l_max");
  const Index n = m.rows();
  const Index blocks = l_max + 1;
  Matrix aug = Matrix::Zero(n * blocks, n * blocks);
  aug.topLeftCorner(n, n) = m;
  for (Index b = 0; b + 1 < blocks; ++b) aug.block(b * n, (b + 1) * n, n, n).setIdentity();
  const Matrix e = aug.exp();
  std::vector<Matrix> out;
  out.reserve(static_cast<std::size_t>(blocks));
  for (Index b = 0; b < blocks; ++b) out.push_back(e.block(0, b * n, n, n));
  return out;
}

/// sum_l tau^l phi_l(tau M) v_l by the dense route; the oracle for Krylov
/// evaluations.
inline Vector phi_combination_dense(const Matrix& m, double tau, const std::vector<Vector>& v) {
  if (v.empty()) throw std::invalid_argument("phi_combination_dense: no vectors");
  const auto phis = phi_dense(static_cast<int>(v.size()) - 1, tau * m);
  Vector out = Vector::Zero(m.rows());
  double scale = 1.0;
  for (std::size_t l = 0; l < v.size(); ++l) {
    out += scale * (phis[l] * v[l]);
    scale *= tau;
  }
  return out;
}

}  // namespace eerk
