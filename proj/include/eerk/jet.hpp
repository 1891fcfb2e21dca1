#pragma once

// Truncated bivariate Taylor polynomials ("jets") about a point (x0, y0).
//
// A jet stores the coefficients a(i, j) of dx^i dy^j for i + j <= Degree, so
// a(i, j) = d^i/dx^i d^j/dy^j Q / (i! j!). Arithmetic is truncated at Degree,
// which makes the type a forward-mode Taylor arithmetic: evaluating a formula
// on jets yields all spatial derivatives of the result up to Degree.
//
// The boundary correction terms need traces such as A(f_t + f_u u') at a
// boundary node, with A the Laplacian; jets give these exactly from the
// manufactured solution and from partially measured data alike.

#include <array>
#include <cmath>
#include <cstddef>

namespace eerk {

template <int Degree>
class Jet2 {
  static_assert(Degree >= 0);

 public:
  static constexpr int degree = Degree;
  static constexpr std::size_t size = (Degree + 1) * (Degree + 2) / 2;

  constexpr Jet2() { a_.fill(0.0); }
  constexpr Jet2(double value) {  // NOLINT(google-explicit-constructor)
    a_.fill(0.0);
    a_[0] = value;
  }

  /// Independent variable x about x0 (or y about y0 when axis == 1).
  static Jet2 variable(int axis, double at) {
    Jet2 out(at);
    if constexpr (Degree >= 1) out(axis == 0 ? 1 : 0, axis == 0 ? 0 : 1) = 1.0;
    return out;
  }

  static constexpr std::size_t index(int i, int j) {
    // Ordered by total degree d = i + j, then by j.
    const int d = i + j;
    return static_cast<std::size_t>(d * (d + 1) / 2 + j);
  }

  double& operator()(int i, int j) { return a_[index(i, j)]; }
  double operator()(int i, int j) const {
    if (i < 0 || j < 0 || i + j > Degree) return 0.0;
    return a_[index(i, j)];
  }

  double value() const { return a_[0]; }

  /// Partial derivative d^i/dx^i d^j/dy^j at the expansion point.
  double derivative(int i, int j) const {
    return (*this)(i, j) * factorial(i) * factorial(j);
  }

  Jet2& operator+=(const Jet2& o) {
    for (std::size_t n = 0; n < size; ++n) a_[n] += o.a_[n];
    return *this;
  }
  Jet2& operator-=(const Jet2& o) {
    for (std::size_t n = 0; n < size; ++n) a_[n] -= o.a_[n];
    return *this;
  }
  Jet2& operator*=(double s) {
    for (auto& v : a_) v *= s;
    return *this;
  }
  Jet2& operator+=(double s) {
    a_[0] += s;
    return *this;
  }

  Jet2& operator*=(const Jet2& o) {
    *this = *this * o;
    return *this;
  }

  friend Jet2 operator*(const Jet2& p, const Jet2& q) {
    Jet2 out;
    for (int d1 = 0; d1 <= Degree; ++d1) {
      for (int j1 = 0; j1 <= d1; ++j1) {
        const double pa = p.a_[index(d1 - j1, j1)];
        if (pa == 0.0) continue;
        for (int d2 = 0; d2 <= Degree - d1; ++d2) {
          for (int j2 = 0; j2 <= d2; ++j2) {
            out.a_[index(d1 - j1 + d2 - j2, j1 + j2)] += pa * q.a_[index(d2 - j2, j2)];
          }
        }
      }
    }
    return out;
  }

  friend Jet2 operator+(Jet2 p, const Jet2& q) { return p += q; }
  friend Jet2 operator-(Jet2 p, const Jet2& q) { return p -= q; }
  friend Jet2 operator+(Jet2 p, double s) { return p += s; }
  friend Jet2 operator+(double s, Jet2 p) { return p += s; }
  friend Jet2 operator-(Jet2 p, double s) { return p += -s; }
  friend Jet2 operator-(double s, const Jet2& p) { return Jet2(s) - p; }
  friend Jet2 operator*(Jet2 p, double s) { return p *= s; }
  friend Jet2 operator*(double s, Jet2 p) { return p *= s; }
  friend Jet2 operator/(Jet2 p, double s) { return p *= (1.0 / s); }
  friend Jet2 operator-(Jet2 p) { return p *= -1.0; }

  /// Laplacian d2/dx2 + d2/dy2; the result is exact up to degree Degree - 2.
  friend Jet2 laplacian(const Jet2& p) {
    Jet2 out;
    for (int d = 0; d + 2 <= Degree; ++d) {
      for (int j = 0; j <= d; ++j) {
        const int i = d - j;
        out(i, j) = (i + 2) * (i + 1) * p(i + 2, j) + (j + 2) * (j + 1) * p(i, j + 2);
      }
    }
    return out;
  }

  /// d/dx (axis 0) or d/dy (axis 1).
  friend Jet2 partial(const Jet2& p, int axis) {
    Jet2 out;
    for (int d = 0; d + 1 <= Degree; ++d) {
      for (int j = 0; j <= d; ++j) {
        const int i = d - j;
        out(i, j) = axis == 0 ? (i + 1) * p(i + 1, j) : (j + 1) * p(i, j + 1);
      }
    }
    return out;
  }

  // Composition g(p) = sum_k g^(k)(p0) (p - p0)^k / k!, given the derivative
  // values g^(k)(p0) for k = 0..Degree.
  template <class Derivatives>
  friend Jet2 compose(const Jet2& p, Derivatives&& g_derivative) {
    Jet2 delta = p;
    delta.a_[0] = 0.0;
    Jet2 out(g_derivative(0));
    Jet2 power(1.0);
    double inv_fact = 1.0;
    for (int k = 1; k <= Degree; ++k) {
      power = power * delta;
      inv_fact /= k;
      out += power * (g_derivative(k) * inv_fact);
    }
    return out;
  }

  friend Jet2 cos(const Jet2& p) {
    const double c = std::cos(p.value());
    const double s = std::sin(p.value());
    // cos^(k) cycles through cos, -sin, -cos, sin.
    return compose(p, [c, s](int k) {
      switch (k % 4) {
        case 0: return c;
        case 1: return -s;
        case 2: return -c;
        default: return s;
      }
    });
  }

  friend Jet2 sin(const Jet2& p) {
    const double c = std::cos(p.value());
    const double s = std::sin(p.value());
    return compose(p, [c, s](int k) {
      switch (k % 4) {
        case 0: return s;
        case 1: return c;
        case 2: return -s;
        default: return -c;
      }
    });
  }

  friend Jet2 exp(const Jet2& p) {
    const double e = std::exp(p.value());
    return compose(p, [e](int) { return e; });
  }

 private:
  static constexpr double factorial(int n) {
    double f = 1.0;
    for (int k = 2; k <= n; ++k) f *= k;
    return f;
  }

  std::array<double, size> a_{};
};

/// Jet degree used for boundary traces. Eight covers the third power of the
/// Laplacian followed by a normal derivative.
inline constexpr int kTraceJetDegree = 8;
using Jet = Jet2<kTraceJetDegree>;

}  // namespace eerk
