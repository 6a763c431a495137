#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

namespace foliate {

/// Truncated Taylor polynomial in three variables, degree <= 4.
///
/// Coefficients are stored per multi-index (i,j,k), i+j+k <= max_order,
/// in graded order. Arithmetic truncates at `order`, so metric
/// evaluation on Taylor3 arguments yields exact partial derivatives of
/// the metric components up to that order.
class Taylor3 {
public:
  static constexpr int kMaxOrder = 4;
  static constexpr int kTerms = 35; // #{(i,j,k): i+j+k <= 4}

  Taylor3() : order_(kMaxOrder) { c_.fill(0.0); }
  explicit Taylor3(double v, int order = kMaxOrder) : order_(order) {
    c_.fill(0.0);
    c_[0] = v;
  }

  /// Coordinate variable `var` (0..2) seeded at value v.
  static Taylor3 variable(double v, int var, int order) {
    Taylor3 t(v, order);
    if (order >= 1) t.c_[1 + var] = 1.0;
    return t;
  }

  int order() const { return order_; }
  double value() const { return c_[0]; }

  /// Taylor coefficient of the multi-index (i,j,k).
  double coeff(int i, int j, int k) const { return c_[index(i, j, k)]; }
  /// Partial derivative d^{i+j+k} f / dx^i dy^j dz^k at the base point.
  double deriv(int i, int j, int k) const {
    return c_[index(i, j, k)] * factorial(i) * factorial(j) * factorial(k);
  }

  Taylor3 operator-() const {
    Taylor3 r(*this);
    for (double& v : r.c_) v = -v;
    return r;
  }
  Taylor3& operator+=(const Taylor3& o) {
    for (int t = 0; t < kTerms; ++t) c_[t] += o.c_[t];
    return *this;
  }
  Taylor3& operator-=(const Taylor3& o) {
    for (int t = 0; t < kTerms; ++t) c_[t] -= o.c_[t];
    return *this;
  }
  Taylor3& operator+=(double s) {
    c_[0] += s;
    return *this;
  }
  Taylor3& operator-=(double s) {
    c_[0] -= s;
    return *this;
  }
  Taylor3& operator*=(double s) {
    for (double& v : c_) v *= s;
    return *this;
  }

  friend Taylor3 operator+(Taylor3 a, const Taylor3& b) { return a += b; }
  friend Taylor3 operator-(Taylor3 a, const Taylor3& b) { return a -= b; }
  friend Taylor3 operator+(Taylor3 a, double s) { return a += s; }
  friend Taylor3 operator+(double s, Taylor3 a) { return a += s; }
  friend Taylor3 operator-(Taylor3 a, double s) { return a -= s; }
  friend Taylor3 operator-(double s, const Taylor3& a) { return (-a) += s; }
  friend Taylor3 operator*(Taylor3 a, double s) { return a *= s; }
  friend Taylor3 operator*(double s, Taylor3 a) { return a *= s; }

  friend Taylor3 operator*(const Taylor3& a, const Taylor3& b) {
    Taylor3 r(0.0, std::min(a.order_, b.order_));
    const MulTable& mt = mul_table();
    for (const auto& e : mt.entries) {
      if (e.deg > r.order_) break;
      r.c_[e.out] += a.c_[e.lhs] * b.c_[e.rhs];
    }
    return r;
  }

  /// Composition f(self) for univariate f given derivatives
  /// f, f', ..., f^{(4)} at self.value().
  Taylor3 compose(const std::array<double, kMaxOrder + 1>& fderiv) const {
    Taylor3 dx(*this);
    dx.c_[0] = 0.0;
    Taylor3 r(fderiv[0], order_);
    Taylor3 p(1.0, order_);
    double fact = 1.0;
    for (int n = 1; n <= order_; ++n) {
      p = p * dx;
      fact *= n;
      Taylor3 term = p;
      term *= fderiv[n] / fact;
      r += term;
    }
    return r;
  }

  Taylor3 exp() const {
    const double e = std::exp(value());
    return compose({e, e, e, e, e});
  }

  static int index(int i, int j, int k); // graded-lex position of (i,j,k)

private:
  struct MulEntry {
    std::uint8_t lhs, rhs, out, deg;
  };
  struct MulTable {
    std::vector<MulEntry> entries; // sorted by deg
  };
  static const MulTable& mul_table();
  static double factorial(int n) {
    static const double f[5] = {1, 1, 2, 6, 24};
    return f[n];
  }

  std::array<double, kTerms> c_;
  int order_;

  friend struct Taylor3Access;
};

} // namespace foliate
