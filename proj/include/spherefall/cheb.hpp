#pragma once
#include <vector>

namespace spherefall {

// Chebyshev series on [-1, 1]; coefficient c[k] multiplies T_k(x).
// All arithmetic is exact in coefficient space, which keeps every
// assembled integrand a true polynomial that Gauss quadrature
// integrates exactly.
class Cheb {
public:
  Cheb() = default;
  explicit Cheb(std::vector<double> coeffs) : c_(std::move(coeffs)) { trim(); }

  static Cheb constant(double v);
  static Cheb basis(int k, double scale = 1.0);

  int size() const { return static_cast<int>(c_.size()); }
  int degree() const { return size() - 1; }
  bool empty() const { return c_.empty(); }
  double coeff(int k) const { return (k >= 0 && k < size()) ? c_[k] : 0.0; }
  const std::vector<double>& coeffs() const { return c_; }

  double eval(double x) const;

  Cheb& operator+=(const Cheb& o);
  Cheb& operator-=(const Cheb& o);
  Cheb& operator*=(double s);
  friend Cheb operator+(Cheb a, const Cheb& b) { a += b; return a; }
  friend Cheb operator-(Cheb a, const Cheb& b) { a -= b; return a; }
  friend Cheb operator*(Cheb a, double s) { a *= s; return a; }
  friend Cheb operator*(double s, Cheb a) { a *= s; return a; }

  static Cheb mul(const Cheb& a, const Cheb& b);
  Cheb mul_x() const;
  Cheb derivative() const;

  // Exact solve of (1 - x^2) q = p. The solve residual is ~0 whenever p is
  // divisible; a large residual flags a formula bug upstream.
  static Cheb divide_one_minus_x2(const Cheb& p, double* residual = nullptr);

  double max_abs_coeff() const;
  void trim(double tol = 0.0);

private:
  std::vector<double> c_;
};

}  // namespace spherefall
