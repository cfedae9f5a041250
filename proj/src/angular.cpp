#include "spherefall/angular.hpp"

#include <cmath>
#include <stdexcept>

namespace spherefall {

namespace {
const Cheb& one_minus_mu2() {
  // 1 - mu^2 = (T_0 - T_2)/2
  static const Cheb c(std::vector<double>{0.5, 0.0, -0.5});
  return c;
}
}  // namespace

PolyS::PolyS(int spow, Cheb p) : spow_(spow % 2), p_(std::move(p)) {
  // Fold even s-powers into the polynomial.
  for (int k = 0; k + 2 <= spow; k += 2) p_ = Cheb::mul(p_, one_minus_mu2());
  p_.trim();
}

double PolyS::eval(double mu) const {
  double v = p_.eval(mu);
  if (spow_ == 1) v *= std::sqrt(std::max(0.0, 1.0 - mu * mu));
  return v;
}

PolyS& PolyS::operator+=(const PolyS& o) {
  if (o.is_zero()) return *this;
  if (is_zero()) {
    *this = o;
    return *this;
  }
  if (spow_ != o.spow_) throw std::logic_error("PolyS: parity mismatch in addition");
  p_ += o.p_;
  return *this;
}

PolyS PolyS::mul(const PolyS& a, const PolyS& b) {
  if (a.is_zero() || b.is_zero()) return PolyS();
  return PolyS(a.spow_ + b.spow_, Cheb::mul(a.p_, b.p_));
}

PolyS PolyS::mul_mu() const { return PolyS(spow_, p_.mul_x()); }

PolyS PolyS::mul_s() const { return PolyS(spow_ + 1, p_); }

PolyS PolyS::div_s() const {
  if (is_zero()) return PolyS();
  if (spow_ == 1) return PolyS(0, p_);
  double res = 0.0;
  Cheb q = Cheb::divide_one_minus_x2(p_, &res);
  if (res > 1e-9) throw std::logic_error("PolyS: inexact division by sin(theta)");
  return PolyS(1, std::move(q));
}

PolyS PolyS::dtheta() const {
  if (is_zero()) return PolyS();
  if (spow_ == 0) {
    // d/d(theta) p(mu) = -s p'(mu)
    return PolyS(1, p_.derivative() * (-1.0));
  }
  // d/d(theta) [s p] = mu p - (1 - mu^2) p'
  Cheb out = p_.mul_x();
  out -= Cheb::mul(one_minus_mu2(), p_.derivative());
  return PolyS(0, std::move(out));
}

AngularFn make_angular(int l, int m, PolyS P) {
  AngularFn f;
  f.l = l;
  f.m = m;
  f.P = P;
  f.tau = P.dtheta();
  f.pi = (m == 0) ? PolyS() : (P.div_s() * static_cast<double>(m));
  return f;
}

std::vector<AngularFn> build_angular(int m, int lmax) {
  if (m < 0) throw std::invalid_argument("build_angular: m must be >= 0");
  const int lmin = std::max(m, 1);
  if (lmax < lmin) throw std::invalid_argument("build_angular: lmax too small");

  // Seed: orthonormal sectoral function, \bar P_m^m = norm * s^m.
  double norm = std::sqrt((2.0 * m + 1.0) / 2.0);
  for (int k = 1; k <= m; ++k) norm *= std::sqrt((2.0 * k - 1.0) / (2.0 * k));

  std::vector<PolyS> P(static_cast<size_t>(lmax) + 1);
  std::vector<double> A(static_cast<size_t>(lmax) + 1, 0.0);
  P[static_cast<size_t>(m)] = PolyS(m, Cheb::constant(norm));
  for (int l = m + 1; l <= lmax; ++l) {
    const double a = std::sqrt((4.0 * l * l - 1.0) / (static_cast<double>(l) * l - static_cast<double>(m) * m));
    A[static_cast<size_t>(l)] = a;
    PolyS next = P[static_cast<size_t>(l - 1)].mul_mu() * a;
    if (l - 2 >= m) next += P[static_cast<size_t>(l - 2)] * (-a / A[static_cast<size_t>(l - 1)]);
    P[static_cast<size_t>(l)] = next;
  }

  std::vector<AngularFn> out;
  out.reserve(static_cast<size_t>(lmax - lmin + 1));
  for (int l = lmin; l <= lmax; ++l) out.push_back(make_angular(l, m, P[static_cast<size_t>(l)]));
  return out;
}

}  // namespace spherefall
