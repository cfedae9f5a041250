#pragma once
#include <vector>

#include "spherefall/cheb.hpp"

namespace spherefall {

// Meridional factor s^spow * p(mu), with s = sin(theta), mu = cos(theta).
// spow is canonical (0 or 1); even powers of s fold into p as (1 - mu^2).
// Keeping the odd s-factor symbolic makes every operation below exact and
// pole-safe: no expression ever divides by sin(theta) numerically.
class PolyS {
public:
  PolyS() = default;
  PolyS(int spow, Cheb p);

  static PolyS zero() { return PolyS(); }
  static PolyS constant(double v) { return PolyS(0, Cheb::constant(v)); }
  static PolyS mu() { return PolyS(0, Cheb::basis(1)); }
  static PolyS s() { return PolyS(1, Cheb::constant(1.0)); }

  int spow() const { return spow_; }
  const Cheb& poly() const { return p_; }
  bool is_zero() const { return p_.empty(); }

  double eval(double mu) const;

  PolyS& operator+=(const PolyS& o);
  friend PolyS operator+(PolyS a, const PolyS& b) { a += b; return a; }
  friend PolyS operator*(PolyS a, double c) { a.p_ *= c; return a; }
  friend PolyS operator*(double c, PolyS a) { a.p_ *= c; return a; }

  static PolyS mul(const PolyS& a, const PolyS& b);
  PolyS mul_mu() const;
  PolyS mul_s() const;
  // Division by s; exact (asserts divisibility when the s-power is even).
  PolyS div_s() const;
  // d/d(theta) = -s d/d(mu), applied to s^spow * p.
  PolyS dtheta() const;

  double max_abs_coeff() const { return p_.max_abs_coeff(); }

private:
  int spow_ = 0;
  Cheb p_;
};

// Angular building blocks for degree l, order m:
//   P   : orthonormalized associated Legendre function of cos(theta)
//   tau : dP/d(theta)
//   pi  : m P / sin(theta)   (identically zero for m = 0)
struct AngularFn {
  int l = 0;
  int m = 0;
  PolyS P, tau, pi;
};

// Orthonormal on [-1,1]: integral of P^2 d(mu) = 1. No Condon-Shortley phase.
std::vector<AngularFn> build_angular(int m, int lmax);

// Single unnormalized angular entry with P given explicitly (used for the
// closed-form lifting fields, whose traces are pinned geometrically).
AngularFn make_angular(int l, int m, PolyS P);

}  // namespace spherefall
