#pragma once
#include <cstdint>
#include <vector>

#include "spherefall/cheb.hpp"

namespace spherefall {

// Polynomial in the inverse radius q = 1/r, stored as q^qpow * c(2q - 1)
// with c a Chebyshev series. Keeping the leading q-power symbolic does two
// things: it documents the decay rate of every profile, and it keeps
// evaluations near q = 0 accurate in a relative sense, which matters because
// the exterior volume measure carries a q^-4 weight.
class RadialPoly {
public:
  RadialPoly() = default;
  RadialPoly(int qpow, Cheb c) : qpow_(qpow), c_(std::move(c)) {
    if (c_.empty()) qpow_ = 0;
  }

  static RadialPoly constant(double v) { return RadialPoly(0, Cheb::constant(v)); }
  static RadialPoly q() { return RadialPoly(1, Cheb::constant(1.0)); }
  static RadialPoly chebyshev_core(int n) { return RadialPoly(0, Cheb::basis(n)); }
  static RadialPoly from_q_monomials(const std::vector<double>& a);  // sum a_k q^k

  bool is_zero() const { return c_.empty(); }
  int qpow() const { return qpow_; }
  const Cheb& cheb() const { return c_; }
  int degree() const { return qpow_ + std::max(c_.degree(), 0); }

  double eval_q(double qv) const;
  double eval_r(double r) const { return eval_q(1.0 / r); }

  RadialPoly& operator+=(const RadialPoly& o);
  friend RadialPoly operator+(RadialPoly a, const RadialPoly& b) { a += b; return a; }
  friend RadialPoly operator*(RadialPoly a, double s) { a.c_ *= s; a.c_.trim(); if (a.c_.empty()) a.qpow_ = 0; return a; }
  friend RadialPoly operator*(double s, RadialPoly a) { return a * s; }
  static RadialPoly mul(const RadialPoly& a, const RadialPoly& b) {
    return RadialPoly(a.qpow_ + b.qpow_, Cheb::mul(a.c_, b.c_));
  }

  RadialPoly dq() const;                 // d/dq
  RadialPoly mul_q() const { return RadialPoly(qpow_ + 1, c_); }
  RadialPoly mul_one_minus_q() const;    // multiply by (1 - q)
  RadialPoly ddr() const;                // d/dr = -q^2 d/dq

  double max_abs_coeff() const { return c_.max_abs_coeff(); }

private:
  int qpow_ = 0;
  Cheb c_;
};

enum class RadialMapKind { algebraic, truncated };

// Collocation radii and quadrature weights on (1, inf). `weights` integrate
// against the plain measure dr; volume integrals use weight * r^2.
// Built from a Gauss-Legendre rule in q = 1/r, so integrands polynomial in q
// are integrated exactly (the truncated map drops the tail beyond r_inf).
struct RadialGrid {
  RadialMapKind map_kind = RadialMapKind::algebraic;
  double scale = 1.0;    // node-placement knob; 1.0 keeps polynomial exactness
  double r_inf = 1e4;    // only used by the truncated map
  std::vector<double> nodes;      // r_i > 1
  std::vector<double> q_nodes;    // 1/r_i
  std::vector<double> weights;    // for integral over dr
  int size() const { return static_cast<int>(nodes.size()); }
  double volume_weight(int i) const { return weights[static_cast<size_t>(i)] * nodes[static_cast<size_t>(i)] * nodes[static_cast<size_t>(i)]; }
};

RadialGrid build_radial_grid(int n, RadialMapKind kind = RadialMapKind::algebraic, double scale = 1.0,
                             double r_inf = 1e4);

// Gauss-Legendre nodes/weights in mu = cos(theta) on [-1, 1].
struct AngularGrid {
  std::vector<double> mu;
  std::vector<double> weights;
  int size() const { return static_cast<int>(mu.size()); }
};

AngularGrid build_angular_grid(int n);

struct Quad2D {
  RadialGrid radial;
  AngularGrid angular;
  std::uint64_t fingerprint = 0;
};

Quad2D build_quadrature(int n_r, int n_mu, RadialMapKind kind = RadialMapKind::algebraic, double scale = 1.0,
                        double r_inf = 1e4);

}  // namespace spherefall
