#include "spherefall/radial.hpp"

#include <cmath>
#include <stdexcept>

#include "spherefall/gauss.hpp"

namespace spherefall {

namespace {
// Chebyshev series of q * c (q = (t + 1)/2) without touching the q-power.
Cheb cheb_mul_q(const Cheb& c) {
  Cheb out = c.mul_x();
  out += c;
  out *= 0.5;
  return out;
}
}  // namespace

RadialPoly RadialPoly::from_q_monomials(const std::vector<double>& a) {
  size_t lead = 0;
  while (lead < a.size() && a[lead] == 0.0) ++lead;
  RadialPoly acc;
  RadialPoly qk(static_cast<int>(lead), Cheb::constant(1.0));
  for (size_t k = lead; k < a.size(); ++k) {
    if (a[k] != 0.0) acc += qk * a[k];
    qk = qk.mul_q();
  }
  return acc;
}

double RadialPoly::eval_q(double qv) const {
  if (c_.empty()) return 0.0;
  double v = c_.eval(2.0 * qv - 1.0);
  for (int k = 0; k < qpow_; ++k) v *= qv;
  return v;
}

RadialPoly& RadialPoly::operator+=(const RadialPoly& o) {
  if (o.is_zero()) return *this;
  if (is_zero()) {
    *this = o;
    return *this;
  }
  // Fold the higher q-power into the Chebyshev part of that operand.
  int k = std::min(qpow_, o.qpow_);
  Cheb a = c_;
  for (int i = k; i < qpow_; ++i) a = cheb_mul_q(a);
  Cheb b = o.c_;
  for (int i = k; i < o.qpow_; ++i) b = cheb_mul_q(b);
  a += b;
  *this = RadialPoly(k, std::move(a));
  return *this;
}

RadialPoly RadialPoly::dq() const {
  if (is_zero()) return RadialPoly();
  // d/dq [q^k c] = q^{k-1} (k c + q c')
  Cheb cp = c_.derivative() * 2.0;  // d/dq of the Chebyshev part
  if (qpow_ == 0) return RadialPoly(0, std::move(cp));
  Cheb out = c_ * static_cast<double>(qpow_);
  out += cheb_mul_q(cp);
  return RadialPoly(qpow_ - 1, std::move(out));
}

RadialPoly RadialPoly::mul_one_minus_q() const {
  // (1 - q) = (1 - t)/2 in the Chebyshev variable t = 2q - 1.
  Cheb out = c_;
  out -= c_.mul_x();
  out *= 0.5;
  return RadialPoly(qpow_, std::move(out));
}

RadialPoly RadialPoly::ddr() const {
  // d/dr = -q^2 d/dq
  RadialPoly d = dq();
  return RadialPoly(d.qpow_ + 2, d.c_ * -1.0);
}

RadialGrid build_radial_grid(int n, RadialMapKind kind, double scale, double r_inf) {
  if (n < 2) throw std::invalid_argument("radial grid needs at least 2 nodes");
  if (scale <= 0.0) throw std::invalid_argument("radial map scale must be positive");
  RadialGrid g;
  g.map_kind = kind;
  g.scale = scale;
  g.r_inf = r_inf;
  const GaussRule rule = gauss_legendre(n);
  const double q_lo = (kind == RadialMapKind::truncated) ? 1.0 / r_inf : 0.0;
  g.nodes.resize(static_cast<size_t>(n));
  g.q_nodes.resize(static_cast<size_t>(n));
  g.weights.resize(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    // u in (q_lo, 1), descending in r.
    const double u = q_lo + (rule.nodes[static_cast<size_t>(i)] + 1.0) * 0.5 * (1.0 - q_lo);
    const double wu = rule.weights[static_cast<size_t>(i)] * 0.5 * (1.0 - q_lo);
    // r(u) = 1 + scale*(1-u)/u; scale = 1 gives r = 1/u exactly.
    const double r = 1.0 + scale * (1.0 - u) / u;
    const double drdu = -scale / (u * u);
    const int j = n - 1 - i;  // ascending radii
    g.nodes[static_cast<size_t>(j)] = r;
    g.q_nodes[static_cast<size_t>(j)] = 1.0 / r;
    g.weights[static_cast<size_t>(j)] = wu * std::abs(drdu);
  }
  for (double r : g.nodes)
    if (!(r > 1.0)) throw std::logic_error("radial grid produced a node at or inside the sphere");
  for (double w : g.weights)
    if (!(w > 0.0)) throw std::logic_error("radial grid produced a non-positive weight");
  return g;
}

AngularGrid build_angular_grid(int n) {
  if (n < 2) throw std::invalid_argument("angular grid needs at least 2 nodes");
  const GaussRule rule = gauss_legendre(n);
  AngularGrid g;
  g.mu = rule.nodes;
  g.weights = rule.weights;
  return g;
}

namespace {
std::uint64_t fnv1a(const void* data, size_t n, std::uint64_t h = 1469598103934665603ull) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}
}  // namespace

Quad2D build_quadrature(int n_r, int n_mu, RadialMapKind kind, double scale, double r_inf) {
  Quad2D quad;
  quad.radial = build_radial_grid(n_r, kind, scale, r_inf);
  quad.angular = build_angular_grid(n_mu);
  struct Desc {
    int nr, nmu, kind;
    double scale, rinf;
  } d{n_r, n_mu, static_cast<int>(kind), scale, r_inf};
  quad.fingerprint = fnv1a(&d, sizeof(d));
  return quad;
}

}  // namespace spherefall
