#pragma once
#include <cstdlib>
#include <vector>

namespace spherefall {

// Exact azimuthal integrals of products of cos(m phi) / sin(m phi) over
// [0, 2*pi], via product-to-sum reduction. These encode the Fourier
// selection rules; a zero return is an exact structural zero.
enum class TrigKind { cos, sin };

struct TrigTerm {
  double coef;
  TrigKind kind;
  int wavenumber;  // >= 0
};

inline std::vector<TrigTerm> trig_product(const TrigTerm& a, const TrigTerm& b) {
  const int p = a.wavenumber + b.wavenumber;
  const int q = std::abs(a.wavenumber - b.wavenumber);
  const double h = 0.5 * a.coef * b.coef;
  const bool qa_flip = a.wavenumber < b.wavenumber;  // sign of sin(a-b) when folding to |a-b|
  std::vector<TrigTerm> out;
  if (a.kind == TrigKind::cos && b.kind == TrigKind::cos) {
    out.push_back({h, TrigKind::cos, q});
    out.push_back({h, TrigKind::cos, p});
  } else if (a.kind == TrigKind::sin && b.kind == TrigKind::sin) {
    out.push_back({h, TrigKind::cos, q});
    out.push_back({-h, TrigKind::cos, p});
  } else if (a.kind == TrigKind::sin && b.kind == TrigKind::cos) {
    // sin A cos B = [sin(A-B) + sin(A+B)]/2
    out.push_back({qa_flip ? -h : h, TrigKind::sin, q});
    out.push_back({h, TrigKind::sin, p});
  } else {
    // cos A sin B = [sin(A+B) - sin(A-B)]/2
    out.push_back({qa_flip ? h : -h, TrigKind::sin, q});
    out.push_back({h, TrigKind::sin, p});
  }
  return out;
}

inline double trig_integral(const std::vector<TrigTerm>& terms) {
  double v = 0.0;
  const double two_pi = 6.283185307179586476925286766559;
  for (const auto& t : terms)
    if (t.kind == TrigKind::cos && t.wavenumber == 0) v += t.coef * two_pi;
  return v;
}

inline double trig_pair_integral(TrigKind k1, int m1, TrigKind k2, int m2) {
  return trig_integral(trig_product({1.0, k1, m1}, {1.0, k2, m2}));
}

inline double trig_triple_integral(TrigKind k1, int m1, TrigKind k2, int m2, TrigKind k3, int m3) {
  double v = 0.0;
  for (const auto& t : trig_product({1.0, k1, m1}, {1.0, k2, m2}))
    v += trig_integral(trig_product(t, {1.0, k3, m3}));
  return v;
}

}  // namespace spherefall
