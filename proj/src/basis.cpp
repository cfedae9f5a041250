#include "spherefall/basis.hpp"

#include <cmath>
#include <sstream>

namespace spherefall {

namespace {

Profile p_empty() { return Profile{}; }

Profile p_term(RadialPoly rad, PolyS ang) {
  Profile p;
  if (!rad.is_zero() && !ang.is_zero()) p.terms.push_back({std::move(rad), std::move(ang)});
  return p;
}

Profile p_add(Profile x, const Profile& y) {
  for (const auto& t : y.terms) x.terms.push_back(t);
  return x;
}

Profile p_scale(Profile x, double s) {
  if (s == 0.0) return p_empty();
  for (auto& t : x.terms) t.rad = t.rad * s;
  return x;
}

Profile p_mul_mu(const Profile& x) {
  Profile out;
  for (const auto& t : x.terms) out.terms.push_back({t.rad, t.ang.mul_mu()});
  return out;
}

Profile p_mul_s(const Profile& x) {
  Profile out;
  for (const auto& t : x.terms) out.terms.push_back({t.rad, t.ang.mul_s()});
  return out;
}

void finalize_gradients(BasisMember& mb, const AngularFn& ang, Family family, const RadialPoly& rpot,
                        const RadialPoly& s_pot_unused) {
  (void)s_pot_unused;
  const int m = mb.idx.m;
  const double sg = (mb.flavor == Flavor::A) ? -1.0 : 1.0;
  const double ll = static_cast<double>(mb.idx.l) * (mb.idx.l + 1);

  // The two sin(theta)-division combos are regular for every (l, m); PolyS
  // asserts exact divisibility, so a formula error shows up loudly.
  PolyS comboA = (ang.tau.mul_mu() + ang.pi * (-static_cast<double>(m)));
  comboA = comboA.is_zero() ? PolyS() : comboA.div_s();
  PolyS comboB = (ang.tau * static_cast<double>(m) + ang.pi.mul_mu() * (-1.0));
  comboB = comboB.is_zero() ? PolyS() : comboB.div_s();

  if (family == Family::toroidal) {
    const RadialPoly& t = rpot;
    const RadialPoly tq = t.mul_q();
    const RadialPoly tp = t.ddr();
    mb.comp[0] = p_empty();
    mb.comp[1] = p_term(t * (-sg), ang.pi);
    mb.comp[2] = p_term(t * (-1.0), ang.tau);
    mb.grad[0][0] = p_empty();
    mb.grad[0][1] = p_term(tq * sg, ang.pi);
    mb.grad[0][2] = p_term(tq, ang.tau);
    mb.grad[1][0] = p_term(tp * (-sg), ang.pi);
    mb.grad[1][1] = p_term(tq * (-sg), ang.pi.dtheta());
    mb.grad[1][2] = p_term(tq, comboA);
    mb.grad[2][0] = p_term(tp * (-1.0), ang.tau);
    mb.grad[2][1] = p_term(tq * (-1.0), ang.tau.dtheta());
    mb.grad[2][2] = p_term(tq * sg, comboB);
  } else {
    const RadialPoly& s = rpot;
    const RadialPoly R1 = s.mul_q();
    const RadialPoly R2 = s.mul_q() + s.ddr();
    const RadialPoly R1p = R1.ddr();
    const RadialPoly R2p = R2.ddr();
    const RadialPoly diff_q = (R1 * ll + R2 * (-1.0)).mul_q();  // q (l(l+1) R1 - R2)
    mb.comp[0] = p_term(R1 * ll, ang.P);
    mb.comp[1] = p_term(R2, ang.tau);
    mb.comp[2] = p_term(R2 * sg, ang.pi);
    mb.grad[0][0] = p_term(R1p * ll, ang.P);
    mb.grad[0][1] = p_term(diff_q, ang.tau);
    mb.grad[0][2] = (m == 0) ? p_empty() : p_term(diff_q * sg, ang.pi);
    mb.grad[1][0] = p_term(R2p, ang.tau);
    mb.grad[1][1] = p_add(p_term(R2.mul_q(), ang.tau.dtheta()), p_term(R1.mul_q() * ll, ang.P));
    mb.grad[1][2] = p_term(R2.mul_q() * sg, comboB);
    mb.grad[2][0] = p_term(R2p * sg, ang.pi);
    mb.grad[2][1] = p_term(R2.mul_q() * sg, ang.pi.dtheta());
    mb.grad[2][2] = p_add(p_term(R2.mul_q(), comboA), p_term(R1.mul_q() * ll, ang.P));
  }

  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      mb.strain[i][j] = p_scale(p_add(mb.grad[i][j], mb.grad[j][i]), 0.5);

  for (int i = 0; i < 3; ++i)
    mb.d1comp[i] = p_add(p_mul_mu(mb.grad[i][0]), p_scale(p_mul_s(mb.grad[i][1]), -1.0));
}

uint64_t fnv1a_str(const std::string& s) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

BasisMember make_toroidal(int m, Flavor flavor, const AngularFn& ang, const RadialPoly& t_pot) {
  BasisMember mb;
  mb.idx = {m, ang.l, 0, Family::toroidal};
  mb.flavor = flavor;
  finalize_gradients(mb, ang, Family::toroidal, t_pot, RadialPoly());
  return mb;
}

BasisMember make_poloidal(int m, Flavor flavor, const AngularFn& ang, const RadialPoly& s_pot) {
  BasisMember mb;
  mb.idx = {m, ang.l, 0, Family::poloidal};
  mb.flavor = flavor;
  finalize_gradients(mb, ang, Family::poloidal, s_pot, RadialPoly());
  return mb;
}

BasisMember make_translation_lifting(int axis) {
  // Exterior Stokes flow of a unit-speed translating sphere; potential
  // s(q) = (3 - q^2)/4 gives the exact no-slip trace.
  const RadialPoly s_pot = RadialPoly::from_q_monomials({0.75, 0.0, -0.25});
  BasisMember mb;
  if (axis == 0) {
    mb = make_poloidal(0, Flavor::A, make_angular(1, 0, PolyS::mu()), s_pot);
  } else if (axis == 1) {
    mb = make_poloidal(1, Flavor::A, make_angular(1, 1, PolyS::s()), s_pot);
  } else {
    mb = make_poloidal(1, Flavor::B, make_angular(1, 1, PolyS::s()), s_pot);
  }
  mb.lifting = true;
  mb.trans_trace = Eigen::Vector3d::Unit(axis);
  mb.xi_trace = (axis == 0) ? 1.0 : 0.0;
  return mb;
}

BasisMember make_rotation_lifting(int axis) {
  // Rotlet about e_{axis+1}: t(q) = q^2, exact rigid trace omega x x.
  const RadialPoly t_pot = RadialPoly::from_q_monomials({0.0, 0.0, 1.0});
  BasisMember mb;
  if (axis == 0) {
    mb = make_toroidal(0, Flavor::B, make_angular(1, 0, PolyS::mu()), t_pot);
  } else if (axis == 1) {
    mb = make_toroidal(1, Flavor::B, make_angular(1, 1, PolyS::s()), t_pot);
  } else {
    mb = make_toroidal(1, Flavor::A, make_angular(1, 1, PolyS::s()), t_pot);
  }
  mb.lifting = true;
  mb.omega_trace = Eigen::Vector3d::Unit(axis);
  return mb;
}

void BasisMember::scale(double factor) {
  auto scale_profile = [factor](Profile& p) {
    for (auto& t : p.terms) t.rad = t.rad * factor;
  };
  for (int i = 0; i < 3; ++i) {
    scale_profile(comp[i]);
    scale_profile(d1comp[i]);
    for (int j = 0; j < 3; ++j) {
      scale_profile(grad[i][j]);
      scale_profile(strain[i][j]);
    }
  }
  xi_trace *= factor;
  trans_trace *= factor;
  omega_trace *= factor;
}

Eigen::Vector3d BasisMember::evaluate(const Eigen::Vector3d& x, Eigen::Matrix3d* grad_out) const {
  const double r = x.norm();
  const double q = 1.0 / r;
  const double mu = x(0) / r;
  const double rho = std::hypot(x(1), x(2));
  const double phi = (rho > 0.0) ? std::atan2(x(2), x(1)) : 0.0;
  const double s = rho / r;
  const double cphi = std::cos(phi), sphi = std::sin(phi);

  Eigen::Matrix3d frame;  // columns: r_hat, theta_hat, phi_hat
  frame.col(0) = x / r;
  frame.col(1) = Eigen::Vector3d(-s, mu * cphi, mu * sphi);
  frame.col(2) = Eigen::Vector3d(0.0, -sphi, cphi);

  const int m = idx.m;
  const double cm = std::cos(m * phi), sm = std::sin(m * phi);
  auto trig_value = [&](TrigKind k) { return k == TrigKind::cos ? cm : sm; };

  Eigen::Vector3d usph;
  for (int i = 0; i < 3; ++i) usph(i) = comp[i].eval(q, mu) * trig_value(comp_kind(i));
  if (grad_out) {
    Eigen::Matrix3d G;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) G(i, j) = grad[i][j].eval(q, mu) * trig_value(tensor_kind(i, j));
    *grad_out = frame * G * frame.transpose();
  }
  return frame * usph;
}

double BasisMember::divergence_at(double q, double mu) const {
  // Trace of the gradient in the meridional profiles (slot-1 azimuthal factor).
  double v = 0.0;
  for (int i = 0; i < 3; ++i) v += grad[i][i].eval(q, mu);
  return v;
}

std::shared_ptr<const ModalBasis> ModalBasis::build(const BasisParams& params, const Quad2D& quad) {
  if (params.m < 0) throw std::invalid_argument("build_basis: m must be >= 0");
  const int lmin = std::max(params.m, 1);
  if (params.L < lmin) throw std::invalid_argument("build_basis: L must be >= max(m, 1)");
  if (params.N < 2) throw std::invalid_argument("build_basis: N must be >= 2");
  if (!params.flavor_A && !params.flavor_B) throw std::invalid_argument("build_basis: no flavor selected");

  auto basis = std::make_shared<ModalBasis>();
  basis->params_ = params;
  const std::vector<AngularFn> angs = build_angular(params.m, params.L);

  // Homogeneous radial potentials: built-in zero trace and q^2 field decay
  // (the slow 1/r Stokeslet tail belongs to the lifting fields alone, which
  // keeps every d1-pairing absolutely integrable).
  std::vector<RadialPoly> t_pots, s_pots;
  for (int n = 0; n < params.N; ++n) {
    RadialPoly core = RadialPoly::chebyshev_core(n);
    t_pots.push_back(core.mul_q().mul_q().mul_one_minus_q());
    s_pots.push_back(core.mul_q().mul_one_minus_q().mul_one_minus_q());
  }

  auto add_homogeneous = [&](Flavor flavor) {
    for (const auto& ang : angs) {
      const bool skip_toroidal = (params.m == 0 && flavor == Flavor::A);
      const bool skip_poloidal = (params.m == 0 && flavor == Flavor::B);
      if (!skip_poloidal)
        for (int n = 0; n < params.N; ++n) {
          BasisMember mb = make_poloidal(params.m, flavor, ang, s_pots[static_cast<size_t>(n)]);
          mb.idx.n = n;
          basis->members_.push_back(std::move(mb));
        }
      if (!skip_toroidal)
        for (int n = 0; n < params.N; ++n) {
          BasisMember mb = make_toroidal(params.m, flavor, ang, t_pots[static_cast<size_t>(n)]);
          mb.idx.n = n;
          basis->members_.push_back(std::move(mb));
        }
    }
  };
  auto add_liftings = [&](Flavor flavor) {
    if (!params.liftings) return;
    if (params.m == 0 && flavor == Flavor::A) basis->members_.push_back(make_translation_lifting(0));
    if (params.m == 0 && flavor == Flavor::B) basis->members_.push_back(make_rotation_lifting(0));
    if (params.m == 1 && flavor == Flavor::A) basis->members_.push_back(make_rotation_lifting(2));
    if (params.m == 1 && flavor == Flavor::B) basis->members_.push_back(make_rotation_lifting(1));
  };

  if (params.flavor_A) {
    add_homogeneous(Flavor::A);
    add_liftings(Flavor::A);
  }
  if (params.flavor_B) {
    add_homogeneous(Flavor::B);
    add_liftings(Flavor::B);
  }

  // Normalize homogeneous members to unit strain norm; liftings keep their
  // geometric (unit rigid velocity) normalization.
  for (int k = 0; k < basis->size(); ++k) {
    BasisMember& mb = basis->members_[static_cast<size_t>(k)];
    if (mb.lifting) {
      basis->lifting_indices_.push_back(k);
      if (mb.xi_trace != 0.0) basis->xi_index_ = k;
      continue;
    }
    double norm2 = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const double fac = trig_pair_integral(mb.tensor_kind(i, j), mb.idx.m, mb.tensor_kind(i, j), mb.idx.m);
        if (fac == 0.0) continue;
        for (const auto& ta : mb.strain[i][j].terms)
          for (const auto& tb : mb.strain[i][j].terms) {
            double rsum = 0.0;
            for (int ir = 0; ir < quad.radial.size(); ++ir)
              rsum += quad.radial.volume_weight(ir) * ta.rad.eval_q(quad.radial.q_nodes[static_cast<size_t>(ir)]) *
                      tb.rad.eval_q(quad.radial.q_nodes[static_cast<size_t>(ir)]);
            double asum = 0.0;
            for (int ia = 0; ia < quad.angular.size(); ++ia)
              asum += quad.angular.weights[static_cast<size_t>(ia)] * ta.ang.eval(quad.angular.mu[static_cast<size_t>(ia)]) *
                      tb.ang.eval(quad.angular.mu[static_cast<size_t>(ia)]);
            norm2 += fac * rsum * asum;
          }
      }
    if (!(norm2 > 0.0)) throw std::logic_error("build_basis: zero-norm basis member");
    mb.scale(1.0 / std::sqrt(norm2));
  }

  std::ostringstream desc;
  desc << "tp-basis-v1 m=" << params.m << " L=" << params.L << " N=" << params.N << " A=" << params.flavor_A
       << " B=" << params.flavor_B << " lift=" << params.liftings << " quad=" << quad.fingerprint;
  basis->fingerprint_ = fnv1a_str(desc.str());
  return basis;
}

Eigen::VectorXd ModalBasis::embed(const ModalBasis& coarse, const Eigen::VectorXd& coeffs) const {
  if (coarse.m() != m()) throw std::invalid_argument("embed: mode mismatch");
  if (coarse.params_.L > params_.L || coarse.params_.N > params_.N) throw std::invalid_argument("embed: basis not nested");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(size());
  for (int k = 0; k < coarse.size(); ++k) {
    const BasisMember& cm = coarse.member(k);
    bool found = false;
    for (int j = 0; j < size(); ++j) {
      const BasisMember& fm = member(j);
      if (fm.idx.l == cm.idx.l && fm.idx.n == cm.idx.n && fm.idx.family == cm.idx.family && fm.flavor == cm.flavor &&
          fm.lifting == cm.lifting) {
        out(j) += coeffs(k);
        found = true;
        break;
      }
    }
    if (!found) throw std::invalid_argument("embed: member missing in fine basis");
  }
  return out;
}

RigidMotion DiscreteField::rigid() const {
  RigidMotion rm;
  for (int k : basis->lifting_indices()) {
    rm.xi += coeffs(k) * basis->member(k).xi_trace;
    rm.omega += coeffs(k) * basis->member(k).omega_trace;
  }
  return rm;
}

Eigen::Vector3d DiscreteField::evaluate(const Eigen::Vector3d& x, Eigen::Matrix3d* grad_out) const {
  Eigen::Vector3d u = Eigen::Vector3d::Zero();
  if (grad_out) grad_out->setZero();
  Eigen::Matrix3d g;
  for (int k = 0; k < basis->size(); ++k) {
    const double c = coeffs(k);
    if (c == 0.0) continue;
    u += c * basis->member(k).evaluate(x, grad_out ? &g : nullptr);
    if (grad_out) *grad_out += c * g;
  }
  return u;
}

double DiscreteField::divergence_at(const Eigen::Vector3d& x) const {
  const double r = x.norm();
  const double q = 1.0 / r;
  const double mu = x(0) / r;
  const double rho = std::hypot(x(1), x(2));
  const double phi = (rho > 0.0) ? std::atan2(x(2), x(1)) : 0.0;
  double v = 0.0;
  for (int k = 0; k < basis->size(); ++k) {
    const double c = coeffs(k);
    if (c == 0.0) continue;
    const BasisMember& mb = basis->member(k);
    const double trig = (mb.slot_kind(1) == TrigKind::cos) ? std::cos(mb.idx.m * phi) : std::sin(mb.idx.m * phi);
    v += c * trig * mb.divergence_at(q, mu);
  }
  return v;
}

std::vector<Eigen::Vector3d> evaluate_field(const DiscreteField& f, const std::vector<Eigen::Vector3d>& points) {
  std::vector<Eigen::Vector3d> out;
  out.reserve(points.size());
  for (const auto& x : points) {
    if (x.norm() < 1.0 - 1e-12) throw std::domain_error("evaluate_field: point inside the sphere");
    out.push_back(f.evaluate(x));
  }
  return out;
}

namespace {
struct CutoffEval {
  double z, zp, zpp;  // zeta and radial derivatives
};

CutoffEval eval_cutoff(double r, const CutoffSpec& c) {
  if (r <= c.r_a) return {1.0, 0.0, 0.0};
  if (r >= c.r_b) return {0.0, 0.0, 0.0};
  const double w = c.r_b - c.r_a;
  const double u = (r - c.r_a) / w;
  const double S = ((6.0 * u - 15.0) * u + 10.0) * u * u * u;
  const double Sp = ((30.0 * u - 60.0) * u + 30.0) * u * u;
  const double Spp = ((120.0 * u - 180.0) * u + 60.0) * u;
  return {1.0 - S, -Sp / w, -Spp / (w * w)};
}
}  // namespace

ExtensionField::ExtensionField(const RigidMotion& rigid, const CutoffSpec& cutoff) : rigid_(rigid), cutoff_(cutoff) {
  if (!(cutoff.r_a < cutoff.r_b)) throw std::invalid_argument("rigid_extension: requires r_a < r_b");
  if (!(cutoff.r_a >= 1.0)) throw std::invalid_argument("rigid_extension: requires r_a >= 1");
  if (!std::isfinite(rigid.xi) || !rigid.omega.allFinite()) throw std::invalid_argument("rigid_extension: non-finite rigid motion");
}

Eigen::Vector3d ExtensionField::evaluate(const Eigen::Vector3d& x) const {
  const double r = x.norm();
  const CutoffEval z = eval_cutoff(r, cutoff_);
  Eigen::Vector3d v = Eigen::Vector3d::Zero();
  //

  // Translation part: -1/2 [grad(d1 f) - (lap f) e1], f = xi zeta(r) x2^2.
  if (rigid_.xi != 0.0) {
    const double x1 = x(0), x2 = x(1);
    Eigen::Vector3d grad_d1f;
    for (int j = 0; j < 3; ++j) {
      double g = z.zpp * (x(j) / r) * (x1 / r) * x2 * x2;
      g += z.zp * (((j == 0) ? 1.0 / r : 0.0) - x1 * x(j) / (r * r * r)) * x2 * x2;
      g += z.zp * (x1 / r) * 2.0 * x2 * ((j == 1) ? 1.0 : 0.0);
      grad_d1f(j) = g;
    }
    const double lap_f = x2 * x2 * z.zpp + 6.0 * z.zp * x2 * x2 / r + 2.0 * z.z;
    v += -0.5 * rigid_.xi * (grad_d1f - lap_f * Eigen::Vector3d::UnitX());
  }
  // Rotation part: -1/2 grad(zeta r^2) x omega = 1/2 (zeta' r + 2 zeta) (omega x x).
  v += 0.5 * (z.zp * r + 2.0 * z.z) * rigid_.omega.cross(x);
  return v;
}

ExtensionField rigid_extension(const RigidMotion& rigid, const CutoffSpec& cutoff) { return ExtensionField(rigid, cutoff); }

std::vector<Eigen::Vector3d> evaluate_field(const ExtensionField& f, const std::vector<Eigen::Vector3d>& points) {
  std::vector<Eigen::Vector3d> out;
  out.reserve(points.size());
  for (const auto& x : points) {
    if (x.norm() < 1.0 - 1e-12) throw std::domain_error("evaluate_field: point inside the sphere");
    out.push_back(f.evaluate(x));
  }
  return out;
}

}  // namespace spherefall
