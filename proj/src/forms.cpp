#include "spherefall/forms.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <random>
#include <stdexcept>

#ifdef SPHEREFALL_HAVE_OPENMP
#include <omp.h>
#endif

namespace spherefall {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

int kind_idx(TrigKind k) { return k == TrigKind::cos ? 0 : 1; }
TrigKind kind_of(int i) { return i == 0 ? TrigKind::cos : TrigKind::sin; }

// Azimuthal integral of plane-squared factors: cos^2/sin^2 over [0, 2pi).
double self_factor(TrigKind k, int m) {
  if (m == 0) return k == TrigKind::cos ? kTwoPi : 0.0;
  return kTwoPi / 2.0;
}

// ---------------------------------------------------------------------------
// Value tables for separable assembly.

struct TermVals {
  Eigen::VectorXd rad;  // radial profile at the radial nodes
  int ang = -1;         // id into the angular pool
  TrigKind kind = TrigKind::cos;
};

using ProfVals = std::vector<TermVals>;

struct Tables {
  const ModalBasis* basis = nullptr;
  const Quad2D* quad = nullptr;
  Eigen::VectorXd wvol;  // volume quadrature weights (r^2 dr)
  Eigen::VectorXd wmu;
  std::vector<Eigen::VectorXd> pool;       // angular value vectors
  Eigen::MatrixXd ang_gram;                // weighted Gram of the pool
  std::vector<std::array<ProfVals, 3>> comp, d1;
  std::vector<std::array<std::array<ProfVals, 3>, 3>> strain;
};

struct PoolBuilder {
  std::map<std::vector<double>, int> index;
  std::vector<Eigen::VectorXd> vals;
  const AngularGrid* grid;

  int id_for(const PolyS& a) {
    std::vector<double> key;
    key.push_back(static_cast<double>(a.spow()));
    for (double c : a.poly().coeffs()) key.push_back(c);
    auto it = index.find(key);
    if (it != index.end()) return it->second;
    Eigen::VectorXd v(grid->size());
    for (int i = 0; i < grid->size(); ++i) v(i) = a.eval(grid->mu[static_cast<size_t>(i)]);
    vals.push_back(std::move(v));
    int id = static_cast<int>(vals.size()) - 1;
    index.emplace(std::move(key), id);
    return id;
  }
};

ProfVals make_profvals(const Profile& p, TrigKind kind, const RadialGrid& rg, PoolBuilder& pb) {
  ProfVals out;
  for (const auto& t : p.terms) {
    TermVals tv;
    tv.rad.resize(rg.size());
    for (int i = 0; i < rg.size(); ++i) tv.rad(i) = t.rad.eval_q(rg.q_nodes[static_cast<size_t>(i)]);
    tv.ang = pb.id_for(t.ang);
    tv.kind = kind;
    out.push_back(std::move(tv));
  }
  return out;
}

Tables build_tables(const ModalBasis& basis, const Quad2D& quad) {
  Tables tb;
  tb.basis = &basis;
  tb.quad = &quad;
  tb.wvol.resize(quad.radial.size());
  for (int i = 0; i < quad.radial.size(); ++i) tb.wvol(i) = quad.radial.volume_weight(i);
  tb.wmu.resize(quad.angular.size());
  for (int i = 0; i < quad.angular.size(); ++i) tb.wmu(i) = quad.angular.weights[static_cast<size_t>(i)];

  PoolBuilder pb;
  pb.grid = &quad.angular;
  const int n = basis.size();
  tb.comp.resize(static_cast<size_t>(n));
  tb.d1.resize(static_cast<size_t>(n));
  tb.strain.resize(static_cast<size_t>(n));
  for (int k = 0; k < n; ++k) {
    const BasisMember& mb = basis.member(k);
    for (int i = 0; i < 3; ++i) {
      tb.comp[static_cast<size_t>(k)][static_cast<size_t>(i)] =
          make_profvals(mb.comp[i], mb.comp_kind(i), quad.radial, pb);
      tb.d1[static_cast<size_t>(k)][static_cast<size_t>(i)] =
          make_profvals(mb.d1comp[i], mb.comp_kind(i), quad.radial, pb);
      for (int j = 0; j < 3; ++j)
        tb.strain[static_cast<size_t>(k)][static_cast<size_t>(i)][static_cast<size_t>(j)] =
            make_profvals(mb.strain[i][j], mb.tensor_kind(i, j), quad.radial, pb);
    }
  }
  tb.pool = std::move(pb.vals);
  const int np = static_cast<int>(tb.pool.size());
  tb.ang_gram.resize(np, np);
  for (int a = 0; a < np; ++a)
    for (int b = 0; b <= a; ++b) {
      double v = tb.pool[static_cast<size_t>(a)].cwiseProduct(tb.pool[static_cast<size_t>(b)]).dot(tb.wmu);
      tb.ang_gram(a, b) = v;
      tb.ang_gram(b, a) = v;
    }
  return tb;
}

// Weighted pairing of two separable profile value-lists with trig factor.
double pair_profvals(const Tables& tb, const ProfVals& a, const ProfVals& b, int m) {
  double acc = 0.0;
  for (const auto& ta : a)
    for (const auto& tbv : b) {
      const double fac = trig_pair_integral(ta.kind, m, tbv.kind, m);
      if (fac == 0.0) continue;
      const double rdot = ta.rad.cwiseProduct(tbv.rad).dot(tb.wvol);
      acc += fac * rdot * tb.ang_gram(ta.ang, tbv.ang);
    }
  return acc;
}

double entry_S(const Tables& tb, int j, int k) {
  const int m = tb.basis->m();
  double acc = 0.0;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      acc += pair_profvals(tb, tb.strain[static_cast<size_t>(j)][static_cast<size_t>(a)][static_cast<size_t>(b)],
                           tb.strain[static_cast<size_t>(k)][static_cast<size_t>(a)][static_cast<size_t>(b)], m);
  return acc;
}

// Surface term of the streamwise pairing: integral over |x| = 1 of
// (e1 . n)(trace_a . trace_b). Vanishes for rigid traces; computed honestly.
double surface_e1n_general(const Eigen::Vector3d& ta, const Eigen::Vector3d& oa, const Eigen::Vector3d& tb2,
                           const Eigen::Vector3d& ob, int n_quad = 24) {
  AngularGrid mu = build_angular_grid(n_quad);
  const int nphi = 2 * n_quad;
  double acc = 0.0;
  for (int ia = 0; ia < mu.size(); ++ia) {
    const double c = mu.mu[static_cast<size_t>(ia)];
    const double s = std::sqrt(1.0 - c * c);
    for (int ip = 0; ip < nphi; ++ip) {
      const double phi = kTwoPi * ip / nphi;
      Eigen::Vector3d n(c, s * std::cos(phi), s * std::sin(phi));
      acc += mu.weights[static_cast<size_t>(ia)] * (kTwoPi / nphi) * n(0) * (ta + oa.cross(n)).dot(tb2 + ob.cross(n));
    }
  }
  return acc;
}

double surface_e1n_product(const RigidMotion& a, const RigidMotion& b, int n_quad = 24) {
  return surface_e1n_general(a.xi * Eigen::Vector3d::UnitX(), a.omega, b.xi * Eigen::Vector3d::UnitX(), b.omega,
                             n_quad);
}

double entry_D1(const Tables& tb, int j, int k) {
  // (d1 phi_k, phi_j), assembled in the integrated-by-parts symmetric split:
  // the antisymmetric volume part has a polynomial integrand (exact rule)
  // even for the slowly decaying lifting pairs, and the symmetric remainder
  // is the boundary integral, which the rigid traces make vanish.
  const int m = tb.basis->m();
  double acc = 0.0;
  for (int i = 0; i < 3; ++i) {
    acc += 0.5 * pair_profvals(tb, tb.d1[static_cast<size_t>(k)][static_cast<size_t>(i)],
                               tb.comp[static_cast<size_t>(j)][static_cast<size_t>(i)], m);
    acc -= 0.5 * pair_profvals(tb, tb.d1[static_cast<size_t>(j)][static_cast<size_t>(i)],
                               tb.comp[static_cast<size_t>(k)][static_cast<size_t>(i)], m);
  }
  const BasisMember& mj = tb.basis->member(j);
  const BasisMember& mk = tb.basis->member(k);
  if (mj.lifting && mk.lifting) {
    // boundary term carries the domain-outward normal, -r_hat on the sphere
    RigidMotion rj{mj.xi_trace, mj.omega_trace};
    RigidMotion rk{mk.xi_trace, mk.omega_trace};
    acc -= 0.5 * surface_e1n_product(rk, rj);
  }
  return acc;
}

template <typename RowFn>
void assemble_rows(int n, AssemblyPolicy policy, RowFn&& row) {
#ifdef SPHEREFALL_HAVE_OPENMP
  if (policy == AssemblyPolicy::openmp) {
#pragma omp parallel for schedule(dynamic)
    for (int j = 0; j < n; ++j) row(j);
    return;
  }
#else
  (void)policy;
#endif
  for (int j = 0; j < n; ++j) row(j);
}

// K-row worker shared by assemble_trilinear and quadrature_disagreement.
struct KAssembler {
  const Tables* tb;
  const FieldPlanes* v;
  Eigen::VectorXd g;  // xi traces
  std::vector<std::vector<int>> comp_aids;  // distinct angular ids per component slot

  void init() {
    const ModalBasis& basis = *tb->basis;
    g.resize(basis.size());
    comp_aids.assign(3, {});
    for (int k = 0; k < basis.size(); ++k) {
      g(k) = basis.member(k).xi_trace;
      for (int i = 0; i < 3; ++i)
        for (const auto& t : tb->comp[static_cast<size_t>(k)][static_cast<size_t>(i)]) {
          auto& v2 = comp_aids[static_cast<size_t>(i)];
          bool seen = false;
          for (int id : v2) seen = seen || (id == t.ang);
          if (!seen) v2.push_back(t.ang);
        }
    }
  }

  void row(int j, Eigen::MatrixXd& K) const {
    const ModalBasis& basis = *tb->basis;
    const Quad2D& quad = *tb->quad;
    const int m = basis.m();
    const int mv = v->m();
    const int nr = quad.radial.size(), na = quad.angular.size();
    const BasisMember& mbj = basis.member(j);

    // Strain planes of the row member.
    Eigen::MatrixXd Dp[3][3];
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        Dp[a][b] = Eigen::MatrixXd::Zero(nr, na);
        for (const auto& t : tb->strain[static_cast<size_t>(j)][static_cast<size_t>(a)][static_cast<size_t>(b)])
          Dp[a][b] += t.rad * tb->pool[static_cast<size_t>(t.ang)].transpose();
      }

    // W[flavor][a] = sum_b sum_kv tf(kind_l(a), kind_j(a,b), kv) w2 .* Dp[a][b] .* v_b[kv]
    const bool hasA = basis.params().flavor_A, hasB = basis.params().flavor_B;
    Eigen::MatrixXd W[2][3];
    for (int fl = 0; fl < 2; ++fl) {
      if ((fl == 0 && !hasA) || (fl == 1 && !hasB)) continue;
      for (int a = 0; a < 3; ++a) {
        W[fl][a] = Eigen::MatrixXd::Zero(nr, na);
        // component slot kinds for a member of this flavor
        const bool cos_first = (fl == 0);
        const TrigKind kind_la = ((a == 2) != cos_first) ? TrigKind::cos : TrigKind::sin;
        for (int b = 0; b < 3; ++b)
          for (int kv = 0; kv < 2; ++kv) {
            const double tf = trig_triple_integral(kind_la, m, mbj.tensor_kind(a, b), m, kind_of(kv), mv);
            if (tf == 0.0) continue;
            W[fl][a] += tf * Dp[a][b].cwiseProduct(v->comp(b, kind_of(kv)));
          }
        if (W[fl][a].size() > 0) {
          W[fl][a] = W[fl][a].cwiseProduct(tb->wvol * tb->wmu.transpose());
        }
      }
    }

    // Angular collapse: Z[flavor][a][angular id](ir).
    std::map<int, Eigen::VectorXd> Z[2][3];
    for (int fl = 0; fl < 2; ++fl) {
      if ((fl == 0 && !hasA) || (fl == 1 && !hasB)) continue;
      for (int a = 0; a < 3; ++a)
        for (int id : comp_aids[static_cast<size_t>(a)]) Z[fl][a][id] = W[fl][a] * tb->pool[static_cast<size_t>(id)];
    }

    // xi-column pairing (d1 v, phi_j), in the same integrated-by-parts split
    // as entry_D1 so the slow lifting tails stay inside the exact rule.
    double d1v_dot_phij = 0.0;
    auto pair_planes = [&](auto&& plane_of, const ProfVals& prof, double sign) {
      for (const auto& t : prof)
        for (int kv = 0; kv < 2; ++kv) {
          const double tf = trig_pair_integral(t.kind, m, kind_of(kv), mv);
          if (tf == 0.0) continue;
          const Eigen::MatrixXd& plane = plane_of(kind_of(kv));
          const Eigen::VectorXd collapsed =
              plane.cwiseProduct(tb->wvol * tb->wmu.transpose()) * tb->pool[static_cast<size_t>(t.ang)];
          d1v_dot_phij += sign * 0.5 * tf * t.rad.dot(collapsed);
        }
    };
    for (int i = 0; i < 3; ++i) {
      pair_planes([&](TrigKind kv) -> const Eigen::MatrixXd& { return v->d1(i, kv); },
                  tb->comp[static_cast<size_t>(j)][static_cast<size_t>(i)], 1.0);
      pair_planes([&](TrigKind kv) -> const Eigen::MatrixXd& { return v->comp(i, kv); },
                  tb->d1[static_cast<size_t>(j)][static_cast<size_t>(i)], -1.0);
    }
    if (mbj.lifting) {
      RigidMotion rj{mbj.xi_trace, mbj.omega_trace};
      d1v_dot_phij -= 0.5 * surface_e1n_product(v->rigid(), rj);
    }

    for (int l = 0; l < basis.size(); ++l) {
      const BasisMember& mbl = basis.member(l);
      const int fl = (mbl.flavor == Flavor::A) ? 0 : 1;
      double acc = 0.0;
      for (int a = 0; a < 3; ++a)
        for (const auto& t : tb->comp[static_cast<size_t>(l)][static_cast<size_t>(a)]) {
          auto it = Z[fl][a].find(t.ang);
          if (it != Z[fl][a].end()) acc += t.rad.dot(it->second);
        }
      K(j, l) = 2.0 * acc + g(l) * d1v_dot_phij;
    }
  }
};

double eval_profile_plane(const Profile& p, double q, double mu) { return p.eval(q, mu); }

}  // namespace

// ---------------------------------------------------------------------------
// FieldPlanes

FieldPlanes::FieldPlanes(const DiscreteField& f, const Quad2D& quad) : m_(f.basis->m()), quad_(&quad) {
  const int nr = quad.radial.size(), na = quad.angular.size();
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 2; ++k) {
      comp_[i][k] = Eigen::MatrixXd::Zero(nr, na);
      d1_[i][k] = Eigen::MatrixXd::Zero(nr, na);
      for (int j = 0; j < 3; ++j) {
        grad_[i][j][k] = Eigen::MatrixXd::Zero(nr, na);
        strain_[i][j][k] = Eigen::MatrixXd::Zero(nr, na);
      }
    }
  rigid_ = f.rigid();

  auto add_profile = [&](const Profile& p, TrigKind kind, double c, Eigen::MatrixXd* target) {
    for (const auto& t : p.terms) {
      Eigen::VectorXd rad(nr), ang(na);
      for (int ir = 0; ir < nr; ++ir) rad(ir) = t.rad.eval_q(quad.radial.q_nodes[static_cast<size_t>(ir)]);
      for (int ia = 0; ia < na; ++ia) ang(ia) = t.ang.eval(quad.angular.mu[static_cast<size_t>(ia)]);
      target[kind_idx(kind)] += c * rad * ang.transpose();
    }
  };

  for (int k = 0; k < f.basis->size(); ++k) {
    const double c = f.coeffs(k);
    if (c == 0.0) continue;
    const BasisMember& mb = f.basis->member(k);
    for (int i = 0; i < 3; ++i) {
      add_profile(mb.comp[i], mb.comp_kind(i), c, comp_[i]);
      add_profile(mb.d1comp[i], mb.comp_kind(i), c, d1_[i]);
      for (int j = 0; j < 3; ++j) {
        add_profile(mb.grad[i][j], mb.tensor_kind(i, j), c, grad_[i][j]);
        add_profile(mb.strain[i][j], mb.tensor_kind(i, j), c, strain_[i][j]);
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Assemblies

FormMatrix assemble_S(const ModalBasis& basis, const Quad2D& quad, AssemblyPolicy policy) {
  Tables tb = build_tables(basis, quad);
  const int n = basis.size();
  FormMatrix fm;
  fm.kind = FormKind::S;
  fm.m = basis.m();
  fm.basis_fingerprint = basis.fingerprint();
  fm.matrix.resize(n, n);
  assemble_rows(n, policy, [&](int j) {
    for (int k = 0; k <= j; ++k) fm.matrix(j, k) = entry_S(tb, j, k);
  });
  for (int j = 0; j < n; ++j)
    for (int k = j + 1; k < n; ++k) fm.matrix(j, k) = fm.matrix(k, j);
  return fm;
}

FormMatrix assemble_D1(const ModalBasis& basis, const Quad2D& quad, AssemblyPolicy policy) {
  Tables tb = build_tables(basis, quad);
  const int n = basis.size();
  FormMatrix fm;
  fm.kind = FormKind::D1;
  fm.m = basis.m();
  fm.basis_fingerprint = basis.fingerprint();
  fm.matrix.resize(n, n);
  assemble_rows(n, policy, [&](int j) {
    for (int k = 0; k < n; ++k) fm.matrix(j, k) = entry_D1(tb, j, k);
  });
  return fm;
}

GVector assemble_g(const ModalBasis& basis) {
  if (basis.xi_index() < 0)
    throw std::invalid_argument("assemble_g: basis carries no translational lifting field");
  GVector g;
  g.basis_fingerprint = basis.fingerprint();
  g.values = Eigen::VectorXd::Zero(basis.size());
  for (int k = 0; k < basis.size(); ++k) g.values(k) = basis.member(k).xi_trace;
  return g;
}

FormMatrix assemble_trilinear(const ModalBasis& basis, const FieldPlanes& v, const Quad2D& quad,
                              AssemblyPolicy policy) {
  const int m = basis.m();
  const int mv = v.m();
  if (mv != 0 && mv != 2 * m)
    throw std::invalid_argument("assemble_trilinear: azimuthal coupling rule violated (need m_v in {0, 2m})");
  if (v.quad().fingerprint != quad.fingerprint)
    throw std::invalid_argument("assemble_trilinear: field planes built on a different quadrature");
  Tables tb = build_tables(basis, quad);
  KAssembler ka;
  ka.tb = &tb;
  ka.v = &v;
  ka.init();
  const int n = basis.size();
  FormMatrix fm;
  fm.kind = FormKind::K;
  fm.m = m;
  fm.basis_fingerprint = basis.fingerprint();
  fm.matrix.resize(n, n);
  assemble_rows(n, policy, [&](int j) { ka.row(j, fm.matrix); });
  return fm;
}

Eigen::VectorXd quadratic_N(const ModalBasis& basis, const Quad2D& quad, const Eigen::VectorXd& coeffs,
                            AssemblyPolicy policy) {
  DiscreteField f(std::shared_ptr<const ModalBasis>(&basis, [](const ModalBasis*) {}), coeffs);
  FieldPlanes planes(f, quad);
  FormMatrix K = assemble_trilinear(basis, planes, quad, policy);
  FormMatrix D1 = assemble_D1(basis, quad, policy);
  const double xi = f.rigid().xi;
  return 0.5 * (K.matrix * coeffs + xi * (D1.matrix * coeffs));
}

// ---------------------------------------------------------------------------
// Scalar pairings

namespace {
// Evaluate a member profile on the grid once (small helper for the scalar pairings).
Eigen::MatrixXd member_plane(const Profile& p, const Quad2D& quad) {
  const int nr = quad.radial.size(), na = quad.angular.size();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(nr, na);
  for (int ir = 0; ir < nr; ++ir)
    for (int ia = 0; ia < na; ++ia)
      out(ir, ia) = eval_profile_plane(p, quad.radial.q_nodes[static_cast<size_t>(ir)],
                                       quad.angular.mu[static_cast<size_t>(ia)]);
  return out;
}

Eigen::MatrixXd weight_matrix(const Quad2D& quad) {
  const int nr = quad.radial.size(), na = quad.angular.size();
  Eigen::VectorXd wr(nr), wa(na);
  for (int i = 0; i < nr; ++i) wr(i) = quad.radial.volume_weight(i);
  for (int i = 0; i < na; ++i) wa(i) = quad.angular.weights[static_cast<size_t>(i)];
  return wr * wa.transpose();
}
}  // namespace

double inner_strain(const FieldPlanes& a, const BasisMember& psi, const Quad2D& quad) {
  const Eigen::MatrixXd w2 = weight_matrix(quad);
  double acc = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      if (psi.strain[i][j].empty()) continue;
      const Eigen::MatrixXd pp = member_plane(psi.strain[i][j], quad);
      for (int ka = 0; ka < 2; ++ka) {
        const double fac = trig_pair_integral(kind_of(ka), a.m(), psi.tensor_kind(i, j), psi.idx.m);
        if (fac == 0.0) continue;
        acc += fac * a.strain(i, j, kind_of(ka)).cwiseProduct(pp).cwiseProduct(w2).sum();
      }
    }
  return acc;
}

double inner_d1(const FieldPlanes& a, const BasisMember& psi, const Quad2D& quad) {
  // (d1 a, psi) through the integrated-by-parts split (see entry_D1).
  const Eigen::MatrixXd w2 = weight_matrix(quad);
  double acc = 0.0;
  for (int i = 0; i < 3; ++i) {
    if (!psi.comp[i].empty()) {
      const Eigen::MatrixXd pp = member_plane(psi.comp[i], quad);
      for (int ka = 0; ka < 2; ++ka) {
        const double fac = trig_pair_integral(kind_of(ka), a.m(), psi.comp_kind(i), psi.idx.m);
        if (fac == 0.0) continue;
        acc += 0.5 * fac * a.d1(i, kind_of(ka)).cwiseProduct(pp).cwiseProduct(w2).sum();
      }
    }
    if (!psi.d1comp[i].empty()) {
      const Eigen::MatrixXd pd = member_plane(psi.d1comp[i], quad);
      for (int ka = 0; ka < 2; ++ka) {
        const double fac = trig_pair_integral(kind_of(ka), a.m(), psi.comp_kind(i), psi.idx.m);
        if (fac == 0.0) continue;
        acc -= 0.5 * fac * a.comp(i, kind_of(ka)).cwiseProduct(pd).cwiseProduct(w2).sum();
      }
    }
  }
  acc -= 0.5 * surface_e1n_general(a.rigid().xi * Eigen::Vector3d::UnitX(), a.rigid().omega, psi.trans_trace,
                                   psi.omega_trace);
  return acc;
}

double trilinear_scalar(const FieldPlanes& a, const BasisMember& psi, const FieldPlanes& b, const Quad2D& quad) {
  const Eigen::MatrixXd w2 = weight_matrix(quad);
  double acc = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      if (psi.strain[i][j].empty()) continue;
      const Eigen::MatrixXd pp = member_plane(psi.strain[i][j], quad);
      for (int ka = 0; ka < 2; ++ka)
        for (int kb = 0; kb < 2; ++kb) {
          const double fac = trig_triple_integral(kind_of(ka), a.m(), psi.tensor_kind(i, j), psi.idx.m,
                                                  kind_of(kb), b.m());
          if (fac == 0.0) continue;
          acc += fac *
                 a.comp(i, kind_of(ka)).cwiseProduct(pp).cwiseProduct(b.comp(j, kind_of(kb))).cwiseProduct(w2).sum();
        }
    }
  return acc;
}

double strain_norm2(const FieldPlanes& a) {
  const Eigen::MatrixXd w2 = weight_matrix(a.quad());
  double acc = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 2; ++k) {
        const double fac = self_factor(kind_of(k), a.m());
        if (fac == 0.0) continue;
        acc += fac * a.strain(i, j, kind_of(k)).array().square().matrix().cwiseProduct(w2).sum();
      }
  return acc;
}

double gradient_norm2(const FieldPlanes& a) {
  const Eigen::MatrixXd w2 = weight_matrix(a.quad());
  double acc = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 2; ++k) {
        const double fac = self_factor(kind_of(k), a.m());
        if (fac == 0.0) continue;
        acc += fac * a.grad(i, j, kind_of(k)).array().square().matrix().cwiseProduct(w2).sum();
      }
  return acc;
}

double surface_coupling_integral(const RigidMotion& v, const RigidMotion& psi, int n_quad) {
  // integral over |x| = 1 of (v_bar . n)(v_bar . psi_bar)
  AngularGrid mu = build_angular_grid(n_quad);
  const int nphi = 2 * n_quad;
  double acc = 0.0;
  for (int ia = 0; ia < mu.size(); ++ia) {
    const double c = mu.mu[static_cast<size_t>(ia)];
    const double s = std::sqrt(1.0 - c * c);
    for (int ip = 0; ip < nphi; ++ip) {
      const double phi = kTwoPi * ip / nphi;
      Eigen::Vector3d n(c, s * std::cos(phi), s * std::sin(phi));
      Eigen::Vector3d vb = v.xi * Eigen::Vector3d::UnitX() + v.omega.cross(n);
      Eigen::Vector3d pb = psi.xi * Eigen::Vector3d::UnitX() + psi.omega.cross(n);
      acc += mu.weights[static_cast<size_t>(ia)] * (kTwoPi / nphi) * vb.dot(n) * vb.dot(pb);
    }
  }
  return acc;
}

ForceTorque recover_force_torque(const DiscreteField& v, double lambda, const Quad2D& quad, double residual_norm,
                                 double warn_tol) {
  FieldPlanes planes(v, quad);
  const double xi_v = planes.rigid().xi;
  ForceTorque out;
  out.residual_norm = residual_norm;
  out.warned = residual_norm > warn_tol;
  for (int axis = 0; axis < 3; ++axis) {
    BasisMember tr = make_translation_lifting(axis);
    BasisMember rot = make_rotation_lifting(axis);
    out.force(axis) = -2.0 * inner_strain(planes, tr, quad) + lambda * trilinear_scalar(planes, tr, planes, quad) +
                      lambda * xi_v * inner_d1(planes, tr, quad);
    out.torque(axis) = -2.0 * inner_strain(planes, rot, quad) + lambda * trilinear_scalar(planes, rot, planes, quad) +
                       lambda * xi_v * inner_d1(planes, rot, quad);
  }
  return out;
}

double dual_norm(const Eigen::LLT<Eigen::MatrixXd>& S_llt, const Eigen::VectorXd& f) {
  return std::sqrt(f.dot(S_llt.solve(f)));
}

double quadrature_disagreement(const ModalBasis& basis, const Quad2D& quad, const DiscreteField* v, unsigned seed,
                               int rows) {
  Quad2D fine = build_quadrature(2 * quad.radial.size(), 2 * quad.angular.size(), quad.radial.map_kind,
                                 quad.radial.scale, quad.radial.r_inf);
  Tables tb_c = build_tables(basis, quad);
  Tables tb_f = build_tables(basis, fine);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, basis.size() - 1);
  double worst = 0.0;
  for (int t = 0; t < rows; ++t) {
    const int j = pick(rng);
    for (int k = 0; k < basis.size(); ++k) {
      const double a = entry_S(tb_c, j, k), b = entry_S(tb_f, j, k);
      worst = std::max(worst, std::abs(a - b) / std::max(1.0, std::abs(b)));
      const double c = entry_D1(tb_c, j, k), d = entry_D1(tb_f, j, k);
      worst = std::max(worst, std::abs(c - d) / std::max(1.0, std::abs(d)));
    }
  }
  if (v) {
    FieldPlanes pc(*v, quad), pf(*v, fine);
    KAssembler ka_c, ka_f;
    ka_c.tb = &tb_c;
    ka_c.v = &pc;
    ka_c.init();
    ka_f.tb = &tb_f;
    ka_f.v = &pf;
    ka_f.init();
    Eigen::MatrixXd Kc(basis.size(), basis.size()), Kf(basis.size(), basis.size());
    for (int t = 0; t < rows; ++t) {
      const int j = pick(rng);
      ka_c.row(j, Kc);
      ka_f.row(j, Kf);
      for (int k = 0; k < basis.size(); ++k)
        worst = std::max(worst, std::abs(Kc(j, k) - Kf(j, k)) / std::max(1.0, std::abs(Kf(j, k))));
    }
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Exports

namespace {
const char* kind_name(FormKind k) {
  switch (k) {
    case FormKind::S: return "S";
    case FormKind::D1: return "D1";
    case FormKind::K: return "K";
    case FormKind::G: return "G";
  }
  return "?";
}
}  // namespace

void write_form_csv(const std::string& path, const FormMatrix& fm) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_form_csv: cannot open " + path);
  out << "# kind=" << kind_name(fm.kind) << " m=" << fm.m << " fingerprint=" << fm.basis_fingerprint
      << " rows=" << fm.matrix.rows() << " cols=" << fm.matrix.cols() << "\n";
  out.precision(17);
  for (Eigen::Index i = 0; i < fm.matrix.rows(); ++i) {
    for (Eigen::Index j = 0; j < fm.matrix.cols(); ++j) out << fm.matrix(i, j) << (j + 1 < fm.matrix.cols() ? "," : "");
    out << "\n";
  }
}

void write_form_binary(const std::string& path, const FormMatrix& fm) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_form_binary: cannot open " + path);
  const char magic[8] = {'S', 'F', 'F', 'O', 'R', 'M', '0', '1'};
  out.write(magic, 8);
  std::int64_t meta[4] = {static_cast<std::int64_t>(fm.kind), fm.m, fm.matrix.rows(), fm.matrix.cols()};
  out.write(reinterpret_cast<const char*>(meta), sizeof(meta));
  out.write(reinterpret_cast<const char*>(&fm.basis_fingerprint), sizeof(fm.basis_fingerprint));
  out.write(reinterpret_cast<const char*>(fm.matrix.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<size_t>(fm.matrix.size())));
}

FormMatrix read_form_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_form_binary: cannot open " + path);
  char magic[8];
  in.read(magic, 8);
  if (std::memcmp(magic, "SFFORM01", 8) != 0) throw std::runtime_error("read_form_binary: bad magic");
  std::int64_t meta[4];
  in.read(reinterpret_cast<char*>(meta), sizeof(meta));
  FormMatrix fm;
  fm.kind = static_cast<FormKind>(meta[0]);
  fm.m = static_cast<int>(meta[1]);
  in.read(reinterpret_cast<char*>(&fm.basis_fingerprint), sizeof(fm.basis_fingerprint));
  fm.matrix.resize(meta[2], meta[3]);
  in.read(reinterpret_cast<char*>(fm.matrix.data()),
          static_cast<std::streamsize>(sizeof(double) * static_cast<size_t>(fm.matrix.size())));
  if (!in) throw std::runtime_error("read_form_binary: truncated file");
  return fm;
}

}  // namespace spherefall
