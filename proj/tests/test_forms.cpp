#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>

#include "spherefall/forms.hpp"
#include "spherefall/gauss.hpp"

using namespace spherefall;

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;

BasisPtr small_basis(int m, int L, int N, const Quad2D& quad, bool both_flavors = true) {
  BasisParams p;
  p.m = m;
  p.L = L;
  p.N = N;
  p.flavor_A = true;
  p.flavor_B = both_flavors;
  return ModalBasis::build(p, quad);
}

Eigen::VectorXd random_coeffs(int n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N01(0.0, 1.0);
  Eigen::VectorXd c(n);
  for (int k = 0; k < n; ++k) c(k) = N01(rng);
  return c;
}

// Independent volume-integral oracle: Simpson in q = 1/r, Gauss in mu,
// uniform trapezoid in phi, fields and gradients from pointwise evaluation.
template <typename F>
double volume_integral_oracle(F&& integrand, int nq = 240, int nmu = 48, int nphi = 24) {
  GaussRule mu = gauss_legendre(nmu);
  double acc = 0.0;
  for (int iq = 0; iq <= nq; ++iq) {
    const double q = static_cast<double>(iq) / nq;
    if (iq == 0 || q == 0.0) continue;  // integrand decays; skip the point at infinity
    double simpson = (iq == nq) ? 1.0 : (iq % 2 ? 4.0 : 2.0);
    simpson /= 3.0 * nq;
    const double r = 1.0 / q;
    for (int ia = 0; ia < nmu; ++ia) {
      const double m = mu.nodes[static_cast<size_t>(ia)];
      const double s = std::sqrt(1.0 - m * m);
      for (int ip = 0; ip < nphi; ++ip) {
        const double phi = 2.0 * kPi * ip / nphi;
        Eigen::Vector3d x(r * m, r * s * std::cos(phi), r * s * std::sin(phi));
        // dV = r^2 dr dmu dphi, dr = -dq/q^2; orientation handled by summing q in (0,1]
        const double w = simpson * mu.weights[static_cast<size_t>(ia)] * (2.0 * kPi / nphi) * (r * r) / (q * q);
        acc += w * integrand(x);
      }
    }
  }
  return acc;
}

}  // namespace

TEST_CASE("S is symmetric positive definite; lifting rows are Stokes-orthogonal") {
  Quad2D quad = build_quadrature(28, 28);
  for (int m : {0, 1}) {
    auto basis = small_basis(m, 3, 4, quad);
    FormMatrix S = assemble_S(*basis, quad);
    const Eigen::MatrixXd& M = S.matrix;
    CHECK((M - M.transpose()).cwiseAbs().maxCoeff() < 1e-10);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (M + M.transpose()));
    CHECK(es.eigenvalues().minCoeff() > 0.0);
    // Stokes-exactness of the liftings: their S-row vanishes on homogeneous
    // members, and the diagonal is the analytic strain norm.
    for (int k : basis->lifting_indices()) {
      const auto& mb = basis->member(k);
      const double want_diag = (mb.omega_trace.norm() > 0) ? 4.0 * kPi : 3.0 * kPi;
      CHECK(M(k, k) == doctest::Approx(want_diag).epsilon(1e-12));
      for (int j = 0; j < basis->size(); ++j)
        if (j != k) CHECK(std::abs(M(k, j)) < 1e-12);
    }
    // homogeneous members are normalized to unit strain norm
    for (int k = 0; k < basis->size(); ++k)
      if (!basis->member(k).lifting) CHECK(M(k, k) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("D1 is skew-symmetric to machine precision and u^T D1 u = 0") {
  Quad2D quad = build_quadrature(30, 30);
  for (int m : {0, 1, 2}) {
    auto basis = small_basis(m, 3, 4, quad);
    FormMatrix D1 = assemble_D1(*basis, quad);
    const double scale = std::max(1.0, D1.matrix.cwiseAbs().maxCoeff());
    CHECK((D1.matrix + D1.matrix.transpose()).cwiseAbs().maxCoeff() / scale < 1e-12);
    for (int t = 0; t < 100; ++t) {
      Eigen::VectorXd u = random_coeffs(basis->size(), 100 * static_cast<unsigned>(m) + static_cast<unsigned>(t));
      const double v = u.dot(D1.matrix * u);
      CHECK(std::abs(v) < 1e-11 * std::max(1.0, u.squaredNorm() * scale));
    }
  }
}

TEST_CASE("zero field gives zero quadratic form and zero trilinear matrix") {
  Quad2D quad = build_quadrature(24, 24);
  auto basis = small_basis(0, 2, 3, quad);
  FormMatrix S = assemble_S(*basis, quad);
  Eigen::VectorXd z = Eigen::VectorXd::Zero(basis->size());
  CHECK(z.dot(S.matrix * z) == 0.0);
  DiscreteField vz = DiscreteField::zero(basis);
  FieldPlanes planes(vz, quad);
  FormMatrix K = assemble_trilinear(*basis, planes, quad);
  CHECK(K.matrix.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("trilinear assembly matches the scalar-pairing reference path") {
  Quad2D quad = build_quadrature(26, 26);
  for (int m : {0, 1}) {
    auto basis = small_basis(m, 2, 3, quad);
    Quad2D q0 = quad;
    auto basis0 = small_basis(0, 2, 3, q0);
    DiscreteField v(basis0, random_coeffs(basis0->size(), 42));
    FieldPlanes vp(v, quad);
    FormMatrix K = assemble_trilinear(*basis, vp, quad);
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> pick(0, basis->size() - 1);
    for (int t = 0; t < 12; ++t) {
      const int j = pick(rng), l = pick(rng);
      DiscreteField el = DiscreteField::zero(basis);
      el.coeffs(l) = 1.0;
      FieldPlanes lp(el, quad);
      const double ref = 2.0 * trilinear_scalar(lp, basis->member(j), vp, quad) +
                         basis->member(l).xi_trace * inner_d1(vp, basis->member(j), quad);
      CHECK(K.matrix(j, l) == doctest::Approx(ref).epsilon(1e-11).scale(1.0));
    }
  }
}

TEST_CASE("independent volume-quadrature oracle: S entries and streamwise pairings") {
  Quad2D quad = build_quadrature(24, 24);
  auto basis = small_basis(1, 2, 2, quad);
  FormMatrix S = assemble_S(*basis, quad);
  FormMatrix D1 = assemble_D1(*basis, quad);
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> pick(0, basis->size() - 1);
  for (int t = 0; t < 3; ++t) {
    const int j = pick(rng), k = pick(rng);
    const BasisMember& mj = basis->member(j);
    const BasisMember& mk = basis->member(k);
    const double s_oracle = volume_integral_oracle([&](const Eigen::Vector3d& x) {
      Eigen::Matrix3d Gj, Gk;
      mj.evaluate(x, &Gj);
      mk.evaluate(x, &Gk);
      Eigen::Matrix3d Dj = 0.5 * (Gj + Gj.transpose());
      Eigen::Matrix3d Dk = 0.5 * (Gk + Gk.transpose());
      return Dj.cwiseProduct(Dk).sum();
    });
    CHECK(S.matrix(j, k) == doctest::Approx(s_oracle).epsilon(2e-8).scale(1.0));
    const double d_oracle = volume_integral_oracle([&](const Eigen::Vector3d& x) {
      Eigen::Matrix3d Gk2;
      mk.evaluate(x, &Gk2);
      return (Gk2.col(0)).dot(mj.evaluate(x));  // (d1 phi_k) . phi_j
    });
    CHECK(D1.matrix(j, k) == doctest::Approx(d_oracle).epsilon(2e-8).scale(1.0));
  }
}

TEST_CASE("independent oracle for the convective trilinear form on the Stokes lifting") {
  Quad2D quad = build_quadrature(30, 30);
  BasisMember stokes = make_translation_lifting(0);
  // modal wrapper: the m=0 flavor-A basis contains the lifting as last member
  BasisParams p;
  p.m = 0;
  p.L = 1;
  p.N = 2;
  p.flavor_B = false;
  auto basis = ModalBasis::build(p, quad);
  DiscreteField V = DiscreteField::zero(basis);
  V.coeffs(basis->xi_index()) = 1.0;
  FieldPlanes vp(V, quad);
  const double machinery = trilinear_scalar(vp, stokes, vp, quad);
  const double oracle = volume_integral_oracle(
      [&](const Eigen::Vector3d& x) {
        Eigen::Matrix3d G;
        Eigen::Vector3d u = stokes.evaluate(x, &G);
        Eigen::Matrix3d D = 0.5 * (G + G.transpose());
        return u.dot(D * u);
      },
      400, 64, 8);
  CHECK(machinery == doctest::Approx(oracle).epsilon(1e-8).scale(1.0));
}

TEST_CASE("quadratic convective map: consistency and null energy pairing") {
  Quad2D quad = build_quadrature(26, 26);
  auto basis = small_basis(0, 2, 3, quad);
  FormMatrix D1 = assemble_D1(*basis, quad);
  for (int t = 0; t < 5; ++t) {
    Eigen::VectorXd c = random_coeffs(basis->size(), 700 + static_cast<unsigned>(t));
    Eigen::VectorXd N = quadratic_N(*basis, quad, c);
    // reference: N(c) = (K(c) c + xi_c D1 c)/2
    DiscreteField f(basis, c);
    FieldPlanes planes(f, quad);
    FormMatrix K = assemble_trilinear(*basis, planes, quad);
    Eigen::VectorXd ref = 0.5 * (K.matrix * c + f.rigid().xi * (D1.matrix * c));
    CHECK((N - ref).norm() <= 1e-12 * std::max(1.0, ref.norm()));
    // the convective term does no work: <N(v), v> = 0 (surface coupling and
    // streamwise self-pairing both vanish)
    CHECK(std::abs(N.dot(c)) <= 1e-11 * std::max(1.0, c.squaredNorm()));
  }
  CHECK(quadratic_N(*basis, quad, Eigen::VectorXd::Zero(basis->size())).norm() == 0.0);
}

TEST_CASE("mode coupling selection rule") {
  Quad2D quad = build_quadrature(24, 24);
  auto basis1 = small_basis(1, 2, 3, quad);
  auto basis2 = small_basis(2, 3, 3, quad);
  DiscreteField v1(basis1, random_coeffs(basis1->size(), 9));
  DiscreteField v2(basis2, random_coeffs(basis2->size(), 10));
  FieldPlanes p1(v1, quad), p2(v2, quad);
  // m_v = 2 couples into the m = 1 block (2 = 2m); m_v = 1 does not couple into m = 2.
  CHECK_NOTHROW(assemble_trilinear(*basis1, p2, quad));
  CHECK_THROWS_AS(assemble_trilinear(*basis2, p1, quad), std::invalid_argument);
  auto basis0 = small_basis(0, 2, 3, quad);
  CHECK_THROWS_AS(assemble_trilinear(*basis0, p1, quad), std::invalid_argument);
}

TEST_CASE("g vector hits exactly the translational lifting") {
  Quad2D quad = build_quadrature(24, 24);
  auto basis = small_basis(0, 2, 4, quad);
  GVector g = assemble_g(*basis);
  for (int k = 0; k < basis->size(); ++k) {
    if (k == basis->xi_index())
      CHECK(g.values(k) == 1.0);
    else
      CHECK(g.values(k) == 0.0);
  }
  auto basis1 = small_basis(1, 2, 3, quad);
  CHECK_THROWS_AS(assemble_g(*basis1), std::invalid_argument);
}

TEST_CASE("rotlet identities: strain norm, torque, force") {
  Quad2D quad = build_quadrature(24, 24);
  BasisParams p;
  p.m = 1;
  p.L = 1;
  p.N = 2;
  p.flavor_B = false;
  auto basis = ModalBasis::build(p, quad);
  // the rotlet is the m=1 flavor-A lifting
  DiscreteField H = DiscreteField::zero(basis);
  const int h_idx = basis->lifting_indices().at(0);
  H.coeffs(h_idx) = 1.0;
  FieldPlanes hp(H, quad);
  CHECK(strain_norm2(hp) == doctest::Approx(4.0 * kPi).epsilon(1e-12));
  ForceTorque ft = recover_force_torque(H, 0.0, quad);
  CHECK((ft.torque - Eigen::Vector3d(0, 0, -8.0 * kPi)).norm() < 1e-8);
  CHECK(ft.force.norm() < 1e-10);
}

TEST_CASE("Stokes drag from the weak traction functional") {
  Quad2D quad = build_quadrature(24, 24);
  BasisParams p;
  p.m = 0;
  p.L = 1;
  p.N = 2;
  p.flavor_B = false;
  auto basis = ModalBasis::build(p, quad);
  const double xi = 0.37;
  DiscreteField V = DiscreteField::zero(basis);
  V.coeffs(basis->xi_index()) = xi;
  ForceTorque ft = recover_force_torque(V, 0.0, quad);
  CHECK(ft.force(0) == doctest::Approx(-6.0 * kPi * xi).epsilon(1e-10));
  CHECK(std::abs(ft.force(1)) + std::abs(ft.force(2)) < 1e-12);
  CHECK(ft.torque.norm() < 1e-10);
  CHECK_FALSE(ft.warned);
  ForceTorque warned = recover_force_torque(V, 0.0, quad, 1e-3);
  CHECK(warned.warned);
}

TEST_CASE("Korn identity on the homogeneous subspace") {
  Quad2D quad = build_quadrature(28, 28);
  for (int m : {0, 1, 2}) {
    auto basis = small_basis(m, 3, 3, quad);
    for (int t = 0; t < 5; ++t) {
      Eigen::VectorXd c = random_coeffs(basis->size(), 55 + static_cast<unsigned>(10 * m + t));
      for (int k : basis->lifting_indices()) c(k) = 0.0;  // homogeneous trace only
      DiscreteField f(basis, c);
      FieldPlanes fp(f, quad);
      const double g2 = gradient_norm2(fp);
      const double d2 = strain_norm2(fp);
      CHECK(g2 == doctest::Approx(2.0 * d2).epsilon(1e-8));
    }
  }
}

TEST_CASE("surface coupling integral vanishes for rigid traces") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int t = 0; t < 10; ++t) {
    RigidMotion v{U(rng), Eigen::Vector3d(U(rng), U(rng), U(rng))};
    RigidMotion w{U(rng), Eigen::Vector3d(U(rng), U(rng), U(rng))};
    CHECK(std::abs(surface_coupling_integral(v, w)) < 1e-12);
  }
}

TEST_CASE("discrete Sobolev and trace bounds with refinement-stable constants") {
  auto run = [](int L, int N) {
    Quad2D quad = build_quadrature(2 * (N + 8), 2 * (L + 8));
    auto basis = small_basis(0, L, N, quad);
    FormMatrix S = assemble_S(*basis, quad);
    // c1: trace bound sup (|xi| + |omega|) / |D(u)|; rank-one maximization over
    // random samples.
    double c1 = 0.0, c0 = 0.0;
    for (int t = 0; t < 40; ++t) {
      Eigen::VectorXd c = random_coeffs(basis->size(), 1000 + static_cast<unsigned>(t));
      DiscreteField f(basis, c);
      RigidMotion rm = f.rigid();
      const double dn = std::sqrt(c.dot(S.matrix * c));
      c1 = std::max(c1, (std::abs(rm.xi) + rm.omega.norm()) / dn);
      // L6 norm via pointwise sampling on a volume grid (adequate for a bound)
      double l6 = 0.0;
      GaussRule mu = gauss_legendre(24);
      for (int iq = 1; iq <= 60; ++iq) {
        const double q = static_cast<double>(iq) / 60.0;
        const double r = 1.0 / q;
        for (int ia = 0; ia < 24; ++ia) {
          const double m = mu.nodes[static_cast<size_t>(ia)];
          const double s = std::sqrt(1 - m * m);
          Eigen::Vector3d x(r * m, r * s, 0.0);
          const double w = (1.0 / 60.0) * mu.weights[static_cast<size_t>(ia)] * 2.0 * kPi * r * r / (q * q);
          l6 += w * std::pow(f.evaluate(x).norm(), 6.0);
        }
      }
      c0 = std::max(c0, std::pow(l6, 1.0 / 6.0) / dn);
    }
    return std::pair<double, double>(c0, c1);
  };
  auto [c0_coarse, c1_coarse] = run(2, 3);
  auto [c0_fine, c1_fine] = run(3, 5);
  // constants are O(1) and grow toward the continuum supremum under refinement
  CHECK(c0_coarse > 0.05);
  CHECK(c0_coarse < 10.0);
  CHECK(c1_coarse < 10.0);
  CHECK(c0_fine > 0.5 * c0_coarse);
  CHECK(c1_fine > 0.5 * c1_coarse);
}

TEST_CASE("serial and OpenMP assembly agree bit for bit") {
  Quad2D quad = build_quadrature(24, 24);
  auto basis = small_basis(1, 3, 4, quad);
  FormMatrix Ss = assemble_S(*basis, quad, AssemblyPolicy::serial);
  FormMatrix Sp = assemble_S(*basis, quad, AssemblyPolicy::openmp);
  CHECK((Ss.matrix - Sp.matrix).cwiseAbs().maxCoeff() == 0.0);
  FormMatrix Ds = assemble_D1(*basis, quad, AssemblyPolicy::serial);
  FormMatrix Dp = assemble_D1(*basis, quad, AssemblyPolicy::openmp);
  CHECK((Ds.matrix - Dp.matrix).cwiseAbs().maxCoeff() == 0.0);
  auto basis0 = small_basis(0, 2, 3, quad);
  DiscreteField v(basis0, random_coeffs(basis0->size(), 21));
  FieldPlanes vp(v, quad);
  FormMatrix Ks = assemble_trilinear(*basis, vp, quad, AssemblyPolicy::serial);
  FormMatrix Kp = assemble_trilinear(*basis, vp, quad, AssemblyPolicy::openmp);
  CHECK((Ks.matrix - Kp.matrix).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("quadrature underresolution detector") {
  // adequate rule: tiny disagreement; deliberately coarse rule: flagged
  Quad2D good = build_quadrature(30, 30);
  auto basis = small_basis(0, 3, 4, good);
  DiscreteField v(basis, random_coeffs(basis->size(), 2));
  CHECK(quadrature_disagreement(*basis, good, &v, 11) < 1e-10);
  Quad2D coarse = build_quadrature(5, 5);
  auto cb = small_basis(0, 3, 4, coarse);
  DiscreteField vc(cb, v.coeffs);
  CHECK(quadrature_disagreement(*cb, coarse, &vc, 11) > 1e-8);
}

TEST_CASE("coarse-basis members reconstruct exactly inside the fine basis") {
  // span nesting by strain-orthogonal projection
  Quad2D quad = build_quadrature(40, 36);
  auto coarse = small_basis(0, 2, 8, quad, false);
  auto fine = small_basis(0, 4, 16, quad, false);
  FormMatrix Sf = assemble_S(*fine, quad);
  Eigen::LLT<Eigen::MatrixXd> llt(Sf.matrix);
  for (int k = 0; k < coarse->size(); ++k) {
    DiscreteField ek = DiscreteField::zero(coarse);
    ek.coeffs(k) = 1.0;
    FieldPlanes pk(ek, quad);
    Eigen::VectorXd rhs(fine->size());
    for (int j = 0; j < fine->size(); ++j) rhs(j) = inner_strain(pk, fine->member(j), quad);
    Eigen::VectorXd proj = llt.solve(rhs);
    // reconstruction error in the strain norm: |e_k - P e_k|_S^2 = |e_k|_S^2 - rhs . proj
    const double ek_norm2 = strain_norm2(pk);
    const double err2 = ek_norm2 - rhs.dot(proj);
    CHECK(std::abs(err2) <= 1e-10 * std::max(1.0, ek_norm2));
  }
}

TEST_CASE("truncated radial map converges to the algebraic one") {
  // Homogeneous members decay fast enough that truncation is invisible; the
  // lifting entries carry the slow tails and converge at first order in
  // 1/r_inf. The algebraic map needs no such limit, which is why it is the
  // default.
  BasisParams p;
  p.m = 0;
  p.L = 3;
  p.N = 4;
  Quad2D alg = build_quadrature(30, 28, RadialMapKind::algebraic);
  auto ba = ModalBasis::build(p, alg);
  FormMatrix Sa = assemble_S(*ba, alg);

  auto lifting_err = [&](double rinf) {
    Quad2D tru = build_quadrature(30, 28, RadialMapKind::truncated, 1.0, rinf);
    auto bt = ModalBasis::build(p, tru);
    FormMatrix St = assemble_S(*bt, tru);
    double homog = 0.0, lift = 0.0;
    for (int i = 0; i < ba->size(); ++i)
      for (int j = 0; j < ba->size(); ++j) {
        const double d = std::abs(Sa.matrix(i, j) - St.matrix(i, j));
        const bool any_lift = ba->member(i).lifting || ba->member(j).lifting;
        (any_lift ? lift : homog) = std::max(any_lift ? lift : homog, d);
      }
    CHECK(homog < 1e-9);
    return lift;
  };
  // the dominant loss is the analytic streamwise-lifting tail (9 pi/2)/r_inf
  const double e4 = lifting_err(1e4);
  const double e6 = lifting_err(1e6);
  CHECK(e4 == doctest::Approx(4.5 * kPi / 1e4).epsilon(1e-3));
  CHECK(e6 == doctest::Approx(4.5 * kPi / 1e6).epsilon(1e-3));
}

TEST_CASE("form export round trip") {
  Quad2D quad = build_quadrature(20, 20);
  auto basis = small_basis(0, 2, 2, quad);
  FormMatrix S = assemble_S(*basis, quad);
  write_form_binary("form_roundtrip.bin", S);
  FormMatrix back = read_form_binary("form_roundtrip.bin");
  CHECK(back.basis_fingerprint == S.basis_fingerprint);
  CHECK((back.matrix - S.matrix).cwiseAbs().maxCoeff() == 0.0);
  write_form_csv("form_roundtrip.csv", S);
}
