// Acceptance suite: one pass/fail line per criterion, every threshold pinned
// in code. Exit status is the number of failed criteria.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include "spherefall/bifurcation.hpp"
#include "spherefall/config.hpp"
#include "spherefall/verify.hpp"

using namespace spherefall;

namespace {
constexpr double kPi = 3.14159265358979323846264338327950288;

int g_failures = 0;

void line(const char* id, bool pass, const std::string& text) {
  std::printf("%s [%s] %s\n", id, pass ? "PASS" : "FAIL", text.c_str());
  if (!pass) ++g_failures;
}

void note(const std::string& text) { std::printf("     %s\n", text.c_str()); }

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

}  // namespace

int main() {
  RunConfig cfg;  // desk-scale defaults: L = 8, N = 10
  Quad2D quad = build_quadrature(cfg.quad_nr(), cfg.quad_nmu());
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> N01(0.0, 1.0);

  // ------------------------------------------------------------------ C1
  {
    Timer t;
    BasisParams p;
    p.m = 1;
    p.L = cfg.L;
    p.N = cfg.N;
    auto basis = ModalBasis::build(p, quad);
    DiscreteField H = DiscreteField::zero(basis);
    for (int k : basis->lifting_indices())
      if (basis->member(k).omega_trace(2) != 0.0) H.coeffs(k) = 1.0;
    ForceTorque ft = recover_force_torque(H, 0.0, quad);
    const double torque_res = (ft.torque - Eigen::Vector3d(0, 0, -8.0 * kPi)).norm();
    const double force_res = ft.force.norm();
    FieldPlanes hp(H, quad);
    const double strain_res = std::abs(strain_norm2(hp) - 4.0 * kPi) / (4.0 * kPi);
    const bool ok = torque_res <= 1e-8 && force_res <= 1e-8 && strain_res <= 1e-8;
    line("C1", ok,
         "rotlet identities: |torque + 8 pi e3| = " + fmt(torque_res) + ", |force| = " + fmt(force_res) +
             ", strain-norm rel residual = " + fmt(strain_res) + " (tol 1e-8, " + fmt(t.seconds()) + " s)");
  }

  // ------------------------------------------------------------------ C2
  {
    Timer t;
    double worst_skew = 0.0, worst_pair = 0.0;
    for (int m : {0, 1}) {
      BasisParams p;
      p.m = m;
      p.L = cfg.L;
      p.N = cfg.N;
      auto basis = ModalBasis::build(p, quad);
      FormMatrix D1 = assemble_D1(*basis, quad);
      worst_skew = std::max(worst_skew, (D1.matrix + D1.matrix.transpose()).cwiseAbs().maxCoeff());
      for (int i = 0; i < 100; ++i) {
        Eigen::VectorXd u(basis->size());
        for (int k = 0; k < u.size(); ++k) u(k) = N01(rng);
        u /= u.norm();
        worst_pair = std::max(worst_pair, std::abs(u.dot(D1.matrix * u)));
      }
    }
    const bool ok = worst_skew <= 1e-12 && worst_pair <= 1e-12;
    line("C2", ok,
         "skew-symmetry: max|D1 + D1^T| = " + fmt(worst_skew) + ", max|u.D1u| over 100 unit u = " + fmt(worst_pair) +
             " (tol 1e-12, " + fmt(t.seconds()) + " s)");
  }

  // ------------------------------------------------------------------ C3, C4
  BaseflowContext bctx(cfg.L, cfg.N, quad);
  {
    Timer t;
    double worst_energy = 0.0;
    int n_checked = 0;
    Branch br = continue_branch(bctx, 0.0, 1.0, 11);
    for (const auto& pt : br.points) {
      if (pt.flow.lambda == 0.0) continue;
      worst_energy =
          std::max(worst_energy, pt.flow.energy_residual() / std::max(1.0, pt.flow.lambda * pt.flow.xi0));
      ++n_checked;
    }
    const bool ok = !br.truncated && n_checked >= 10 && worst_energy <= 1e-8;
    line("C3", ok, "energy equality at " + std::to_string(n_checked) +
                       " branch points: worst relative residual = " + fmt(worst_energy) + " (tol 1e-8, " +
                       fmt(t.seconds()) + " s)");
  }
  {
    Timer t;
    BaseflowContext fine(2 * cfg.L, 2 * cfg.N, build_quadrature(2 * cfg.quad_nr(), 2 * cfg.quad_nmu()));
    double worst_stated = 0.0, worst_consistent = 0.0, worst_stated_fine = 0.0;
    for (double lam : {1e-4, 1e-3, 1e-2}) {
      SolveOutcome a = solve_base(bctx, lam);
      SolveOutcome b = solve_base(fine, lam);
      if (!a.ok() || !b.ok()) {
        worst_stated = 1e300;
        break;
      }
      worst_stated = std::max(worst_stated, std::abs(a.flow->xi0 - lam / (6.0 * kPi)) / (lam / (6.0 * kPi)));
      worst_stated_fine = std::max(worst_stated_fine, std::abs(b.flow->xi0 - lam / (6.0 * kPi)) / (lam / (6.0 * kPi)));
      worst_consistent =
          std::max(worst_consistent, std::abs(a.flow->xi0 - lam / (3.0 * kPi)) / (lam / (3.0 * kPi)));
    }
    const bool improving = worst_stated_fine < worst_stated;
    const bool ok = worst_stated <= 0.02 && improving;
    line("C4", ok, "viscous-limit fall speed vs lambda/(6 pi): worst relative error = " + fmt(worst_stated) +
                       " (tol 0.02), refinement " + (improving ? "improves" : "does not improve") + " (" +
                       fmt(t.seconds()) + " s)");
    note("the strain-form weak operator fixed by C3/C5 has drag constant 3 pi, not 6 pi: measured");
    note("xi0 vs lambda/(3 pi) agrees to " + fmt(worst_consistent) +
         " and is refinement-stable; the 6 pi constant belongs to the classical-traction scaling");
    note("recovered by recover_force_torque (C1). The two scalings differ by a factor 2 relabeling");
    note("of the Galilei number, so no single operator satisfies C3, C5 and C4 simultaneously.");
  }

  // ------------------------------------------------------------------ C5
  SpectrumContext sctx(1, cfg.L, cfg.N, quad);
  {
    Timer t;
    SolveOutcome base = solve_base(bctx, 0.5);
    OperatorBundle b = assemble_bundle(sctx, *base.flow);
    Eigen::LLT<Eigen::MatrixXd> llt(b.S);
    double worst_bound = -1e300, worst_identity = 0.0;
    for (int i = 0; i < 50; ++i) {
      Eigen::VectorXd f(b.S.rows());
      for (int k = 0; k < f.size(); ++k) f(k) = N01(rng);
      Eigen::VectorXd u = solve_resolvent(b, f, base.flow->lambda);
      const double e2 = u.dot(b.S * u);
      worst_bound = std::max(worst_bound, std::sqrt(e2) - dual_norm(llt, f));
      worst_identity = std::max(worst_identity, std::abs(e2 - f.dot(u)) / std::max(1.0, e2));
    }
    const bool ok = worst_bound <= 1e-10 && worst_identity <= 1e-10;
    line("C5", ok, "resolvent: worst (|D(u)| - |f|_-1) = " + fmt(worst_bound) +
                       ", worst energy-identity residual = " + fmt(worst_identity) + " (tol 1e-10, " +
                       fmt(t.seconds()) + " s)");
  }

  // ------------------------------------------------------------------ C6
  {
    Timer t;
    Quad2D q6 = build_quadrature(36, 32);
    BaseflowContext b6(6, 8, q6);
    SpectrumContext s6(1, 6, 8, q6);
    SolveOutcome base = solve_base(b6, 0.8);
    OperatorBundle b = assemble_bundle(s6, *base.flow);
    const int dim = static_cast<int>(b.S.rows());
    EigOptions eopts;
    eopts.tol = 1e-11;
    eopts.krylov = 80;
    auto pairs = leading_eigs(b, std::complex<double>(1.0, 0.0), 8, eopts);
    auto dense = dense_eigenvalues(b.A(), b.S);
    double worst_match = 0.0, worst_res = 0.0, worst_biorth = 0.0;
    for (const auto& p : pairs) {
      double nearest = 1e300;
      for (auto mu : dense) nearest = std::min(nearest, std::abs(mu - p.mu));
      worst_match = std::max(worst_match, nearest / std::max(1.0, std::abs(p.mu)));
      worst_res = std::max(worst_res, std::max(p.residual, p.adj_residual));
    }
    for (size_t i = 0; i < pairs.size(); ++i)
      for (size_t j = 0; j < pairs.size(); ++j) {
        if (i == j || pairs[i].defective_flag) continue;
        if (std::abs(pairs[i].mu - pairs[j].mu) < 1e-6) continue;
        std::complex<double> pr =
            pairs[i].w_star.transpose() * (b.S.cast<std::complex<double>>() * pairs[j].w);
        worst_biorth = std::max(worst_biorth, std::abs(pr));
      }
    const bool ok = dim <= 400 && worst_match <= 1e-8 && worst_res <= 1e-8 && worst_biorth <= 1e-8;
    line("C6", ok, "eigen oracle (dim " + std::to_string(dim) + "): worst dense mismatch = " + fmt(worst_match) +
                       ", worst residual = " + fmt(worst_res) + ", worst cross-pairing = " + fmt(worst_biorth) +
                       " (tol 1e-8, " + fmt(t.seconds()) + " s)");
  }

  // ------------------------------------------------------------------ C7
  {
    Timer t;
    const double lambda_star = cfg.manufactured_lambda_star;
    ManufacturedFamily fam(sctx.S(), lambda_star, true);
    CriticalResult crit = find_critical(fam, 0.2, 1.8, 9, cfg.tol_root);
    double lam_err = 1e300, fd_err = 1e300, formula_err = 1e300;
    if (crit.status == CriticalStatus::found) {
      lam_err = std::abs(crit.lambda0 - std::sqrt(lambda_star)) / std::sqrt(lambda_star);
      TransversalityResult tr = transversality(fam, crit.lambda0, crit.pair);
      const double want = 2.0 / std::sqrt(lambda_star);
      fd_err = std::abs(tr.mu_prime_fd - want) / want;
      formula_err = std::abs(tr.mu_prime_formula - want) / want;
    }
    const bool ok = lam_err <= 1e-8 && fd_err <= 1e-6 && formula_err <= 1e-6;
    line("C7", ok, "manufactured crossing: lambda0 rel error = " + fmt(lam_err) +
                       " (tol 1e-8); slope rel error fd = " + fmt(fd_err) + ", adjoint formula = " + fmt(formula_err) +
                       " (tol 1e-6, " + fmt(t.seconds()) + " s)");
  }

  // ------------------------------------------------------------------ C8
  {
    Timer t;
    PhysicalFamily fam(bctx, sctx);
    std::vector<double> lams = {0.2, 0.5, 0.8, 1.1};
    MuScan scan = scan_mu(fam, lams);
    double worst_row_identity = 0.0;
    int tested = 0;
    bool found_mu1 = false;
    double stated_prefactor_residual = -1.0;
    for (double lam : lams) {
      const OperatorBundle& b = fam.bundle_at(lam);
      auto pairs = leading_eigs(b, std::complex<double>(1.0, 0.0), std::min<int>(48, static_cast<int>(b.S.rows()) - 1));
      for (const auto& p : pairs) {
        if (std::abs(p.mu.imag()) > 1e-10) continue;
        DiscreteField wf(sctx.basis_ptr(), p.w.real());
        if (std::abs(wf.rigid().omega(2)) < 1e-8) continue;
        SymmetryBreakingReport rep =
            symmetry_breaking(sctx, wf, fam.base_at(lam), lam, p.mu.real());
        worst_row_identity = std::max(worst_row_identity, rep.residual_vs_eigenrow);
        ++tested;
        if (std::abs(p.mu.real() - 1.0) < 1e-6) {
          found_mu1 = true;
          stated_prefactor_residual = rep.residual_vs_stated;
        }
        break;
      }
    }
    const bool crossing_in_scan = scan.mu_max >= 1.0;
    bool ok = tested >= 3 && worst_row_identity <= 1e-6;
    std::string msg = "spin-onset functional: eigen-row identity residual = " + fmt(worst_row_identity) +
                      " at " + std::to_string(tested) + " computed eigenpairs (tol 1e-6";
    if (!crossing_in_scan) {
      msg += "); transversal crossing not resolved at this resolution (mu_max = " + fmt(scan.mu_max) + ")";
    } else if (found_mu1) {
      ok = ok && stated_prefactor_residual <= 1e-6;
      msg += "); stated -(8 pi/lambda0) prefactor residual = " + fmt(stated_prefactor_residual);
    } else {
      msg += ")";
    }
    line("C8", ok, msg + " (" + fmt(t.seconds()) + " s)");
    note("the exact discrete identity is functional = (4 pi mu / lambda) omega_e3; at mu = 1 the");
    note("-(8 pi / lambda0) prefactor would differ from it by a factor of -2 (see C1: torque -8 pi");
    note("pairs with strain norm 4 pi through the factor-2 traction relation).");
  }

  // ------------------------------------------------------------------ C9
  {
    Timer t;
    // manufactured critical point under doubled resolution
    Quad2D q_lo = build_quadrature(30, 26);
    Quad2D q_hi = build_quadrature(44, 38);
    SpectrumContext s_lo(1, 4, 5, q_lo), s_hi(1, 8, 10, q_hi);
    ManufacturedFamily f_lo(s_lo.S(), cfg.manufactured_lambda_star, true);
    ManufacturedFamily f_hi(s_hi.S(), cfg.manufactured_lambda_star, true);
    CriticalResult c_lo = find_critical(f_lo, 0.2, 1.8, 9, cfg.tol_root);
    CriticalResult c_hi = find_critical(f_hi, 0.2, 1.8, 9, cfg.tol_root);
    const double lam_shift = (c_lo.status == CriticalStatus::found && c_hi.status == CriticalStatus::found)
                                 ? std::abs(c_lo.lambda0 - c_hi.lambda0) / c_hi.lambda0
                                 : 1e300;

    // viscous-regime fall speed under doubled resolution
    BaseflowContext fine(2 * cfg.L, 2 * cfg.N, build_quadrature(2 * cfg.quad_nr(), 2 * cfg.quad_nmu()));
    SolveOutcome a = solve_base(bctx, 1e-2);
    SolveOutcome b = solve_base(fine, 1e-2);
    const double xi_shift = (a.ok() && b.ok()) ? std::abs(a.flow->xi0 - b.flow->xi0) / b.flow->xi0 : 1e300;

    // identity residuals at the doubled resolution
    RunConfig cfg2 = cfg;
    cfg2.L = 2 * cfg.L;
    cfg2.N = 2 * cfg.N;
    std::ostringstream sink;
    const int verify_fail_fine = run_verify(cfg2, sink);

    // verify-suite runtime at desk resolution
    Timer tv;
    std::ostringstream sink2;
    const int verify_fail = run_verify(cfg, sink2);
    const double verify_seconds = tv.seconds();

    const bool ok = lam_shift <= 1e-4 && xi_shift <= 1e-6 && verify_fail == 0 && verify_fail_fine == 0 &&
                    verify_seconds < 60.0;
    line("C9", ok, "refinement gates: lambda0 shift = " + fmt(lam_shift) + " (tol 1e-4), xi0 shift = " +
                       fmt(xi_shift) + " (tol 1e-6), identity suite clean at both resolutions, verify runtime = " +
                       fmt(verify_seconds) + " s (tol 60, total " + fmt(t.seconds()) + " s)");
  }

  std::printf("acceptance: %d criterion(s) failed\n", g_failures);
  return g_failures;
}
