#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "spherefall/store.hpp"
#include "spherefall/verify.hpp"

using namespace spherefall;

namespace {

struct Session {
  RunConfig cfg;
  Quad2D quad;
  explicit Session(const RunConfig& c)
      : cfg(c), quad(build_quadrature(c.quad_nr(), c.quad_nmu(), c.map_kind(), c.radial_scale, c.radial_rinf)) {}
  NewtonOptions newton() const {
    NewtonOptions o;
    o.tol = cfg.tol_newton;
    return o;
  }
};

int cmd_verify(const RunConfig& cfg) { return run_verify(cfg, std::cout); }

int cmd_base(const RunConfig& cfg) {
  Session s(cfg);
  BaseflowContext ctx(cfg.L, cfg.N, s.quad);
  ResultStore store(cfg.out_dir, cfg);

  Branch br;
  std::optional<Branch> existing = store.load_branch(ctx);
  const auto grid = cfg.lambda_grid();
  if (existing && !existing->points.empty() &&
      existing->points.back().flow.lambda >= grid.back() - 1e-14) {
    std::cout << "branch record up to date (" << existing->points.size() << " points); no recomputation\n";
    store.save_base_csv(*existing);
    return 0;
  }
  if (existing && !existing->points.empty()) {
    std::cout << "resuming stored branch with " << existing->points.size() << " points\n";
    br = *existing;
    const double last = br.points.back().flow.lambda;
    StepPolicy pol;
    Branch ext = continue_branch(ctx, last, grid.back(), std::max(2, cfg.lambda_points / 2), pol, s.newton());
    for (size_t i = 1; i < ext.points.size(); ++i) br.points.push_back(ext.points[i]);
    br.truncated = ext.truncated;
    br.truncation_reason = ext.truncation_reason;
  } else {
    br = continue_branch(ctx, grid.front(), grid.back(), cfg.lambda_points, StepPolicy{}, s.newton());
  }
  store.save_branch(br);
  store.save_base_csv(br);
  std::cout << "branch: " << br.points.size() << " points in [" << grid.front() << ", " << grid.back() << "]";
  if (br.truncated) std::cout << "  TRUNCATED: " << br.truncation_reason;
  std::cout << "\n";
  for (const auto& p : br.points)
    std::printf("  lambda=%-12.6g xi0=%-14.8g |D|^2=%-14.8g res=%.2e iters=%d\n", p.flow.lambda, p.flow.xi0,
                p.flow.strain_norm2, p.flow.residual, p.newton_iters);
  return br.truncated ? 2 : 0;
}

int cmd_spectrum(const RunConfig& cfg) {
  Session s(cfg);
  BaseflowContext bctx(cfg.L, cfg.N, s.quad);
  ResultStore store(cfg.out_dir, cfg);
  const auto grid = cfg.lambda_grid();
  std::vector<double> lams;
  for (double l : grid)
    if (l > 0) lams.push_back(l);
  if (lams.empty()) {
    std::cerr << "spectrum: lambda grid contains no positive points\n";
    return 1;
  }
  for (int m : cfg.modes) {
    SpectrumContext sctx(std::max(m, 0), cfg.L, cfg.N, s.quad);
    PhysicalFamily fam(bctx, sctx, s.newton());
    MuScan scan = scan_mu(fam, lams);
    store.save_scan_csv(m, scan);
    std::cout << "mode m=" << m << ": mu in [" << scan.mu_min << ", " << scan.mu_max << "], " << scan.breaks
              << " path breaks -> " << store.scan_path(m) << "\n";
  }
  return 0;
}

void write_slice_csv(const std::string& path, const RunConfig& cfg, const DiscreteField& w) {
  std::ofstream out(path);
  out << "# config_fingerprint: " << std::hex << cfg.fingerprint() << std::dec << "\n";
  out << "x1,rho,u_x1,u_x2,u_x3\n";
  out.precision(17);
  for (int i = 0; i <= 60; ++i) {
    const double x1 = -5.0 + 10.0 * i / 60.0;
    for (int j = 0; j < 40; ++j) {
      const double rho = 0.05 + 4.0 * j / 39.0;
      Eigen::Vector3d x(x1, rho, 0.0);
      if (x.norm() < 1.0 + 1e-9) {
        out << x1 << "," << rho << ",nan,nan,nan\n";
        continue;
      }
      Eigen::Vector3d u = w.evaluate(x);
      out << x1 << "," << rho << "," << u(0) << "," << u(1) << "," << u(2) << "\n";
    }
  }
}

int cmd_critical(const RunConfig& cfg, int mode, bool manufactured) {
  Session s(cfg);
  ResultStore store(cfg.out_dir, cfg);
  BaseflowContext bctx(cfg.L, cfg.N, s.quad);
  SpectrumContext sctx(mode, cfg.L, cfg.N, s.quad);

  std::unique_ptr<OperatorFamily> family;
  PhysicalFamily* physical = nullptr;
  if (manufactured) {
    family = std::make_unique<ManufacturedFamily>(sctx.S(), cfg.manufactured_lambda_star, true);
  } else {
    if (!store.load_branch(bctx).has_value()) {
      std::cerr << "critical: no stored branch for this configuration; run the 'base' subcommand first\n";
      return 1;
    }
    auto fam = std::make_unique<PhysicalFamily>(bctx, sctx, s.newton());
    physical = fam.get();
    family = std::move(fam);
  }

  const double lo = std::max(cfg.lambda_min, 1e-6);
  const double hi = cfg.lambda_max;
  CriticalResult crit = find_critical(*family, lo, hi, std::max(5, cfg.lambda_points), cfg.tol_root);
  store.save_scan_csv(mode, crit.scan);

  SimplicityReport simp;
  TransversalityResult trans;
  SymmetryBreakingReport sb;
  bool have_simp = false, have_trans = false, have_sb = false;
  if (crit.status == CriticalStatus::found) {
    Pencil p = family->at(crit.lambda0);
    simp = certify_simplicity(p.A, *p.S, std::complex<double>(1.0, 0.0));
    have_simp = true;
    trans = transversality(*family, crit.lambda0, crit.pair);
    have_trans = true;
    if (!manufactured && mode == 1 && physical) {
      Eigen::VectorXd wr = crit.pair.w.real();
      DiscreteField wf(sctx.basis_ptr(), wr);
      sb = symmetry_breaking(sctx, wf, physical->base_at(crit.lambda0), crit.lambda0, crit.pair.mu.real());
      have_sb = true;
      write_slice_csv(cfg.out_dir + "/eigenfunction_slice_m" + std::to_string(mode) + ".csv", cfg, wf);
    }
  } else if (!manufactured && physical && crit.status == CriticalStatus::no_crossing) {
    // still emit plot data for the leading eigenfunction at the top of the bracket
    const OperatorBundle& b = physical->bundle_at(hi);
    auto pairs = leading_eigs(b, std::complex<double>(1.0, 0.0), 4);
    if (!pairs.empty()) {
      DiscreteField wf(sctx.basis_ptr(), pairs.front().w.real());
      write_slice_csv(cfg.out_dir + "/eigenfunction_slice_m" + std::to_string(mode) + ".csv", cfg, wf);
    }
  }
  const std::string report = format_report(cfg, mode, crit, have_simp ? &simp : nullptr,
                                           have_trans ? &trans : nullptr, have_sb ? &sb : nullptr);
  store.save_report(mode, report);
  std::cout << report;
  switch (crit.status) {
    case CriticalStatus::no_crossing:
      std::cout << "no critical point in [" << lo << ", " << hi << "]; mu extrema recorded in the report\n";
      return 0;
    case CriticalStatus::found: {
      // a bifurcation verdict needs the crossing, a certified simple
      // eigenvalue, and a nonzero crossing speed
      const bool slope_nonzero = std::abs(trans.mu_prime_fd) > 10.0 * cfg.tol_root;
      if (!simp.certified || !slope_nonzero) {
        std::cout << "crossing found but not certified as a bifurcation point: "
                  << (!simp.certified ? simp.message : "crossing speed indistinguishable from zero") << "\n";
        return 3;
      }
      return 0;
    }
    case CriticalStatus::complex_crossing:
      return 4;
    case CriticalStatus::failed:
      return 5;
  }
  return 5;
}

int cmd_symmetry(const RunConfig& cfg, double lambda_opt) {
  Session s(cfg);
  BaseflowContext bctx(cfg.L, cfg.N, s.quad);
  SpectrumContext sctx(1, cfg.L, cfg.N, s.quad);
  const double lambda = lambda_opt > 0 ? lambda_opt : cfg.lambda_max;
  SolveOutcome base = solve_base(bctx, lambda, nullptr, s.newton());
  if (!base.ok()) {
    std::cerr << "symmetry: base solve failed\n";
    return 1;
  }
  OperatorBundle b = assemble_bundle(sctx, *base.flow);
  auto pairs = leading_eigs(b, std::complex<double>(1.0, 0.0), std::min<int>(48, static_cast<int>(b.S.rows()) - 1));
  // prefer the real eigenpair with the strongest transversal spin component
  const EigenPair* pick = nullptr;
  double best = 1e-12;
  for (const auto& p : pairs) {
    if (std::abs(p.mu.imag()) > 1e-8) continue;
    DiscreteField wf(sctx.basis_ptr(), p.w.real());
    const double spin = std::abs(wf.rigid().omega(2));
    if (spin > best) {
      best = spin;
      pick = &p;
    }
  }
  if (pick) {
    const EigenPair& p = *pick;
    Eigen::VectorXd wr = p.w.real();
    DiscreteField wf(sctx.basis_ptr(), wr);
    SymmetryBreakingReport rep = symmetry_breaking(sctx, wf, *base.flow, lambda, p.mu.real());
    std::printf("lambda=%.6g mu=%.8g omega_e3=%.8g functional=%.8g\n", lambda, p.mu.real(), rep.omega_e3,
                rep.functional);
    std::printf("  terms: streamwise=%.8g convective=%.8g trace=%.8g\n", rep.term_streamwise, rep.term_convective,
                rep.term_trace);
    std::printf("  identity check (eigen-row, (4 pi mu/lambda) omega): residual %.2e\n", rep.residual_vs_eigenrow);
    std::printf("  stated prefactor (-(8 pi/lambda) omega): residual %.2e\n", rep.residual_vs_stated);
    return 0;
  }
  std::cout << "no real eigenpair with transversal spin content at lambda=" << lambda << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spherefall: steady-fall bifurcation toolkit for a sphere in viscous flow"};
  app.fallthrough(true);
  std::string config_path;
  std::string out_override;
  app.add_option("--config", config_path, "run configuration file")->required();
  app.add_option("--out", out_override, "override output directory");

  auto* verify = app.add_subcommand("verify", "run the identity verification suite");
  auto* base = app.add_subcommand("base", "compute or extend the axisymmetric branch");
  auto* spectrum = app.add_subcommand("spectrum", "eigenvalue scans over the lambda grid");
  auto* critical = app.add_subcommand("critical", "locate the critical Galilei number");
  auto* symmetry = app.add_subcommand("symmetry", "evaluate the spin-onset functional");
  int mode = 1;
  bool manufactured = false;
  double lambda_at = 0.0;
  critical->add_option("--mode", mode, "azimuthal mode (default 1)");
  critical->add_flag("--manufactured", manufactured, "use the closed-form self-test operator family");
  symmetry->add_option("--lambda", lambda_at, "Galilei number at which to evaluate (default lambda.max)");
  double lmin_override = -1.0, lmax_override = -1.0;
  app.add_option("--lambda-min", lmin_override, "override lambda.min");
  app.add_option("--lambda-max", lmax_override, "override lambda.max");
  app.require_subcommand(1);

  CLI11_PARSE(app, argc, argv);

  try {
    RunConfig cfg = RunConfig::parse_file(config_path);
    if (!out_override.empty()) cfg.out_dir = out_override;
    if (lmin_override >= 0) cfg.lambda_min = lmin_override;
    if (lmax_override >= 0) cfg.lambda_max = lmax_override;
    cfg.validate();
    if (verify->parsed()) return cmd_verify(cfg);
    if (base->parsed()) return cmd_base(cfg);
    if (spectrum->parsed()) return cmd_spectrum(cfg);
    if (critical->parsed()) return cmd_critical(cfg, mode, manufactured);
    if (symmetry->parsed()) return cmd_symmetry(cfg, lambda_at);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
