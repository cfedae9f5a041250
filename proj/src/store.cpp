#include "spherefall/store.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace spherefall {

namespace {
std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string hex(uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}
}  // namespace

ResultStore::ResultStore(std::string dir, const RunConfig& cfg) : dir_(std::move(dir)), cfg_(&cfg), cfg_fp_(cfg.fingerprint()) {
  std::filesystem::create_directories(dir_);
}

std::string ResultStore::branch_path() const { return dir_ + "/branch_" + hex(cfg_->discretization_fingerprint()) + ".txt"; }
std::string ResultStore::scan_path(int m) const { return dir_ + "/mu_scan_m" + std::to_string(m) + "_" + hex(cfg_fp_) + ".csv"; }
std::string ResultStore::report_path(int m) const { return dir_ + "/report_m" + std::to_string(m) + "_" + hex(cfg_fp_) + ".txt"; }

void ResultStore::write_atomic(const std::string& path, const std::string& content) const {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("store: cannot write " + tmp);
    out << content;
  }
  std::filesystem::rename(tmp, path);
}

void ResultStore::save_branch(const Branch& br) {
  std::ostringstream out;
  out << "# spherefall branch record v1\n";
  out << "# config_fingerprint: " << hex(cfg_fp_) << "\n";
  out << "# branch_fingerprint: " << hex(br.fingerprint) << "\n";
  out << "# truncated: " << (br.truncated ? 1 : 0) << " reason: " << br.truncation_reason << "\n";
  out << "# config_begin\n";
  std::istringstream cfgtext(cfg_->discretization_text());
  std::string line;
  while (std::getline(cfgtext, line)) out << "#   " << line << "\n";
  out << "# config_end\n";
  for (const auto& p : br.points) {
    out << "point " << fmt17(p.flow.lambda) << " " << fmt17(p.flow.xi0) << " " << fmt17(p.flow.strain_norm2) << " "
        << fmt17(p.flow.residual) << " " << p.newton_iters << "\n";
    out << "coeffs " << p.flow.v.coeffs.size();
    for (int i = 0; i < p.flow.v.coeffs.size(); ++i) out << " " << fmt17(p.flow.v.coeffs(i));
    out << "\n";
  }
  write_atomic(branch_path(), out.str());
}

std::optional<Branch> ResultStore::load_branch(const BaseflowContext& ctx) const {
  std::ifstream in(branch_path());
  if (!in) return std::nullopt;
  Branch br;
  std::string line;
  std::string stored_cfg;
  bool in_cfg = false;
  BranchPoint pending;
  bool have_pending = false;
  while (std::getline(in, line)) {
    if (line.rfind("# config_begin", 0) == 0) {
      in_cfg = true;
      continue;
    }
    if (line.rfind("# config_end", 0) == 0) {
      in_cfg = false;
      continue;
    }
    if (in_cfg) {
      stored_cfg += line.substr(std::min<size_t>(4, line.size())) + "\n";
      continue;
    }
    if (line.rfind("# branch_fingerprint:", 0) == 0) {
      br.fingerprint = std::stoull(line.substr(22), nullptr, 16);
      continue;
    }
    if (line.rfind("point ", 0) == 0) {
      std::istringstream ls(line.substr(6));
      pending = BranchPoint{};
      ls >> pending.flow.lambda >> pending.flow.xi0 >> pending.flow.strain_norm2 >> pending.flow.residual >>
          pending.newton_iters;
      have_pending = true;
      continue;
    }
    if (line.rfind("coeffs ", 0) == 0 && have_pending) {
      std::istringstream ls(line.substr(7));
      int n = 0;
      ls >> n;
      Eigen::VectorXd c(n);
      for (int i = 0; i < n; ++i) ls >> c(i);
      if (n != ctx.basis().size())
        throw std::runtime_error("store: branch record resolution mismatch (stored config follows)\n" + stored_cfg);
      pending.flow.v = DiscreteField(ctx.basis_ptr(), c);
      br.points.push_back(pending);
      have_pending = false;
    }
  }
  if (stored_cfg != cfg_->discretization_text()) {
    std::string diff;
    std::istringstream a(stored_cfg), b(cfg_->discretization_text());
    std::string la, lb;
    while (std::getline(a, la) && std::getline(b, lb))
      if (la != lb) diff += "  stored: " + la + "\n  config: " + lb + "\n";
    throw std::runtime_error("store: config fingerprint mismatch on branch reload\n" + diff);
  }
  return br;
}

void ResultStore::save_base_csv(const Branch& br) {
  std::ostringstream out;
  out << "# config_fingerprint: " << hex(cfg_fp_) << "\n";
  out << "lambda,xi0,strain_norm2,residual\n";
  for (const auto& p : br.points)
    out << fmt17(p.flow.lambda) << "," << fmt17(p.flow.xi0) << "," << fmt17(p.flow.strain_norm2) << ","
        << fmt17(p.flow.residual) << "\n";
  write_atomic(dir_ + "/base_" + hex(cfg_fp_) + ".csv", out.str());
}

void ResultStore::save_scan_csv(int m, const MuScan& scan) {
  std::ostringstream out;
  out << "# config_fingerprint: " << hex(cfg_fp_) << "\n";
  out << "lambda,mu_re,mu_im,gap,residual,overlap,path_break\n";
  for (const auto& p : scan.points)
    out << fmt17(p.lambda) << "," << fmt17(p.mu_real) << "," << fmt17(p.mu_imag) << "," << fmt17(p.gap) << ","
        << fmt17(p.residual) << "," << fmt17(p.overlap) << "," << (p.path_break ? 1 : 0) << "\n";
  write_atomic(scan_path(m), out.str());
}

void ResultStore::save_report(int m, const std::string& text) { write_atomic(report_path(m), text); }

std::string format_report(const RunConfig& cfg, int mode, const CriticalResult& crit,
                          const SimplicityReport* simplicity, const TransversalityResult* trans,
                          const SymmetryBreakingReport* sb) {
  std::ostringstream out;
  out << "report:\n";
  out << "  config_fingerprint: " << hex(cfg.fingerprint()) << "\n";
  out << "  mode: " << mode << "\n";
  out << "  status: ";
  switch (crit.status) {
    case CriticalStatus::found: out << "critical-point-found"; break;
    case CriticalStatus::no_crossing: out << "no-critical-point"; break;
    case CriticalStatus::complex_crossing: out << "complex-crossing-flagged"; break;
    case CriticalStatus::failed: out << "failed"; break;
  }
  out << "\n";
  out << "  message: " << crit.message << "\n";
  out << "  scan:\n";
  out << "    mu_min: " << fmt17(crit.scan.mu_min) << "\n";
  out << "    mu_max: " << fmt17(crit.scan.mu_max) << "\n";
  out << "    path_breaks: " << crit.scan.breaks << "\n";
  if (crit.status == CriticalStatus::found) {
    out << "  lambda0: " << fmt17(crit.lambda0) << "\n";
    out << "  mu_at_lambda0: " << fmt17(crit.pair.mu.real()) << "\n";
    out << "  eigen_residual: " << fmt17(crit.pair.residual) << "\n";
  }
  if (simplicity) {
    out << "  simplicity:\n";
    out << "    certified: " << (simplicity->certified ? "yes" : "no") << "\n";
    out << "    cluster_dimension: " << simplicity->cluster_dimension << "\n";
    out << "    gap: " << fmt17(simplicity->gap) << "\n";
    out << "    adjoint_pairing_prenorm: " << fmt17(simplicity->biorth_prenorm) << "\n";
    out << "    note: " << simplicity->message << "\n";
  }
  if (trans) {
    out << "  transversality:\n";
    out << "    mu_prime_fd: " << fmt17(trans->mu_prime_fd) << "\n";
    out << "    mu_prime_formula: " << fmt17(trans->mu_prime_formula) << "\n";
    out << "    disagreement: " << fmt17(trans->disagreement) << "\n";
    out << "    richardson_ok: " << (trans->richardson_ok ? "yes" : "no") << "\n";
  }
  if (sb) {
    out << "  symmetry_breaking:\n";
    out << "    functional: " << fmt17(sb->functional) << "\n";
    out << "    term_streamwise: " << fmt17(sb->term_streamwise) << "\n";
    out << "    term_convective: " << fmt17(sb->term_convective) << "\n";
    out << "    term_trace: " << fmt17(sb->term_trace) << "\n";
    out << "    omega_e3: " << fmt17(sb->omega_e3) << "\n";
    out << "    residual_vs_eigenrow_identity: " << fmt17(sb->residual_vs_eigenrow) << "\n";
    out << "    residual_vs_stated_prefactor: " << fmt17(sb->residual_vs_stated) << "\n";
    out << "    quadrature_flagged: " << (sb->quadrature_flagged ? "yes" : "no") << "\n";
  }
  out << "  tolerances:\n";
  out << "    newton: " << fmt17(cfg.tol_newton) << "\n";
  out << "    eigen: " << fmt17(cfg.tol_eigen) << "\n";
  out << "    root: " << fmt17(cfg.tol_root) << "\n";
  return out.str();
}

}  // namespace spherefall
