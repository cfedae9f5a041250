#include "spherefall/bifurcation.hpp"

#include <cmath>

namespace spherefall {

namespace {
constexpr double kPi = 3.14159265358979323846264338327950288;
constexpr double kEightPi = 8.0 * kPi;
}  // namespace

PhysicalFamily::PhysicalFamily(const BaseflowContext& base_ctx, const SpectrumContext& spec_ctx, NewtonOptions opts)
    : base_ctx_(base_ctx), spec_ctx_(spec_ctx), opts_(opts) {}

const BaseFlow& PhysicalFamily::base_at(double lambda) {
  auto it = bases_.find(lambda);
  if (it != bases_.end()) return it->second;
  // warm start from the nearest solved point
  const Eigen::VectorXd* guess = nullptr;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& [lam, bf] : bases_) {
    if (std::abs(lam - lambda) < best) {
      best = std::abs(lam - lambda);
      guess = &bf.v.coeffs;
    }
  }
  SolveOutcome out = solve_base(base_ctx_, lambda, guess, opts_);
  if (!out.ok()) throw std::runtime_error("PhysicalFamily: base solve failed at lambda = " + std::to_string(lambda));
  return bases_.emplace(lambda, std::move(*out.flow)).first->second;
}

const OperatorBundle& PhysicalFamily::bundle_at(double lambda) {
  auto it = bundles_.find(lambda);
  if (it != bundles_.end()) return it->second;
  const BaseFlow& bf = base_at(lambda);
  return bundles_.emplace(lambda, assemble_bundle(spec_ctx_, bf)).first->second;
}

Pencil PhysicalFamily::at(double lambda) {
  const OperatorBundle& b = bundle_at(lambda);
  Pencil p;
  p.lambda = lambda;
  p.Atilde = b.Atilde();
  p.A = lambda * p.Atilde;
  p.S = &spec_ctx_.S();
  return p;
}

ManufacturedFamily::ManufacturedFamily(Eigen::MatrixXd S, double lambda_star, bool crossing)
    : S_(std::move(S)), lambda_star_(lambda_star), crossing_(crossing) {
  if (!(lambda_star_ > 0)) throw std::invalid_argument("ManufacturedFamily: lambda_star must be positive");
}

Pencil ManufacturedFamily::at(double lambda) {
  Pencil p;
  p.lambda = lambda;
  const double sign = crossing_ ? 1.0 : -1.0;
  p.Atilde = (sign * lambda / lambda_star_) * S_;
  p.A = lambda * p.Atilde;
  p.S = &S_;
  return p;
}

MuTracker::Sample MuTracker::eval(OperatorFamily& family, double lambda) {
  Pencil p = family.at(lambda);
  auto pairs = leading_eigs(p.A, *p.S, std::complex<double>(1.0, 0.0), count_);
  if (pairs.empty()) throw std::runtime_error("MuTracker: no converged eigenpairs at lambda = " + std::to_string(lambda));

  const Eigen::MatrixXcd Sc = p.S->cast<std::complex<double>>();
  auto overlap_with_prev = [&](const EigenPair& e) {
    if (!has_prev_) return 1.0;
    const std::complex<double> num = (prev_vec_.conjugate().transpose() * (Sc * e.w))(0);
    const double na = std::sqrt(std::abs((prev_vec_.conjugate().transpose() * (Sc * prev_vec_))(0)));
    const double nb = std::sqrt(std::abs((e.w.conjugate().transpose() * (Sc * e.w))(0)));
    return std::abs(num) / std::max(na * nb, 1e-300);
  };

  // candidate selection: best overlap when a history exists, otherwise the
  // largest (approximately real) eigenvalue
  int best = -1;
  double best_metric = -1.0;
  for (size_t i = 0; i < pairs.size(); ++i) {
    const double metric = has_prev_ ? overlap_with_prev(pairs[i]) : pairs[i].mu.real();
    if (best < 0 || metric > best_metric) {
      best = static_cast<int>(i);
      best_metric = metric;
    }
  }
  Sample s;
  s.lambda = lambda;
  s.pair = pairs[static_cast<size_t>(best)];
  s.mu = s.pair.mu;
  s.overlap = has_prev_ ? best_metric : 1.0;
  s.is_complex = std::abs(s.mu.imag()) > 1e-8 * std::max(1.0, std::abs(s.mu));
  if (has_prev_ && s.overlap < threshold_) {
    s.path_break = true;
    // re-anchor on the largest real eigenvalue
    int anchor = -1;
    double mx = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < pairs.size(); ++i) {
      if (std::abs(pairs[i].mu.imag()) > 1e-8 * std::max(1.0, std::abs(pairs[i].mu))) continue;
      if (pairs[i].mu.real() > mx) {
        mx = pairs[i].mu.real();
        anchor = static_cast<int>(i);
      }
    }
    if (anchor >= 0) {
      s.pair = pairs[static_cast<size_t>(anchor)];
      s.mu = s.pair.mu;
    }
  }
  prev_vec_ = s.pair.w;
  has_prev_ = true;
  return s;
}

MuScan scan_mu(OperatorFamily& family, const std::vector<double>& lambdas, double overlap_threshold) {
  MuScan scan;
  MuTracker tracker(6, overlap_threshold);
  for (double lam : lambdas) {
    MuTracker::Sample s = tracker.eval(family, lam);
    MuScanPoint pt;
    pt.lambda = lam;
    pt.mu_real = s.mu.real();
    pt.mu_imag = s.mu.imag();
    pt.gap = s.pair.gap;
    pt.residual = s.pair.residual;
    pt.overlap = s.overlap;
    pt.path_break = s.path_break;
    if (s.path_break) ++scan.breaks;
    scan.mu_max = std::max(scan.mu_max, pt.mu_real);
    scan.mu_min = std::min(scan.mu_min, pt.mu_real);
    scan.points.push_back(pt);
  }
  return scan;
}

CriticalResult find_critical(OperatorFamily& family, double bracket_lo, double bracket_hi, int scan_points,
                             double rel_tol) {
  if (!(bracket_lo < bracket_hi)) throw std::invalid_argument("find_critical: empty bracket");
  CriticalResult out;
  std::vector<double> lams;
  for (int i = 0; i < scan_points; ++i)
    lams.push_back(bracket_lo + (bracket_hi - bracket_lo) * i / (scan_points - 1));
  out.scan = scan_mu(family, lams);

  // locate a sign change of mu - 1 along the scan
  int seg = -1;
  for (size_t i = 0; i + 1 < out.scan.points.size(); ++i) {
    const double fa = out.scan.points[i].mu_real - 1.0;
    const double fb = out.scan.points[i + 1].mu_real - 1.0;
    if (fa == 0.0 || fa * fb < 0.0) {
      seg = static_cast<int>(i);
      break;
    }
  }
  if (seg < 0) {
    out.status = CriticalStatus::no_crossing;
    out.message = "no crossing of mu = 1 in the bracket";
    return out;
  }

  double lo = out.scan.points[static_cast<size_t>(seg)].lambda;
  double hi = out.scan.points[static_cast<size_t>(seg) + 1].lambda;
  MuTracker tracker;
  auto f = [&](double lam, MuTracker::Sample* keep) {
    MuTracker::Sample s = tracker.eval(family, lam);
    if (keep) *keep = s;
    return s.mu.real() - 1.0;
  };
  MuTracker::Sample s_keep;
  double flo = f(lo, &s_keep);
  double fhi = f(hi, &s_keep);
  if (s_keep.is_complex) {
    out.status = CriticalStatus::complex_crossing;
    out.message = "tracked eigenvalue is complex inside the bracket";
    return out;
  }
  double a = lo, b = hi, fa = flo, fb = fhi;
  double root = 0.5 * (a + b);
  for (int iter = 0; iter < 80; ++iter) {
    // secant step, clipped to the bracket; bisection fallback
    double cand = (std::abs(fb - fa) > 1e-300) ? (b - fb * (b - a) / (fb - fa)) : 0.5 * (a + b);
    if (!(cand > a && cand < b)) cand = 0.5 * (a + b);
    MuTracker::Sample s;
    const double fc = f(cand, &s);
    root = cand;
    if (std::abs(b - a) <= rel_tol * std::max(1.0, std::abs(cand)) || fc == 0.0) {
      out.pair = s.pair;
      break;
    }
    if (fa * fc <= 0.0) {
      b = cand;
      fb = fc;
    } else {
      a = cand;
      fa = fc;
    }
    out.pair = s.pair;
  }
  out.status = CriticalStatus::found;
  out.lambda0 = root;
  out.message = "crossing located";
  return out;
}

SimplicityReport certify_simplicity(const Eigen::MatrixXd& A, const Eigen::MatrixXd& S, std::complex<double> target,
                                    double cluster_tol) {
  SimplicityReport rep;
  auto pairs = leading_eigs(A, S, target, std::min<int>(6, static_cast<int>(A.rows())));
  if (pairs.empty()) {
    rep.message = "no converged eigenpairs near the target";
    return rep;
  }
  const EigenPair& p0 = pairs.front();
  rep.biorth_prenorm = p0.biorth;
  rep.gap = std::numeric_limits<double>::infinity();
  rep.cluster_dimension = 0;
  for (const auto& p : pairs) {
    const double d = std::abs(p.mu - p0.mu);
    if (d <= cluster_tol * std::max(1.0, std::abs(p0.mu)))
      ++rep.cluster_dimension;
    else
      rep.gap = std::min(rep.gap, d);
  }
  if (rep.gap < 1e-6) {
    rep.certified = false;
    rep.message = "cannot certify: eigenvalue gap below tolerance";
    return rep;
  }
  if (rep.cluster_dimension > 1) {
    rep.certified = false;
    rep.message = "cannot certify: eigenvalue cluster has dimension > 1";
    return rep;
  }
  if (rep.biorth_prenorm < 1e-8) {
    rep.certified = false;
    rep.message = "cannot certify: adjoint pairing vanishes (defective pair)";
    return rep;
  }
  rep.certified = true;
  rep.message = "simple within this block";
  return rep;
}

TransversalityResult transversality(OperatorFamily& family, double lambda0, const EigenPair& pair, double delta) {
  TransversalityResult out;
  out.delta = (delta > 0) ? delta : std::max(1e-4, 1e-3 * lambda0);

  auto fd_slope = [&](double d) {
    MuTracker tr;
    tr.seed(pair.w);  // anchor on the provided eigenvector
    MuTracker::Sample sm = tr.eval(family, lambda0 - d);
    tr.seed(pair.w);
    MuTracker::Sample sp = tr.eval(family, lambda0 + d);
    return (sp.mu.real() - sm.mu.real()) / (2.0 * d);
  };
  out.mu_prime_fd = fd_slope(out.delta);
  const double fd_half = fd_slope(0.5 * out.delta);
  const double rich = std::abs(out.mu_prime_fd - fd_half) / std::max(1.0, std::abs(fd_half));
  out.richardson_ok = rich < 1e-2;
  out.mu_prime_fd = fd_half;

  // adjoint-pairing route: mu' = w*^T (Atilde + lambda0 dAtilde/dlambda) w
  Pencil pm = family.at(lambda0 - out.delta);
  Pencil pp = family.at(lambda0 + out.delta);
  Pencil p0 = family.at(lambda0);
  Eigen::MatrixXd dAt = (pp.Atilde - pm.Atilde) / (2.0 * out.delta);
  Eigen::MatrixXcd Op = (p0.Atilde + lambda0 * dAt).cast<std::complex<double>>();
  const std::complex<double> val = pair.w_star.transpose() * (Op * pair.w);
  out.mu_prime_formula = val.real();
  out.disagreement =
      std::abs(out.mu_prime_formula - out.mu_prime_fd) / std::max(1e-12, std::abs(out.mu_prime_fd));
  return out;
}

// ---------------------------------------------------------------------------
// Rotlet closed forms

Eigen::Vector3d RotletField::velocity(const Eigen::Vector3d& x) const {
  const double r = x.norm();
  return Eigen::Vector3d::UnitZ().cross(x) / (r * r * r);
}

Eigen::Matrix3d RotletField::gradient(const Eigen::Vector3d& x) const {
  const double r = x.norm();
  const double r3 = r * r * r, r5 = r3 * r * r;
  const Eigen::Vector3d h = Eigen::Vector3d::UnitZ().cross(x);
  Eigen::Matrix3d G;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double eps = 0.0;  // epsilon_{i 3 j}
      if (i == 0 && j == 1) eps = -1.0;  // e_{x,z,y} = -1
      if (i == 1 && j == 0) eps = 1.0;
      G(i, j) = eps / r3 - 3.0 * h(i) * x(j) / r5;
    }
  return G;
}

Eigen::Matrix3d RotletField::strain(const Eigen::Vector3d& x) const {
  Eigen::Matrix3d G = gradient(x);
  return 0.5 * (G + G.transpose());
}

Eigen::Vector3d RotletField::laplacian(const Eigen::Vector3d& x) const {
  const double r = x.norm();
  const double r5 = std::pow(r, 5.0), r7 = std::pow(r, 7.0);
  const Eigen::Vector3d h = Eigen::Vector3d::UnitZ().cross(x);
  Eigen::Vector3d lap;
  for (int i = 0; i < 3; ++i) {
    double acc = 0.0;
    for (int j = 0; j < 3; ++j) {
      double eps_ij = 0.0;
      if (i == 0 && j == 1) eps_ij = -1.0;
      if (i == 1 && j == 0) eps_ij = 1.0;
      // d_j d_j H_i summed over j
      acc += -3.0 * (2.0 * eps_ij * x(j)) / r5;
    }
    acc += -9.0 * h(i) / r5 + 15.0 * h(i) * (x.squaredNorm()) / r7;
    lap(i) = acc;
  }
  return lap;
}

SymmetryBreakingReport symmetry_breaking(const SpectrumContext& ctx, const DiscreteField& w, const BaseFlow& base,
                                         double lambda, double mu) {
  if (ctx.m() != 1) throw std::invalid_argument("symmetry_breaking: needs the m = 1 block");
  SymmetryBreakingReport rep;
  rep.lambda = lambda;
  rep.mu = mu;

  const BasisMember H = make_rotation_lifting(2);
  auto eval_terms = [&](const Quad2D& quad, double* t1, double* t2, double* t3) {
    FieldPlanes wp(w, quad);
    FieldPlanes v0p(base.v, quad);
    *t1 = base.xi0 * inner_d1(wp, H, quad);
    *t2 = 2.0 * trilinear_scalar(wp, H, v0p, quad);
    *t3 = wp.rigid().xi * inner_d1(v0p, H, quad);
  };
  eval_terms(ctx.quad(), &rep.term_streamwise, &rep.term_convective, &rep.term_trace);
  rep.functional = rep.term_streamwise + rep.term_convective + rep.term_trace;
  rep.omega_e3 = w.rigid().omega(2);

  const double scale = std::max(std::abs(rep.functional), 1e-14);
  rep.residual_vs_stated = std::abs(-(kEightPi / lambda) * rep.omega_e3 - rep.functional) / scale;
  rep.residual_vs_eigenrow = std::abs((4.0 * kPi * mu / lambda) * rep.omega_e3 - rep.functional) / scale;

  // refinement check of the quadrature
  Quad2D fine = build_quadrature(2 * ctx.quad().radial.size(), 2 * ctx.quad().angular.size(),
                                 ctx.quad().radial.map_kind, ctx.quad().radial.scale, ctx.quad().radial.r_inf);
  double t1f, t2f, t3f;
  eval_terms(fine, &t1f, &t2f, &t3f);
  rep.refinement_disagreement = std::abs((t1f + t2f + t3f) - rep.functional) / scale;
  rep.quadrature_flagged = rep.refinement_disagreement > 1e-6;
  return rep;
}

}  // namespace spherefall
