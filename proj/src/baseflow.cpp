#include "spherefall/baseflow.hpp"

#include <cmath>
#include <sstream>

namespace spherefall {

namespace {
std::uint64_t fnv1a_str(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}
}  // namespace

double BaseFlow::energy_residual() const { return std::abs(strain_norm2 - lambda * xi0); }

BaseflowContext::BaseflowContext(int L, int N, const Quad2D& quad, AssemblyPolicy policy)
    : quad_(quad), policy_(policy) {
  BasisParams p;
  p.m = 0;
  p.L = L;
  p.N = N;
  p.flavor_A = true;
  p.flavor_B = false;  // no swirl sector, no rotational lifting: omega_0 = 0 built in
  basis_ = ModalBasis::build(p, quad_);
  S_ = assemble_S(*basis_, quad_, policy_);
  D1_ = assemble_D1(*basis_, quad_, policy_);
  g_ = assemble_g(*basis_);
  S_llt_.compute(S_.matrix);
  if (S_llt_.info() != Eigen::Success) throw std::runtime_error("BaseflowContext: S factorization failed");
}

Eigen::MatrixXd BaseflowContext::assemble_K(const Eigen::VectorXd& c) const {
  DiscreteField f(basis_, c);
  FieldPlanes planes(f, quad_);
  return assemble_trilinear(*basis_, planes, quad_, policy_).matrix;
}

Eigen::VectorXd BaseflowContext::residual(const Eigen::VectorXd& c, double lambda, const Eigen::MatrixXd& K) const {
  const double xi = c(xi_index());
  Eigen::VectorXd N = 0.5 * (K * c + xi * (D1_.matrix * c));
  return S_.matrix * c - lambda * g_.values - lambda * N;
}

Eigen::MatrixXd BaseflowContext::jacobian(const Eigen::VectorXd& c, double lambda, const Eigen::MatrixXd& K) const {
  const double xi = c(xi_index());
  return S_.matrix - lambda * (K + xi * D1_.matrix);
}

double BaseflowContext::dual_residual_norm(const Eigen::VectorXd& r) const { return dual_norm(S_llt_, r); }

SolveOutcome solve_base(const BaseflowContext& ctx, double lambda, const Eigen::VectorXd* guess,
                        const NewtonOptions& opts) {
  if (lambda < 0.0) throw std::invalid_argument("solve_base: lambda must be >= 0");
  const int n = ctx.basis().size();
  Eigen::VectorXd c = guess ? *guess : Eigen::VectorXd::Zero(n);
  std::vector<double> history;

  auto make_flow = [&](double res) {
    BaseFlow bf;
    bf.lambda = lambda;
    bf.v = DiscreteField(ctx.basis_ptr(), c);
    bf.xi0 = c(ctx.xi_index());
    bf.strain_norm2 = c.dot(ctx.S() * c);
    bf.residual = res;
    bf.residual_history = history;
    std::ostringstream d;
    d << "base lambda=" << lambda << " basis=" << ctx.basis().fingerprint();
    bf.fingerprint = fnv1a_str(d.str());
    return bf;
  };

  if (lambda == 0.0) {
    c.setZero();
    history.push_back(0.0);
    SolveOutcome out;
    out.flow = make_flow(0.0);
    return out;
  }

  for (int iter = 0; iter < opts.max_iter; ++iter) {
    Eigen::MatrixXd K = ctx.assemble_K(c);
    Eigen::VectorXd r = ctx.residual(c, lambda, K);
    double res = ctx.dual_residual_norm(r);
    history.push_back(res);
    if (res <= opts.tol) {
      SolveOutcome out;
      out.flow = make_flow(res);
      return out;
    }
    Eigen::MatrixXd J = ctx.jacobian(c, lambda, K);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(J);
    if (lu.rcond() < opts.singular_rcond) {
      SolveOutcome out;
      out.failure = NewtonFailure{NewtonFailureKind::singular_jacobian, history, c};
      return out;
    }
    Eigen::VectorXd dc = lu.solve(-r);
    // Damped update: halve the step while it makes things worse.
    double step = 1.0;
    Eigen::VectorXd c_try;
    double res_try = 0.0;
    bool accepted = false;
    for (int halvings = 0; halvings < 5; ++halvings) {
      c_try = c + step * dc;
      Eigen::MatrixXd Kt = ctx.assemble_K(c_try);
      res_try = ctx.dual_residual_norm(ctx.residual(c_try, lambda, Kt));
      if (res_try < res || res_try <= opts.tol) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      history.push_back(res_try);
      SolveOutcome out;
      out.failure = NewtonFailure{NewtonFailureKind::diverged, history, c};
      return out;
    }
    c = c_try;
  }
  SolveOutcome out;
  out.failure = NewtonFailure{NewtonFailureKind::diverged, history, c};
  return out;
}

const BranchPoint* Branch::nearest(double lambda) const {
  const BranchPoint* best = nullptr;
  double dist = std::numeric_limits<double>::infinity();
  for (const auto& p : points) {
    const double d = std::abs(p.flow.lambda - lambda);
    if (d < dist) {
      dist = d;
      best = &p;
    }
  }
  return best;
}

Branch continue_branch(const BaseflowContext& ctx, double lambda_start, double lambda_end, int n_points,
                       const StepPolicy& policy, const NewtonOptions& opts) {
  if (lambda_start < 0.0 || lambda_end < lambda_start)
    throw std::invalid_argument("continue_branch: need 0 <= lambda_start <= lambda_end");
  Branch br;
  std::ostringstream d;
  d << "branch " << lambda_start << ":" << lambda_end << ":" << n_points << " basis=" << ctx.basis().fingerprint();
  br.fingerprint = fnv1a_str(d.str());

  const int n = ctx.basis().size();
  Eigen::VectorXd prev = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd prev2;
  double lam_prev = 0.0, lam_prev2 = 0.0;
  bool have_prev = false, have_prev2 = false;

  double lambda = lambda_start;
  double target_step = (n_points > 1) ? (lambda_end - lambda_start) / (n_points - 1) : 0.0;
  if (policy.initial > 0.0) target_step = policy.initial;
  double step = target_step;

  while (static_cast<int>(br.points.size()) < policy.max_points) {
    // Predictor: secant extrapolation when two previous points exist.
    Eigen::VectorXd guess = prev;
    if (have_prev2 && lam_prev != lam_prev2) {
      const double t = (lambda - lam_prev) / (lam_prev - lam_prev2);
      guess = prev + t * (prev - prev2);
    }
    SolveOutcome out = solve_base(ctx, lambda, have_prev ? &guess : nullptr, opts);
    if (!out.ok()) {
      // Halve the step and retry from the last accepted point.
      if (have_prev && step > policy.min_step) {
        step *= 0.5;
        lambda = lam_prev + step;
        continue;
      }
      br.truncated = true;
      br.truncation_reason = (out.failure->kind == NewtonFailureKind::singular_jacobian)
                                 ? "fold detected: singular continuation Jacobian"
                                 : "Newton divergence";
      break;
    }
    BranchPoint bp;
    bp.flow = *out.flow;
    bp.step = have_prev ? (lambda - lam_prev) : 0.0;
    bp.newton_iters = static_cast<int>(out.flow->residual_history.size());
    br.points.push_back(std::move(bp));

    prev2 = prev;
    lam_prev2 = lam_prev;
    have_prev2 = have_prev;
    prev = out.flow->v.coeffs;
    lam_prev = lambda;
    have_prev = true;

    if (lambda >= lambda_end) break;
    step = std::min(std::max(step * 1.5, policy.min_step), target_step > 0 ? target_step : step * 1.5);
    lambda = std::min(lambda + (target_step > 0 ? step : 1.0), lambda_end);
    if (target_step == 0.0) break;  // single requested point
  }

  // Finite-difference branch derivatives on the (possibly nonuniform) grid.
  const int np = static_cast<int>(br.points.size());
  for (int i = 0; i < np; ++i) {
    auto& p = br.points[static_cast<size_t>(i)];
    if (np < 2) break;
    const int il = std::max(0, i - 1), ir = std::min(np - 1, i + 1);
    const double dl = br.points[static_cast<size_t>(ir)].flow.lambda - br.points[static_cast<size_t>(il)].flow.lambda;
    if (dl > 0) p.dv_dlambda = (br.points[static_cast<size_t>(ir)].flow.v.coeffs -
                                br.points[static_cast<size_t>(il)].flow.v.coeffs) /
                               dl;
    if (i > 0 && i < np - 1) {
      const double hm = p.flow.lambda - br.points[static_cast<size_t>(i - 1)].flow.lambda;
      const double hp = br.points[static_cast<size_t>(i + 1)].flow.lambda - p.flow.lambda;
      if (hm > 0 && hp > 0) {
        p.d2v_dlambda2 =
            2.0 * (hm * br.points[static_cast<size_t>(i + 1)].flow.v.coeffs -
                   (hm + hp) * p.flow.v.coeffs + hp * br.points[static_cast<size_t>(i - 1)].flow.v.coeffs) /
            (hm * hp * (hm + hp));
      }
    }
  }
  return br;
}

AxisymmetryReport check_axisymmetry(const BaseflowContext& ctx, const BaseFlow& base, const std::vector<int>& modes,
                                    int L, int N, const Eigen::VectorXd* injected_noise) {
  AxisymmetryReport rep;
  FieldPlanes v0(base.v, ctx.quad());
  const double lambda = base.lambda;
  const double xi0 = base.xi0;
  for (int m : modes) {
    if (m == 0) continue;
    BasisParams p;
    p.m = m;
    p.L = std::max(L, std::max(m, 1));
    p.N = N;
    p.flavor_B = false;
    auto bm = ModalBasis::build(p, ctx.quad());
    FormMatrix Sm = assemble_S(*bm, ctx.quad(), ctx.policy());
    Eigen::VectorXd r = Eigen::VectorXd::Zero(bm->size());
    if (injected_noise && injected_noise->size() == bm->size() && injected_noise->norm() > 0) {
      // Linearized block residual (S - lambda (xi0 D1 + K)) w for v = v0 + w.
      FormMatrix D1m = assemble_D1(*bm, ctx.quad(), ctx.policy());
      FormMatrix Km = assemble_trilinear(*bm, v0, ctx.quad(), ctx.policy());
      r = Sm.matrix * (*injected_noise) - lambda * (xi0 * (D1m.matrix * (*injected_noise)) +
                                                    Km.matrix * (*injected_noise));
    } else {
      // Pure axisymmetric input tested against the m-block.
      for (int j = 0; j < bm->size(); ++j) {
        const BasisMember& phi = bm->member(j);
        const double a = inner_strain(v0, phi, ctx.quad());
        const double b = trilinear_scalar(v0, phi, v0, ctx.quad());
        const double c = inner_d1(v0, phi, ctx.quad());
        r(j) = a - lambda * b - lambda * xi0 * c;
      }
    }
    Eigen::LLT<Eigen::MatrixXd> llt(Sm.matrix);
    rep.block_residuals.emplace_back(m, dual_norm(llt, r));
  }
  return rep;
}

}  // namespace spherefall
