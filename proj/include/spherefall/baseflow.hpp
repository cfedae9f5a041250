#pragma once
#include <Eigen/Cholesky>
#include <optional>
#include <vector>

#include "spherefall/forms.hpp"

namespace spherefall {

// Converged axisymmetric free-fall state at one Galilei number.
struct BaseFlow {
  double lambda = 0.0;
  DiscreteField v;          // meridional m = 0 field including the translational lifting
  double xi0 = 0.0;         // fall speed
  double strain_norm2 = 0;  // |D(v0)|_2^2
  double residual = 0.0;    // dual-norm residual at convergence
  std::vector<double> residual_history;
  std::uint64_t fingerprint = 0;

  double energy_residual() const;  // | |D(v0)|^2 - lambda xi0 |
};

struct NewtonOptions {
  double tol = 1e-11;     // dual-norm residual target
  int max_iter = 30;
  double singular_rcond = 1e-13;
};

enum class NewtonFailureKind { diverged, singular_jacobian };

struct NewtonFailure {
  NewtonFailureKind kind = NewtonFailureKind::diverged;
  std::vector<double> residual_history;
  Eigen::VectorXd last_iterate;
};

// Shared discretization context for the m = 0 meridional solve. The basis
// excludes the swirl sector and rotational lifting entirely, which enforces
// omega_0 = 0 structurally.
class BaseflowContext {
public:
  BaseflowContext(int L, int N, const Quad2D& quad, AssemblyPolicy policy = AssemblyPolicy::openmp);

  const ModalBasis& basis() const { return *basis_; }
  BasisPtr basis_ptr() const { return basis_; }
  const Quad2D& quad() const { return quad_; }
  const Eigen::MatrixXd& S() const { return S_.matrix; }
  const Eigen::MatrixXd& D1() const { return D1_.matrix; }
  const Eigen::VectorXd& g() const { return g_.values; }
  const Eigen::LLT<Eigen::MatrixXd>& S_llt() const { return S_llt_; }
  AssemblyPolicy policy() const { return policy_; }
  int xi_index() const { return basis_->xi_index(); }

  // Residual R(c) = S c - lambda g - lambda N(c) and exact Jacobian.
  Eigen::VectorXd residual(const Eigen::VectorXd& c, double lambda, const Eigen::MatrixXd& K) const;
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& c, double lambda, const Eigen::MatrixXd& K) const;
  Eigen::MatrixXd assemble_K(const Eigen::VectorXd& c) const;
  double dual_residual_norm(const Eigen::VectorXd& r) const;

private:
  BasisPtr basis_;
  Quad2D quad_;
  FormMatrix S_, D1_;
  GVector g_;
  Eigen::LLT<Eigen::MatrixXd> S_llt_;
  AssemblyPolicy policy_;
};

struct SolveOutcome {
  std::optional<BaseFlow> flow;
  std::optional<NewtonFailure> failure;
  bool ok() const { return flow.has_value(); }
};

SolveOutcome solve_base(const BaseflowContext& ctx, double lambda, const Eigen::VectorXd* guess = nullptr,
                        const NewtonOptions& opts = {});

struct BranchPoint {
  BaseFlow flow;
  double step = 0.0;
  int newton_iters = 0;
  Eigen::VectorXd dv_dlambda;    // finite-difference branch derivatives
  Eigen::VectorXd d2v_dlambda2;  // (zero-sized when not available)
};

struct Branch {
  std::vector<BranchPoint> points;
  bool truncated = false;
  std::string truncation_reason;
  std::uint64_t fingerprint = 0;

  const BranchPoint* nearest(double lambda) const;
};

struct StepPolicy {
  double initial = 0.0;   // 0: automatic
  double min_step = 1e-6;
  int max_points = 400;
};

// March the branch from lambda_start to lambda_end with adaptive steps; each
// accepted point satisfies the solve_base postconditions. On a fold or
// divergence the branch is truncated with a diagnostic.
Branch continue_branch(const BaseflowContext& ctx, double lambda_start, double lambda_end, int n_points,
                       const StepPolicy& policy = {}, const NewtonOptions& opts = {});

// Injects the base flow into the other azimuthal blocks and reports the
// residual norm of each; axisymmetric input cannot source m != 0.
struct AxisymmetryReport {
  std::vector<std::pair<int, double>> block_residuals;  // (m, dual-norm residual)
};
AxisymmetryReport check_axisymmetry(const BaseflowContext& ctx, const BaseFlow& base, const std::vector<int>& modes,
                                    int L, int N, const Eigen::VectorXd* injected_noise = nullptr);

}  // namespace spherefall
