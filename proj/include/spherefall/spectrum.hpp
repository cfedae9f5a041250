#pragma once
#include <complex>
#include <optional>
#include <vector>

#include "spherefall/baseflow.hpp"

namespace spherefall {

// Matrices of the linearization around a base flow, restricted to one
// azimuthal block: the pencil is  A w = mu S w  with  A = lambda (xi0 D1 + K).
struct OperatorBundle {
  int m = 0;
  double lambda = 0.0;
  double xi0 = 0.0;
  BasisPtr basis;
  Eigen::MatrixXd S, D1, K;
  std::uint64_t basis_fingerprint = 0;
  std::uint64_t base_fingerprint = 0;

  Eigen::MatrixXd Atilde() const { return xi0 * D1 + K; }   // lambda M(lambda) = lambda S^{-1} Atilde
  Eigen::MatrixXd A() const { return lambda * Atilde(); }
};

// Discretization context for one azimuthal block.
class SpectrumContext {
public:
  SpectrumContext(int m, int L, int N, const Quad2D& quad, Flavor flavor = Flavor::A,
                  AssemblyPolicy policy = AssemblyPolicy::openmp);
  const ModalBasis& basis() const { return *basis_; }
  BasisPtr basis_ptr() const { return basis_; }
  const Quad2D& quad() const { return quad_; }
  int m() const { return basis_->m(); }
  const Eigen::MatrixXd& S() const { return S_.matrix; }
  const Eigen::MatrixXd& D1() const { return D1_.matrix; }
  const Eigen::LLT<Eigen::MatrixXd>& S_llt() const { return S_llt_; }
  AssemblyPolicy policy() const { return policy_; }

private:
  BasisPtr basis_;
  Quad2D quad_;
  FormMatrix S_, D1_;
  Eigen::LLT<Eigen::MatrixXd> S_llt_;
  AssemblyPolicy policy_;
};

// Assembles the linearized pencil at the given converged base flow. The base
// flow must live on the same quadrature; fingerprints are enforced.
OperatorBundle assemble_bundle(const SpectrumContext& ctx, const BaseFlow& base);

struct EigenPair {
  std::complex<double> mu;
  Eigen::VectorXcd w;        // right eigenvector
  Eigen::VectorXcd w_star;   // left eigenvector (adjoint), normalized so w_star^T S w = 1
  double residual = 0.0;     // |A w - mu S w| / |S w|
  double adj_residual = 0.0;
  double gap = 0.0;          // distance to the nearest distinct eigenvalue
  double biorth = 0.0;       // |w_star^T S w| / (|w_star|_S |w|_S) before normalization
  bool defective_flag = false;
};

struct EigOptions {
  int krylov = 60;
  double tol = 1e-9;
  int max_restarts = 4;
  bool with_left = true;
};

// Eigenpairs of  A w = mu S w  nearest the shift, by shift-invert Arnoldi
// with a dense QZ fallback. S must be SPD.
std::vector<EigenPair> leading_eigs(const Eigen::MatrixXd& A, const Eigen::MatrixXd& S, std::complex<double> shift,
                                    int count, const EigOptions& opts = {});

inline std::vector<EigenPair> leading_eigs(const OperatorBundle& b, std::complex<double> shift, int count,
                                           const EigOptions& opts = {}) {
  return leading_eigs(b.A(), b.S, shift, count, opts);
}

// All eigenvalues by the dense QZ path (oracle and fallback).
std::vector<std::complex<double>> dense_eigenvalues(const Eigen::MatrixXd& A, const Eigen::MatrixXd& S);

// Solve (S - rho xi0 D1) u = f. Skew-symmetry of D1 makes the system
// uniformly invertible; a singular factorization signals assembly damage.
Eigen::VectorXd solve_resolvent(const OperatorBundle& b, const Eigen::VectorXd& f, double rho);

}  // namespace spherefall
