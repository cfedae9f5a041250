#pragma once
#include <map>
#include <memory>
#include <string>

#include "spherefall/spectrum.hpp"

namespace spherefall {

// One lambda-slice of a generalized eigenvalue family  A(lambda) w = mu S w.
struct Pencil {
  double lambda = 0.0;
  Eigen::MatrixXd A;       // lambda * Atilde(lambda)
  Eigen::MatrixXd Atilde;  // xi0 D1 + K at this lambda
  const Eigen::MatrixXd* S = nullptr;
};

class OperatorFamily {
public:
  virtual ~OperatorFamily() = default;
  virtual Pencil at(double lambda) = 0;
  virtual const Eigen::MatrixXd& S() const = 0;
  virtual std::string name() const = 0;
};

// The linearization family along the computed base branch.
class PhysicalFamily : public OperatorFamily {
public:
  PhysicalFamily(const BaseflowContext& base_ctx, const SpectrumContext& spec_ctx, NewtonOptions opts = {});
  Pencil at(double lambda) override;
  const Eigen::MatrixXd& S() const override { return spec_ctx_.S(); }
  std::string name() const override { return "physical"; }

  const OperatorBundle& bundle_at(double lambda);
  const BaseFlow& base_at(double lambda);

private:
  const BaseflowContext& base_ctx_;
  const SpectrumContext& spec_ctx_;
  NewtonOptions opts_;
  std::map<double, BaseFlow> bases_;
  std::map<double, OperatorBundle> bundles_;
};

// Closed-form self-test family: A(lambda) = sign lambda^2/lambda_star S, so
// mu(lambda) = sign lambda^2/lambda_star. The crossing variant passes through
// mu = 1 at lambda = sqrt(lambda_star).
class ManufacturedFamily : public OperatorFamily {
public:
  ManufacturedFamily(Eigen::MatrixXd S, double lambda_star, bool crossing);
  Pencil at(double lambda) override;
  const Eigen::MatrixXd& S() const override { return S_; }
  std::string name() const override { return crossing_ ? "manufactured-crossing" : "manufactured-stable"; }

private:
  Eigen::MatrixXd S_;
  double lambda_star_;
  bool crossing_;
};

// Tracks one eigenvalue path across lambda by eigenvector overlap.
class MuTracker {
public:
  explicit MuTracker(int count = 6, double overlap_threshold = 0.9) : count_(count), threshold_(overlap_threshold) {}
  struct Sample {
    double lambda = 0.0;
    std::complex<double> mu;
    EigenPair pair;
    double overlap = 1.0;   // with the previously tracked vector
    bool path_break = false;
    bool is_complex = false;
  };
  Sample eval(OperatorFamily& family, double lambda);
  void reset() { has_prev_ = false; }
  void seed(const Eigen::VectorXcd& w) {
    prev_vec_ = w;
    has_prev_ = true;
  }

private:
  int count_;
  double threshold_;
  bool has_prev_ = false;
  Eigen::VectorXcd prev_vec_;
};

struct MuScanPoint {
  double lambda = 0.0;
  double mu_real = 0.0;
  double mu_imag = 0.0;
  double gap = 0.0;
  double residual = 0.0;
  double overlap = 1.0;
  bool path_break = false;
};

struct MuScan {
  std::vector<MuScanPoint> points;
  int breaks = 0;
  double mu_max = -std::numeric_limits<double>::infinity();
  double mu_min = std::numeric_limits<double>::infinity();
};

MuScan scan_mu(OperatorFamily& family, const std::vector<double>& lambdas, double overlap_threshold = 0.9);

enum class CriticalStatus { found, no_crossing, complex_crossing, failed };

struct CriticalResult {
  CriticalStatus status = CriticalStatus::no_crossing;
  double lambda0 = 0.0;
  EigenPair pair;          // at lambda0, when found
  MuScan scan;             // the bracketing scan actually used
  std::string message;
};

// Secant root of mu(lambda) = 1 inside the bracket, to 1e-8 relative.
CriticalResult find_critical(OperatorFamily& family, double bracket_lo, double bracket_hi, int scan_points = 9,
                             double rel_tol = 1e-8);

struct SimplicityReport {
  int cluster_dimension = 1;   // eigenvalues within cluster_tol of the target
  double gap = 0.0;
  double biorth_prenorm = 0.0; // |<w*, w>| normalized, before rescaling; ~0 flags a Jordan block
  bool certified = false;
  std::string message;
};

SimplicityReport certify_simplicity(const Eigen::MatrixXd& A, const Eigen::MatrixXd& S, std::complex<double> target,
                                    double cluster_tol = 1e-6);

struct TransversalityResult {
  double mu_prime_fd = 0.0;       // centered difference of the tracked eigenvalue
  double mu_prime_formula = 0.0;  // adjoint pairing with the family derivative
  double delta = 0.0;
  bool richardson_ok = true;
  double disagreement = 0.0;      // relative difference between the two routes
};

TransversalityResult transversality(OperatorFamily& family, double lambda0, const EigenPair& pair,
                                    double delta = 0.0);

// Closed-form transversal rotlet: H = e3 x x / |x|^3, the exterior Stokes
// flow of a sphere spinning about e3 (constant pressure).
struct RotletField {
  Eigen::Vector3d velocity(const Eigen::Vector3d& x) const;
  Eigen::Matrix3d gradient(const Eigen::Vector3d& x) const;
  Eigen::Matrix3d strain(const Eigen::Vector3d& x) const;
  Eigen::Vector3d laplacian(const Eigen::Vector3d& x) const;  // analytic; vanishes identically
  double momentum_residual(const Eigen::Vector3d& x) const { return laplacian(x).norm(); }
};

struct SymmetryBreakingReport {
  double term_streamwise = 0.0;   // xi0 (d1 w, H)
  double term_convective = 0.0;   // 2 (w . D(H), v0)
  double term_trace = 0.0;        // xi_w (d1 v0, H)
  double functional = 0.0;        // sum of the three
  double omega_e3 = 0.0;          // rotational lifting coefficient of w
  double mu = 1.0;                // eigenvalue at which w was computed
  double lambda = 0.0;
  double residual_vs_stated = 0.0;    // against -(8 pi / lambda) omega_e3
  double residual_vs_eigenrow = 0.0;  // against (4 pi mu / lambda) omega_e3 (exact row identity)
  double refinement_disagreement = 0.0;
  bool quadrature_flagged = false;
};

SymmetryBreakingReport symmetry_breaking(const SpectrumContext& ctx, const DiscreteField& w,
                                         const BaseFlow& base, double lambda, double mu);

}  // namespace spherefall
