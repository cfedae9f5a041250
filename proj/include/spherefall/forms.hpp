#pragma once
#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "spherefall/basis.hpp"

namespace spherefall {

enum class FormKind { S, D1, K, G };

// Serial path is the reference implementation; the OpenMP path must produce
// bit-identical matrices (rows are independent and internally ordered).
enum class AssemblyPolicy { serial, openmp };

struct FormMatrix {
  FormKind kind = FormKind::S;
  int m = 0;
  Eigen::MatrixXd matrix;
  std::uint64_t basis_fingerprint = 0;
};

struct GVector {
  Eigen::VectorXd values;
  std::uint64_t basis_fingerprint = 0;
};

// Velocity, gradient, strain and streamwise-derivative values of a field on
// the 2D quadrature grid, split by azimuthal factor (cos/sin of m phi).
// Index layout: plane(ir, ia) with ir radial, ia angular.
class FieldPlanes {
public:
  FieldPlanes(const DiscreteField& f, const Quad2D& quad);
  int m() const { return m_; }
  const Quad2D& quad() const { return *quad_; }
  const Eigen::MatrixXd& comp(int i, TrigKind k) const { return comp_[i][idx(k)]; }
  const Eigen::MatrixXd& grad(int i, int j, TrigKind k) const { return grad_[i][j][idx(k)]; }
  const Eigen::MatrixXd& strain(int i, int j, TrigKind k) const { return strain_[i][j][idx(k)]; }
  const Eigen::MatrixXd& d1(int i, TrigKind k) const { return d1_[i][idx(k)]; }
  const RigidMotion& rigid() const { return rigid_; }

private:
  static int idx(TrigKind k) { return k == TrigKind::cos ? 0 : 1; }
  int m_ = 0;
  const Quad2D* quad_;
  RigidMotion rigid_;
  Eigen::MatrixXd comp_[3][2], grad_[3][3][2], strain_[3][3][2], d1_[3][2];
};

// Gram matrix of the strain inner product [u, w] = (D(u), D(w)).
FormMatrix assemble_S(const ModalBasis& basis, const Quad2D& quad, AssemblyPolicy policy = AssemblyPolicy::openmp);

// Matrix of the streamwise-derivative pairing, D1(j,k) = (d1 phi_k, phi_j),
// skew-symmetric (checked by tests, not enforced).
FormMatrix assemble_D1(const ModalBasis& basis, const Quad2D& quad, AssemblyPolicy policy = AssemblyPolicy::openmp);

// Dual vector of the buoyancy functional <g, phi> = xi_phi.
GVector assemble_g(const ModalBasis& basis);

// Linearized convective form around the field v:
//   K(j,l) = 2 (phi_l . D(phi_j), v) + xi_{phi_l} (d1 v, phi_j).
// Rejects azimuthal combinations that violate the Fourier coupling rule.
FormMatrix assemble_trilinear(const ModalBasis& basis, const FieldPlanes& v, const Quad2D& quad,
                              AssemblyPolicy policy = AssemblyPolicy::openmp);

// Quadratic convective map N(c) with <N(v), phi> = (v . D(phi), v) + xi_v (d1 v, phi).
Eigen::VectorXd quadratic_N(const ModalBasis& basis, const Quad2D& quad, const Eigen::VectorXd& coeffs,
                            AssemblyPolicy policy = AssemblyPolicy::openmp);

// Scalar pairings against a single (possibly out-of-basis) member psi.
double inner_strain(const FieldPlanes& a, const BasisMember& psi, const Quad2D& quad);
double inner_d1(const FieldPlanes& a, const BasisMember& psi, const Quad2D& quad);     // (d1 a, psi)
double trilinear_scalar(const FieldPlanes& a, const BasisMember& psi, const FieldPlanes& b, const Quad2D& quad);

double strain_norm2(const FieldPlanes& a);    // |D(a)|_2^2
double gradient_norm2(const FieldPlanes& a);  // |grad a|_2^2

// Surface integral over |x| = 1 of (trace(v) . n)(trace(v) . trace(psi)),
// the discrete side of the vanishing surface-coupling identity.
double surface_coupling_integral(const RigidMotion& v, const RigidMotion& psi, int n_quad = 64);

// Traction functional on the sphere: force and torque exerted by the fluid,
// recovered weakly by testing against the closed-form rigid liftings.
struct ForceTorque {
  Eigen::Vector3d force = Eigen::Vector3d::Zero();
  Eigen::Vector3d torque = Eigen::Vector3d::Zero();
  double residual_norm = 0.0;
  bool warned = false;
};
ForceTorque recover_force_torque(const DiscreteField& v, double lambda, const Quad2D& quad,
                                 double residual_norm = 0.0, double warn_tol = 1e-8);

// Discrete dual norm |f|_{-1} = sqrt(f^T S^{-1} f).
double dual_norm(const Eigen::LLT<Eigen::MatrixXd>& S_llt, const Eigen::VectorXd& f);

// Underresolution detector: rebuilds a few random rows of S, D1 (and K when
// a field is supplied) with a doubled-order rule and reports the largest
// relative disagreement.
double quadrature_disagreement(const ModalBasis& basis, const Quad2D& quad, const DiscreteField* v, unsigned seed,
                               int rows = 2);

// Debug exports: CSV and a raw binary dump, both carrying the basis fingerprint.
void write_form_csv(const std::string& path, const FormMatrix& fm);
void write_form_binary(const std::string& path, const FormMatrix& fm);
FormMatrix read_form_binary(const std::string& path);

}  // namespace spherefall
