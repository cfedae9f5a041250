#pragma once
#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "spherefall/angular.hpp"
#include "spherefall/radial.hpp"
#include "spherefall/trig.hpp"

namespace spherefall {

enum class Family { toroidal, poloidal };

// Real azimuthal flavor. A: (u_r, u_theta) ~ cos(m phi), u_phi ~ sin(m phi);
// B is the quarter-period rotation of A. For m = 0, flavor A is the
// meridional (swirl-free) sector and flavor B the pure-swirl sector.
enum class Flavor { A, B };

struct ModalIndex {
  int m = 0;
  int l = 0;
  int n = 0;
  Family family = Family::toroidal;
};

// Rigid-motion trace: translation is along the fall axis e1 by the standing
// assumption; the angular velocity is a free 3-vector.
struct RigidMotion {
  double xi = 0.0;
  Eigen::Vector3d omega = Eigen::Vector3d::Zero();
};

// One separable meridional factor f(q) * g(mu).
struct SepTerm {
  RadialPoly rad;
  PolyS ang;
};

struct Profile {
  std::vector<SepTerm> terms;
  bool empty() const { return terms.empty(); }
  double eval(double q, double mu) const {
    double v = 0.0;
    for (const auto& t : terms) v += t.rad.eval_q(q) * t.ang.eval(mu);
    return v;
  }
};

// A single solenoidal basis field. Velocity components and the full
// velocity-gradient tensor are stored as exact separable meridional
// profiles; the azimuthal dependence is cos(m phi) / sin(m phi) through the
// slot rule below.
struct BasisMember {
  ModalIndex idx;
  Flavor flavor = Flavor::A;
  bool lifting = false;
  double xi_trace = 0.0;                                    // e1-translation trace
  Eigen::Vector3d trans_trace = Eigen::Vector3d::Zero();    // full translation (test fields)
  Eigen::Vector3d omega_trace = Eigen::Vector3d::Zero();

  Profile comp[3];      // u_r, u_theta, u_phi
  Profile grad[3][3];   // G_ij = frame components of grad(u)
  Profile strain[3][3]; // D = sym(G)
  Profile d1comp[3];    // components of (e1 . grad) u

  // Azimuthal factor of component/tensor slots. Slot 1 carries cos(m phi)
  // in flavor A and sin(m phi) in flavor B; slot 2 the other one.
  TrigKind comp_kind(int i) const { return slot_kind(i == 2 ? 2 : 1); }
  TrigKind tensor_kind(int i, int j) const { return slot_kind(((i == 2) + (j == 2)) % 2 ? 2 : 1); }
  TrigKind slot_kind(int slot) const {
    const bool cos_first = (flavor == Flavor::A);
    return (slot == 1) == cos_first ? TrigKind::cos : TrigKind::sin;
  }

  void scale(double factor);

  // Pointwise Cartesian velocity (and, optionally, velocity gradient).
  Eigen::Vector3d evaluate(const Eigen::Vector3d& x, Eigen::Matrix3d* grad_out = nullptr) const;
  double divergence_at(double q, double mu) const;
};

BasisMember make_toroidal(int m, Flavor flavor, const AngularFn& ang, const RadialPoly& t_pot);
BasisMember make_poloidal(int m, Flavor flavor, const AngularFn& ang, const RadialPoly& s_pot);

// Closed-form rigid liftings (exact exterior Stokes solutions):
BasisMember make_translation_lifting(int axis);  // axis in {0,1,2} for e1,e2,e3
BasisMember make_rotation_lifting(int axis);     // rotlet about e_{axis+1}

struct BasisParams {
  int m = 0;
  int L = 8;   // max meridional degree
  int N = 8;   // radial resolution per (l, family)
  bool flavor_A = true;
  bool flavor_B = true;
  bool liftings = true;
};

class ModalBasis {
public:
  static std::shared_ptr<const ModalBasis> build(const BasisParams& params, const Quad2D& quad);

  int size() const { return static_cast<int>(members_.size()); }
  const BasisMember& member(int k) const { return members_[static_cast<size_t>(k)]; }
  const std::vector<BasisMember>& members() const { return members_; }
  const BasisParams& params() const { return params_; }
  int m() const { return params_.m; }
  std::uint64_t fingerprint() const { return fingerprint_; }

  int xi_index() const { return xi_index_; }  // -1 when absent
  const std::vector<int>& lifting_indices() const { return lifting_indices_; }
  // Coefficient-embedding of a coarser nested basis into this one (zero pad);
  // throws when the bases do not nest.
  Eigen::VectorXd embed(const ModalBasis& coarse, const Eigen::VectorXd& coeffs) const;

private:
  BasisParams params_;
  std::vector<BasisMember> members_;
  std::vector<int> lifting_indices_;
  int xi_index_ = -1;
  std::uint64_t fingerprint_ = 0;
};

using BasisPtr = std::shared_ptr<const ModalBasis>;

// Expansion of a velocity field over a modal basis. The rigid trace is read
// off the lifting coefficients.
struct DiscreteField {
  BasisPtr basis;
  Eigen::VectorXd coeffs;

  DiscreteField() = default;
  DiscreteField(BasisPtr b, Eigen::VectorXd c) : basis(std::move(b)), coeffs(std::move(c)) {
    if (coeffs.size() != basis->size()) throw std::invalid_argument("DiscreteField: coefficient count mismatch");
  }
  static DiscreteField zero(BasisPtr b) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(b->size());
    return DiscreteField(std::move(b), std::move(c));
  }

  RigidMotion rigid() const;
  Eigen::Vector3d evaluate(const Eigen::Vector3d& x, Eigen::Matrix3d* grad_out = nullptr) const;
  double divergence_at(const Eigen::Vector3d& x) const;
};

// Pointwise evaluation with the domain guard (|x| >= 1).
std::vector<Eigen::Vector3d> evaluate_field(const DiscreteField& f, const std::vector<Eigen::Vector3d>& points);

// Compactly supported divergence-free extension of a rigid motion, built
// from a double-curl potential with a polynomial cutoff.
struct CutoffSpec {
  double r_a = 2.0;
  double r_b = 4.0;
};

class ExtensionField {
public:
  ExtensionField(const RigidMotion& rigid, const CutoffSpec& cutoff);
  Eigen::Vector3d evaluate(const Eigen::Vector3d& x) const;
  const RigidMotion& rigid() const { return rigid_; }
  const CutoffSpec& cutoff() const { return cutoff_; }

private:
  RigidMotion rigid_;
  CutoffSpec cutoff_;
};

ExtensionField rigid_extension(const RigidMotion& rigid, const CutoffSpec& cutoff);

std::vector<Eigen::Vector3d> evaluate_field(const ExtensionField& f, const std::vector<Eigen::Vector3d>& points);

}  // namespace spherefall
