#include "spherefall/spectrum.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <random>

namespace spherefall {

SpectrumContext::SpectrumContext(int m, int L, int N, const Quad2D& quad, Flavor flavor, AssemblyPolicy policy)
    : quad_(quad), policy_(policy) {
  BasisParams p;
  p.m = m;
  p.L = L;
  p.N = N;
  p.flavor_A = (flavor == Flavor::A);
  p.flavor_B = (flavor == Flavor::B);
  basis_ = ModalBasis::build(p, quad_);
  S_ = assemble_S(*basis_, quad_, policy_);
  D1_ = assemble_D1(*basis_, quad_, policy_);
  S_llt_.compute(S_.matrix);
  if (S_llt_.info() != Eigen::Success) throw std::runtime_error("SpectrumContext: S factorization failed");
}

OperatorBundle assemble_bundle(const SpectrumContext& ctx, const BaseFlow& base) {
  if (base.v.basis->fingerprint() == 0 || base.residual > 1e-8)
    throw std::invalid_argument("assemble_bundle: base flow not converged");
  FieldPlanes v0(base.v, ctx.quad());
  OperatorBundle b;
  b.m = ctx.m();
  b.lambda = base.lambda;
  b.xi0 = base.xi0;
  b.basis = ctx.basis_ptr();
  b.S = ctx.S();
  b.D1 = ctx.D1();
  b.K = assemble_trilinear(ctx.basis(), v0, ctx.quad(), ctx.policy()).matrix;
  b.basis_fingerprint = ctx.basis().fingerprint();
  b.base_fingerprint = base.fingerprint;
  return b;
}

namespace {

struct RitzSide {
  std::vector<std::complex<double>> mu;
  std::vector<Eigen::VectorXcd> vec;
  std::vector<double> residual;
  bool invariant_breakdown = false;  // Krylov space closed early: spectrum exhausted
};

// Shift-invert Arnoldi on OP = (A - shift S)^{-1} S, complex arithmetic.
RitzSide arnoldi_side(const Eigen::MatrixXd& A, const Eigen::MatrixXd& S, std::complex<double> shift, int count,
                      int krylov, double tol, unsigned seed) {
  const int n = static_cast<int>(A.rows());
  const int k = std::min(krylov, n);
  Eigen::MatrixXcd M = A.cast<std::complex<double>>() - shift * S.cast<std::complex<double>>();
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(M);
  if (lu.rcond() < 1e-14) {
    // shift sits on an eigenvalue; nudge it off
    shift += std::complex<double>(1e-7 * std::max(1.0, std::abs(shift)), 0.0);
    M = A.cast<std::complex<double>>() - shift * S.cast<std::complex<double>>();
    lu.compute(M);
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N01(0.0, 1.0);
  Eigen::VectorXcd v0(n);
  for (int i = 0; i < n; ++i) v0(i) = std::complex<double>(N01(rng), 0.0);
  v0.normalize();

  Eigen::MatrixXcd V(n, k + 1);
  Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(k + 1, k);
  V.col(0) = v0;
  int steps = k;
  bool breakdown = false;
  for (int j = 0; j < k; ++j) {
    Eigen::VectorXcd w = lu.solve(S.cast<std::complex<double>>() * V.col(j));
    for (int pass = 0; pass < 2; ++pass)
      for (int i = 0; i <= j; ++i) {
        std::complex<double> h = V.col(i).dot(w);  // conjugated inner product
        w -= h * V.col(i);
        if (pass == 0) H(i, j) += h;
      }
    const double nw = w.norm();
    H(j + 1, j) = nw;
    if (nw < 1e-13) {
      steps = j + 1;
      breakdown = true;
      break;
    }
    V.col(j + 1) = w / nw;
  }

  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(H.topLeftCorner(steps, steps));
  struct Cand {
    std::complex<double> mu;
    Eigen::VectorXcd x;
    double res;
  };
  std::vector<Cand> cands;
  for (int i = 0; i < steps; ++i) {
    const std::complex<double> theta = es.eigenvalues()(i);
    if (std::abs(theta) < 1e-14) continue;
    const std::complex<double> mu = shift + 1.0 / theta;
    Eigen::VectorXcd x = V.leftCols(steps) * es.eigenvectors().col(i);
    if (!x.allFinite() || x.norm() < 1e-300) continue;
    x.normalize();
    const Eigen::VectorXcd Sx = S.cast<std::complex<double>>() * x;
    const double res = (A.cast<std::complex<double>>() * x - mu * Sx).norm() / std::max(Sx.norm(), 1e-300);
    cands.push_back({mu, std::move(x), res});
  }
  std::sort(cands.begin(), cands.end(),
            [&](const Cand& a, const Cand& b) { return std::abs(a.mu - shift) < std::abs(b.mu - shift); });
  RitzSide side;
  side.invariant_breakdown = breakdown;
  for (const auto& c : cands) {
    if (static_cast<int>(side.mu.size()) >= count) break;
    if (c.res > tol) continue;
    side.mu.push_back(c.mu);
    side.vec.push_back(c.x);
    side.residual.push_back(c.res);
  }
  return side;
}

RitzSide dense_side(const Eigen::MatrixXd& A, const Eigen::MatrixXd& S, std::complex<double> shift, int count) {
  Eigen::GeneralizedEigenSolver<Eigen::MatrixXd> ges(A, S, true);
  struct Cand {
    std::complex<double> mu;
    Eigen::VectorXcd x;
  };
  std::vector<Cand> cands;
  for (int i = 0; i < ges.alphas().size(); ++i) {
    const std::complex<double> beta(ges.betas()(i), 0.0);
    if (std::abs(beta) < 1e-300) continue;
    const std::complex<double> mu = ges.alphas()(i) / beta;
    Eigen::VectorXcd x = ges.eigenvectors().col(i);
    if (!x.allFinite() || x.norm() < 1e-300 || !std::isfinite(mu.real()) || !std::isfinite(mu.imag())) continue;
    cands.push_back({mu, std::move(x)});
  }
  std::sort(cands.begin(), cands.end(),
            [&](const Cand& a, const Cand& b) { return std::abs(a.mu - shift) < std::abs(b.mu - shift); });
  RitzSide side;
  for (auto& c : cands) {
    if (static_cast<int>(side.mu.size()) >= count) break;
    Eigen::VectorXcd x = c.x;
    x.normalize();
    const Eigen::VectorXcd Sx = S.cast<std::complex<double>>() * x;
    const double res = (A.cast<std::complex<double>>() * x - c.mu * Sx).norm() / std::max(Sx.norm(), 1e-300);
    side.mu.push_back(c.mu);
    side.vec.push_back(std::move(x));
    side.residual.push_back(res);
  }
  return side;
}

// Rotate the phase so the largest entry is real-positive; drop a negligible
// imaginary part entirely (real pencil, real eigenvalue).
void canonicalize(Eigen::VectorXcd& v, std::complex<double> mu) {
  int imax = 0;
  double best = 0.0;
  for (int i = 0; i < v.size(); ++i)
    if (std::abs(v(i)) > best) {
      best = std::abs(v(i));
      imax = i;
    }
  if (best > 0) v *= std::conj(v(imax)) / best;
  if (std::abs(mu.imag()) < 1e-10 && v.imag().norm() < 1e-8 * v.norm())
    v = v.real().cast<std::complex<double>>();
}

}  // namespace

std::vector<std::complex<double>> dense_eigenvalues(const Eigen::MatrixXd& A, const Eigen::MatrixXd& S) {
  Eigen::GeneralizedEigenSolver<Eigen::MatrixXd> ges(A, S, false);
  std::vector<std::complex<double>> out;
  for (int i = 0; i < ges.alphas().size(); ++i) {
    if (std::abs(ges.betas()(i)) < 1e-300) continue;
    out.push_back(ges.alphas()(i) / std::complex<double>(ges.betas()(i), 0.0));
  }
  return out;
}

std::vector<EigenPair> leading_eigs(const Eigen::MatrixXd& A, const Eigen::MatrixXd& S, std::complex<double> shift,
                                    int count, const EigOptions& opts) {
  if (count < 1) throw std::invalid_argument("leading_eigs: count must be >= 1");
  const int n = static_cast<int>(A.rows());

  RitzSide right, left;
  bool dense = false;
  int krylov = std::min(opts.krylov, n);
  for (int attempt = 0; attempt <= opts.max_restarts; ++attempt) {
    right = arnoldi_side(A, S, shift, count, krylov, opts.tol, 0x5EEDu + static_cast<unsigned>(n));
    if (static_cast<int>(right.mu.size()) >= count || krylov >= n) break;
    if (right.invariant_breakdown && !right.mu.empty()) break;  // spectrum exhausted from this start vector
    krylov = std::min(2 * krylov, n);
  }
  const bool exhausted = right.invariant_breakdown && !right.mu.empty();
  if (static_cast<int>(right.mu.size()) < count && !exhausted) {
    right = dense_side(A, S, shift, count);
    dense = true;
  }
  if (opts.with_left) {
    const Eigen::MatrixXd At = A.transpose();
    if (!dense) {
      left = arnoldi_side(At, S, shift, 2 * count + 4, krylov, opts.tol, 0xF00Du + static_cast<unsigned>(n));
      if (left.mu.size() < right.mu.size()) {
        left = dense_side(At, S, shift, 2 * count + 4);
      }
    } else {
      left = dense_side(At, S, shift, 2 * count + 4);
    }
  }

  std::vector<EigenPair> out;
  const Eigen::MatrixXcd Sc = S.cast<std::complex<double>>();
  for (size_t i = 0; i < right.mu.size(); ++i) {
    EigenPair p;
    p.mu = right.mu[i];
    p.w = right.vec[i];
    p.residual = right.residual[i];
    canonicalize(p.w, p.mu);
    // gap to the nearest other computed eigenvalue
    p.gap = std::numeric_limits<double>::infinity();
    for (size_t j = 0; j < right.mu.size(); ++j)
      if (j != i) p.gap = std::min(p.gap, std::abs(right.mu[j] - p.mu));
    if (opts.with_left && !left.mu.empty()) {
      size_t jbest = 0;
      double dbest = std::numeric_limits<double>::infinity();
      for (size_t j = 0; j < left.mu.size(); ++j) {
        const double d = std::abs(left.mu[j] - p.mu);
        if (d < dbest) {
          dbest = d;
          jbest = j;
        }
      }
      Eigen::VectorXcd y = left.vec[jbest];
      canonicalize(y, left.mu[jbest]);
      p.adj_residual = left.residual[jbest];
      const Eigen::VectorXcd Sw = Sc * p.w;
      const std::complex<double> pairing = y.transpose() * Sw;  // bilinear
      const double ny = std::sqrt(std::abs((y.conjugate().transpose() * (Sc * y))(0)));
      const double nw = std::sqrt(std::abs((p.w.conjugate().transpose() * Sw)(0)));
      p.biorth = std::abs(pairing) / std::max(ny * nw, 1e-300);
      if (p.biorth < 1e-10) {
        p.defective_flag = true;
        p.w_star = y;
      } else {
        p.w_star = y / pairing;
      }
    }
    if (p.gap < 1e-6) p.defective_flag = true;
    out.push_back(std::move(p));
  }
  return out;
}

Eigen::VectorXd solve_resolvent(const OperatorBundle& b, const Eigen::VectorXd& f, double rho) {
  if (!f.allFinite()) throw std::invalid_argument("solve_resolvent: non-finite right-hand side");
  Eigen::MatrixXd M = b.S - rho * b.xi0 * b.D1;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(M);
  if (lu.rcond() < 1e-14)
    throw std::runtime_error("solve_resolvent: singular system; S/D1 assembly is damaged");
  return lu.solve(f);
}

}  // namespace spherefall
