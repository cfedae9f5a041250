#include "spherefall/cheb.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <cstdlib>

namespace spherefall {

Cheb Cheb::constant(double v) {
  if (v == 0.0) return Cheb();
  return Cheb(std::vector<double>{v});
}

Cheb Cheb::basis(int k, double scale) {
  std::vector<double> c(static_cast<size_t>(k) + 1, 0.0);
  c[static_cast<size_t>(k)] = scale;
  return Cheb(std::move(c));
}

double Cheb::eval(double x) const {
  // Clenshaw recurrence.
  double b1 = 0.0, b2 = 0.0;
  for (int k = size() - 1; k >= 1; --k) {
    double b0 = 2.0 * x * b1 - b2 + c_[static_cast<size_t>(k)];
    b2 = b1;
    b1 = b0;
  }
  double c0 = c_.empty() ? 0.0 : c_[0];
  return x * b1 - b2 + c0;
}

Cheb& Cheb::operator+=(const Cheb& o) {
  if (o.size() > size()) c_.resize(static_cast<size_t>(o.size()), 0.0);
  for (int k = 0; k < o.size(); ++k) c_[static_cast<size_t>(k)] += o.c_[static_cast<size_t>(k)];
  return *this;
}

Cheb& Cheb::operator-=(const Cheb& o) {
  if (o.size() > size()) c_.resize(static_cast<size_t>(o.size()), 0.0);
  for (int k = 0; k < o.size(); ++k) c_[static_cast<size_t>(k)] -= o.c_[static_cast<size_t>(k)];
  return *this;
}

Cheb& Cheb::operator*=(double s) {
  for (double& v : c_) v *= s;
  return *this;
}

Cheb Cheb::mul(const Cheb& a, const Cheb& b) {
  if (a.empty() || b.empty()) return Cheb();
  std::vector<double> c(static_cast<size_t>(a.size() + b.size() - 1), 0.0);
  // T_i T_j = (T_{i+j} + T_{|i-j|}) / 2
  for (int i = 0; i < a.size(); ++i) {
    const double ai = a.c_[static_cast<size_t>(i)];
    if (ai == 0.0) continue;
    for (int j = 0; j < b.size(); ++j) {
      const double h = 0.5 * ai * b.c_[static_cast<size_t>(j)];
      c[static_cast<size_t>(i + j)] += h;
      c[static_cast<size_t>(std::abs(i - j))] += h;
    }
  }
  return Cheb(std::move(c));
}

Cheb Cheb::mul_x() const {
  if (empty()) return Cheb();
  std::vector<double> c(static_cast<size_t>(size() + 1), 0.0);
  for (int k = 0; k < size(); ++k) {
    const double h = 0.5 * c_[static_cast<size_t>(k)];
    c[static_cast<size_t>(k + 1)] += h;
    c[static_cast<size_t>(std::abs(k - 1))] += h;
  }
  return Cheb(std::move(c));
}

Cheb Cheb::derivative() const {
  const int n = degree();
  if (n <= 0) return Cheb();
  std::vector<double> b(static_cast<size_t>(n), 0.0);
  for (int k = n - 1; k >= 0; --k) {
    b[static_cast<size_t>(k)] =
        (k + 2 <= n - 1 ? b[static_cast<size_t>(k + 2)] : 0.0) + 2.0 * (k + 1) * c_[static_cast<size_t>(k + 1)];
  }
  b[0] *= 0.5;
  return Cheb(std::move(b));
}

Cheb Cheb::divide_one_minus_x2(const Cheb& p, double* residual) {
  const int np = p.size();
  if (np == 0) {
    if (residual) *residual = 0.0;
    return Cheb();
  }
  const int nq = std::max(np - 2, 1);
  // Forward operator: (1-x^2) T_j = T_j/2 - T_{j+2}/4 - T_{|j-2|}/4, except
  // j = 0: T_0 - (T_0 + T_2)/2.
  Eigen::MatrixXd F = Eigen::MatrixXd::Zero(nq + 2, nq);
  for (int j = 0; j < nq; ++j) {
    if (j == 0) {
      F(0, 0) += 0.5;
      F(2, 0) -= 0.5;
    } else {
      F(j, j) += 0.5;
      F(j + 2, j) -= 0.25;
      F(std::abs(j - 2), j) -= 0.25;
    }
  }
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nq + 2);
  for (int k = 0; k < np && k < nq + 2; ++k) rhs(k) = p.coeff(k);
  Eigen::VectorXd q = F.colPivHouseholderQr().solve(rhs);
  if (residual) {
    double pn = rhs.norm();
    *residual = (F * q - rhs).norm() / (pn > 0 ? pn : 1.0);
  }
  std::vector<double> qc(q.data(), q.data() + q.size());
  return Cheb(std::move(qc));
}

double Cheb::max_abs_coeff() const {
  double m = 0.0;
  for (double v : c_) m = std::max(m, std::abs(v));
  return m;
}

void Cheb::trim(double tol) {
  while (!c_.empty() && std::abs(c_.back()) <= tol) c_.pop_back();
}

}  // namespace spherefall
