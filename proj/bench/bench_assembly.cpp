// Assembly benchmark: serial reference path against the OpenMP row-parallel
// path, on the matrices that dominate a continuation/eigen-scan run.
#include <chrono>
#include <cstdio>
#include <random>

#include "spherefall/forms.hpp"

using namespace spherefall;

namespace {
double seconds(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

template <typename F>
double time_best_of(int reps, F&& f) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    auto t0 = std::chrono::steady_clock::now();
    f();
    best = std::min(best, seconds(t0));
  }
  return best;
}
}  // namespace

int main(int argc, char** argv) {
  const int L = argc > 1 ? std::atoi(argv[1]) : 10;
  const int N = argc > 2 ? std::atoi(argv[2]) : 14;
  Quad2D quad = build_quadrature((3 * N) / 2 + 14, (3 * L) / 2 + 14);
  BasisParams p;
  p.m = 1;
  p.L = L;
  p.N = N;
  auto basis = ModalBasis::build(p, quad);
  BasisParams p0 = p;
  p0.m = 0;
  p0.flavor_B = false;
  auto basis0 = ModalBasis::build(p0, quad);
  std::mt19937_64 rng(7);
  std::normal_distribution<double> N01(0.0, 1.0);
  Eigen::VectorXd c(basis0->size());
  for (int i = 0; i < c.size(); ++i) c(i) = N01(rng);
  DiscreteField v(basis0, c);
  FieldPlanes planes(v, quad);

  std::printf("assembly benchmark: m=1 basis dim %d, quadrature %dx%d\n", basis->size(), quad.radial.size(),
              quad.angular.size());

  FormMatrix ref_S, par_S, ref_K, par_K;
  const double ts_serial = time_best_of(3, [&] { ref_S = assemble_S(*basis, quad, AssemblyPolicy::serial); });
  const double ts_openmp = time_best_of(3, [&] { par_S = assemble_S(*basis, quad, AssemblyPolicy::openmp); });
  const double tk_serial =
      time_best_of(3, [&] { ref_K = assemble_trilinear(*basis, planes, quad, AssemblyPolicy::serial); });
  const double tk_openmp =
      time_best_of(3, [&] { par_K = assemble_trilinear(*basis, planes, quad, AssemblyPolicy::openmp); });

  const double dS = (ref_S.matrix - par_S.matrix).cwiseAbs().maxCoeff();
  const double dK = (ref_K.matrix - par_K.matrix).cwiseAbs().maxCoeff();
  std::printf("  strain Gram   : serial %8.3f ms   openmp %8.3f ms   speedup %5.2fx   max|diff| %g\n",
              1e3 * ts_serial, 1e3 * ts_openmp, ts_serial / ts_openmp, dS);
  std::printf("  convective K  : serial %8.3f ms   openmp %8.3f ms   speedup %5.2fx   max|diff| %g\n",
              1e3 * tk_serial, 1e3 * tk_openmp, tk_serial / tk_openmp, dK);
  if (dS != 0.0 || dK != 0.0) {
    std::printf("  ERROR: parallel path is not bit-identical to the serial reference\n");
    return 1;
  }
  return 0;
}
