#pragma once
#include <vector>

namespace spherefall {

struct GaussRule {
  std::vector<double> nodes;    // ascending, interior to (-1, 1)
  std::vector<double> weights;  // positive, sum to 2
};

// Gauss-Legendre rule on [-1, 1], exact for polynomials of degree 2n-1.
GaussRule gauss_legendre(int n);

}  // namespace spherefall
