#pragma once
#include <iosfwd>

#include "spherefall/config.hpp"

namespace spherefall {

// Identity-verification suite: assembles the discrete operators at the
// configured resolution and checks every algebraic identity the formulation
// guarantees, printing one pass/fail row per identity with the measured
// residual. Returns the number of failed rows (0 on success). A quadrature
// underresolution flag aborts before any identity is judged.
int run_verify(const RunConfig& cfg, std::ostream& out);

}  // namespace spherefall
