#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "spherefall/radial.hpp"

namespace spherefall {

// Run configuration, read from a flat key = value text file. Environment
// variables are deliberately ignored: a config file and a seed fully
// determine every output byte.
struct RunConfig {
  int L = 8;
  int N = 10;
  std::vector<int> modes = {0, 1};
  double lambda_min = 0.0;
  double lambda_max = 0.01;
  int lambda_points = 6;
  std::string radial_map = "algebraic";  // or "truncated"
  double radial_scale = 1.0;
  double radial_rinf = 1e4;
  int quad_margin = 8;
  double cutoff_ra = 2.0;
  double cutoff_rb = 4.0;
  double tol_newton = 1e-11;
  double tol_eigen = 1e-9;
  double tol_root = 1e-8;
  unsigned long seed = 12345;
  std::string out_dir = "out";
  double manufactured_lambda_star = 2.25;

  static RunConfig parse_file(const std::string& path);
  static RunConfig parse_text(const std::string& text);
  void validate() const;

  RadialMapKind map_kind() const;
  // Quadrature sizes: 3/2 of the basis degree covers the worst (trilinear)
  // integrand; the margin is the safety beyond that. The default margin
  // keeps every assembled integral exact; small margins are caught by the
  // underresolution detector.
  int quad_nr() const { return (3 * N) / 2 + quad_margin + 6; }
  int quad_nmu() const { return (3 * L) / 2 + quad_margin + 6; }
  std::vector<double> lambda_grid() const;

  // Sorted canonical key = value rendering; the fingerprint hashes it.
  std::string canonical_text() const;
  std::uint64_t fingerprint() const;

  // Discretization-only view: excludes the lambda grid and the manufactured
  // family parameter, so branch records survive range extensions.
  std::string discretization_text() const;
  std::uint64_t discretization_fingerprint() const;
};

}  // namespace spherefall
