#pragma once
#include <optional>
#include <string>

#include "spherefall/baseflow.hpp"
#include "spherefall/bifurcation.hpp"
#include "spherefall/config.hpp"

namespace spherefall {

// File-backed result store under one output directory. Records carry the
// config fingerprint; loads verify it and reject mismatches with a diff of
// the stored canonical configuration. Writes go through a temp file and an
// atomic rename, so readers never observe partial records.
class ResultStore {
public:
  ResultStore(std::string dir, const RunConfig& cfg);

  const std::string& dir() const { return dir_; }
  std::string branch_path() const;
  std::string scan_path(int m) const;
  std::string report_path(int m) const;

  void save_branch(const Branch& br);
  // Requires the context whose basis produced the record (fingerprint checked).
  std::optional<Branch> load_branch(const BaseflowContext& ctx) const;

  void save_scan_csv(int m, const MuScan& scan);
  void save_base_csv(const Branch& br);

  void save_report(int m, const std::string& text);

private:
  std::string dir_;
  const RunConfig* cfg_;
  std::uint64_t cfg_fp_;
  void write_atomic(const std::string& path, const std::string& content) const;
};

std::string format_report(const RunConfig& cfg, int mode, const CriticalResult& crit,
                          const SimplicityReport* simplicity, const TransversalityResult* trans,
                          const SymmetryBreakingReport* sb);

}  // namespace spherefall
