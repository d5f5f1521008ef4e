#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bfd/solver.hpp"

namespace bfd {

struct SweepSpec {
  /// Explicit eps values; when empty, fractions of eps_sat_dagger of the initial moments.
  std::vector<double> eps;
  std::vector<double> dagger_fractions{0.125, 0.25, 0.5, 1.0};
  /// Target for check_nonsaturation; 0 selects 1 - max_eps * max sup ||f||_inf per run set.
  double kappa0 = 0.0;
  friend bool operator==(const SweepSpec&, const SweepSpec&) = default;
};

struct RunConfig {
  SimConfig sim;
  std::string output_dir = "bfd_out";
  std::uint64_t seed = 0;
  /// Worker threads; 0 defers to BFD_THREADS or the hardware.
  int threads = 0;
  SweepSpec sweep;
  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Parses and validates a JSON run configuration, applying defaults (n = 16, l = 6 sqrt(E_init),
/// theta = 0.5, n_theta = n_phi = 8, diag_stride = 10). Throws Error(Schema) naming the field
/// path for malformed or unknown keys, and Error(Saturation) when eps >= eps_sat for the
/// initial moments.
RunConfig parse_config(const std::string& text);

/// JSON with every field explicit; parse_config(serialize(c)) == c.
std::string serialize(const RunConfig& cfg);

}  // namespace bfd
