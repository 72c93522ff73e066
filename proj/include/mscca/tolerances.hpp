#pragma once

namespace mscca {

// Every numeric tolerance used by the library lives here.
struct Tolerances {
  static constexpr double symmetry = 1e-10;
  static constexpr double orthonormality = 1e-10;
  static constexpr double eigen_tie_relative_gap = 1e-10;
  static constexpr double centering = 1e-12;
  static constexpr double normalization = 1e-8;
  static constexpr double identity = 1e-8;
  static constexpr double monotonicity_slack = 1e-12;
  static constexpr double archive_roundtrip = 1e-10;  // phi re-evaluated from a stored archive
};

}  // namespace mscca
