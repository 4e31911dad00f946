#pragma once

#include <cstdint>

#include "sprayoid/constants.hpp"

namespace sprayoid {

/// Numerical knobs shared by the flow, groupoid and form modules.
struct Numerics {
  double rk_step = 1e-3;
  /// Simpson nodes on [0, 1]; must be odd and >= 3.
  int quad_nodes = 33;
  double fd_step = 1e-5;
  /// RK4 steps per Simpson panel inside the Maurer-Cartan solve.
  int mc_substeps = 2;
  double match_tol = 1e-7;
  double cond_max = 1e6;
  double axiom_tol = 1e-7;
  int samples = 64;
  std::uint64_t seed = 20240917;
  int transport_sign = kTransportSign;

  /// Throws InvalidParams on nonsensical settings.
  void check() const;
};

}  // namespace sprayoid
