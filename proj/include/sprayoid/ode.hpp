#pragma once

#include <cmath>
#include <algorithm>

#include "sprayoid/linalg.hpp"

namespace sprayoid {

/// Classical fixed-step RK4 for autonomous systems y' = f(y). The right-hand
/// side is called as f(const Vec& y, Vec& dy).
class Rk4 {
 public:
  explicit Rk4(Eigen::Index dim) : k1_(dim), k2_(dim), k3_(dim), k4_(dim), tmp_(dim) {}

  template <typename F>
  void step(F&& f, Vec& y, double h) {
    f(y, k1_);
    tmp_.noalias() = y + (0.5 * h) * k1_;
    f(tmp_, k2_);
    tmp_.noalias() = y + (0.5 * h) * k2_;
    f(tmp_, k3_);
    tmp_.noalias() = y + h * k3_;
    f(tmp_, k4_);
    y += (h / 6.0) * (k1_ + 2.0 * k2_ + 2.0 * k3_ + k4_);
  }

  /// Derivative at the start of the last step.
  const Vec& first_stage() const noexcept { return k1_; }

 private:
  Vec k1_, k2_, k3_, k4_, tmp_;
};

/// Number of equal steps covering |t| with step size at most `step`.
inline int steps_for(double t, double step) {
  const double q = std::abs(t) / step;
  return std::max(1, static_cast<int>(std::ceil(q - 1e-9)));
}

/// Composite Simpson weights for `nodes` equally spaced points on [0, 1].
inline Vec simpson_weights(int nodes) {
  Vec w(nodes);
  const double h = 1.0 / (nodes - 1);
  for (int j = 0; j < nodes; ++j) w[j] = (j == 0 || j == nodes - 1) ? 1.0 : (j % 2 == 1 ? 4.0 : 2.0);
  return w * (h / 3.0);
}

}  // namespace sprayoid
