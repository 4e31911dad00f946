#pragma once

namespace sprayoid {

/// Sign of the fiber transport ODE  dc/du = sign * C(u) c  along a geodesic,
/// where C^m_l = sum_k c^m_kl(x_u) xi^k_u. Guarded by the calibration tests.
inline constexpr int kTransportSign = -1;

}  // namespace sprayoid
