#pragma once

// The local groupoid living near the zero section of A: target p, source
// p o phi^1, inverse a -> -phi^1(a), multiplication through the pulled-back
// Maurer-Cartan form.

#include <cstdint>
#include <memory>

#include "sprayoid/algebroid.hpp"
#include "sprayoid/numerics.hpp"
#include "sprayoid/spray_flow.hpp"

namespace sprayoid {

struct MCMatrix {
  Mat entries;
  ArrowPoint at;
  double cond = 1.0;
};

Vec source(const AlgebroidModel& model, const ArrowPoint& a, const Numerics& num = {});
Vec target(const AlgebroidModel& model, const ArrowPoint& a);
ArrowPoint unit(const AlgebroidModel& model, const Vec& x);
ArrowPoint inverse(const AlgebroidModel& model, const ArrowPoint& a, const Numerics& num = {});

/// Reusable solver for the Maurer-Cartan matrix
///   theta_a = P(1) * int_0^1 P(t)^{-1} V_xi(t) dt,
/// where V solves the variational equation along the geodesic of a with
/// V(0) = vertical lifts of the frame, and P' = sign * C(t) P, P(0) = I, is
/// the fundamental matrix of the fiber transport. Simpson quadrature on
/// quad_nodes nodes, mc_substeps RK4 steps per panel.
class MaurerCartanSolver {
 public:
  MaurerCartanSolver(const AlgebroidModel& model, const Numerics& num);
  ~MaurerCartanSolver();
  MaurerCartanSolver(const MaurerCartanSolver&) = delete;
  MaurerCartanSolver& operator=(const MaurerCartanSolver&) = delete;

  /// Matrix at (x, xi); throws LeftDomain or SingularMC.
  const Mat& compute(const double* x, const double* xi);
  double last_condition() const noexcept;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

MCMatrix mc_matrix(const AlgebroidModel& model, const ArrowPoint& a, const Numerics& num = {});

/// Fiber transport c(t0) -> c(t1) along the geodesic u -> phi^u(geodesic_of),
///   dc^m/du = sign * sum_kl c^m_kl(x_u) xi^k_u c^l.
Vec adjoint_transport(const AlgebroidModel& model, const ArrowPoint& geodesic_of, double t0, double t1,
                      const Vec& c, const Numerics& num = {});

/// Product of composable arrows (source(v1) = target(v2)). Integrates
///   d gamma/du = theta(x1, gamma)^{-1} xi(phi^u(v2)),  gamma(0) = xi1,
/// jointly with the geodesic of v2, and returns (x1, gamma(1)).
ArrowPoint multiply(const AlgebroidModel& model, const ArrowPoint& v1, const ArrowPoint& v2,
                    const Numerics& num = {});

/// Vertical vector at a whose Maurer-Cartan image is alpha.
TangentOfA left_invariant_value(const AlgebroidModel& model, const Vec& alpha_at_source, const ArrowPoint& a,
                                const Numerics& num = {});

/// Worst residuals of the local groupoid axioms over sampled arrows:
///   A1  t(gh) = t(g), s(gh) = s(h)
///   A2  (gh)k = g(hk)
///   A3  g 1 = g = 1 g
///   A4  s(inverse(g)) = t(g), t(inverse(g)) = s(g)
///   A5  inverse(g) g = 1_{s(g)}, g inverse(g) = 1_{t(g)}
/// Base points are uniform in the middle half of the chart box, fiber parts
/// uniform in the ball of radius fiber_scale. Samples whose products leave
/// the domain are counted in `skipped` and do not enter the maxima.
struct LocalAxiomReport {
  double a1_target = 0.0;
  double a1_source = 0.0;
  double a2 = 0.0;
  double a3 = 0.0;
  double a4 = 0.0;
  double a5 = 0.0;
  int pairs = 0;
  int triples = 0;
  int skipped = 0;
};

LocalAxiomReport local_axiom_residuals(const AlgebroidModel& model, int pair_samples, int triple_samples,
                                       double fiber_scale, std::uint64_t seed, const Numerics& num = {});

/// 2-norm condition number (infinity for singular matrices).
double condition_number(const Mat& m);

}  // namespace sprayoid
