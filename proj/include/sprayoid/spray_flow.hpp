#pragma once

#include <span>
#include <vector>

#include "sprayoid/algebroid.hpp"

namespace sprayoid {

/// Geodesic spray  dx^i = rho^i_k xi^k,  dxi^m = -Gamma^m_kl xi^k xi^l,  on
/// the stacked state (x, xi). Reuses coefficient buffers between calls, so
/// one engine must not be shared between threads.
class SprayEngine {
 public:
  explicit SprayEngine(const AlgebroidModel& model);

  const AlgebroidModel& model() const noexcept { return model_; }
  int n() const noexcept { return n_; }
  int r() const noexcept { return r_; }
  int dim() const noexcept { return n_ + r_; }

  /// Evaluate coefficients at x; `jacobian` also loads their gradients.
  void load(const double* x, bool jacobian);
  /// Spray at (x, xi) for the x given to the last load().
  void field(const double* xi, double* out) const;
  /// Jacobian of the spray (dim x dim) after load(x, true).
  void jacobian(const double* xi, Mat& jac) const;
  /// C^m_l = sum_k c^m_kl(x) xi^k, the fiber transport generator.
  void transport_generator(const double* xi, Mat& out) const;

  const CoefficientEvaluator& coefficients() const noexcept { return coeffs_; }

  /// LeftDomain unless the stacked state lies in the validity domain.
  void require_domain(const double* state, const char* where) const;

 private:
  const AlgebroidModel& model_;
  int n_, r_;
  CoefficientEvaluator coeffs_;
};

Vec stack(const ArrowPoint& a);
ArrowPoint unstack(const Vec& y, int n, int r);
Vec stack(const TangentOfA& v);
TangentOfA unstack_tangent(const Vec& y, int n, int r);

TangentOfA spray_field(const AlgebroidModel& model, const ArrowPoint& a);

/// Time-t flow by classical RK4 with ceil(|t| / step) equal steps.
ArrowPoint flow(const AlgebroidModel& model, const ArrowPoint& a, double t, double step = 1e-3);

struct FlowState {
  ArrowPoint point;
  std::vector<TangentOfA> tangents;
  std::vector<double> accumulators;
};

/// phi^t(a) together with D phi^t|_a applied to each seed.
FlowState variational_flow(const AlgebroidModel& model, const ArrowPoint& a, const std::vector<TangentOfA>& seeds,
                           double t, double step = 1e-3);

/// Dense output of one integration with cubic Hermite interpolation.
class Trajectory {
 public:
  Trajectory(int n, int r) : n_(n), r_(r) {}
  void append(double t, Vec y, Vec f);
  double t_begin() const { return times_.front(); }
  double t_end() const { return times_.back(); }
  Vec state(double t) const;
  ArrowPoint at(double t) const { return unstack(state(t), n_, r_); }
  std::size_t size() const noexcept { return times_.size(); }

 private:
  int n_, r_;
  std::vector<double> times_;
  std::vector<Vec> states_;
  std::vector<Vec> slopes_;
};

/// Trajectory on [min(t0, t1), max(t0, t1)] passing through a at time 0.
/// Requires t0 <= 0 <= t1.
Trajectory flow_trajectory(const AlgebroidModel& model, const ArrowPoint& a, double t0, double t1,
                           double step = 1e-3);

/// |phi^t(s a) - s phi^{st}(a)|, scalar multiplication acting on xi only.
double homogeneity_residual(const AlgebroidModel& model, const ArrowPoint& a, double s, double t,
                            double step = 1e-3);

/// max over the grid of |rho(phi^t(a)) - d/dt p(phi^t(a))|, the base
/// velocity taken by a five-point difference on the dense output.
double apath_residual(const AlgebroidModel& model, const ArrowPoint& a, const std::vector<double>& t_grid,
                      double step = 1e-3);

}  // namespace sprayoid
