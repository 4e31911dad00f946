#pragma once

// IM k-forms (sigma, nu) on an algebroid, their linear k-form omega on A and
// the multiplicative form Omega obtained by integrating omega along the
// spray flow:
//   omega = -(d lambda + nu^* theta_k),   lambda = sum_r xi^r sigma(e_r),
//   Omega_a(v_1..v_k) = int_0^1 omega_{phi^t a}(D phi^t v_1, ..., D phi^t v_k) dt.

#include <utility>
#include <vector>

#include "sprayoid/algebroid.hpp"
#include "sprayoid/numerics.hpp"

namespace sprayoid {

/// Strictly increasing index tuples of length p drawn from {0..n-1}, in
/// lexicographic order. p = 0 gives one empty tuple.
std::vector<std::vector<int>> multi_indices(int n, int p);

/// det of the p x p matrix (vectors[b][index[a]]).
double minor_det(const std::vector<int>& index, const std::vector<const Vec*>& vectors);

struct IMForm {
  int k = 1;
  int n = 0;
  int r = 0;
  std::vector<std::vector<int>> sigma_index;   // length k - 1
  std::vector<std::vector<int>> nu_index;      // length k (empty set when k > n)
  std::vector<std::vector<Expression>> sigma;  // [r][I]
  std::vector<std::vector<Expression>> nu;     // [r][J]

  /// All coefficients zero.
  static IMForm zero(int k, int n, int r);
  bool nu_vanishes() const;
  /// Throws InvalidParams if the index sets or shapes disagree with the model.
  void check(const AlgebroidModel& model) const;
};

/// k = 2, sigma(e_r) = dx^r (requires r = n): the cotangent identity map.
IMForm identity_sigma_form(int n);

/// The same bundle map in the constant frame e'_m = sum_j B(j, m) e_j.
IMForm change_frame(const IMForm& f, const Mat& frame);

/// Base-vector valued p-form field on M near a point: coefficients over the
/// increasing multi-indices of length p together with their x-gradients.
struct FormJet {
  int p = 0;
  std::vector<double> value;  // [I]
  Mat grad;                   // rows I, columns x^j

  double eval(const std::vector<const Vec*>& vs) const;
  /// d of the field evaluated on p + 1 vectors.
  double d_eval(const std::vector<const Vec*>& vs) const;
  /// Lie derivative along X (with Jacobian dX) evaluated on p vectors.
  double lie_eval(const Vec& field, const Mat& field_jac, const std::vector<const Vec*>& vs) const;
};

struct IMResidualReport {
  double im0 = 0.0;
  double im1 = 0.0;
  double im2 = 0.0;
  int points = 0;
  int pairs = 0;
  double max() const { return std::max(im0, std::max(im1, im2)); }
};

/// Residuals of
///   IM0: i_{rho b} sigma(a) + i_{rho a} sigma(b) = 0
///   IM1: sigma([a,b]) - L_{rho a} sigma(b) + i_{rho b} d sigma(a) + i_{rho b} nu(a) = 0
///   IM2: nu([a,b]) - L_{rho a} nu(b) + i_{rho b} d nu(a) = 0
/// over all ordered section pairs, on every coordinate basis tuple.
IMResidualReport im_residuals(const AlgebroidModel& model, const IMForm& f, const std::vector<SectionSpec>& sections,
                              const std::vector<Vec>& xs);

double linear_form_eval(const AlgebroidModel& model, const IMForm& f, const ArrowPoint& a,
                        const std::vector<TangentOfA>& vs);

/// Omega_a(vs) by one joint ODE for the geodesic and the k variational
/// directions, Simpson quadrature on quad_nodes nodes; the RK4 step is
/// shrunk so every node is an integrator step.
double integrate_form(const AlgebroidModel& model, const IMForm& f, const ArrowPoint& a,
                      const std::vector<TangentOfA>& vs, const Numerics& num = {});

/// Matrix of Omega_a (k = 2 only) on the coordinate basis of T_a A.
Mat form_matrix(const AlgebroidModel& model, const IMForm& f, const ArrowPoint& a, const Numerics& num = {});

/// Tangent to the manifold of composable pairs: w2's base part is replaced
/// by ds(w1) before use.
struct TangentPair {
  TangentOfA first;
  TangentOfA second;
};

/// Differential of the source map, dx-part of D phi^1.
Vec source_differential(const AlgebroidModel& model, const ArrowPoint& a, const TangentOfA& w, const Numerics& num);

/// dm(w1, w2) by central differences of multiply along the curve
/// h -> (v1 + h w1, (source(v1 + h w1), xi2 + h dxi2)).
TangentOfA product_differential(const AlgebroidModel& model, const ArrowPoint& v1, const ArrowPoint& v2,
                                const TangentPair& w, const Numerics& num);

/// |Omega_{v1 v2}(dm(pairs)) - Omega_{v1}(firsts) - Omega_{v2}(seconds)|
double multiplicativity_residual(const AlgebroidModel& model, const IMForm& f, const ArrowPoint& v1,
                                 const ArrowPoint& v2, const std::vector<TangentPair>& pairs,
                                 const Numerics& num = {});

/// |d Omega_a(vs)| with the exterior derivative taken by central differences
/// of integrate_form; requires nu = 0 and k + 1 vectors.
double closedness_residual(const AlgebroidModel& model, const IMForm& f, const ArrowPoint& a,
                           const std::vector<TangentOfA>& vs, const Numerics& num = {});

/// max |sigma_Omega(e_r)(e_I) - sigma_{r,I}(x)| with
/// sigma_Omega(e_r)(v..) = -Omega_{0_x}((0, e_r), (v, 0), ...).
double sigma_roundtrip(const AlgebroidModel& model, const IMForm& f, const Vec& x, const Numerics& num = {});

}  // namespace sprayoid
