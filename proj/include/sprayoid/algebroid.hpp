#pragma once

// Coordinate model of a Lie algebroid A -> M with an A-connection, over a
// single chart. Local frame {e_1..e_r}, coordinates (x^1..x^n, xi^1..xi^r).

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "sprayoid/expr.hpp"
#include "sprayoid/linalg.hpp"

namespace sprayoid {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// A point of the total space, which is also an arrow of the spray groupoid.
struct ArrowPoint {
  Vec x;
  Vec xi;
};

/// Tangent vector to the total space.
struct TangentOfA {
  Vec dx;
  Vec dxi;
};

/// alpha = sum_m coeff[m](x) e_m
struct SectionSpec {
  std::vector<Expression> coeff;
};

/// Value and first derivatives of a section at one point; jac is r x n.
struct SectionJet {
  Vec value;
  Mat jac;
};

class AlgebroidModel {
 public:
  /// rho is indexed [i * r + k], c and gamma [(m * r + k) * r + l].
  AlgebroidModel(std::string name, int n, int r, std::vector<Expression> rho,
                 std::vector<Expression> c, std::vector<Expression> gamma,
                 std::vector<Interval> chart_box, double fiber_radius);

  const std::string& name() const noexcept { return name_; }
  int n() const noexcept { return n_; }
  int r() const noexcept { return r_; }
  const Expression& rho(int i, int k) const { return rho_[i * r_ + k]; }
  const Expression& c(int m, int k, int l) const { return c_[(m * r_ + k) * r_ + l]; }
  const Expression& gamma(int m, int k, int l) const { return gamma_[(m * r_ + k) * r_ + l]; }
  const std::vector<Expression>& rho_all() const noexcept { return rho_; }
  const std::vector<Expression>& c_all() const noexcept { return c_; }
  const std::vector<Expression>& gamma_all() const noexcept { return gamma_; }
  const std::vector<Interval>& chart_box() const noexcept { return box_; }
  double fiber_radius() const noexcept { return fiber_radius_; }

  bool in_chart(std::span<const double> x) const;
  bool in_domain(std::span<const double> x, std::span<const double> xi) const;
  bool in_domain(const ArrowPoint& a) const { return in_domain(as_span(a.x), as_span(a.xi)); }
  /// Throws LeftDomain with a diagnostic when outside the validity domain.
  void require_domain(std::span<const double> x, std::span<const double> xi, const char* where) const;
  void require_domain(const ArrowPoint& a, const char* where) const {
    require_domain(as_span(a.x), as_span(a.xi), where);
  }
  void require_chart(std::span<const double> x, const char* where) const;

  ArrowPoint zero_at(const Vec& x) const { return {x, Vec::Zero(r_)}; }

 private:
  std::string name_;
  int n_;
  int r_;
  std::vector<Expression> rho_;
  std::vector<Expression> c_;
  std::vector<Expression> gamma_;
  std::vector<Interval> box_;
  double fiber_radius_;
};

/// Coefficient values (and optionally x-gradients) at a point, reusing
/// buffers between calls. Constant coefficients are filled once.
class CoefficientEvaluator {
 public:
  explicit CoefficientEvaluator(const AlgebroidModel& model);

  void at(std::span<const double> x, bool gradients);

  double rho(int i, int k) const { return rho_[i * r_ + k]; }
  double c(int m, int k, int l) const { return c_[(m * r_ + k) * r_ + l]; }
  double gamma(int m, int k, int l) const { return gamma_[(m * r_ + k) * r_ + l]; }
  /// d rho^i_k / dx^j, valid after at(x, true).
  double rho_grad(int i, int k, int j) const { return rho_grad_[(i * r_ + k) * n_ + j]; }
  double gamma_grad(int m, int k, int l, int j) const { return gamma_grad_[((m * r_ + k) * r_ + l) * n_ + j]; }

  bool rho_varies() const noexcept { return !rho_var_.empty(); }
  bool gamma_varies() const noexcept { return !gamma_var_.empty(); }
  const double* rho_data() const noexcept { return rho_.data(); }
  const double* c_data() const noexcept { return c_.data(); }
  const double* gamma_data() const noexcept { return gamma_.data(); }

 private:
  const AlgebroidModel& model_;
  int n_, r_;
  std::vector<double> rho_, c_, gamma_, rho_grad_, gamma_grad_;
  std::vector<int> rho_var_, c_var_, gamma_var_;
};

/// rho(a) = (sum_k rho^i_k(x) xi^k)_i
Vec anchor_apply(const AlgebroidModel& model, const ArrowPoint& a);

SectionJet section_jet(const SectionSpec& s, std::span<const double> x, int r);
SectionSpec constant_section(const Vec& values, int n);

/// Bracket of two sections from their jets and coefficient values at x.
Vec bracket_from_jets(const CoefficientEvaluator& coeffs, int n, int r, const SectionJet& a,
                      const SectionJet& b);
Vec bracket(const AlgebroidModel& model, const SectionSpec& s1, const SectionSpec& s2,
            std::span<const double> x);

struct AxiomReport {
  double antisymmetry = 0.0;
  double anchor = 0.0;
  double jacobi = 0.0;
  double tolerance = 1e-7;
  int points = 0;
  int sections = 0;
  bool valid() const { return antisymmetry <= tolerance && anchor <= tolerance && jacobi <= tolerance; }
};

/// Bracket of two sections as expressions (symbolic x-derivatives).
SectionSpec symbolic_bracket(const AlgebroidModel& model, const SectionSpec& a, const SectionSpec& b);

/// Sampling-based check of the algebroid axioms: antisymmetry of c,
/// rho([a,b]) = [rho a, rho b] and the Jacobi identity. The inner brackets
/// of the Jacobiator are built with symbolic_bracket, so no finite
/// differences are involved.
AxiomReport validate_axioms(const AlgebroidModel& model, int samples, std::uint64_t seed,
                            double tolerance = 1e-7);

/// T^m_kl = Gamma^m_kl - Gamma^m_lk - c^m_kl, indexed [(m * r + k) * r + l].
std::vector<double> torsion(const AlgebroidModel& model, std::span<const double> x);
double max_torsion(const AlgebroidModel& model, int samples, std::uint64_t seed);

// --- builtin families -------------------------------------------------------

/// Structure constants indexed [(m * r + k) * r + l].
std::vector<double> so3_structure_constants();
/// Basis (H, E, F) with [H,E] = 2E, [H,F] = -2F, [E,F] = H.
std::vector<double> sl2_structure_constants();

/// Base of dimension 0, anchor 0, Gamma = c / 2.
AlgebroidModel lie_algebra_model(std::string name, int r, const std::vector<double>& c,
                                 double fiber_radius = 4.0);
/// TM over a box: rho = id, c = 0, Gamma = 0.
AlgebroidModel tangent_model(int n, std::vector<Interval> box = {}, double fiber_radius = 4.0);
/// T*M of a Poisson structure given by pi^{ij} (indexed [i * n + j], must be
/// antisymmetric). rho^i_k = pi^{ki}, c^m_kl = d_m pi^{kl}, Gamma = c / 2.
AlgebroidModel cotangent_poisson_model(std::string name, int n, const std::vector<Expression>& pi,
                                       std::vector<Interval> box = {}, double fiber_radius = 2.0);
/// Linear Poisson structure on so(3)* with pi^{ij} = -eps_ijk x_k, so that
/// the anchor reads rho^i_k = eps_ikj x_j.
AlgebroidModel so3_dual_model(std::vector<Interval> box = {}, double fiber_radius = 2.0);

/// Same algebroid and connection in the constant frame e'_m = sum_j B(j, m) e_j.
/// Fiber coordinates transform as xi_old = B xi_new.
AlgebroidModel change_frame(const AlgebroidModel& model, const Mat& frame);

/// Gamma = c / 2 as expressions.
std::vector<Expression> half_structure(const std::vector<Expression>& c);

// --- sampling helpers -------------------------------------------------------

/// Deterministic low-discrepancy points in the inner 90% of the chart box.
std::vector<Vec> sample_points(const AlgebroidModel& model, int count);
/// Random sections whose coefficients are polynomials of degree <= 2.
std::vector<SectionSpec> random_sections(int n, int r, int count, std::mt19937_64& rng);
/// Polynomial of the given degree with coefficients uniform in [-1, 1].
Expression random_polynomial(int n, int degree, std::mt19937_64& rng);

}  // namespace sprayoid
