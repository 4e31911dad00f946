#pragma once

// Independent reference computations for the tests: matrix exponentials and
// logarithms in the adjoint representation, power series, and finite
// differences. Nothing here calls the integrators under test.

#include <cmath>
#include <random>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "sprayoid/algebroid.hpp"

namespace sprayoid::testing {

/// (ad_a)^m_l = sum_k c[(m r + k) r + l] a^k
inline Mat ad_of(const std::vector<double>& c, const Vec& a) {
  const int r = static_cast<int>(a.size());
  Mat ad = Mat::Zero(r, r);
  for (int m = 0; m < r; ++m)
    for (int k = 0; k < r; ++k)
      for (int l = 0; l < r; ++l) ad(m, l) += c[static_cast<std::size_t>((m * r + k) * r + l)] * a[k];
  return ad;
}

/// sum_{j=0}^{terms} X^j / (j + 1)!
inline Mat phi_series(const Mat& x, int terms = 20) {
  Mat term = Mat::Identity(x.rows(), x.cols());
  Mat sum = term;
  for (int j = 1; j <= terms; ++j) {
    term = term * x / static_cast<double>(j + 1);
    sum += term;
  }
  return sum;
}

/// z with ad_z = logm(expm(ad_{v1}) expm(ad_{v2})); the adjoint
/// representation must be faithful.
inline Vec bch(const std::vector<double>& c, const Vec& v1, const Vec& v2) {
  const int r = static_cast<int>(v1.size());
  const Mat z = (ad_of(c, v1).exp() * ad_of(c, v2).exp()).log();
  Mat basis(r * r, r);
  for (int k = 0; k < r; ++k) {
    const Mat e = ad_of(c, Vec::Unit(r, k));
    basis.col(k) = Eigen::Map<const Vec>(e.data(), r * r);
  }
  return basis.colPivHouseholderQr().solve(Eigen::Map<const Vec>(z.data(), r * r));
}

/// Uniform in the ball of the given radius.
inline Vec random_ball(int dim, double radius, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u;
  Vec v(dim);
  for (int i = 0; i < dim; ++i) v[i] = g(rng);
  if (v.norm() == 0.0) return v;
  return v * (radius * std::pow(u(rng), 1.0 / dim) / v.norm());
}

inline Vec random_gauss(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Vec v(dim);
  for (int i = 0; i < dim; ++i) v[i] = g(rng);
  return v;
}

inline Vec random_box(int dim, double half_width, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-half_width, half_width);
  Vec v(dim);
  for (int i = 0; i < dim; ++i) v[i] = u(rng);
  return v;
}

inline double distance(const ArrowPoint& a, const ArrowPoint& b) {
  return std::sqrt((a.x - b.x).squaredNorm() + (a.xi - b.xi).squaredNorm());
}

inline Vec vec(std::initializer_list<double> values) {
  Vec v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

}  // namespace sprayoid::testing
