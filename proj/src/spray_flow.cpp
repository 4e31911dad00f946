#include "sprayoid/spray_flow.hpp"

#include <algorithm>
#include <cmath>

#include "sprayoid/errors.hpp"
#include "sprayoid/ode.hpp"

namespace sprayoid {

SprayEngine::SprayEngine(const AlgebroidModel& model)
    : model_(model), n_(model.n()), r_(model.r()), coeffs_(model) {}

void SprayEngine::load(const double* x, bool jacobian) { coeffs_.at(std::span<const double>(x, n_), jacobian); }

void SprayEngine::field(const double* xi, double* out) const {
  const double* rho = coeffs_.rho_data();
  for (int i = 0; i < n_; ++i) {
    double s = 0.0;
    for (int k = 0; k < r_; ++k) s += rho[i * r_ + k] * xi[k];
    out[i] = s;
  }
  const double* g = coeffs_.gamma_data();
  for (int m = 0; m < r_; ++m) {
    double s = 0.0;
    for (int k = 0; k < r_; ++k) {
      const double* row = g + (m * r_ + k) * r_;
      double inner = 0.0;
      for (int l = 0; l < r_; ++l) inner += row[l] * xi[l];
      s += xi[k] * inner;
    }
    out[n_ + m] = -s;
  }
}

void SprayEngine::jacobian(const double* xi, Mat& jac) const {
  const int d = n_ + r_;
  jac.setZero(d, d);
  const double* rho = coeffs_.rho_data();
  const double* g = coeffs_.gamma_data();
  for (int i = 0; i < n_; ++i) {
    for (int k = 0; k < r_; ++k) {
      jac(i, n_ + k) = rho[i * r_ + k];
      if (coeffs_.rho_varies())
        for (int j = 0; j < n_; ++j) jac(i, j) += coeffs_.rho_grad(i, k, j) * xi[k];
    }
  }
  for (int m = 0; m < r_; ++m) {
    for (int k = 0; k < r_; ++k) {
      const double* row = g + (m * r_ + k) * r_;
      double dk = 0.0;
      for (int l = 0; l < r_; ++l) {
        dk += row[l] * xi[l];
        jac(n_ + m, n_ + l) -= row[l] * xi[k];
      }
      jac(n_ + m, n_ + k) -= dk;
    }
    if (coeffs_.gamma_varies())
      for (int k = 0; k < r_; ++k)
        for (int l = 0; l < r_; ++l)
          for (int j = 0; j < n_; ++j) jac(n_ + m, j) -= coeffs_.gamma_grad(m, k, l, j) * xi[k] * xi[l];
  }
}

void SprayEngine::transport_generator(const double* xi, Mat& out) const {
  out.setZero(r_, r_);
  const double* c = coeffs_.c_data();
  for (int m = 0; m < r_; ++m)
    for (int k = 0; k < r_; ++k) {
      const double w = xi[k];
      if (w == 0.0) continue;
      const double* row = c + (m * r_ + k) * r_;
      for (int l = 0; l < r_; ++l) out(m, l) += row[l] * w;
    }
}

void SprayEngine::require_domain(const double* state, const char* where) const {
  for (int q = 0; q < n_ + r_; ++q)
    if (!std::isfinite(state[q])) throw NonFinite(std::string(where) + ": non-finite state");
  model_.require_domain(std::span<const double>(state, n_), std::span<const double>(state + n_, r_), where);
}

Vec stack(const ArrowPoint& a) {
  Vec y(a.x.size() + a.xi.size());
  y << a.x, a.xi;
  return y;
}

ArrowPoint unstack(const Vec& y, int n, int r) { return {y.head(n), y.segment(n, r)}; }

Vec stack(const TangentOfA& v) {
  Vec y(v.dx.size() + v.dxi.size());
  y << v.dx, v.dxi;
  return y;
}

TangentOfA unstack_tangent(const Vec& y, int n, int r) { return {y.head(n), y.segment(n, r)}; }

namespace {

void check_arrow(const AlgebroidModel& model, const ArrowPoint& a) {
  if (a.x.size() != model.n() || a.xi.size() != model.r())
    throw InvalidParams("arrow point has wrong dimensions for model '" + model.name() + "'");
}

}  // namespace

TangentOfA spray_field(const AlgebroidModel& model, const ArrowPoint& a) {
  check_arrow(model, a);
  SprayEngine eng(model);
  eng.load(a.x.data(), false);
  Vec out(eng.dim());
  eng.field(a.xi.data(), out.data());
  return unstack_tangent(out, model.n(), model.r());
}

ArrowPoint flow(const AlgebroidModel& model, const ArrowPoint& a, double t, double step) {
  check_arrow(model, a);
  if (!(step > 0.0)) throw InvalidParams("flow: step must be positive");
  SprayEngine eng(model);
  Vec y = stack(a);
  eng.require_domain(y.data(), "flow");
  if (t == 0.0) return a;
  const int steps = steps_for(t, step);
  const double h = t / steps;
  const int n = model.n();
  Rk4 rk(eng.dim());
  auto rhs = [&](const Vec& s, Vec& ds) {
    eng.load(s.data(), false);
    eng.field(s.data() + n, ds.data());
  };
  for (int q = 0; q < steps; ++q) {
    rk.step(rhs, y, h);
    eng.require_domain(y.data(), "flow");
  }
  return unstack(y, n, model.r());
}

FlowState variational_flow(const AlgebroidModel& model, const ArrowPoint& a, const std::vector<TangentOfA>& seeds,
                           double t, double step) {
  check_arrow(model, a);
  if (!(step > 0.0)) throw InvalidParams("variational_flow: step must be positive");
  const int n = model.n(), r = model.r(), d = n + r;
  const int k = static_cast<int>(seeds.size());
  SprayEngine eng(model);
  Vec y(d * (k + 1));
  y.head(d) = stack(a);
  for (int q = 0; q < k; ++q) {
    if (seeds[q].dx.size() != n || seeds[q].dxi.size() != r) throw InvalidParams("seed has wrong dimensions");
    y.segment(d * (q + 1), d) = stack(seeds[q]);
  }
  eng.require_domain(y.data(), "variational_flow");
  if (t != 0.0) {
    const int steps = steps_for(t, step);
    const double h = t / steps;
    Mat jac(d, d);
    Rk4 rk(y.size());
    auto rhs = [&](const Vec& s, Vec& ds) {
      eng.load(s.data(), true);
      eng.field(s.data() + n, ds.data());
      eng.jacobian(s.data() + n, jac);
      Eigen::Map<const Mat> v(s.data() + d, d, k);
      Eigen::Map<Mat> dv(ds.data() + d, d, k);
      dv.noalias() = jac * v;
    };
    for (int q = 0; q < steps; ++q) {
      rk.step(rhs, y, h);
      eng.require_domain(y.data(), "variational_flow");
    }
  }
  FlowState out;
  out.point = unstack(y.head(d), n, r);
  for (int q = 0; q < k; ++q) out.tangents.push_back(unstack_tangent(y.segment(d * (q + 1), d), n, r));
  return out;
}

// --- dense output -----------------------------------------------------------

void Trajectory::append(double t, Vec y, Vec f) {
  if (!times_.empty() && !(t > times_.back())) throw InvalidParams("trajectory times must increase");
  times_.push_back(t);
  states_.push_back(std::move(y));
  slopes_.push_back(std::move(f));
}

Vec Trajectory::state(double t) const {
  if (times_.empty()) throw InvalidParams("empty trajectory");
  const double tol = 1e-12 * std::max(1.0, std::abs(t));
  if (t < times_.front() - tol || t > times_.back() + tol) throw InvalidParams("time outside trajectory span");
  if (times_.size() == 1) return states_.front();
  auto it = std::upper_bound(times_.begin(), times_.end(), t);
  std::size_t hi = static_cast<std::size_t>(it - times_.begin());
  hi = std::clamp<std::size_t>(hi, 1, times_.size() - 1);
  const std::size_t lo = hi - 1;
  const double h = times_[hi] - times_[lo];
  const double s = (t - times_[lo]) / h;
  if (s == 0.0) return states_[lo];
  if (s == 1.0) return states_[hi];
  const double s2 = s * s, s3 = s2 * s;
  const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s;
  const double h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
  return h00 * states_[lo] + (h10 * h) * slopes_[lo] + h01 * states_[hi] + (h11 * h) * slopes_[hi];
}

Trajectory flow_trajectory(const AlgebroidModel& model, const ArrowPoint& a, double t0, double t1, double step) {
  check_arrow(model, a);
  if (!(t0 <= 0.0 && 0.0 <= t1)) throw InvalidParams("flow_trajectory: need t0 <= 0 <= t1");
  const int n = model.n(), r = model.r();
  SprayEngine eng(model);
  auto rhs = [&](const Vec& s, Vec& ds) {
    eng.load(s.data(), false);
    eng.field(s.data() + n, ds.data());
  };
  const auto slope = [&](const Vec& y) {
    Vec f(y.size());
    rhs(y, f);
    return f;
  };
  const auto sweep = [&](double t_end) {
    std::vector<std::pair<double, Vec>> pts;
    Vec y = stack(a);
    eng.require_domain(y.data(), "flow_trajectory");
    if (t_end == 0.0) return pts;
    const int steps = steps_for(t_end, step);
    const double h = t_end / steps;
    Rk4 rk(y.size());
    for (int q = 1; q <= steps; ++q) {
      rk.step(rhs, y, h);
      eng.require_domain(y.data(), "flow_trajectory");
      pts.emplace_back(q * h, y);
    }
    return pts;
  };
  const auto back = sweep(t0);
  const auto fwd = sweep(t1);
  Trajectory traj(n, r);
  for (auto it = back.rbegin(); it != back.rend(); ++it) traj.append(it->first, it->second, slope(it->second));
  const Vec y0 = stack(a);
  traj.append(0.0, y0, slope(y0));
  for (const auto& [t, y] : fwd) traj.append(t, y, slope(y));
  return traj;
}

double homogeneity_residual(const AlgebroidModel& model, const ArrowPoint& a, double s, double t, double step) {
  if (!(s > 0.0 && s <= 1.0)) throw InvalidParams("homogeneity_residual: s must lie in (0, 1]");
  const ArrowPoint scaled{a.x, s * a.xi};
  const ArrowPoint lhs = flow(model, scaled, t, step);
  ArrowPoint rhs = flow(model, a, s * t, step);
  rhs.xi *= s;
  return std::sqrt((lhs.x - rhs.x).squaredNorm() + (lhs.xi - rhs.xi).squaredNorm());
}

double apath_residual(const AlgebroidModel& model, const ArrowPoint& a, const std::vector<double>& t_grid,
                      double step) {
  if (t_grid.empty()) return 0.0;
  const auto [lo_it, hi_it] = std::minmax_element(t_grid.begin(), t_grid.end());
  const double h = step;
  const Trajectory traj =
      flow_trajectory(model, a, std::min(0.0, *lo_it) - 3.0 * h, std::max(0.0, *hi_it) + 3.0 * h, step);
  const int n = model.n();
  double worst = 0.0;
  for (double t : t_grid) {
    const Vec velocity = (-traj.state(t + 2 * h).head(n) + 8.0 * traj.state(t + h).head(n) -
                          8.0 * traj.state(t - h).head(n) + traj.state(t - 2 * h).head(n)) /
                         (12.0 * h);
    const Vec anchor = anchor_apply(model, traj.at(t));
    if (n > 0) worst = std::max(worst, (anchor - velocity).lpNorm<Eigen::Infinity>());
  }
  return worst;
}

}  // namespace sprayoid
