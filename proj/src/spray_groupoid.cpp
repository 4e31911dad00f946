#include "sprayoid/spray_groupoid.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "sprayoid/errors.hpp"
#include "sprayoid/ode.hpp"

namespace sprayoid {

void Numerics::check() const {
  if (!(rk_step > 0.0 && rk_step <= 0.5)) throw InvalidParams("rk_step must lie in (0, 0.5]");
  if (quad_nodes < 3 || quad_nodes % 2 == 0) throw InvalidParams("quad_nodes must be odd and >= 3");
  if (!(fd_step > 0.0)) throw InvalidParams("fd_step must be positive");
  if (mc_substeps < 1) throw InvalidParams("mc_substeps must be >= 1");
  if (!(match_tol > 0.0)) throw InvalidParams("match_tol must be positive");
  if (!(cond_max > 1.0)) throw InvalidParams("cond_max must exceed 1");
  if (!(axiom_tol > 0.0)) throw InvalidParams("axiom_tol must be positive");
  if (samples < 1) throw InvalidParams("samples must be >= 1");
  if (transport_sign != 1 && transport_sign != -1) throw InvalidParams("transport_sign must be +1 or -1");
}

double condition_number(const Mat& m) {
  if (m.size() == 0) return 1.0;
  Eigen::JacobiSVD<Mat> svd(m);
  const auto& sv = svd.singularValues();
  const double smin = sv[sv.size() - 1];
  if (!(smin > 0.0) || !std::isfinite(sv[0])) return std::numeric_limits<double>::infinity();
  return sv[0] / smin;
}

namespace {

void check_arrow(const AlgebroidModel& model, const ArrowPoint& a) {
  if (a.x.size() != model.n() || a.xi.size() != model.r())
    throw InvalidParams("arrow point has wrong dimensions for model '" + model.name() + "'");
}

}  // namespace

Vec source(const AlgebroidModel& model, const ArrowPoint& a, const Numerics& num) {
  return flow(model, a, 1.0, num.rk_step).x;
}

Vec target(const AlgebroidModel& model, const ArrowPoint& a) {
  check_arrow(model, a);
  return a.x;
}

ArrowPoint unit(const AlgebroidModel& model, const Vec& x) {
  if (x.size() != model.n()) throw InvalidParams("unit: base point has wrong dimension");
  model.require_chart(as_span(x), "unit");
  return model.zero_at(x);
}

ArrowPoint inverse(const AlgebroidModel& model, const ArrowPoint& a, const Numerics& num) {
  ArrowPoint end = flow(model, a, 1.0, num.rk_step);
  end.xi = -end.xi;
  model.require_domain(end, "inverse");
  return end;
}

// --- Maurer-Cartan ----------------------------------------------------------

struct MaurerCartanSolver::Impl {
  Impl(const AlgebroidModel& m, const Numerics& nu)
      : model(m),
        num(nu),
        eng(m),
        n(m.n()),
        r(m.r()),
        d(n + r),
        size(d + d * r + r * r),
        rk(size),
        y(size),
        jac(d, d),
        gen(r, r),
        acc(r, r),
        theta(r, r),
        weights(simpson_weights(nu.quad_nodes)),
        lu(r) {
    num.check();
  }

  void rhs(const Vec& s, Vec& ds) {
    eng.load(s.data(), true);
    eng.field(s.data() + n, ds.data());
    eng.jacobian(s.data() + n, jac);
    Eigen::Map<const Mat> v(s.data() + d, d, r);
    Eigen::Map<Mat> dv(ds.data() + d, d, r);
    dv.noalias() = jac * v;
    eng.transport_generator(s.data() + n, gen);
    Eigen::Map<const Mat> p(s.data() + d + d * r, r, r);
    Eigen::Map<Mat> dp(ds.data() + d + d * r, r, r);
    dp.noalias() = static_cast<double>(num.transport_sign) * (gen * p);
  }

  void accumulate(int node) {
    Eigen::Map<const Mat> v(y.data() + d, d, r);
    Eigen::Map<const Mat> p(y.data() + d + d * r, r, r);
    lu.compute(p);
    acc.noalias() += weights[node] * lu.solve(v.bottomRows(r));
  }

  const Mat& compute(const double* x, const double* xi) {
    y.setZero();
    for (int i = 0; i < n; ++i) y[i] = x[i];
    for (int k = 0; k < r; ++k) y[n + k] = xi[k];
    for (int k = 0; k < r; ++k) {
      y[d + k * d + n + k] = 1.0;
      y[d + d * r + k * r + k] = 1.0;
    }
    eng.require_domain(y.data(), "mc_matrix");
    acc.setZero();
    accumulate(0);
    const int panels = num.quad_nodes - 1;
    const double h = 1.0 / (panels * num.mc_substeps);
    auto f = [this](const Vec& s, Vec& ds) { rhs(s, ds); };
    for (int j = 1; j <= panels; ++j) {
      for (int q = 0; q < num.mc_substeps; ++q) {
        rk.step(f, y, h);
        eng.require_domain(y.data(), "mc_matrix");
      }
      accumulate(j);
    }
    Eigen::Map<const Mat> p(y.data() + d + d * r, r, r);
    theta.noalias() = p * acc;
    cond = condition_number(theta);
    if (!(cond <= num.cond_max)) {
      std::ostringstream os;
      os << "mc_matrix: condition number " << cond << " exceeds " << num.cond_max;
      throw SingularMC(os.str());
    }
    return theta;
  }

  const AlgebroidModel& model;
  Numerics num;
  SprayEngine eng;
  int n, r, d, size;
  Rk4 rk;
  Vec y;
  Mat jac, gen, acc, theta;
  Vec weights;
  Eigen::PartialPivLU<Mat> lu;
  double cond = 1.0;
};

MaurerCartanSolver::MaurerCartanSolver(const AlgebroidModel& model, const Numerics& num)
    : impl_(std::make_unique<Impl>(model, num)) {}
MaurerCartanSolver::~MaurerCartanSolver() = default;

const Mat& MaurerCartanSolver::compute(const double* x, const double* xi) { return impl_->compute(x, xi); }
double MaurerCartanSolver::last_condition() const noexcept { return impl_->cond; }

MCMatrix mc_matrix(const AlgebroidModel& model, const ArrowPoint& a, const Numerics& num) {
  check_arrow(model, a);
  MaurerCartanSolver solver(model, num);
  MCMatrix out;
  out.entries = solver.compute(a.x.data(), a.xi.data());
  out.cond = solver.last_condition();
  out.at = a;
  return out;
}

Vec adjoint_transport(const AlgebroidModel& model, const ArrowPoint& geodesic_of, double t0, double t1, const Vec& c,
                      const Numerics& num) {
  check_arrow(model, geodesic_of);
  num.check();
  const int n = model.n(), r = model.r(), d = n + r;
  if (c.size() != r) throw InvalidParams("adjoint_transport: fiber vector has wrong dimension");
  const ArrowPoint start = flow(model, geodesic_of, t0, num.rk_step);
  if (t1 == t0) return c;
  SprayEngine eng(model);
  Mat gen(r, r);
  Vec y(d + r);
  y << stack(start), c;
  auto rhs = [&](const Vec& s, Vec& ds) {
    eng.load(s.data(), false);
    eng.field(s.data() + n, ds.data());
    eng.transport_generator(s.data() + n, gen);
    ds.tail(r).noalias() = static_cast<double>(num.transport_sign) * (gen * s.tail(r));
  };
  const int steps = steps_for(t1 - t0, num.rk_step);
  const double h = (t1 - t0) / steps;
  Rk4 rk(y.size());
  for (int q = 0; q < steps; ++q) {
    rk.step(rhs, y, h);
    eng.require_domain(y.data(), "adjoint_transport");
  }
  return y.tail(r);
}

ArrowPoint multiply(const AlgebroidModel& model, const ArrowPoint& v1, const ArrowPoint& v2, const Numerics& num) {
  check_arrow(model, v1);
  check_arrow(model, v2);
  num.check();
  const int n = model.n(), r = model.r();
  model.require_domain(v1, "multiply");
  model.require_domain(v2, "multiply");
  const Vec s1 = source(model, v1, num);
  const double mismatch = (s1 - v2.x).norm();
  if (mismatch > num.match_tol) {
    std::ostringstream os;
    os << "multiply: |source(v1) - target(v2)| = " << mismatch << " exceeds " << num.match_tol;
    throw NotComposable(os.str());
  }
  MaurerCartanSolver mc(model, num);
  SprayEngine eng(model);
  Eigen::PartialPivLU<Mat> lu(r);
  // State: gamma (r), then the geodesic of v2 (n + r).
  Vec z(r + n + r);
  z << v1.xi, stack(v2);
  auto rhs = [&](const Vec& s, Vec& ds) {
    const Mat& theta = mc.compute(v1.x.data(), s.data());
    lu.compute(theta);
    ds.head(r) = lu.solve(s.tail(r));
    eng.load(s.data() + r, false);
    eng.field(s.data() + r + n, ds.data() + r);
  };
  const int steps = steps_for(1.0, num.rk_step);
  const double h = 1.0 / steps;
  Rk4 rk(z.size());
  for (int q = 0; q < steps; ++q) {
    rk.step(rhs, z, h);
    model.require_domain(as_span(v1.x), std::span<const double>(z.data(), r), "multiply");
    eng.require_domain(z.data() + r, "multiply");
  }
  return {v1.x, z.head(r)};
}

TangentOfA left_invariant_value(const AlgebroidModel& model, const Vec& alpha_at_source, const ArrowPoint& a,
                                const Numerics& num) {
  if (alpha_at_source.size() != model.r()) throw InvalidParams("left_invariant_value: alpha has wrong dimension");
  const MCMatrix theta = mc_matrix(model, a, num);
  return {Vec::Zero(model.n()), theta.entries.partialPivLu().solve(alpha_at_source)};
}

namespace {

ArrowPoint random_arrow(const AlgebroidModel& model, const Vec& x, double fiber_scale, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unif;
  Vec xi(model.r());
  for (int m = 0; m < model.r(); ++m) xi[m] = gauss(rng);
  const double norm = xi.norm();
  const double radius = fiber_scale * std::pow(unif(rng), 1.0 / model.r());
  if (norm > 0.0) xi *= radius / norm;
  return {x, xi};
}

Vec random_base_point(const AlgebroidModel& model, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(-0.5, 0.5);
  Vec x(model.n());
  for (int i = 0; i < model.n(); ++i) {
    const Interval& iv = model.chart_box()[static_cast<std::size_t>(i)];
    x[i] = 0.5 * (iv.lo + iv.hi) + unif(rng) * (iv.hi - iv.lo) * 0.5;
  }
  return x;
}

double arrow_distance(const ArrowPoint& a, const ArrowPoint& b) {
  return std::sqrt((a.x - b.x).squaredNorm() + (a.xi - b.xi).squaredNorm());
}

}  // namespace

LocalAxiomReport local_axiom_residuals(const AlgebroidModel& model, int pair_samples, int triple_samples,
                                       double fiber_scale, std::uint64_t seed, const Numerics& num) {
  if (pair_samples < 0 || triple_samples < 0) throw InvalidParams("sample counts must be non-negative");
  if (!(fiber_scale > 0.0)) throw InvalidParams("fiber_scale must be positive");
  std::mt19937_64 rng(seed);
  LocalAxiomReport rep;
  for (int s = 0; s < pair_samples; ++s) {
    const ArrowPoint g = random_arrow(model, random_base_point(model, rng), fiber_scale, rng);
    try {
      const Vec sg = source(model, g, num);
      const ArrowPoint h = random_arrow(model, sg, fiber_scale, rng);
      const ArrowPoint gh = multiply(model, g, h, num);
      const ArrowPoint ginv = inverse(model, g, num);
      const double a1t = (target(model, gh) - target(model, g)).norm();
      const double a1s = (source(model, gh, num) - source(model, h, num)).norm();
      const double a3 = std::max(arrow_distance(multiply(model, g, unit(model, sg), num), g),
                                 arrow_distance(multiply(model, unit(model, g.x), g, num), g));
      const double a4 = std::max((source(model, ginv, num) - g.x).norm(), (ginv.x - sg).norm());
      const double a5 = std::max(arrow_distance(multiply(model, ginv, g, num), unit(model, sg)),
                                 arrow_distance(multiply(model, g, ginv, num), unit(model, g.x)));
      rep.a1_target = std::max(rep.a1_target, a1t);
      rep.a1_source = std::max(rep.a1_source, a1s);
      rep.a3 = std::max(rep.a3, a3);
      rep.a4 = std::max(rep.a4, a4);
      rep.a5 = std::max(rep.a5, a5);
      ++rep.pairs;
    } catch (const LeftDomain&) {
      ++rep.skipped;
    }
  }
  for (int s = 0; s < triple_samples; ++s) {
    const ArrowPoint g = random_arrow(model, random_base_point(model, rng), fiber_scale, rng);
    try {
      const ArrowPoint h = random_arrow(model, source(model, g, num), fiber_scale, rng);
      const ArrowPoint k = random_arrow(model, source(model, h, num), fiber_scale, rng);
      const ArrowPoint left = multiply(model, multiply(model, g, h, num), k, num);
      const ArrowPoint right = multiply(model, g, multiply(model, h, k, num), num);
      rep.a2 = std::max(rep.a2, arrow_distance(left, right));
      ++rep.triples;
    } catch (const LeftDomain&) {
      ++rep.skipped;
    }
  }
  return rep;
}

}  // namespace sprayoid
