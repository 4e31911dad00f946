#include "sprayoid/algebroid.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "sprayoid/errors.hpp"

namespace sprayoid {

namespace {

std::vector<Interval> default_box(int n, double half_width) {
  return std::vector<Interval>(n, Interval{-half_width, half_width});
}

void check_dims(const std::vector<Expression>& v, std::size_t expected, const char* what, int n) {
  if (v.size() != expected)
    throw InvalidParams(std::string(what) + ": expected " + std::to_string(expected) + " entries, got " +
                        std::to_string(v.size()));
  for (const Expression& e : v)
    if (e.dimension() > n) throw InvalidParams(std::string(what) + ": expression uses more than n variables");
}

}  // namespace

AlgebroidModel::AlgebroidModel(std::string name, int n, int r, std::vector<Expression> rho,
                               std::vector<Expression> c, std::vector<Expression> gamma,
                               std::vector<Interval> chart_box, double fiber_radius)
    : name_(std::move(name)),
      n_(n),
      r_(r),
      rho_(std::move(rho)),
      c_(std::move(c)),
      gamma_(std::move(gamma)),
      box_(std::move(chart_box)),
      fiber_radius_(fiber_radius) {
  if (n < 0 || r < 1) throw InvalidParams("model needs n >= 0 and r >= 1");
  if (n > kMaxJetDim) throw InvalidParams("base dimension exceeds " + std::to_string(kMaxJetDim));
  const auto r3 = static_cast<std::size_t>(r) * r * r;
  check_dims(rho_, static_cast<std::size_t>(n) * r, "rho", n);
  check_dims(c_, r3, "c", n);
  check_dims(gamma_, r3, "gamma", n);
  for (auto* v : {&rho_, &c_, &gamma_})
    for (Expression& e : *v) e = e.with_dimension(n);
  if (static_cast<int>(box_.size()) != n) throw InvalidParams("chart box must have one interval per coordinate");
  for (const Interval& iv : box_)
    if (!(iv.lo < iv.hi)) throw InvalidParams("chart box interval must satisfy lo < hi");
  if (!(fiber_radius_ > 0.0)) throw InvalidParams("fiber_radius must be positive");
}

bool AlgebroidModel::in_chart(std::span<const double> x) const {
  for (int i = 0; i < n_; ++i)
    if (!(x[i] >= box_[i].lo && x[i] <= box_[i].hi)) return false;
  return true;
}

bool AlgebroidModel::in_domain(std::span<const double> x, std::span<const double> xi) const {
  if (!in_chart(x)) return false;
  double s = 0.0;
  for (int k = 0; k < r_; ++k) s += xi[k] * xi[k];
  return std::sqrt(s) <= fiber_radius_;
}

void AlgebroidModel::require_chart(std::span<const double> x, const char* where) const {
  for (int i = 0; i < n_; ++i) {
    if (!(x[i] >= box_[i].lo && x[i] <= box_[i].hi)) {
      std::ostringstream os;
      os << where << ": x" << i + 1 << " = " << x[i] << " outside chart interval [" << box_[i].lo << ", "
         << box_[i].hi << "]";
      throw LeftDomain(os.str());
    }
  }
}

void AlgebroidModel::require_domain(std::span<const double> x, std::span<const double> xi,
                                    const char* where) const {
  require_chart(x, where);
  double s = 0.0;
  for (int k = 0; k < r_; ++k) s += xi[k] * xi[k];
  if (!(std::sqrt(s) <= fiber_radius_)) {
    std::ostringstream os;
    os << where << ": |xi| = " << std::sqrt(s) << " exceeds fiber_radius " << fiber_radius_;
    throw LeftDomain(os.str());
  }
}

// --- coefficient evaluation -------------------------------------------------

CoefficientEvaluator::CoefficientEvaluator(const AlgebroidModel& model)
    : model_(model), n_(model.n()), r_(model.r()) {
  const auto fill = [&](const std::vector<Expression>& src, std::vector<double>& val, std::vector<double>& grad,
                        std::vector<int>& var) {
    val.assign(src.size(), 0.0);
    grad.assign(src.size() * n_, 0.0);
    for (std::size_t q = 0; q < src.size(); ++q) {
      if (src[q].is_constant())
        val[q] = src[q].constant_value();
      else
        var.push_back(static_cast<int>(q));
    }
  };
  std::vector<double> unused;
  fill(model.rho_all(), rho_, rho_grad_, rho_var_);
  fill(model.c_all(), c_, unused, c_var_);
  fill(model.gamma_all(), gamma_, gamma_grad_, gamma_var_);
}

void CoefficientEvaluator::at(std::span<const double> x, bool gradients) {
  const auto& rho = model_.rho_all();
  const auto& gam = model_.gamma_all();
  const auto& c = model_.c_all();
  if (gradients) {
    for (int q : rho_var_) rho_[q] = rho[q].eval_grad(x, std::span<double>(&rho_grad_[q * n_], n_));
    for (int q : gamma_var_) gamma_[q] = gam[q].eval_grad(x, std::span<double>(&gamma_grad_[q * n_], n_));
  } else {
    for (int q : rho_var_) rho_[q] = rho[q].eval(x);
    for (int q : gamma_var_) gamma_[q] = gam[q].eval(x);
  }
  for (int q : c_var_) c_[q] = c[q].eval(x);
}

// --- anchor and bracket -----------------------------------------------------

Vec anchor_apply(const AlgebroidModel& model, const ArrowPoint& a) {
  CoefficientEvaluator ce(model);
  ce.at(std::span<const double>(a.x.data(), a.x.size()), false);
  Vec out = Vec::Zero(model.n());
  for (int i = 0; i < model.n(); ++i)
    for (int k = 0; k < model.r(); ++k) out[i] += ce.rho(i, k) * a.xi[k];
  return out;
}

SectionJet section_jet(const SectionSpec& s, std::span<const double> x, int r) {
  if (static_cast<int>(s.coeff.size()) != r) throw InvalidParams("section has wrong number of coefficients");
  const int n = static_cast<int>(x.size());
  SectionJet j{Vec::Zero(r), Mat::Zero(r, n)};
  std::array<double, kMaxJetDim> g{};
  for (int m = 0; m < r; ++m) {
    const Expression& e = s.coeff[m];
    if (e.is_constant()) {
      j.value[m] = e.constant_value();
      continue;
    }
    const Expression full = e.dimension() == n ? e : e.with_dimension(n);
    j.value[m] = full.eval_grad(x, std::span<double>(g.data(), n));
    for (int i = 0; i < n; ++i) j.jac(m, i) = g[i];
  }
  return j;
}

SectionSpec constant_section(const Vec& values, int n) {
  SectionSpec s;
  for (int m = 0; m < values.size(); ++m) s.coeff.push_back(Expression::constant(values[m], n));
  return s;
}

Vec bracket_from_jets(const CoefficientEvaluator& ce, int n, int r, const SectionJet& a, const SectionJet& b) {
  Vec out = Vec::Zero(r);
  for (int m = 0; m < r; ++m)
    for (int k = 0; k < r; ++k)
      for (int l = 0; l < r; ++l) out[m] += ce.c(m, k, l) * a.value[k] * b.value[l];
  if (n == 0) return out;
  Vec ra = Vec::Zero(n), rb = Vec::Zero(n);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < r; ++k) {
      ra[i] += ce.rho(i, k) * a.value[k];
      rb[i] += ce.rho(i, k) * b.value[k];
    }
  out += b.jac * ra - a.jac * rb;
  return out;
}

Vec bracket(const AlgebroidModel& model, const SectionSpec& s1, const SectionSpec& s2, std::span<const double> x) {
  model.require_chart(x, "bracket");
  CoefficientEvaluator ce(model);
  ce.at(x, false);
  return bracket_from_jets(ce, model.n(), model.r(), section_jet(s1, x, model.r()), section_jet(s2, x, model.r()));
}

// --- axioms -----------------------------------------------------------------

SectionSpec symbolic_bracket(const AlgebroidModel& model, const SectionSpec& a, const SectionSpec& b) {
  const int n = model.n(), r = model.r();
  if (static_cast<int>(a.coeff.size()) != r || static_cast<int>(b.coeff.size()) != r)
    throw InvalidParams("symbolic_bracket: sections need r coefficients");
  const auto add = [](Expression& sum, const Expression& term) {
    if (!term.is_zero()) sum = sum.is_zero() ? term : sum + term;
  };
  const auto mul = [n](const Expression& u, const Expression& v) {
    return (u.is_zero() || v.is_zero()) ? Expression::constant(0.0, n) : u * v;
  };
  // rho(a)^i and rho(b)^i
  std::vector<Expression> ra(static_cast<std::size_t>(n), Expression::constant(0.0, n)), rb = ra;
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < r; ++k) {
      add(ra[static_cast<std::size_t>(i)], mul(model.rho(i, k), a.coeff[static_cast<std::size_t>(k)]));
      add(rb[static_cast<std::size_t>(i)], mul(model.rho(i, k), b.coeff[static_cast<std::size_t>(k)]));
    }
  SectionSpec out;
  for (int m = 0; m < r; ++m) {
    Expression sum = Expression::constant(0.0, n);
    for (int k = 0; k < r; ++k)
      for (int l = 0; l < r; ++l)
        add(sum, mul(model.c(m, k, l), mul(a.coeff[static_cast<std::size_t>(k)], b.coeff[static_cast<std::size_t>(l)])));
    for (int i = 0; i < n; ++i) {
      add(sum, mul(ra[static_cast<std::size_t>(i)], b.coeff[static_cast<std::size_t>(m)].derivative(i)));
      add(sum, -mul(rb[static_cast<std::size_t>(i)], a.coeff[static_cast<std::size_t>(m)].derivative(i)));
    }
    out.coeff.push_back(sum);
  }
  return out;
}

AxiomReport validate_axioms(const AlgebroidModel& model, int samples, std::uint64_t seed, double tolerance) {
  if (samples < 1) throw InvalidParams("validate_axioms: samples must be >= 1");
  const int n = model.n(), r = model.r();
  constexpr int kSections = 8;
  std::mt19937_64 rng(seed);
  const std::vector<SectionSpec> sections = random_sections(n, r, kSections, rng);
  const std::vector<Vec> points = sample_points(model, samples);

  AxiomReport rep;
  rep.tolerance = tolerance;
  rep.points = static_cast<int>(points.size());
  rep.sections = kSections;

  // Inner brackets as expressions, so the Jacobiator needs no finite
  // differences; the entry for (p, q) with p > q is the negated one.
  std::vector<SectionSpec> inner(kSections * kSections);
  const auto pair_index = [](int p, int q) { return static_cast<std::size_t>(p * kSections + q); };
  for (int p = 0; p < kSections; ++p)
    for (int q = p + 1; q < kSections; ++q) {
      inner[pair_index(p, q)] = symbolic_bracket(model, sections[p], sections[q]);
      for (const Expression& e : inner[pair_index(p, q)].coeff) inner[pair_index(q, p)].coeff.push_back(-e);
    }

  CoefficientEvaluator ce(model);
  for (const Vec& xv : points) {
    const std::span<const double> x(xv.data(), n);
    ce.at(x, true);
    for (int m = 0; m < r; ++m)
      for (int k = 0; k < r; ++k)
        for (int l = 0; l < r; ++l)
          rep.antisymmetry = std::max(rep.antisymmetry, std::abs(ce.c(m, k, l) + ce.c(m, l, k)));

    std::vector<SectionJet> jets;
    for (const SectionSpec& s : sections) jets.push_back(section_jet(s, x, r));

    // Vector fields rho(alpha) with their Jacobians.
    std::vector<Vec> field(kSections, Vec::Zero(n));
    std::vector<Mat> field_jac(kSections, Mat::Zero(n, n));
    for (int s = 0; s < kSections; ++s)
      for (int i = 0; i < n; ++i)
        for (int k = 0; k < r; ++k) {
          field[s][i] += ce.rho(i, k) * jets[s].value[k];
          for (int j = 0; j < n; ++j)
            field_jac[s](i, j) += ce.rho_grad(i, k, j) * jets[s].value[k] + ce.rho(i, k) * jets[s].jac(k, j);
        }

    for (int a = 0; a < kSections; ++a)
      for (int b = a + 1; b < kSections; ++b) {
        const Vec br = bracket_from_jets(ce, n, r, jets[a], jets[b]);
        Vec lhs = Vec::Zero(n);
        for (int i = 0; i < n; ++i)
          for (int k = 0; k < r; ++k) lhs[i] += ce.rho(i, k) * br[k];
        const Vec vf = field_jac[b] * field[a] - field_jac[a] * field[b];
        if (n > 0) rep.anchor = std::max(rep.anchor, (lhs - vf).lpNorm<Eigen::Infinity>());
      }

    for (int a = 0; a < kSections; ++a)
      for (int b = a + 1; b < kSections; ++b)
        for (int c = b + 1; c < kSections; ++c) {
          const auto jet = [&](int p, int q) { return section_jet(inner[pair_index(p, q)], x, r); };
          const Vec jac = bracket_from_jets(ce, n, r, jets[a], jet(b, c)) +
                          bracket_from_jets(ce, n, r, jets[b], jet(c, a)) +
                          bracket_from_jets(ce, n, r, jets[c], jet(a, b));
          rep.jacobi = std::max(rep.jacobi, jac.lpNorm<Eigen::Infinity>());
        }
  }
  return rep;
}

std::vector<double> torsion(const AlgebroidModel& model, std::span<const double> x) {
  model.require_chart(x, "torsion");
  const int r = model.r();
  CoefficientEvaluator ce(model);
  ce.at(x, false);
  std::vector<double> t(static_cast<std::size_t>(r) * r * r);
  for (int m = 0; m < r; ++m)
    for (int k = 0; k < r; ++k)
      for (int l = 0; l < r; ++l) t[(m * r + k) * r + l] = ce.gamma(m, k, l) - ce.gamma(m, l, k) - ce.c(m, k, l);
  return t;
}

double max_torsion(const AlgebroidModel& model, int samples, std::uint64_t /*seed*/) {
  double worst = 0.0;
  for (const Vec& x : sample_points(model, samples))
    for (double v : torsion(model, std::span<const double>(x.data(), x.size()))) worst = std::max(worst, std::abs(v));
  return worst;
}

// --- builtins ---------------------------------------------------------------

std::vector<double> so3_structure_constants() {
  std::vector<double> c(27, 0.0);
  const auto set = [&](int m, int k, int l, double v) { c[(m * 3 + k) * 3 + l] = v; };
  // [e1,e2] = e3 and cyclic.
  set(2, 0, 1, 1.0);
  set(2, 1, 0, -1.0);
  set(0, 1, 2, 1.0);
  set(0, 2, 1, -1.0);
  set(1, 2, 0, 1.0);
  set(1, 0, 2, -1.0);
  return c;
}

std::vector<double> sl2_structure_constants() {
  std::vector<double> c(27, 0.0);
  const auto set = [&](int m, int k, int l, double v) {
    c[(m * 3 + k) * 3 + l] = v;
    c[(m * 3 + l) * 3 + k] = -v;
  };
  set(1, 0, 1, 2.0);   // [H,E] = 2E
  set(2, 0, 2, -2.0);  // [H,F] = -2F
  set(0, 1, 2, 1.0);   // [E,F] = H
  return c;
}

std::vector<Expression> half_structure(const std::vector<Expression>& c) {
  std::vector<Expression> g;
  g.reserve(c.size());
  for (const Expression& e : c) g.push_back(0.5 * e);
  return g;
}

AlgebroidModel lie_algebra_model(std::string name, int r, const std::vector<double>& c, double fiber_radius) {
  if (static_cast<int>(c.size()) != r * r * r) throw InvalidParams("lie_algebra: need r^3 structure constants");
  std::vector<Expression> ce;
  for (double v : c) ce.push_back(Expression::constant(v, 0));
  std::vector<Expression> gamma = half_structure(ce);
  return AlgebroidModel(std::move(name), 0, r, {}, std::move(ce), std::move(gamma), {}, fiber_radius);
}

AlgebroidModel tangent_model(int n, std::vector<Interval> box, double fiber_radius) {
  if (n < 1) throw InvalidParams("tangent: n must be >= 1");
  if (box.empty()) box = default_box(n, 10.0);
  std::vector<Expression> rho(static_cast<std::size_t>(n) * n, Expression::constant(0.0, n));
  for (int i = 0; i < n; ++i) rho[i * n + i] = Expression::constant(1.0, n);
  const std::vector<Expression> zero(static_cast<std::size_t>(n) * n * n, Expression::constant(0.0, n));
  return AlgebroidModel("tangent", n, n, std::move(rho), zero, zero, std::move(box), fiber_radius);
}

AlgebroidModel cotangent_poisson_model(std::string name, int n, const std::vector<Expression>& pi,
                                       std::vector<Interval> box, double fiber_radius) {
  if (n < 1) throw InvalidParams("cotangent_poisson: n must be >= 1");
  if (static_cast<int>(pi.size()) != n * n) throw InvalidParams("cotangent_poisson: pi needs n*n entries");
  if (box.empty()) box = default_box(n, 2.0);
  std::vector<Expression> p;
  for (const Expression& e : pi) {
    if (e.dimension() > n) throw InvalidParams("cotangent_poisson: pi uses more than n variables");
    p.push_back(e.with_dimension(n));
  }
  // Antisymmetry is a structural requirement; compare at a few points.
  for (const Vec& x : std::vector<Vec>{Vec::Zero(n), Vec::Constant(n, 0.37), Vec::LinSpaced(n, -0.8, 0.6)})
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const std::span<const double> xs(x.data(), n);
        if (std::abs(p[i * n + j].eval(xs) + p[j * n + i].eval(xs)) > 1e-12)
          throw InvalidParams("cotangent_poisson: pi must be antisymmetric");
      }
  std::vector<Expression> rho(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) rho[i * n + k] = p[k * n + i];
  std::vector<Expression> c(static_cast<std::size_t>(n) * n * n);
  for (int m = 0; m < n; ++m)
    for (int k = 0; k < n; ++k)
      for (int l = 0; l < n; ++l) c[(m * n + k) * n + l] = p[k * n + l].derivative(m);
  std::vector<Expression> gamma = half_structure(c);
  return AlgebroidModel(std::move(name), n, n, std::move(rho), std::move(c), std::move(gamma), std::move(box),
                        fiber_radius);
}

AlgebroidModel so3_dual_model(std::vector<Interval> box, double fiber_radius) {
  const std::vector<double> eps = so3_structure_constants();  // eps[(k*3+i)*3+j] = eps_ijk
  std::vector<Expression> pi(9, Expression::constant(0.0, 3));
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) {
        const double e = eps[(k * 3 + i) * 3 + j];
        if (e != 0.0) pi[i * 3 + j] = pi[i * 3 + j] + (-e) * Expression::variable(k, 3);
      }
  return cotangent_poisson_model("so3_dual", 3, pi, std::move(box), fiber_radius);
}

AlgebroidModel change_frame(const AlgebroidModel& model, const Mat& frame) {
  const int n = model.n(), r = model.r();
  if (frame.rows() != r || frame.cols() != r) throw InvalidParams("change_frame: frame must be r x r");
  Eigen::FullPivLU<Mat> lu(frame);
  if (!lu.isInvertible()) throw InvalidParams("change_frame: frame is singular");
  const Mat inv = lu.inverse();
  const auto lin = [&](const std::vector<std::pair<double, const Expression*>>& terms) {
    Expression acc = Expression::constant(0.0, n);
    for (const auto& [w, e] : terms)
      if (w != 0.0 && !e->is_zero()) acc = acc + w * *e;
    return acc;
  };
  std::vector<Expression> rho(static_cast<std::size_t>(n) * r);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < r; ++k) {
      std::vector<std::pair<double, const Expression*>> t;
      for (int j = 0; j < r; ++j) t.emplace_back(frame(j, k), &model.rho(i, j));
      rho[i * r + k] = lin(t);
    }
  const auto tensor = [&](const std::vector<Expression>& src) {
    std::vector<Expression> out(static_cast<std::size_t>(r) * r * r);
    for (int m = 0; m < r; ++m)
      for (int k = 0; k < r; ++k)
        for (int l = 0; l < r; ++l) {
          std::vector<std::pair<double, const Expression*>> t;
          for (int a = 0; a < r; ++a)
            for (int b = 0; b < r; ++b)
              for (int c = 0; c < r; ++c)
                t.emplace_back(inv(m, a) * frame(b, k) * frame(c, l), &src[(a * r + b) * r + c]);
          out[(m * r + k) * r + l] = lin(t);
        }
    return out;
  };
  // With a constant frame both c and Gamma transform tensorially. The fiber
  // radius is enlarged so the old validity ball maps inside the new one.
  return AlgebroidModel(model.name() + "_reframed", n, r, std::move(rho), tensor(model.c_all()),
                        tensor(model.gamma_all()), model.chart_box(), model.fiber_radius() * inv.operatorNorm());
}

// --- sampling ---------------------------------------------------------------

std::vector<Vec> sample_points(const AlgebroidModel& model, int count) {
  const int n = model.n();
  if (n == 0) return {Vec::Zero(0)};
  static constexpr std::array<int, kMaxJetDim> kPrimes{2, 3, 5, 7, 11, 13, 17, 19};
  std::vector<Vec> pts;
  pts.reserve(count);
  for (int q = 1; q <= count; ++q) {
    Vec x(n);
    for (int i = 0; i < n; ++i) {
      double f = 1.0, h = 0.0;
      for (int v = q; v > 0; v /= kPrimes[i]) {
        f /= kPrimes[i];
        h += f * (v % kPrimes[i]);
      }
      const Interval& iv = model.chart_box()[i];
      x[i] = iv.lo + (iv.hi - iv.lo) * (0.05 + 0.9 * h);
    }
    pts.push_back(std::move(x));
  }
  return pts;
}

Expression random_polynomial(int n, int degree, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  Expression p = Expression::constant(coef(rng), n);
  if (degree >= 1)
    for (int i = 0; i < n; ++i) p = p + coef(rng) * Expression::variable(i, n);
  if (degree >= 2)
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) p = p + coef(rng) * (Expression::variable(i, n) * Expression::variable(j, n));
  return p;
}

std::vector<SectionSpec> random_sections(int n, int r, int count, std::mt19937_64& rng) {
  std::vector<SectionSpec> out(count);
  for (SectionSpec& s : out)
    for (int m = 0; m < r; ++m) s.coeff.push_back(random_polynomial(n, 2, rng));
  return out;
}

}  // namespace sprayoid
