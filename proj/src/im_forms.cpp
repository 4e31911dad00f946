#include "sprayoid/im_forms.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sprayoid/errors.hpp"
#include "sprayoid/ode.hpp"
#include "sprayoid/spray_flow.hpp"
#include "sprayoid/spray_groupoid.hpp"

namespace sprayoid {

std::vector<std::vector<int>> multi_indices(int n, int p) {
  std::vector<std::vector<int>> out;
  if (p < 0 || p > n) return out;
  std::vector<int> cur(p);
  for (int i = 0; i < p; ++i) cur[i] = i;
  for (;;) {
    out.push_back(cur);
    int i = p - 1;
    while (i >= 0 && cur[i] == n - p + i) --i;
    if (i < 0) break;
    ++cur[i];
    for (int j = i + 1; j < p; ++j) cur[j] = cur[j - 1] + 1;
  }
  return out;
}

double minor_det(const std::vector<int>& index, const std::vector<const Vec*>& vs) {
  const int p = static_cast<int>(index.size());
  const auto e = [&](int a, int b) { return (*vs[b])[index[a]]; };
  switch (p) {
    case 0:
      return 1.0;
    case 1:
      return e(0, 0);
    case 2:
      return e(0, 0) * e(1, 1) - e(0, 1) * e(1, 0);
    case 3:
      return e(0, 0) * (e(1, 1) * e(2, 2) - e(1, 2) * e(2, 1)) - e(0, 1) * (e(1, 0) * e(2, 2) - e(1, 2) * e(2, 0)) +
             e(0, 2) * (e(1, 0) * e(2, 1) - e(1, 1) * e(2, 0));
    default: {
      Mat m(p, p);
      for (int a = 0; a < p; ++a)
        for (int b = 0; b < p; ++b) m(a, b) = e(a, b);
      return m.determinant();
    }
  }
}

// --- IMForm -----------------------------------------------------------------

IMForm IMForm::zero(int k, int n, int r) {
  if (k < 1) throw InvalidParams("IM form degree must be >= 1");
  IMForm f;
  f.k = k;
  f.n = n;
  f.r = r;
  f.sigma_index = multi_indices(n, k - 1);
  f.nu_index = multi_indices(n, k);
  f.sigma.assign(r, std::vector<Expression>(f.sigma_index.size(), Expression::constant(0.0, n)));
  f.nu.assign(r, std::vector<Expression>(f.nu_index.size(), Expression::constant(0.0, n)));
  return f;
}

bool IMForm::nu_vanishes() const {
  for (const auto& row : nu)
    for (const Expression& e : row)
      if (!e.is_zero()) return false;
  return true;
}

void IMForm::check(const AlgebroidModel& model) const {
  if (k < 1) throw InvalidParams("IM form degree must be >= 1");
  if (n != model.n() || r != model.r()) throw InvalidParams("IM form dimensions do not match the model");
  if (sigma_index != multi_indices(n, k - 1) || nu_index != multi_indices(n, k))
    throw InvalidParams("IM form multi-index sets are incomplete or out of order");
  if (static_cast<int>(sigma.size()) != r || static_cast<int>(nu.size()) != r)
    throw InvalidParams("IM form needs one coefficient row per fiber direction");
  for (int q = 0; q < r; ++q) {
    if (sigma[q].size() != sigma_index.size() || nu[q].size() != nu_index.size())
      throw InvalidParams("IM form coefficient row has wrong length");
    for (const Expression& e : sigma[q])
      if (e.dimension() > n) throw InvalidParams("IM form coefficient uses more than n variables");
    for (const Expression& e : nu[q])
      if (e.dimension() > n) throw InvalidParams("IM form coefficient uses more than n variables");
  }
}

IMForm identity_sigma_form(int n) {
  IMForm f = IMForm::zero(2, n, n);
  for (int q = 0; q < n; ++q) f.sigma[q][q] = Expression::constant(1.0, n);
  return f;
}

IMForm change_frame(const IMForm& f, const Mat& frame) {
  if (frame.rows() != f.r || frame.cols() != f.r) throw InvalidParams("change_frame: frame must be r x r");
  IMForm out = f;
  const auto mix = [&](const std::vector<std::vector<Expression>>& old, std::vector<std::vector<Expression>>& fresh) {
    for (int m = 0; m < f.r; ++m)
      for (std::size_t I = 0; I < fresh[static_cast<std::size_t>(m)].size(); ++I) {
        Expression e = Expression::constant(0.0, f.n);
        for (int j = 0; j < f.r; ++j)
          if (frame(j, m) != 0.0 && !old[static_cast<std::size_t>(j)][I].is_zero())
            e = e + frame(j, m) * old[static_cast<std::size_t>(j)][I];
        fresh[static_cast<std::size_t>(m)][I] = e;
      }
  };
  mix(f.sigma, out.sigma);
  mix(f.nu, out.nu);
  return out;
}

// --- form jets --------------------------------------------------------------

double FormJet::eval(const std::vector<const Vec*>& vs) const {
  const auto idx = multi_indices(static_cast<int>(grad.cols()), p);
  double s = 0.0;
  for (std::size_t I = 0; I < idx.size(); ++I)
    if (value[I] != 0.0) s += value[I] * minor_det(idx[I], vs);
  return s;
}

double FormJet::d_eval(const std::vector<const Vec*>& vs) const {
  const auto idx = multi_indices(static_cast<int>(grad.cols()), p);
  double s = 0.0;
  std::vector<const Vec*> rest(vs.size() - 1);
  for (std::size_t i = 0; i < vs.size(); ++i) {
    for (std::size_t j = 0, q = 0; j < vs.size(); ++j)
      if (j != i) rest[q++] = vs[j];
    const double sign = (i % 2 == 0) ? 1.0 : -1.0;
    for (std::size_t I = 0; I < idx.size(); ++I) {
      const double dir = grad.row(static_cast<Eigen::Index>(I)).dot(*vs[i]);
      if (dir != 0.0) s += sign * dir * minor_det(idx[I], rest);
    }
  }
  return s;
}

double FormJet::lie_eval(const Vec& field, const Mat& field_jac, const std::vector<const Vec*>& vs) const {
  const auto idx = multi_indices(static_cast<int>(grad.cols()), p);
  double s = 0.0;
  for (std::size_t I = 0; I < idx.size(); ++I) {
    const double dir = grad.row(static_cast<Eigen::Index>(I)).dot(field);
    if (dir != 0.0) s += dir * minor_det(idx[I], vs);
  }
  std::vector<const Vec*> moved = vs;
  for (std::size_t i = 0; i < vs.size(); ++i) {
    const Vec pushed = field_jac * *vs[i];
    moved[i] = &pushed;
    s += eval(moved);
    moved[i] = vs[i];
  }
  return s;
}

namespace {

/// Coefficient values [q][I] and gradients [q] (rows I) of a form family.
struct Family {
  std::vector<std::vector<double>> value;
  std::vector<Mat> grad;
};

Family family_at(const std::vector<std::vector<Expression>>& coeffs, int n, std::span<const double> x) {
  Family fam;
  std::array<double, kMaxJetDim> g{};
  for (const auto& row : coeffs) {
    std::vector<double> v(row.size(), 0.0);
    Mat gr = Mat::Zero(static_cast<Eigen::Index>(row.size()), n);
    for (std::size_t I = 0; I < row.size(); ++I) {
      if (row[I].is_constant()) {
        v[I] = row[I].constant_value();
        continue;
      }
      g.fill(0.0);
      v[I] = row[I].eval_grad(x, std::span<double>(g.data(), n));
      for (int j = 0; j < n; ++j) gr(static_cast<Eigen::Index>(I), j) = g[j];
    }
    fam.value.push_back(std::move(v));
    fam.grad.push_back(std::move(gr));
  }
  return fam;
}

/// The form field sum_q s^q family_q for a section jet s.
FormJet contract(const Family& fam, int p, int n, const Vec& s_value, const Mat& s_jac) {
  FormJet out;
  out.p = p;
  const std::size_t count = fam.value.empty() ? 0 : fam.value[0].size();
  out.value.assign(count, 0.0);
  out.grad = Mat::Zero(static_cast<Eigen::Index>(count), n);
  for (std::size_t q = 0; q < fam.value.size(); ++q) {
    for (std::size_t I = 0; I < count; ++I) {
      out.value[I] += s_value[q] * fam.value[q][I];
      out.grad.row(static_cast<Eigen::Index>(I)) +=
          s_value[q] * fam.grad[q].row(static_cast<Eigen::Index>(I)) + fam.value[q][I] * s_jac.row(q);
    }
  }
  return out;
}

/// Evaluates omega on the total space, reusing nothing but the form data.
class LinearForm {
 public:
  LinearForm(const IMForm& f) : f_(f) {}

  double operator()(const double* x, const double* xi, const std::vector<const Vec*>& dx,
                    const std::vector<const Vec*>& dxi) const {
    const int n = f_.n, r = f_.r, k = f_.k;
    const std::span<const double> xs(x, n);
    const Family sig = family_at(f_.sigma, n, xs);
    double dl = 0.0;
    std::vector<const Vec*> rest(k - 1);
    for (int i = 0; i < k; ++i) {
      for (int j = 0, q = 0; j < k; ++j)
        if (j != i) rest[q++] = dx[j];
      const double sign = (i % 2 == 0) ? 1.0 : -1.0;
      for (std::size_t I = 0; I < f_.sigma_index.size(); ++I) {
        double coef = 0.0;
        for (int m = 0; m < r; ++m) {
          coef += (*dxi[i])[m] * sig.value[m][I];
          if (n > 0 && xi[m] != 0.0) coef += xi[m] * sig.grad[m].row(static_cast<Eigen::Index>(I)).dot(*dx[i]);
        }
        if (coef != 0.0) dl += sign * coef * minor_det(f_.sigma_index[I], rest);
      }
    }
    double nt = 0.0;
    for (std::size_t J = 0; J < f_.nu_index.size(); ++J) {
      double coef = 0.0;
      for (int m = 0; m < r; ++m)
        if (xi[m] != 0.0 && !f_.nu[m][J].is_zero()) coef += xi[m] * f_.nu[m][J].eval(xs);
      if (coef != 0.0) nt += coef * minor_det(f_.nu_index[J], dx);
    }
    return -(dl + nt);
  }

 private:
  const IMForm& f_;
};

void check_tangents(const AlgebroidModel& model, const std::vector<TangentOfA>& vs, std::size_t expected) {
  if (vs.size() != expected)
    throw InvalidParams("expected " + std::to_string(expected) + " tangent vectors, got " + std::to_string(vs.size()));
  for (const TangentOfA& v : vs)
    if (v.dx.size() != model.n() || v.dxi.size() != model.r()) throw InvalidParams("tangent vector has wrong dimensions");
}

/// Integrates omega along the geodesic of a with the given seeds carried by
/// the variational equation; `tuples` lists which seeds feed each value.
std::vector<double> integrate_tuples(const AlgebroidModel& model, const IMForm& f, const ArrowPoint& a,
                                     const std::vector<TangentOfA>& seeds, const std::vector<std::vector<int>>& tuples,
                                     const Numerics& num) {
  num.check();
  f.check(model);
  const int n = model.n(), r = model.r(), d = n + r;
  const int s = static_cast<int>(seeds.size());
  SprayEngine eng(model);
  const LinearForm omega(f);
  Vec y(d * (s + 1));
  y.head(d) = stack(a);
  for (int q = 0; q < s; ++q) y.segment(d * (q + 1), d) = stack(seeds[q]);
  eng.require_domain(y.data(), "integrate_form");

  const int panels = num.quad_nodes - 1;
  const int sub = steps_for(1.0 / panels, num.rk_step);
  const double h = 1.0 / (static_cast<double>(panels) * sub);
  const Vec w = simpson_weights(num.quad_nodes);

  std::vector<double> acc(tuples.size(), 0.0);
  std::vector<Vec> dx(s), dxi(s);
  const auto sample = [&](int node) {
    for (int q = 0; q < s; ++q) {
      dx[q] = y.segment(d * (q + 1), n);
      dxi[q] = y.segment(d * (q + 1) + n, r);
    }
    for (std::size_t t = 0; t < tuples.size(); ++t) {
      std::vector<const Vec*> px, pxi;
      for (int q : tuples[t]) {
        px.push_back(&dx[q]);
        pxi.push_back(&dxi[q]);
      }
      acc[t] += w[node] * omega(y.data(), y.data() + n, px, pxi);
    }
  };

  Mat jac(d, d);
  Rk4 rk(y.size());
  auto rhs = [&](const Vec& st, Vec& ds) {
    eng.load(st.data(), true);
    eng.field(st.data() + n, ds.data());
    eng.jacobian(st.data() + n, jac);
    Eigen::Map<const Mat> v(st.data() + d, d, s);
    Eigen::Map<Mat> dv(ds.data() + d, d, s);
    dv.noalias() = jac * v;
  };
  sample(0);
  for (int j = 1; j <= panels; ++j) {
    for (int q = 0; q < sub; ++q) {
      rk.step(rhs, y, h);
      eng.require_domain(y.data(), "integrate_form");
    }
    sample(j);
  }
  return acc;
}

std::vector<int> iota(int k) {
  std::vector<int> v(k);
  for (int i = 0; i < k; ++i) v[i] = i;
  return v;
}

ArrowPoint shifted(const ArrowPoint& a, const TangentOfA& v, double h) { return {a.x + h * v.dx, a.xi + h * v.dxi}; }

}  // namespace

// --- residuals of the structure equations -----------------------------------

IMResidualReport im_residuals(const AlgebroidModel& model, const IMForm& f, const std::vector<SectionSpec>& sections,
                              const std::vector<Vec>& xs) {
  f.check(model);
  const int n = model.n(), r = model.r(), k = f.k;
  IMResidualReport rep;
  rep.points = static_cast<int>(xs.size());
  rep.pairs = static_cast<int>(sections.size() * sections.size());
  std::vector<Vec> basis(n, Vec::Zero(n));
  for (int j = 0; j < n; ++j) basis[j][j] = 1.0;
  const auto tuple_vectors = [&](const Vec* first, const std::vector<int>& idx) {
    std::vector<const Vec*> v;
    if (first) v.push_back(first);
    for (int j : idx) v.push_back(&basis[j]);
    return v;
  };
  const auto idx0 = multi_indices(n, k - 2);
  const auto idx1 = multi_indices(n, k - 1);
  const auto idx2 = multi_indices(n, k);

  CoefficientEvaluator ce(model);
  for (const Vec& x : xs) {
    const std::span<const double> xsp = as_span(x);
    model.require_chart(xsp, "im_residuals");
    ce.at(xsp, true);
    const Family sig = family_at(f.sigma, n, xsp);
    const Family nu = family_at(f.nu, n, xsp);
    std::vector<SectionJet> jets;
    std::vector<Vec> field;
    std::vector<Mat> field_jac;
    for (const SectionSpec& s : sections) {
      jets.push_back(section_jet(s, xsp, r));
      Vec X = Vec::Zero(n);
      Mat DX = Mat::Zero(n, n);
      for (int i = 0; i < n; ++i)
        for (int q = 0; q < r; ++q) {
          X[i] += ce.rho(i, q) * jets.back().value[q];
          for (int j = 0; j < n; ++j)
            DX(i, j) += ce.rho_grad(i, q, j) * jets.back().value[q] + ce.rho(i, q) * jets.back().jac(q, j);
        }
      field.push_back(std::move(X));
      field_jac.push_back(std::move(DX));
    }
    for (std::size_t a = 0; a < sections.size(); ++a) {
      const FormJet sa = contract(sig, k - 1, n, jets[a].value, jets[a].jac);
      const FormJet na = contract(nu, k, n, jets[a].value, jets[a].jac);
      for (std::size_t b = 0; b < sections.size(); ++b) {
        const FormJet sb = contract(sig, k - 1, n, jets[b].value, jets[b].jac);
        const FormJet nb = contract(nu, k, n, jets[b].value, jets[b].jac);
        const Vec br = bracket_from_jets(ce, n, r, jets[a], jets[b]);
        const FormJet sbr = contract(sig, k - 1, n, br, Mat::Zero(r, n));
        const FormJet nbr = contract(nu, k, n, br, Mat::Zero(r, n));
        const Vec& Xa = field[a];
        const Vec& Xb = field[b];
        for (const auto& J : idx0) {
          const double v = sa.eval(tuple_vectors(&Xb, J)) + sb.eval(tuple_vectors(&Xa, J));
          rep.im0 = std::max(rep.im0, std::abs(v));
        }
        for (const auto& J : idx1) {
          const auto plain = tuple_vectors(nullptr, J);
          const auto with_b = tuple_vectors(&Xb, J);
          double v = sbr.eval(plain) - sb.lie_eval(Xa, field_jac[a], plain) + sa.d_eval(with_b);
          if (!idx2.empty()) v += na.eval(with_b);
          rep.im1 = std::max(rep.im1, std::abs(v));
        }
        for (const auto& J : idx2) {
          const auto plain = tuple_vectors(nullptr, J);
          const double v =
              nbr.eval(plain) - nb.lie_eval(Xa, field_jac[a], plain) + na.d_eval(tuple_vectors(&Xb, J));
          rep.im2 = std::max(rep.im2, std::abs(v));
        }
      }
    }
  }
  return rep;
}

// --- linear and integrated forms --------------------------------------------

double linear_form_eval(const AlgebroidModel& model, const IMForm& f, const ArrowPoint& a,
                        const std::vector<TangentOfA>& vs) {
  f.check(model);
  check_tangents(model, vs, static_cast<std::size_t>(f.k));
  model.require_domain(a, "linear_form_eval");
  // Evaluate on the vectors in a canonical order and apply the sign of the
  // sorting permutation, so a swap negates the result bit for bit.
  std::vector<std::size_t> order(vs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto key_less = [&](std::size_t p, std::size_t q) {
    const Vec& a1 = vs[p].dx;
    const Vec& b1 = vs[q].dx;
    if (!(a1 == b1))
      return std::lexicographical_compare(a1.data(), a1.data() + a1.size(), b1.data(), b1.data() + b1.size());
    return std::lexicographical_compare(vs[p].dxi.data(), vs[p].dxi.data() + vs[p].dxi.size(), vs[q].dxi.data(),
                                        vs[q].dxi.data() + vs[q].dxi.size());
  };
  double sign = 1.0;
  for (std::size_t i = 1; i < order.size(); ++i)
    for (std::size_t j = i; j > 0 && key_less(order[j], order[j - 1]); --j) {
      std::swap(order[j], order[j - 1]);
      sign = -sign;
    }
  std::vector<const Vec*> dx, dxi;
  for (std::size_t q : order) {
    dx.push_back(&vs[q].dx);
    dxi.push_back(&vs[q].dxi);
  }
  return sign * LinearForm(f)(a.x.data(), a.xi.data(), dx, dxi);
}

double integrate_form(const AlgebroidModel& model, const IMForm& f, const ArrowPoint& a,
                      const std::vector<TangentOfA>& vs, const Numerics& num) {
  check_tangents(model, vs, static_cast<std::size_t>(f.k));
  return integrate_tuples(model, f, a, vs, {iota(f.k)}, num)[0];
}

Mat form_matrix(const AlgebroidModel& model, const IMForm& f, const ArrowPoint& a, const Numerics& num) {
  if (f.k != 2) throw PreconditionError("form_matrix needs a 2-form");
  const int n = model.n(), r = model.r(), d = n + r;
  std::vector<TangentOfA> basis;
  for (int q = 0; q < d; ++q) {
    Vec e = Vec::Zero(d);
    e[q] = 1.0;
    basis.push_back(unstack_tangent(e, n, r));
  }
  std::vector<std::vector<int>> pairs;
  for (int p = 0; p < d; ++p)
    for (int q = p + 1; q < d; ++q) pairs.push_back({p, q});
  const std::vector<double> vals = integrate_tuples(model, f, a, basis, pairs, num);
  Mat m = Mat::Zero(d, d);
  for (std::size_t t = 0; t < pairs.size(); ++t) {
    m(pairs[t][0], pairs[t][1]) = vals[t];
    m(pairs[t][1], pairs[t][0]) = -vals[t];
  }
  return m;
}

Vec source_differential(const AlgebroidModel& model, const ArrowPoint& a, const TangentOfA& w, const Numerics& num) {
  return variational_flow(model, a, {w}, 1.0, num.rk_step).tangents[0].dx;
}

TangentOfA product_differential(const AlgebroidModel& model, const ArrowPoint& v1, const ArrowPoint& v2,
                                const TangentPair& w, const Numerics& num) {
  const double h = num.fd_step;
  ArrowPoint prod[2];
  for (int side = 0; side < 2; ++side) {
    const double s = side == 0 ? h : -h;
    const ArrowPoint a1 = shifted(v1, w.first, s);
    const ArrowPoint a2{source(model, a1, num), v2.xi + s * w.second.dxi};
    prod[side] = multiply(model, a1, a2, num);
  }
  return {(prod[0].x - prod[1].x) / (2 * h), (prod[0].xi - prod[1].xi) / (2 * h)};
}

double multiplicativity_residual(const AlgebroidModel& model, const IMForm& f, const ArrowPoint& v1,
                                 const ArrowPoint& v2, const std::vector<TangentPair>& pairs, const Numerics& num) {
  if (static_cast<int>(pairs.size()) != f.k) throw InvalidParams("multiplicativity_residual needs k tangent pairs");
  const ArrowPoint m = multiply(model, v1, v2, num);
  std::vector<TangentOfA> firsts, seconds, products;
  for (const TangentPair& p : pairs) {
    TangentPair proj = p;
    proj.second.dx = source_differential(model, v1, p.first, num);
    firsts.push_back(proj.first);
    seconds.push_back(proj.second);
    products.push_back(product_differential(model, v1, v2, proj, num));
  }
  const double lhs = integrate_form(model, f, m, products, num);
  return std::abs(lhs - integrate_form(model, f, v1, firsts, num) - integrate_form(model, f, v2, seconds, num));
}

double closedness_residual(const AlgebroidModel& model, const IMForm& f, const ArrowPoint& a,
                           const std::vector<TangentOfA>& vs, const Numerics& num) {
  if (!f.nu_vanishes()) throw PreconditionError("closedness_residual requires nu = 0");
  check_tangents(model, vs, static_cast<std::size_t>(f.k + 1));
  const double h = num.fd_step;
  double total = 0.0;
  for (std::size_t i = 0; i < vs.size(); ++i) {
    std::vector<TangentOfA> rest;
    for (std::size_t j = 0; j < vs.size(); ++j)
      if (j != i) rest.push_back(vs[j]);
    const double up = integrate_form(model, f, shifted(a, vs[i], h), rest, num);
    const double down = integrate_form(model, f, shifted(a, vs[i], -h), rest, num);
    total += ((i % 2 == 0) ? 1.0 : -1.0) * (up - down) / (2 * h);
  }
  return std::abs(total);
}

double sigma_roundtrip(const AlgebroidModel& model, const IMForm& f, const Vec& x, const Numerics& num) {
  f.check(model);
  const int n = model.n(), r = model.r();
  const ArrowPoint u = unit(model, x);
  double worst = 0.0;
  for (int q = 0; q < r; ++q) {
    for (std::size_t I = 0; I < f.sigma_index.size(); ++I) {
      std::vector<TangentOfA> vs;
      Vec e = Vec::Zero(r);
      e[q] = 1.0;
      vs.push_back({Vec::Zero(n), e});
      for (int j : f.sigma_index[I]) {
        Vec b = Vec::Zero(n);
        b[j] = 1.0;
        vs.push_back({b, Vec::Zero(r)});
      }
      const double recovered = -integrate_form(model, f, u, vs, num);
      const double expected = f.sigma[q][I].eval(as_span(x));
      worst = std::max(worst, std::abs(recovered - expected));
    }
  }
  return worst;
}

}  // namespace sprayoid
