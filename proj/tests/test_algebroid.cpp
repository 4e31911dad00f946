#include <random>

#include <gtest/gtest.h>

#include "sprayoid/algebroid.hpp"
#include "sprayoid/errors.hpp"
#include "support.hpp"

namespace sprayoid {
namespace {

using testing::vec;

Expression k(double v, int n) { return Expression::constant(v, n); }

SectionSpec section(std::initializer_list<const char*> coeffs, int n) {
  SectionSpec s;
  for (const char* c : coeffs) s.coeff.push_back(parse_expr(c, n));
  return s;
}

Vec bracket_at(const AlgebroidModel& m, const SectionSpec& a, const SectionSpec& b, const Vec& x) {
  return bracket(m, a, b, as_span(x));
}

AlgebroidModel so3() { return lie_algebra_model("so3", 3, so3_structure_constants()); }

/// so(3) with the single entry c^3_12 replaced by `value`.
std::vector<double> perturbed_constants(double value) {
  std::vector<double> c = so3_structure_constants();
  c[(2 * 3 + 0) * 3 + 1] = value;
  return c;
}

TEST(Anchor, ZeroOnLieAlgebra) {
  const AlgebroidModel m = so3();
  EXPECT_EQ(anchor_apply(m, {Vec(0), vec({0.3, -1.0, 2.0})}).size(), 0);
}

TEST(Anchor, IdentityOnTangent) {
  const AlgebroidModel m = tangent_model(2);
  const Vec xi = vec({0.7, -0.2});
  EXPECT_EQ(anchor_apply(m, {vec({0.1, 0.5}), xi}), xi);
}

TEST(Anchor, LinearPoissonMatchesPiSharp) {
  // rho^i_k = eps_ikj x_j, so at x = e3 the image of e1 is eps_{i13} = (0, -1, 0).
  const AlgebroidModel m = so3_dual_model();
  const Vec img = anchor_apply(m, {vec({0, 0, 1}), vec({1, 0, 0})});
  EXPECT_NEAR((img - vec({0, -1, 0})).norm(), 0.0, 1e-15);
}

TEST(Bracket, ConstantSectionsOfSo3) {
  const AlgebroidModel m = so3();
  const Vec e3 = bracket_at(m, constant_section(vec({1, 0, 0}), 0), constant_section(vec({0, 1, 0}), 0), Vec(0));
  EXPECT_NEAR((e3 - vec({0, 0, 1})).norm(), 0.0, 1e-15);
}

TEST(Bracket, SelfBracketVanishes) {
  const AlgebroidModel m = so3_dual_model();
  const SectionSpec s = section({"x1*x2", "sin(x3)", "1 + x1^2"}, 3);
  EXPECT_LE(bracket_at(m, s, s, vec({0.2, -0.4, 0.9})).norm(), 1e-15);
}

TEST(Bracket, VectorFieldsOnTangentModel) {
  // [x2 d1, d2] = -d1
  const AlgebroidModel m = tangent_model(2);
  const Vec b = bracket_at(m, section({"x2", "0"}, 2), section({"0", "1"}, 2), vec({0.3, 0.6}));
  EXPECT_NEAR((b - vec({-1, 0})).norm(), 0.0, 1e-15);
}

TEST(Bracket, VectorFieldsAgreeWithFlowCommutator) {
  // For vector fields X, Y the commutator of flows satisfies
  // phi^Y_{-h} phi^X_{-h} phi^Y_h phi^X_h (p) = p + h^2 [X, Y](p) + O(h^3).
  const AlgebroidModel m = tangent_model(2);
  const SectionSpec X = section({"x2", "0"}, 2), Y = section({"sin(x1)", "x1*x2"}, 2);
  const auto field = [](const SectionSpec& s, const Vec& p) {
    Vec out(2);
    for (int i = 0; i < 2; ++i) out[i] = s.coeff[static_cast<std::size_t>(i)].eval(as_span(p));
    return out;
  };
  const auto flow = [&](const SectionSpec& s, Vec p, double t) {
    const int steps = 200;
    const double dt = t / steps;
    for (int i = 0; i < steps; ++i) {
      const Vec k1 = field(s, p), k2 = field(s, p + 0.5 * dt * k1), k3 = field(s, p + 0.5 * dt * k2),
                k4 = field(s, p + dt * k3);
      p += dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    return p;
  };
  const Vec p = vec({0.4, 0.3});
  const double h = 1e-3;
  const Vec q = flow(Y, flow(X, flow(Y, flow(X, p, h), h), -h), -h);
  const Vec fd = (q - p) / (h * h);
  EXPECT_NEAR((fd - bracket_at(m, X, Y, p)).norm(), 0.0, 5e-3);
}

TEST(BracketProperty, AntisymmetryAndLeibniz) {
  const AlgebroidModel m = so3_dual_model();
  std::mt19937_64 rng(21);
  const auto secs = random_sections(3, 3, 6, rng);
  for (const Vec& x : sample_points(m, 20)) {
    for (std::size_t i = 0; i < secs.size(); ++i)
      for (std::size_t j = 0; j < secs.size(); ++j) {
        const Vec ab = bracket_at(m, secs[i], secs[j], x), ba = bracket_at(m, secs[j], secs[i], x);
        EXPECT_LE((ab + ba).norm(), 1e-12);
      }
    // [a, f b] = f [a, b] + (rho(a) f) b
    const Expression f = random_polynomial(3, 2, rng);
    const SectionSpec& a = secs[0];
    const SectionSpec& b = secs[1];
    SectionSpec fb;
    for (const Expression& e : b.coeff) fb.coeff.push_back(f * e);
    Vec av(3), bv(3);
    for (int q = 0; q < 3; ++q) {
      av[q] = a.coeff[static_cast<std::size_t>(q)].eval(as_span(x));
      bv[q] = b.coeff[static_cast<std::size_t>(q)].eval(as_span(x));
    }
    const Vec seed = anchor_apply(m, {x, av});
    const double rho_a_f = f.eval_dual(as_span(x), as_span(seed)).deriv;
    const Vec expected = f.eval(as_span(x)) * bracket_at(m, a, b, x) + rho_a_f * bv;
    EXPECT_LE((bracket_at(m, a, fb, x) - expected).norm(), 1e-7);
  }
}

TEST(ValidateAxioms, So3IsExact) {
  const AxiomReport r = validate_axioms(so3(), 64, 1);
  EXPECT_LE(r.antisymmetry, 1e-12);
  EXPECT_LE(r.anchor, 1e-12);
  EXPECT_LE(r.jacobi, 1e-12);
  EXPECT_TRUE(r.valid());
}

TEST(ValidateAxioms, TangentModel) {
  const AxiomReport r = validate_axioms(tangent_model(2), 64, 1);
  EXPECT_TRUE(r.valid());
  EXPECT_LE(r.jacobi, 1e-7);
}

TEST(ValidateAxioms, PerturbedSo3FailsJacobi) {
  const AxiomReport r = validate_axioms(lie_algebra_model("so3_perturbed", 3, perturbed_constants(1.1)), 64, 1);
  EXPECT_GT(r.jacobi, 0.01);
  EXPECT_FALSE(r.valid());
}

TEST(ValidateAxioms, PerturbedJacobiatorByHand) {
  // Constant sections: [a, b]^m = c^m_kl a^k b^l, evaluated straight from the
  // constants and compared with the bracket of the model.
  const std::vector<double> c = perturbed_constants(1.1);
  const AlgebroidModel m = lie_algebra_model("so3_perturbed", 3, c);
  const auto br = [&](const Vec& a, const Vec& b) {
    Vec out = Vec::Zero(3);
    for (int mm = 0; mm < 3; ++mm)
      for (int kk = 0; kk < 3; ++kk)
        for (int l = 0; l < 3; ++l) out[mm] += c[static_cast<std::size_t>((mm * 3 + kk) * 3 + l)] * a[kk] * b[l];
    return out;
  };
  const Vec a = vec({1, 1, 0}), b = vec({0, 1, 1}), d = vec({1, 0, 1});
  const Vec jac = br(a, br(b, d)) + br(b, br(d, a)) + br(d, br(a, b));
  EXPECT_GT(jac.norm(), 0.01);
  const auto cs = [](const Vec& v) { return constant_section(v, 0); };
  const Vec via_model = bracket_at(m, cs(a), cs(br(b, d)), Vec(0)) + bracket_at(m, cs(b), cs(br(d, a)), Vec(0)) +
                        bracket_at(m, cs(d), cs(br(a, b)), Vec(0));
  EXPECT_LE((via_model - jac).norm(), 1e-15);
}

TEST(ValidateAxioms, MirroredPerturbationStaysLie) {
  // Rescaling c^3_12 together with c^3_21 gives another three-dimensional
  // Lie algebra; only the antisymmetry-breaking version above is flagged.
  std::vector<double> c = perturbed_constants(1.1);
  c[(2 * 3 + 1) * 3 + 0] = -1.1;
  EXPECT_TRUE(validate_axioms(lie_algebra_model("rescaled", 3, c), 64, 1).valid());
}

TEST(ValidateAxioms, LinearPoissonValid) {
  const AxiomReport r = validate_axioms(so3_dual_model(), 64, 1);
  EXPECT_TRUE(r.valid()) << r.antisymmetry << " " << r.anchor << " " << r.jacobi;
}

TEST(ValidateAxioms, CotangentValidIffPoisson) {
  // x3 d1^d2 is Poisson on R^3; adding x1 d2^d3 + x1 d1^d3 breaks Jacobi.
  const int n = 3;
  const auto make = [&](const char* p12, const char* p23, const char* p13) {
    std::vector<Expression> pi(9, k(0.0, n));
    pi[0 * 3 + 1] = parse_expr(p12, n);
    pi[1 * 3 + 0] = -pi[0 * 3 + 1];
    pi[1 * 3 + 2] = parse_expr(p23, n);
    pi[2 * 3 + 1] = -pi[1 * 3 + 2];
    pi[0 * 3 + 2] = parse_expr(p13, n);
    pi[2 * 3 + 0] = -pi[0 * 3 + 2];
    return cotangent_poisson_model("pi", n, pi);
  };
  EXPECT_TRUE(validate_axioms(make("x3", "0", "0"), 32, 2).valid());
  const AxiomReport bad = validate_axioms(make("x3", "x1", "x1"), 32, 2);
  EXPECT_FALSE(bad.valid());
  EXPECT_GT(std::max(bad.jacobi, bad.anchor), 1e-3);
}

TEST(Torsion, HalfStructureIsTorsionFree) {
  const AlgebroidModel m = so3();
  for (double t : torsion(m, {})) EXPECT_EQ(t, 0.0);
}

TEST(Torsion, ZeroConnectionGivesMinusC) {
  const AlgebroidModel base = so3();
  std::vector<Expression> zero(27, k(0.0, 0));
  const AlgebroidModel m("so3_flat", 0, 3, {}, base.c_all(), zero, {}, 4.0);
  const auto t = torsion(m, {});
  const auto c = so3_structure_constants();
  for (std::size_t i = 0; i < t.size(); ++i) EXPECT_DOUBLE_EQ(t[i], -c[i]);
}

TEST(Torsion, FullStructureGivesC) {
  const AlgebroidModel base = so3();
  const AlgebroidModel m("so3_c", 0, 3, {}, base.c_all(), base.c_all(), {}, 4.0);
  const auto t = torsion(m, {});
  const auto c = so3_structure_constants();
  for (std::size_t i = 0; i < t.size(); ++i) EXPECT_DOUBLE_EQ(t[i], c[i]);
}

TEST(Builtins, Shapes) {
  const AlgebroidModel l = so3();
  EXPECT_EQ(l.n(), 0);
  EXPECT_EQ(l.r(), 3);
  const AlgebroidModel t = tangent_model(2);
  EXPECT_EQ(t.n(), 2);
  EXPECT_EQ(t.r(), 2);
  std::vector<Expression> pi(4, k(0.0, 2));
  const AlgebroidModel z = cotangent_poisson_model("zero", 2, pi);
  for (const Expression& e : z.rho_all()) EXPECT_TRUE(e.is_zero());
  for (const Expression& e : z.c_all()) EXPECT_TRUE(e.is_zero());
}

TEST(Builtins, Sl2StructureConstants) {
  // [H,E] = 2E, [H,F] = -2F, [E,F] = H with basis (H, E, F)
  const auto c = sl2_structure_constants();
  const auto at = [&](int m, int kk, int l) { return c[static_cast<std::size_t>((m * 3 + kk) * 3 + l)]; };
  EXPECT_EQ(at(1, 0, 1), 2.0);
  EXPECT_EQ(at(2, 0, 2), -2.0);
  EXPECT_EQ(at(0, 1, 2), 1.0);
  EXPECT_TRUE(validate_axioms(lie_algebra_model("sl2", 3, c), 8, 1).valid());
}

TEST(Builtins, RejectsBadParameters) {
  std::vector<Expression> asym(4, k(0.0, 2));
  asym[1] = parse_expr("x1", 2);  // pi^{12} without the mirror entry
  EXPECT_THROW(cotangent_poisson_model("bad", 2, asym), InvalidParams);
  EXPECT_THROW(tangent_model(0), InvalidParams);
  EXPECT_THROW(lie_algebra_model("bad", 3, std::vector<double>(5, 0.0)), InvalidParams);
}

TEST(Domain, OutsideChartOrFiberBall) {
  const AlgebroidModel m = so3_dual_model();
  EXPECT_TRUE(m.in_domain(ArrowPoint{vec({0, 0, 0}), vec({0.1, 0, 0})}));
  EXPECT_FALSE(m.in_domain(ArrowPoint{vec({3, 0, 0}), vec({0.1, 0, 0})}));
  EXPECT_FALSE(m.in_domain(ArrowPoint{vec({0, 0, 0}), vec({5, 0, 0})}));
  EXPECT_THROW(m.require_domain(ArrowPoint{vec({0, 0, 0}), vec({5, 0, 0})}, "test"), LeftDomain);
}

TEST(FrameChange, BracketTransformsCovariantly) {
  const AlgebroidModel m = so3_dual_model();
  Mat frame(3, 3);
  frame << 2, 0.3, 0, -0.1, 1, 0.4, 0, 0.2, 1.5;
  const AlgebroidModel mf = change_frame(m, frame);
  const Vec x = vec({0.3, -0.5, 0.8});
  const Vec a_new = vec({0.2, -0.4, 0.7}), b_new = vec({-1.0, 0.3, 0.5});
  const Vec lhs = frame * bracket_at(mf, constant_section(a_new, 3), constant_section(b_new, 3), x);
  const Vec rhs = bracket_at(m, constant_section(frame * a_new, 3), constant_section(frame * b_new, 3), x);
  EXPECT_LE((lhs - rhs).norm(), 1e-13);
}

}  // namespace
}  // namespace sprayoid
