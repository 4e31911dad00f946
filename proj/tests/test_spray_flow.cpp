#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "sprayoid/algebroid.hpp"
#include "sprayoid/errors.hpp"
#include "sprayoid/spray_flow.hpp"
#include "support.hpp"

namespace sprayoid {
namespace {

using testing::random_ball;
using testing::random_box;
using testing::vec;

double gap(const ArrowPoint& a, const ArrowPoint& b) { return testing::distance(a, b); }

double gap(const TangentOfA& a, const TangentOfA& b) {
  return std::sqrt((a.dx - b.dx).squaredNorm() + (a.dxi - b.dxi).squaredNorm());
}

// Line with a non-flat connection: geodesics solve x'' = -x (x')^2.
AlgebroidModel bent_line() {
  return AlgebroidModel("bent_line", 1, 1, {parse_expr("1", 1)}, {parse_expr("0", 1)}, {parse_expr("x1", 1)},
                        {{-5.0, 5.0}}, 10.0);
}

// On so(3)* with Gamma = c / 2 the fiber part is constant and the base point
// rotates about xi: x' = xi x x.
Vec rotate(const Vec& x, const Vec& axis, double t) {
  const double w = axis.norm();
  if (w == 0.0) return x;
  const Eigen::Vector3d k = axis / w;
  const Eigen::Vector3d v = x;
  const double th = w * t;
  return v * std::cos(th) + k.cross(v) * std::sin(th) + k * k.dot(v) * (1.0 - std::cos(th));
}

struct Family {
  AlgebroidModel model;
  double base_half_width;
  double fiber_radius;
};

std::vector<Family> families() {
  std::vector<Family> out;
  out.push_back({lie_algebra_model("so3", 3, so3_structure_constants()), 0.0, 1.0});
  out.push_back({tangent_model(2), 5.0, 2.0});
  out.push_back({so3_dual_model(), 1.0, 1.0});
  return out;
}

ArrowPoint sample_arrow(const Family& f, std::mt19937_64& rng) {
  return {random_box(f.model.n(), f.base_half_width, rng), random_ball(f.model.r(), f.fiber_radius, rng)};
}

TEST(SprayField, LieAlgebraIsZero) {
  const AlgebroidModel m = lie_algebra_model("so3", 3, so3_structure_constants());
  const TangentOfA v = spray_field(m, {Vec(0), vec({0.3, -0.2, 0.5})});
  EXPECT_EQ(v.dx.size(), 0);
  EXPECT_LE(v.dxi.norm(), 1e-15);
}

TEST(SprayField, FlatTangent) {
  const TangentOfA v = spray_field(tangent_model(2), {vec({1.0, 2.0}), vec({0.5, -0.25})});
  EXPECT_EQ(v.dx, vec({0.5, -0.25}));
  EXPECT_EQ(v.dxi, vec({0.0, 0.0}));
}

TEST(SprayField, SO3DualByHand) {
  // dx^i = eps_{i k j} xi^k x_j = (xi x x)_i = (0,1,0) x (1,0,0) = (0,0,-1);
  // Gamma antisymmetric in the lower pair, so dxi = 0.
  const TangentOfA v = spray_field(so3_dual_model(), {vec({1.0, 0.0, 0.0}), vec({0.0, 1.0, 0.0})});
  EXPECT_LE((v.dx - vec({0.0, 0.0, -1.0})).norm(), 1e-15);
  EXPECT_LE(v.dxi.norm(), 1e-15);
}

TEST(SprayField, NonFlatConnectionByHand) {
  const TangentOfA v = spray_field(bent_line(), {vec({2.0}), vec({3.0})});
  EXPECT_DOUBLE_EQ(v.dx[0], 3.0);
  EXPECT_DOUBLE_EQ(v.dxi[0], -18.0);
}

TEST(SprayField, BaseComponentIsTheAnchor) {
  std::mt19937_64 rng(21);
  for (const Family& f : families())
    for (int s = 0; s < 100; ++s) {
      const ArrowPoint a = sample_arrow(f, rng);
      EXPECT_EQ(spray_field(f.model, a).dx, anchor_apply(f.model, a)) << f.model.name();
    }
}

TEST(Flow, LieAlgebraIsConstant) {
  const AlgebroidModel m = lie_algebra_model("sl2", 3, sl2_structure_constants());
  const ArrowPoint a{Vec(0), vec({0.4, 0.1, -0.3})};
  for (double t : {-1.0, 0.25, 1.0}) EXPECT_LE(gap(flow(m, a, t), a), 1e-15);
}

TEST(Flow, FreeMotion) {
  const ArrowPoint a{vec({1.0, -2.0}), vec({0.7, 1.3})};
  for (double t : {-1.0, 0.3, 1.0}) {
    const ArrowPoint b = flow(tangent_model(2), a, t);
    EXPECT_LE((b.x - (a.x + t * a.xi)).norm(), 1e-12);
    EXPECT_LE((b.xi - a.xi).norm(), 1e-15);
  }
}

TEST(Flow, SO3DualRotatesAboutTheFiberVector) {
  std::mt19937_64 rng(22);
  const AlgebroidModel m = so3_dual_model();
  for (int s = 0; s < 20; ++s) {
    const ArrowPoint a{random_ball(3, 1.0, rng), random_ball(3, 1.5, rng)};
    const ArrowPoint b = flow(m, a, 1.0);
    EXPECT_LE((b.x - rotate(a.x, a.xi, 1.0)).norm(), 1e-10);
    EXPECT_LE((b.xi - a.xi).norm(), 1e-13);
  }
}

TEST(Flow, StepHalving) {
  std::mt19937_64 rng(23);
  const AlgebroidModel m = so3_dual_model();
  for (int s = 0; s < 5; ++s) {
    const ArrowPoint a{random_ball(3, 1.0, rng), random_ball(3, 1.5, rng)};
    EXPECT_LE(gap(flow(m, a, 1.0, 1e-3), flow(m, a, 1.0, 5e-4)), 1e-9);
  }
  const ArrowPoint a{vec({0.5}), vec({1.2})};
  EXPECT_LE(gap(flow(bent_line(), a, 1.0, 1e-3), flow(bent_line(), a, 1.0, 5e-4)), 1e-9);
}

TEST(Flow, BackwardUndoesForward) {
  const ArrowPoint a{vec({0.5}), vec({1.2})};
  EXPECT_LE(gap(flow(bent_line(), flow(bent_line(), a, 1.0), -1.0), a), 1e-11);
}

TEST(Flow, LeavingTheDomainThrows) {
  const AlgebroidModel m = tangent_model(1, {{-1.0, 1.0}});
  EXPECT_THROW(flow(m, {vec({0.5}), vec({2.0})}, 1.0), LeftDomain);
  EXPECT_THROW(flow(m, {vec({0.0}), vec({5.0})}, 0.1), LeftDomain);
  EXPECT_THROW(flow(m, {vec({0.0}), vec({1.0})}, 0.5, 0.0), InvalidParams);
}

TEST(VariationalFlow, LieAlgebraIsIdentity) {
  const AlgebroidModel m = lie_algebra_model("so3", 3, so3_structure_constants());
  const TangentOfA seed{Vec(0), vec({1.0, -2.0, 0.5})};
  const FlowState st = variational_flow(m, {Vec(0), vec({0.3, 0.2, 0.1})}, {seed}, 1.0);
  EXPECT_LE(gap(st.tangents[0], seed), 1e-15);
}

TEST(VariationalFlow, FreeMotionIsLinear) {
  const TangentOfA seed{vec({0.1, 0.2}), vec({-1.0, 3.0})};
  const FlowState st = variational_flow(tangent_model(2), {vec({0.0, 0.0}), vec({1.0, 1.0})}, {seed}, 0.6);
  EXPECT_LE((st.tangents[0].dx - (seed.dx + 0.6 * seed.dxi)).norm(), 1e-12);
  EXPECT_LE((st.tangents[0].dxi - seed.dxi).norm(), 1e-15);
}

TEST(VariationalFlow, MatchesCentralDifferences) {
  std::mt19937_64 rng(24);
  constexpr double h = 1e-5;
  std::vector<Family> fam = families();
  fam.push_back({bent_line(), 0.5, 1.0});
  int checked = 0;
  for (int s = 0; s < 100; ++s) {
    const Family& f = fam[static_cast<std::size_t>(s) % fam.size()];
    const ArrowPoint a = sample_arrow(f, rng);
    const TangentOfA seed{testing::random_gauss(f.model.n(), rng), testing::random_gauss(f.model.r(), rng)};
    const double t = std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
    const FlowState st = variational_flow(f.model, a, {seed}, t);
    const ArrowPoint plus = flow(f.model, {a.x + h * seed.dx, a.xi + h * seed.dxi}, t);
    const ArrowPoint minus = flow(f.model, {a.x - h * seed.dx, a.xi - h * seed.dxi}, t);
    const TangentOfA fd{(plus.x - minus.x) / (2 * h), (plus.xi - minus.xi) / (2 * h)};
    EXPECT_LE(gap(st.tangents[0], fd), 1e-6) << f.model.name();
    EXPECT_LE(gap(st.point, flow(f.model, a, t)), 1e-14);
    ++checked;
  }
  EXPECT_EQ(checked, 100);
}

TEST(Homogeneity, TrivialCases) {
  const ArrowPoint a{vec({0.3, -0.1, 0.2}), vec({0.5, 0.5, -0.4})};
  EXPECT_EQ(homogeneity_residual(so3_dual_model(), a, 1.0, 0.8), 0.0);
  EXPECT_LE(homogeneity_residual(lie_algebra_model("so3", 3, so3_structure_constants()),
                                 {Vec(0), a.xi}, 0.3, 1.0),
            1e-15);
}

TEST(Homogeneity, SO3DualExample) {
  const ArrowPoint a{vec({0.3, -0.1, 0.2}), vec({0.5, 0.5, -0.4})};
  EXPECT_LE(homogeneity_residual(so3_dual_model(), a, 0.5, 1.0), 1e-7);
}

TEST(APath, Examples) {
  std::vector<double> grid;
  for (int q = 0; q <= 10; ++q) grid.push_back(0.1 * q);
  EXPECT_EQ(apath_residual(lie_algebra_model("so3", 3, so3_structure_constants()),
                           {Vec(0), vec({0.1, 0.2, 0.3})}, grid),
            0.0);
  EXPECT_LE(apath_residual(tangent_model(2), {vec({0.0, 1.0}), vec({1.5, -0.5})}, grid), 1e-9);
  EXPECT_LE(apath_residual(so3_dual_model(), {vec({1.0, 0.0, 0.5}), vec({0.2, 0.9, -0.3})}, grid), 1e-6);
}

TEST(SprayProperties, GlobalHomogeneityAndAPathsOnSamples) {
  std::mt19937_64 rng(25);
  std::uniform_real_distribution<double> us(0.1, 1.0), ut(-1.0, 1.0);
  const std::vector<Family> fam = families();
  double worst_gs2 = 0.0, worst_gs1 = 0.0;
  for (int s = 0; s < 100; ++s) {
    const Family& f = fam[static_cast<std::size_t>(s) % fam.size()];
    const ArrowPoint a = sample_arrow(f, rng);
    const double scale = us(rng), t = ut(rng);
    worst_gs2 = std::max(worst_gs2, homogeneity_residual(f.model, a, scale, t));
    worst_gs1 = std::max(worst_gs1, apath_residual(f.model, a, {0.0, t / 2, t}));
  }
  EXPECT_LE(worst_gs2, 1e-6);
  EXPECT_LE(worst_gs1, 1e-6);
}

TEST(Trajectory, DenseOutputInterpolates) {
  const ArrowPoint a{vec({1.0, 0.0, 0.5}), vec({0.2, 0.9, -0.3})};
  const Trajectory traj = flow_trajectory(so3_dual_model(), a, -0.5, 1.0);
  EXPECT_DOUBLE_EQ(traj.t_begin(), -0.5);
  EXPECT_DOUBLE_EQ(traj.t_end(), 1.0);
  for (double t : {-0.4321, 0.0, 0.12345, 0.9999}) EXPECT_LE((traj.at(t).x - rotate(a.x, a.xi, t)).norm(), 1e-10);
}

}  // namespace
}  // namespace sprayoid
