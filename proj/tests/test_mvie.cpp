#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "navcarve/error.hpp"
#include "navcarve/mvie.hpp"
#include "test_support.hpp"

namespace navcarve {
namespace {

TEST(InscribedEllipsoid, AxisAlignedBox) {
  const Ellipsoid e = inscribed_ellipsoid(box_polytope(Point3(0, 0, 0), Point3(2, 4, 6)));
  const Mat3 shape = e.C * e.C.transpose();
  EXPECT_NEAR((shape - Vec3(1, 4, 9).asDiagonal().toDenseMatrix()).norm(), 0.0, 1e-5);
  EXPECT_NEAR((e.d - Point3(1, 2, 3)).norm(), 0.0, 1e-6);
  EXPECT_NEAR(e.volume(), 4.0 * std::numbers::pi / 3.0 * 6.0, 1e-5 * 8.0 * std::numbers::pi);
  EXPECT_LE(ellipsoid_max_violation(e, box_polytope(Point3(0, 0, 0), Point3(2, 4, 6))), 1e-8);
}

TEST(InscribedEllipsoid, UnitCubeIsUnitBall) {
  const Ellipsoid e = inscribed_ellipsoid(testing::unit_cube());
  EXPECT_NEAR(e.det(), 1.0, 1e-6);
  EXPECT_NEAR((e.C - Mat3::Identity()).norm(), 0.0, 1e-5);
  EXPECT_NEAR(e.d.norm(), 0.0, 1e-6);
  EXPECT_TRUE(e.C.isApprox(e.C.transpose(), 1e-12));
}

TEST(InscribedEllipsoid, RotationInvariance) {
  std::mt19937_64 rng(13);
  const Polytope box = box_polytope(Point3(-1, -2, -0.5), Point3(1, 2, 0.5));
  const Ellipsoid base = inscribed_ellipsoid(box);
  for (int trial = 0; trial < 5; ++trial) {
    const Mat3 R = testing::random_rotation(rng);
    const Vec3 t(1.0, -3.0, 2.0);
    const Ellipsoid rot = inscribed_ellipsoid(testing::transformed(box, R, t));
    EXPECT_NEAR(rot.volume() / base.volume(), 1.0, 1e-6);
    const Mat3 expected = R * base.C * base.C.transpose() * R.transpose();
    EXPECT_NEAR((rot.C * rot.C.transpose() - expected).norm(), 0.0, 1e-5);
    EXPECT_NEAR((rot.d - (R * base.d + t)).norm(), 0.0, 1e-6);
  }
}

TEST(InscribedEllipsoid, SimplexMatchesAffineInvariantRatio) {
  // Symmetry: the regular simplex's MVIE is its insphere, giving a volume ratio
  // pi / (6 sqrt 3); affine invariance carries it to the corner simplex (vol 1/6).
  Polytope q;
  q.halfspaces = {{Vec3(-1, 0, 0), 0}, {Vec3(0, -1, 0), 0}, {Vec3(0, 0, -1), 0}, {Vec3(1, 1, 1), 1}};
  const Ellipsoid e = inscribed_ellipsoid(q);
  const double expected = std::numbers::pi / (6.0 * std::sqrt(3.0)) / 6.0;
  EXPECT_NEAR(e.volume() / expected, 1.0, 1e-5);
  EXPECT_NEAR((e.d - Point3::Constant(0.25)).norm(), 0.0, 1e-5);
}

TEST(InscribedEllipsoid, RandomPolytopesFeasibleAndNearOptimal) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 10; ++trial) {
    Polytope q = box_polytope(Point3(-3, -2, -1), Point3(3, 2, 1));
    for (int j = 0; j < 25; ++j) q.halfspaces.emplace_back(testing::random_unit(rng), 0.8 + 0.5 * (j % 3));
    const Ellipsoid e = inscribed_ellipsoid(q);
    EXPECT_LE(ellipsoid_max_violation(e, q), 1e-8);
    // Local optimality probe: no feasible perturbation improves the volume by > 1e-6.
    for (int k = 0; k < 200; ++k) {
      Ellipsoid p = e;
      Mat3 dC = Mat3::Random() * 1e-3;
      p.C += 0.5 * (dC + dC.transpose());
      p.d += Vec3::Random() * 1e-3;
      if (ellipsoid_max_violation(p, q) <= 0.0) EXPECT_LE(p.det(), e.det() * (1.0 + 1e-6));
    }
  }
}

TEST(InscribedEllipsoid, ErrorCases) {
  Polytope slab;
  slab.halfspaces = {{Vec3(1, 0, 0), 1}, {Vec3(-1, 0, 0), 1}};
  try {
    inscribed_ellipsoid(slab);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Unbounded);
  }
  Polytope empty = box_polytope(Point3(0, 0, 0), Point3(1, 1, 1));
  empty.halfspaces.emplace_back(Vec3(1, 0, 0), -1.0);
  try {
    inscribed_ellipsoid(empty);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Infeasible);
  }
}

TEST(ChebyshevCenter, Box) {
  const ChebyshevBall ball = chebyshev_center(box_polytope(Point3(0, 0, 0), Point3(2, 4, 6)));
  EXPECT_NEAR(ball.radius, 1.0, 1e-8);
  EXPECT_NEAR(ball.center.x(), 1.0, 1e-6);
}

TEST(IsBounded, Cases) {
  EXPECT_TRUE(is_bounded(testing::unit_cube()));
  Polytope open = testing::unit_cube();
  open.halfspaces.pop_back();
  EXPECT_FALSE(is_bounded(open));
}

}  // namespace
}  // namespace navcarve
