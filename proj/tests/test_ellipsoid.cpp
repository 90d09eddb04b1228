#include <gtest/gtest.h>

#include <numbers>

#include "bltk/ellipsoid.hpp"
#include "support.hpp"

using namespace bltk;
using testsupport::Gen;

namespace {

// Radial function of {x^T Q x <= 1} along a unit direction: the oracle for sections.
double radial_of(const Mat& q, const Vec& u) { return 1.0 / std::sqrt(u.dot(q * u)); }

// Support function of {x^T Q x <= 1}: sqrt(u^T Q^{-1} u). Oracle for projections.
double support_of(const Mat& q, const Vec& u) { return std::sqrt(u.dot(q.inverse() * u)); }

SymmetricBodyOracle polytope_body(int d, std::vector<Vec> normals) {
  SymmetricBodyOracle b;
  b.dim = d;
  b.gauge = [normals](const Vec& x) {
    double m = 0.0;
    for (const auto& a : normals) m = std::max(m, std::abs(a.dot(x)));
    return m;
  };
  b.subgradient = [normals](const Vec& x) {
    std::size_t best = 0;
    double m = -1.0;
    for (std::size_t i = 0; i < normals.size(); ++i)
      if (std::abs(normals[i].dot(x)) > m) {
        m = std::abs(normals[i].dot(x));
        best = i;
      }
    return Vec(normals[best] * (normals[best].dot(x) >= 0 ? 1.0 : -1.0));
  };
  return b;
}

SymmetricBodyOracle ball_body(int d) {
  SymmetricBodyOracle b;
  b.dim = d;
  b.gauge = [](const Vec& x) { return x.norm(); };
  b.subgradient = [](const Vec& x) { return Vec(x / x.norm()); };
  return b;
}

}  // namespace

TEST(Ellipsoid, RejectsInvalidShapes) {
  Mat q(2, 2);
  q << 1, 0.5, 0.4, 1;
  EXPECT_THROW(Ellipsoid{q}, Error);
  q << 1, 0, 0, -1;
  EXPECT_THROW(Ellipsoid{q}, Error);
}

TEST(DualEllipsoid, Examples) {
  EXPECT_NEAR((dual_ellipsoid(Ellipsoid::ball(3)).shape() - Mat::Identity(3, 3)).norm(), 0.0, 1e-15);
  const Vec axes = dual_ellipsoid(Ellipsoid::from_axes({2.0, 3.0})).semi_axes();
  EXPECT_NEAR(axes[0], 1.0 / 3.0, 1e-14);
  EXPECT_NEAR(axes[1], 1.0 / 2.0, 1e-14);
}

TEST(DualEllipsoid, AxisReciprocityIsExactOnDiagonalFixtures) {
  Gen g(31);
  for (int trial = 0; trial < 50; ++trial) {
    const int d = g.integer(1, 5);
    std::vector<double> a;
    for (int i = 0; i < d; ++i) a.push_back(std::ldexp(1.0, g.integer(-4, 4)));
    const Mat dq = dual_ellipsoid(Ellipsoid::from_axes(a)).shape();
    for (int i = 0; i < d; ++i) EXPECT_EQ(dq(i, i), a[static_cast<std::size_t>(i)] * a[static_cast<std::size_t>(i)]);
  }
}

TEST(DualEllipsoid, InvolutionAndVolumeProduct) {
  Gen g(32);
  for (int trial = 0; trial < 200; ++trial) {
    const int d = g.integer(1, 6);
    const Ellipsoid e(g.spd(d));
    const Ellipsoid dd = dual_ellipsoid(dual_ellipsoid(e));
    EXPECT_LT((dd.shape() - e.shape()).cwiseAbs().maxCoeff(), 1e-10);
    const double w = unit_ball_volume(d);
    EXPECT_NEAR(volume(e) * volume(dual_ellipsoid(e)) / (w * w), 1.0, 1e-8);
  }
}

TEST(DualEllipsoid, IllConditioned) {
  Mat q = Mat::Identity(2, 2);
  q(1, 1) = 1e-13;
  try {
    dual_ellipsoid(Ellipsoid(q));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::IllConditioned);
  }
}

TEST(Volume, Examples) {
  EXPECT_NEAR(volume(Ellipsoid::ball(3)), 4.0 * std::numbers::pi / 3.0, 1e-14);
  EXPECT_NEAR(volume(Ellipsoid::from_axes({1.0, 2.0, 3.0})), 8.0 * std::numbers::pi, 1e-13);
}

TEST(Section, Examples) {
  Gen g(33);
  const Subspace v(g.mat(4, 2));
  EXPECT_NEAR((section(Ellipsoid::ball(4), v).body.shape() - Mat::Identity(2, 2)).norm(), 0.0, 1e-14);
  Mat q(2, 2);
  q << 1, 0, 0, 0.25;
  const auto s = section(Ellipsoid(q), Subspace::coordinate(2, {0}));
  EXPECT_NEAR(s.body.semi_axes()[0], 1.0, 1e-15);
}

TEST(Section, IndependentOfBasisAndMatchesRadialOracle) {
  Gen g(34);
  for (int trial = 0; trial < 100; ++trial) {
    const int d = g.integer(2, 5);
    const int k = g.integer(1, d);
    const Ellipsoid e(g.spd(d));
    const Mat span = g.mat(d, k);
    const auto a = section(e, Subspace(span));
    const auto b = section(e, Subspace(span * g.mat(k, k)));
    EXPECT_LT((a.embedded_form() - b.embedded_form()).cwiseAbs().maxCoeff(), 1e-10);
    for (int t = 0; t < 5; ++t) {
      const Vec c = g.unit(k);
      const Vec u = a.space.basis() * c;
      EXPECT_NEAR(a.body.radial(c), radial_of(e.shape(), u), 1e-10);
    }
  }
}

TEST(Projection, Examples) {
  Gen g(35);
  const Subspace v(g.mat(3, 2));
  EXPECT_NEAR((projection(Ellipsoid::ball(3), v).body.shape() - Mat::Identity(2, 2)).norm(), 0.0, 1e-14);
  Mat q(2, 2);
  q << 0.25, 0, 0, 1;
  EXPECT_NEAR(projection(Ellipsoid(q), Subspace::coordinate(2, {0})).body.semi_axes()[0], 2.0, 1e-14);
}

TEST(Projection, MatchesSupportFunctionOracle) {
  Gen g(36);
  for (int trial = 0; trial < 100; ++trial) {
    const int d = g.integer(2, 5);
    const int k = g.integer(1, d);
    const Ellipsoid e(g.spd(d));
    const auto p = projection(e, Subspace(g.mat(d, k)));
    for (int t = 0; t < 5; ++t) {
      const Vec c = g.unit(k);
      EXPECT_NEAR(support_of(p.body.shape(), c), support_of(e.shape(), p.space.basis() * c), 1e-10);
    }
  }
}

TEST(SectionProjection, DualityAndVolumeProductLaw) {
  Gen g(37);
  for (int d = 2; d <= 5; ++d)
    for (int dp = 1; dp < d; ++dp) {
      double lo = 1e300, hi = -1e300;
      for (int trial = 0; trial < 100; ++trial) {
        const Ellipsoid e(g.spd(d, 0.2, 5.0));
        const Subspace v(g.mat(d, dp));
        const auto lhs = section(dual_ellipsoid(e), v);
        const auto rhs = dual_in_subspace(projection(e, v));
        EXPECT_LT((lhs.embedded_form() - rhs.embedded_form()).cwiseAbs().maxCoeff(), 1e-9);
        const double c = volume(projection(e, v).body) * volume(section(e, v.complement()).body) / volume(e);
        lo = std::min(lo, c);
        hi = std::max(hi, c);
        EXPECT_NEAR(c / volume_product_constant(d, dp), 1.0, 1e-8);
      }
      EXPECT_LT((hi - lo) / lo, 1e-8);
    }
}

TEST(John, UnitBallGivesUnitBall) {
  for (int d : {2, 3}) {
    const auto j = john_ellipsoid(ball_body(d));
    EXPECT_LT(j.factor, 1.01);
    const Vec axes = j.inner.semi_axes();
    EXPECT_GT(axes.minCoeff(), 0.99);
    EXPECT_LE(axes.maxCoeff(), 1.0 + 1e-9);
  }
}

TEST(John, SquareGivesTheInscribedDisk) {
  Vec e1 = Vec::Zero(2), e2 = Vec::Zero(2);
  e1[0] = 1;
  e2[1] = 1;
  const auto j = john_ellipsoid(polytope_body(2, {e1, e2}));
  EXPECT_GE(volume(j.inner), 2.0);
  EXPECT_NEAR(volume(j.inner), std::numbers::pi, 1e-6);
  EXPECT_LE(j.factor, std::sqrt(2.0) * (1 + 1e-6));
}

TEST(John, CrossPolytopeGivesBallOfRadiusOneOverRootThree) {
  std::vector<Vec> normals;
  for (int a : {1, -1})
    for (int b : {1, -1}) {
      Vec n(3);
      n << 1, a, b;
      normals.push_back(n);
    }
  const auto j = john_ellipsoid(polytope_body(3, normals));
  const Vec axes = j.inner.semi_axes();
  EXPECT_NEAR(axes.minCoeff(), 1.0 / std::sqrt(3.0), 1e-6);
  EXPECT_NEAR(axes.maxCoeff(), 1.0 / std::sqrt(3.0), 1e-6);
  EXPECT_LE(j.factor, std::sqrt(3.0) * (1 + 1e-6));
}

TEST(John, SandwichOnRandomPolytopes) {
  Gen g(38);
  for (int trial = 0; trial < 20; ++trial) {
    const int d = g.integer(2, 4);
    std::vector<Vec> normals;
    const int m = g.integer(d, 3 * d);
    for (int i = 0; i < m; ++i) normals.push_back(g.vec(d));
    auto body = polytope_body(d, normals);
    body.seed = static_cast<std::uint64_t>(trial);
    const auto j = john_ellipsoid(body);
    EXPECT_LE(j.factor, std::sqrt(static_cast<double>(d)) * (1 + 1e-6));
    // Every sampled boundary point lies outside (or on) the inner ellipsoid.
    for (const auto& u : standard_directions(d, body.sample_budget, body.seed)) EXPECT_GE(1.0 / body.gauge(u), j.inner.radial(u) * (1 - 1e-12));
    const auto vol = body_volume(d, body.gauge);
    EXPECT_GE(vol.value, volume(j.inner) * (1 - 1e-3));
    EXPECT_LE(vol.value, std::pow(static_cast<double>(d), d / 2.0) * volume(j.inner));
  }
}

TEST(John, NumericSubgradientFallback) {
  Vec e1 = Vec::Zero(2), e2 = Vec::Zero(2);
  e1[0] = 1;
  e2[1] = 1;
  auto body = polytope_body(2, {e1, e2});
  body.subgradient = nullptr;
  const auto j = john_ellipsoid(body);
  EXPECT_NEAR(volume(j.inner), std::numbers::pi, 1e-3);
}

TEST(John, RejectsUnboundedAndAsymmetricBodies) {
  SymmetricBodyOracle flat;
  flat.dim = 2;
  flat.gauge = [](const Vec& x) { return std::abs(x[0]); };
  try {
    john_ellipsoid(flat);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnboundedBody);
  }
  SymmetricBodyOracle lopsided;
  lopsided.dim = 2;
  lopsided.gauge = [](const Vec& x) { return x.norm() + (x[0] > 0 ? x[0] : 0.0); };
  EXPECT_THROW(john_ellipsoid(lopsided), Error);
}

TEST(DualMembership, Examples) {
  Gen g(39);
  const auto ball = ball_body(3);
  for (int t = 0; t < 20; ++t) EXPECT_TRUE(dual_membership(ball, g.unit(3) * g.uniform(0.0, 1.0)));
  SymmetricBodyOracle segment;
  segment.dim = 2;
  segment.gauge = [](const Vec& x) {
    if (std::abs(x[1]) > 0) return std::numeric_limits<double>::infinity();
    return std::abs(x[0]) / 2.0;
  };
  Vec v(2);
  v << 0.6, 0.0;
  EXPECT_FALSE(dual_membership(segment, v));
  v << 0.4, 0.0;
  EXPECT_TRUE(dual_membership(segment, v));
}

TEST(DualMembership, MonotoneUnderInclusion) {
  Gen g(40);
  // The scaled ball of radius 1/2 is inside the unit square which is inside the ball of radius sqrt 2.
  SymmetricBodyOracle small;
  small.dim = 2;
  small.gauge = [](const Vec& x) { return 2.0 * x.norm(); };
  Vec e1 = Vec::Zero(2), e2 = Vec::Zero(2);
  e1[0] = 1;
  e2[1] = 1;
  const auto square = polytope_body(2, {e1, e2});
  SymmetricBodyOracle big;
  big.dim = 2;
  big.gauge = [](const Vec& x) { return x.norm() / std::sqrt(2.0); };
  for (int t = 0; t < 300; ++t) {
    const Vec v = g.unit(2) * g.uniform(0.0, 2.5);
    if (dual_membership(big, v)) EXPECT_TRUE(dual_membership(square, v));
    if (dual_membership(square, v)) EXPECT_TRUE(dual_membership(small, v));
  }
}

TEST(BodyVolume, KnownBodies) {
  EXPECT_NEAR(body_volume(2, [](const Vec& x) { return x.norm(); }).value, std::numbers::pi, 1e-12);
  EXPECT_NEAR(body_volume(3, [](const Vec& x) { return x.norm(); }).value, 4.0 * std::numbers::pi / 3.0, 1e-12);
  // Cross-polytopes: 2^d / d!.
  EXPECT_NEAR(body_volume(2, [](const Vec& x) { return x.lpNorm<1>(); }).value, 2.0, 1e-5);
  EXPECT_NEAR(body_volume(3, [](const Vec& x) { return x.lpNorm<1>(); }).value, 8.0 / 6.0, 1e-3);
  const auto v4 = body_volume(4, [](const Vec& x) { return x.norm(); });
  EXPECT_NEAR(v4.value, unit_ball_volume(4), 1e-12);
}
