#include <gtest/gtest.h>

#include <cstdlib>
#include <numbers>

#include "bltk/configurations.hpp"
#include "support.hpp"

using namespace bltk;
using testsupport::Gen;

namespace {

constexpr double kPi = std::numbers::pi;
// Relative tolerance for midpoint quadrature of indicators whose edges are not
// aligned with the grid.
constexpr double kQuadratureTol = 0.01;

Vec v2(double x, double y) {
  Vec v(2);
  v << x, y;
  return v;
}

Vec v3(double x, double y, double z) {
  Vec v(3);
  v << x, y, z;
  return v;
}

Subspace line(const Vec& dir) { return Subspace(Mat(dir)); }

std::vector<SlabFamily> strips_at_angle(double theta) {
  auto f = perpendicular_strips();
  f[1].nominal = line(v2(std::cos(theta), std::sin(theta)));
  f[1].slabs[0].core.direction = f[1].nominal;
  return f;
}

// Exact integral of prod_j c_j(x)^{p_j} for intervals [b - 1, b + 1] on the line:
// the integrand is constant between consecutive interval endpoints.
double interval_oracle(const std::vector<std::vector<double>>& centers, const std::vector<double>& p) {
  std::vector<double> cuts;
  for (const auto& fam : centers)
    for (double b : fam) {
      cuts.push_back(b - 1.0);
      cuts.push_back(b + 1.0);
    }
  std::sort(cuts.begin(), cuts.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double mid = 0.5 * (cuts[i] + cuts[i + 1]);
    double v = 1.0;
    for (std::size_t j = 0; j < centers.size(); ++j) {
      int c = 0;
      for (double b : centers[j]) c += std::abs(mid - b) <= 1.0;
      v *= std::pow(c, p[j]);
    }
    total += v * (cuts[i + 1] - cuts[i]);
  }
  return total;
}

struct ThreadsGuard {
  explicit ThreadsGuard(const char* n) { setenv("BLTK_THREADS", n, 1); }
  ~ThreadsGuard() { unsetenv("BLTK_THREADS"); }
};

}  // namespace

TEST(Slab, Membership) {
  const Slab s = make_slab(v2(1, 0), line(v2(1, 0)), 2.0, 0.5);
  EXPECT_TRUE(s.contains(v2(1, 0)));
  EXPECT_TRUE(s.contains(v2(2.9, 0.4)));
  EXPECT_FALSE(s.contains(v2(3.1, 0.0)));
  EXPECT_FALSE(s.contains(v2(1.0, 0.6)));
  const Slab inf = make_slab(v2(0, 0), line(v2(1, 0)));
  EXPECT_TRUE(inf.contains(v2(1e9, 0.9)));
  EXPECT_THROW(make_slab(v2(0, 0), line(v2(1, 0)), -1.0), Error);
  EXPECT_THROW(make_slab(v2(0, 0), line(v2(1, 0)), 1.0, 0.0), Error);
  EXPECT_THROW(make_slab(v3(0, 0, 0), line(v2(1, 0))), Error);
}

TEST(Slab, MembershipIsRigidMotionInvariant) {
  Gen g(11);
  int checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int d = 2 + trial % 3;
    const int k = 1 + trial % (d - 1);
    const Slab s = make_slab(g.vec(d), Subspace(g.frame(d, k)), g.uniform(0.5, 3.0), g.uniform(0.5, 2.0));
    const Mat q = g.orthogonal(d);
    const Vec t = g.vec(d);
    const Slab m = s.moved(q, t);
    for (int i = 0; i < 20; ++i) {
      const Vec x = s.core.base_point + 2.0 * g.vec(d);
      const Vec r = x - s.core.base_point;
      const Vec along = s.core.direction.basis().transpose() * r;
      const double res = (r - s.core.direction.basis() * along).norm();
      if (std::abs(along.norm() - s.size) < 1e-9 || std::abs(res - s.radius) < 1e-9) continue;
      EXPECT_EQ(s.contains(x), m.contains(Vec(q * x + t)));
      ++checked;
    }
  }
  EXPECT_GT(checked, 3000);
}

TEST(SlabFamily, ToleranceWarning) {
  SlabFamily f{line(v2(1, 0)), 0.1, {make_slab(v2(0, 0), line(v2(1, 0.05)))}};
  EXPECT_NEAR(f.max_core_angle(), std::atan(0.05), 1e-12);
  EXPECT_FALSE(f.tolerance_warning());
  f.delta = 0.01;
  EXPECT_TRUE(f.tolerance_warning());
}

TEST(LhsKjPlane, PerpendicularStripsGiveFour) {
  for (double size : {kInfiniteSize, 1.0, 50.0}) {
    const auto r = lhs_kjplane(perpendicular_strips(size));
    EXPECT_NEAR(r.lhs.value, 4.0, 1e-12);
    EXPECT_NEAR(r.ratio, 4.0, 1e-12);
    EXPECT_EQ(r.lhs.error, 0.0);
  }
}

TEST(LhsKjPlane, DisjointPairsGiveZero) {
  auto f = perpendicular_strips(1.0);
  f[1].slabs[0].core.base_point = v2(100, 100);
  const auto r = lhs_kjplane(f);
  EXPECT_EQ(r.lhs.value, 0.0);
  EXPECT_EQ(r.lhs.cells, 0u);
}

TEST(LhsKjPlane, StripGridScalesWithCounts) {
  for (int m : {1, 2, 3, 5}) {
    const auto r = lhs_kjplane(axis_strip_grid(m));
    EXPECT_NEAR(r.lhs.value, 4.0 * m * m, 1e-9) << m;
    EXPECT_NEAR(r.ratio, 4.0, 1e-12) << m;
  }
}

TEST(LhsKjPlane, OverlappingStripsCountMultiplicity) {
  // Two coincident horizontal strips double the count on the overlap square.
  auto f = perpendicular_strips();
  f[0].slabs.push_back(f[0].slabs[0]);
  const auto r = lhs_kjplane(f);
  EXPECT_NEAR(r.lhs.value, 8.0, 1e-12);
  EXPECT_NEAR(r.ratio, 4.0, 1e-12);
}

TEST(LhsKjPlane, ThreeTubesMatchSteinmetzVolume) {
  // Three perpendicular unit cylinders meet in a solid of volume 8(2 - sqrt 2).
  std::vector<SlabFamily> f;
  for (int a = 0; a < 3; ++a) {
    const Subspace s = Subspace::coordinate(3, {a});
    f.push_back({s, 0.0, {make_slab(Vec::Zero(3), s)}});
  }
  const double exact = 8.0 * (2.0 - std::sqrt(2.0));
  // At the default cell the refinement difference bounds the actual error.
  const auto r = lhs_kjplane(f);
  EXPECT_LE(std::abs(r.lhs.value - exact), r.lhs.error);
  const auto fine = lhs_kjplane(f, 1.0 / 32.0);
  EXPECT_NEAR(fine.lhs.value, exact, kQuadratureTol * exact);
}

TEST(LhsKjPlane, CommonRotationChangesLittle) {
  Gen g(5);
  for (int trial = 0; trial < 4; ++trial) {
    const Mat q = g.orthogonal(2);
    const Vec t = g.vec(2);
    auto f = perpendicular_strips();
    for (auto& fam : f) fam = fam.moved(q, t);
    const auto r = lhs_kjplane(f);
    EXPECT_NEAR(r.lhs.value, 4.0, kQuadratureTol * 4.0);
  }
  Gen g3(6);
  std::vector<SlabFamily> base;
  for (int a = 0; a < 3; ++a) {
    const Subspace s = Subspace::coordinate(3, {a});
    base.push_back({s, 0.0, {make_slab(Vec::Zero(3), s)}});
  }
  const auto ref = lhs_kjplane(base, 1.0 / 32.0).lhs;
  const Mat q = g3.orthogonal(3);
  const Vec t = g3.vec(3);
  for (auto& fam : base) fam = fam.moved(q, t);
  const auto moved = lhs_kjplane(base, 1.0 / 32.0).lhs;
  EXPECT_NEAR(moved.value, ref.value, kQuadratureTol * ref.value);
}

TEST(LhsKjPlane, Preconditions) {
  auto f = perpendicular_strips();
  EXPECT_THROW(lhs_kjplane({f[0]}), Error);
  auto empty = f;
  empty[1].slabs.clear();
  try {
    lhs_kjplane(empty);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EmptyFamily);
  }
  auto parallel = f;
  parallel[1] = parallel[0];
  EXPECT_THROW(lhs_kjplane(parallel), Error);  // unbounded overlap
  std::vector<SlabFamily> wrong{f[0], f[0], f[1]};
  EXPECT_THROW(lhs_kjplane(wrong), Error);  // dimensions add to 3 in R^2
}

TEST(LhsAffine, PerpendicularMatchesKjPlane) {
  const auto a = lhs_affine(perpendicular_strips());
  EXPECT_NEAR(a.lhs.value, 4.0, 1e-12);
  EXPECT_NEAR(a.ratio, 4.0, 1e-12);
}

TEST(LhsAffine, ParallelFamiliesGiveZero) {
  auto f = perpendicular_strips();
  f[1] = f[0];
  f[1].slabs[0].core.base_point = v2(0, 0.5);
  const auto a = lhs_affine(f);
  EXPECT_EQ(a.lhs.value, 0.0);
}

TEST(LhsAffine, AngleInvariance) {
  // Overlap area 4 / sin(theta) times the wedge factor sin(theta).
  for (double deg : {15.0, 30.0, 45.0, 60.0, 90.0, 120.0}) {
    const auto a = lhs_affine(strips_at_angle(deg * kPi / 180.0));
    EXPECT_NEAR(a.lhs.value, 4.0, kQuadratureTol * 4.0) << deg;
    EXPECT_NEAR(a.rhs, 1.0, 1e-15);
  }
}

TEST(LhsAffine, EqualsKjPlaneForUnitWeightsAndParallelCores) {
  for (int m : {1, 2, 4}) {
    const auto f = axis_strip_grid(m, 1.5);
    EXPECT_DOUBLE_EQ(lhs_affine(f).lhs.value, lhs_kjplane(f).lhs.value) << m;
  }
  std::vector<SlabFamily> f;
  Gen g(3);
  for (int a = 0; a < 3; ++a) {
    const Subspace s = Subspace::coordinate(3, {a});
    SlabFamily fam{s, 0.0, {}};
    for (int i = 0; i < 2; ++i) fam.slabs.push_back(make_slab(0.4 * g.vec(3), s));
    f.push_back(fam);
  }
  EXPECT_DOUBLE_EQ(lhs_affine(f).lhs.value, lhs_kjplane(f).lhs.value);
}

TEST(LhsAffine, WeightHomogeneity) {
  Gen g(8);
  for (int d = 2; d <= 3; ++d) {
    auto f = near_axis_families(random_near_axis_spec(d, 40 + d, 0.2), kInfiniteSize, 40 + d);
    for (auto& fam : f)
      for (auto& s : fam.slabs) s.weight = g.uniform(-2.0, 2.0);
    const double n = static_cast<double>(f.size());
    const auto a = lhs_affine(f);
    for (auto& fam : f)
      for (auto& s : fam.slabs) s.weight *= 2.0;
    const auto b = lhs_affine(f);
    ASSERT_GT(a.lhs.value, 0.0);
    EXPECT_NEAR(b.lhs.value / a.lhs.value, std::pow(2.0, n / (n - 1.0)), 1e-8 * std::pow(2.0, n / (n - 1.0)));
    EXPECT_NEAR(b.rhs / a.rhs, std::pow(2.0, n / (n - 1.0)), 1e-12);
  }
}

TEST(LhsBL, TwoLinesReproduceKjPlane) {
  const auto r = lhs_bl(perpendicular_strips(), {Rational(1), Rational(1)});
  EXPECT_NEAR(r.lhs.value, 4.0, 1e-12);
  EXPECT_NEAR(r.bl, 1.0, 1e-6);
}

TEST(LhsBL, IntervalsOnTheLine) {
  const std::vector<std::vector<double>> centers{{0.0, 0.5, 3.0}, {0.25}};
  std::vector<SlabFamily> f;
  for (const auto& fam : centers) {
    SlabFamily sf{Subspace::zero(1), 0.0, {}};
    for (double b : fam) sf.slabs.push_back(make_slab(Vec::Constant(1, b), Subspace::zero(1)));
    f.push_back(sf);
  }
  for (const auto& p : std::vector<std::vector<Rational>>{{Rational(1, 2), Rational(1, 2)}, {Rational(1, 4), Rational(3, 4)}}) {
    const auto r = lhs_bl(f, p);
    const double exact = interval_oracle(centers, {p[0].value(), p[1].value()});
    EXPECT_NEAR(r.lhs.value, exact, 1e-12);
    EXPECT_LE(r.lhs.value, r.rhs * 2.0 + 1e-12);
  }
}

TEST(LhsBL, DegenerateDatumIsRejected) {
  auto f = perpendicular_strips();
  f[1] = f[0];
  try {
    lhs_bl(f, {Rational(1), Rational(1)});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InfiniteBLConstant);
  }
}

TEST(NearAxis, CoresStayWithinDelta) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const int d = 2 + static_cast<int>(seed % 3);
    const auto spec = random_near_axis_spec(d, seed);
    int total = 0;
    for (const auto& b : spec.blocks) total += static_cast<int>(b.size());
    EXPECT_EQ(total, d);
    const auto f = near_axis_families(spec, 10.0, seed);
    for (const auto& fam : f) {
      EXPECT_FALSE(fam.tolerance_warning());
      for (const auto& s : fam.slabs) {
        EXPECT_LE(s.core.base_point.norm(), spec.offset + 1e-12);
        EXPECT_LT((s.core.direction.basis().transpose() * s.core.base_point).norm(), 1e-12);
      }
    }
  }
}

TEST(NearAxis, GeometryIsIndependentOfSize) {
  const auto spec = random_near_axis_spec(3, 4);
  const auto a = near_axis_families(spec, 1.0, 4), b = near_axis_families(spec, 1000.0, 4);
  for (std::size_t j = 0; j < a.size(); ++j)
    for (std::size_t i = 0; i < a[j].slabs.size(); ++i) {
      EXPECT_EQ(a[j].slabs[i].core.base_point, b[j].slabs[i].core.base_point);
      EXPECT_EQ(a[j].slabs[i].core.direction.basis(), b[j].slabs[i].core.direction.basis());
    }
}

TEST(SizeSweep, PerpendicularStripsAreFlat) {
  const auto rep = size_sweep([](double r) { return perpendicular_strips(r); }, {1, 10, 100, 1000});
  for (const auto& p : rep.points) EXPECT_NEAR(p.ratio, 4.0, 1e-12);
  EXPECT_NEAR(rep.slope, 0.0, 1e-12);
  EXPECT_TRUE(rep.endpoint);
}

TEST(SizeSweep, SingleFamilyIsRejected) {
  EXPECT_THROW(size_sweep([](double r) { return std::vector<SlabFamily>{perpendicular_strips(r)[0]}; }, {1, 10}), Error);
  EXPECT_THROW(size_sweep([](double r) { return perpendicular_strips(r); }, {1}), Error);
}

TEST(SizeSweep, NearAxisFamiliesShowNoGrowth) {
  for (int d = 2; d <= 3; ++d)
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto spec = random_near_axis_spec(d, seed);
      const auto rep = size_sweep([&](double r) { return near_axis_families(spec, r, seed); }, {1, 10, 100, 1000});
      EXPECT_TRUE(rep.endpoint) << "d=" << d << " seed=" << seed << " slope=" << rep.slope;
    }
}

TEST(SizeSweep, BLModeOnLoomisWhitneyTubes) {
  const auto spec = NearAxisSpec{3, {{0}, {1}, {2}}, {2, 2, 2}, 0.05, 0.25};
  SweepOptions opt;
  opt.mode = SweepMode::BL;
  opt.exponents = {Rational(1, 2), Rational(1, 2), Rational(1, 2)};
  const auto bl = size_sweep([&](double r) { return near_axis_families(spec, r, 9); }, {1, 10, 100, 1000}, opt);
  const auto kj = size_sweep([&](double r) { return near_axis_families(spec, r, 9); }, {1, 10, 100, 1000});
  EXPECT_TRUE(bl.endpoint);
  // With p_j = 1/(n-1) the two integrands coincide.
  for (std::size_t i = 0; i < bl.points.size(); ++i) EXPECT_NEAR(bl.points[i].lhs, kj.points[i].lhs, 1e-9);
}

TEST(SizeSweep, InjectedGrowthIsCaught) {
  SweepOptions opt;
  opt.comparator_growth = 0.2;
  const auto strips = size_sweep([](double r) { return perpendicular_strips(r); }, {1, 10, 100, 1000}, opt);
  EXPECT_FALSE(strips.endpoint);
  EXPECT_NEAR(strips.slope, -0.2, 1e-12);
  const auto spec = random_near_axis_spec(3, 2);
  const auto near = size_sweep([&](double r) { return near_axis_families(spec, r, 2); }, {1, 10, 100, 1000}, opt);
  EXPECT_FALSE(near.endpoint);
}

TEST(SlabQuadrature, ThreadCountDoesNotChangeBits) {
  const auto spec = random_near_axis_spec(3, 7);
  const auto f = near_axis_families(spec, 20.0, 7);
  double one, three;
  {
    ThreadsGuard g("1");
    one = lhs_kjplane(f).lhs.value;
  }
  {
    ThreadsGuard g("3");
    three = lhs_kjplane(f).lhs.value;
  }
  EXPECT_EQ(one, three);
}

// ---------------------------------------------------------------------------

TEST(VarietyModel, Validation) {
  EXPECT_THROW(VarietyModel::planes({}), Error);
  EXPECT_THROW(VarietyModel::sphere(v2(0, 0), 0.0), Error);
  EXPECT_EQ(VarietyModel::sphere(v3(0, 0, 0), 1.0).degree(), 2);
  EXPECT_EQ(VarietyModel::sphere(v3(0, 0, 0), 1.0).dim(), 2);
  const auto lines = axis_line_unions(3);
  EXPECT_EQ(lines[0].degree(), 3);
  EXPECT_THROW(VarietyModel::graph(2, Vec::Constant(1, 1.0), Vec::Constant(1, 0.0), nullptr, nullptr, 1), Error);
}

TEST(VarietyModel, SamplersIntegrateMeasure) {
  // Total weight estimates the measure inside the ball.
  Rng rng(3);
  const auto circle = VarietyModel::sphere(v2(0, 0), 1.0);
  const auto sphere = VarietyModel::sphere(v3(0, 0, 0), 1.0);
  const auto plane = VarietyModel::planes({{v3(0, 0, 0.6), Subspace::coordinate(3, {0, 1})}});
  // Circle inside B((1, 0), 1): the arc with |angle| <= pi/3.
  EXPECT_NEAR(circle.sample(v2(1, 0), 1.0, rng).weight, 2.0 * kPi / 3.0, 1e-12);
  // Sphere cap inside B((0, 0, 1), 1): height 1/2, area pi.
  EXPECT_NEAR(sphere.sample(v3(0, 0, 1), 1.0, rng).weight, kPi, 1e-12);
  // Plane at height 0.6 inside the unit ball: disc of radius 0.8.
  EXPECT_NEAR(plane.sample(v3(0, 0, 0), 1.0, rng).weight, kPi * 0.64, 1e-12);
  for (int i = 0; i < 100; ++i) {
    const auto s = sphere.sample(v3(0, 0, 1), 1.0, rng);
    EXPECT_LE((s.point - v3(0, 0, 1)).norm(), 1.0 + 1e-12);
    EXPECT_NEAR(s.point.norm(), 1.0, 1e-12);
    EXPECT_NEAR((s.tangent.basis().transpose() * s.point).norm(), 0.0, 1e-12);
  }
  // Graph of x -> x^2 on [0, 1] has arc length (2 sqrt 5 + asinh 2) / 4.
  const auto parabola = VarietyModel::graph(
      2, Vec::Constant(1, 0.0), Vec::Constant(1, 1.0), [](const Vec& u) { return Vec::Constant(1, u[0] * u[0]); },
      [](const Vec& u) { return Mat::Constant(1, 1, 2.0 * u[0]); }, 2);
  std::vector<double> w;
  for (int i = 0; i < 200000; ++i) w.push_back(parabola.sample(v2(0.5, 0.5), 10.0, rng).weight);
  const auto ms = mean_stderr(w);
  const double exact = (2.0 * std::sqrt(5.0) + std::asinh(2.0)) / 4.0;
  EXPECT_NEAR(ms.mean, exact, 3.0 * ms.std_err + 1e-12);
}

TEST(CellFunctional, OrthogonalLinesAtTheirCrossing) {
  const std::vector<VarietyModel> m{VarietyModel::planes({{v2(0.5, 0.5), Subspace::coordinate(2, {0})}}),
                                    VarietyModel::planes({{v2(0.5, 0.5), Subspace::coordinate(2, {1})}})};
  CellOptions opt;
  EXPECT_EQ(default_cell_radius(2), 50.0);
  const auto g = cell_functional_variety(m, {0, 0}, opt);
  EXPECT_NEAR(g.value, 100.0 * 100.0, 1e-8);
  EXPECT_NEAR(g.std_err, 0.0, 1e-8);
  opt.radius = 2.0;
  EXPECT_NEAR(cell_functional_variety(m, {0, 0}, opt).value, 16.0, 1e-12);
}

TEST(CellFunctional, ParallelLinesGiveZero) {
  const std::vector<VarietyModel> m{VarietyModel::planes({{v2(0.5, 0.5), Subspace::coordinate(2, {0})}}),
                                    VarietyModel::planes({{v2(0.5, 1.0), Subspace::coordinate(2, {0})}})};
  EXPECT_EQ(cell_functional_variety(m, {0, 0}).value, 0.0);
}

TEST(CellFunctional, CrossingCirclesMatchArcQuadrature) {
  const Vec p = v2(0.5, 0.5);
  for (double deg : {30.0, 60.0, 90.0}) {
    const double th = deg * kPi / 180.0;
    const Vec c1 = p - v2(1, 0), c2 = p - v2(std::cos(th), std::sin(th));
    const std::vector<VarietyModel> m{VarietyModel::sphere(c1, 1.0), VarietyModel::sphere(c2, 1.0)};
    CellOptions opt;
    opt.radius = 0.3;
    opt.samples = 20000;
    const auto g = cell_functional_variety(m, {0, 0}, opt);
    // Midpoint rule in the angle on each full circle with the ball indicator.
    const int n = 4000;
    std::vector<double> a1, a2;
    for (int i = 0; i < n; ++i) {
      const double t = 2.0 * kPi * (i + 0.5) / n;
      const Vec dir = v2(std::cos(t), std::sin(t));
      if ((c1 + dir - p).norm() <= opt.radius) a1.push_back(t);
      if ((c2 + dir - p).norm() <= opt.radius) a2.push_back(t);
    }
    double s = 0.0;
    for (double t1 : a1)
      for (double t2 : a2) s += std::abs(std::sin(t1 - t2));
    const double oracle = s * std::pow(2.0 * kPi / n, 2);
    EXPECT_NEAR(g.value, oracle, 3.0 * g.std_err + 2e-3 * oracle) << deg;
  }
}

TEST(CellFunctional, AdditiveOverStrata) {
  const auto graph = [](double lo, double hi) {
    return VarietyModel::graph(
        2, Vec::Constant(1, lo), Vec::Constant(1, hi), [](const Vec& u) { return Vec::Constant(1, 0.3 * u[0] * u[0] + 0.4); },
        [](const Vec& u) { return Mat::Constant(1, 1, 0.6 * u[0]); }, 2);
  };
  const auto vline = VarietyModel::planes({{v2(0.2, 0), Subspace::coordinate(2, {1})}});
  CellOptions opt;
  opt.radius = 1.0;
  opt.samples = 40000;
  const auto whole = cell_functional_variety({graph(-1, 1), vline}, {0, 0}, opt);
  opt.seed = 1;
  const auto left = cell_functional_variety({graph(-1, 0), vline}, {0, 0}, opt);
  opt.seed = 2;
  const auto right = cell_functional_variety({graph(0, 1), vline}, {0, 0}, opt);
  const double se = std::sqrt(whole.std_err * whole.std_err + left.std_err * left.std_err + right.std_err * right.std_err);
  EXPECT_GT(whole.value, 0.0);
  EXPECT_NEAR(whole.value, left.value + right.value, 3.0 * se);
  // Plane unions split into single planes.
  const std::vector<AffineSubspace> planes{{v2(0, 0.2), Subspace::coordinate(2, {0})},
                                           {v2(0, 0.9), Subspace(Mat(v2(1, 0.3)))}};
  const auto cross = VarietyModel::sphere(v2(0.5, 0.5), 0.7);
  opt.seed = 0;
  const auto both = cell_functional_variety({VarietyModel::planes(planes), cross}, {0, 0}, opt);
  const auto a = cell_functional_variety({VarietyModel::planes({planes[0]}), cross}, {0, 0}, opt);
  const auto b = cell_functional_variety({VarietyModel::planes({planes[1]}), cross}, {0, 0}, opt);
  EXPECT_NEAR(both.value, a.value + b.value,
              3.0 * std::sqrt(both.std_err * both.std_err + a.std_err * a.std_err + b.std_err * b.std_err));
}

TEST(VarietyCheck, AxisLineUnionsGiveConstantRatio) {
  VarietyCheckOptions opt;
  opt.cell.samples = 16;
  const double n = default_cell_radius(2);
  // Exact value: G factors into chord sums, and integer spacing makes each
  // line's lattice sum the same, so the ratio is (sum_t 2 sqrt(N^2 - t^2))^2
  // over half-integers t.
  double chord = 0.0;
  for (double t = 0.5; t < n; t += 1.0) chord += 2.0 * 2.0 * std::sqrt(n * n - t * t);
  const double exact = chord * chord;
  for (int m : {1, 2, 4, 8}) {
    const auto models = axis_line_unions(m);
    const auto rep = variety_inequality_check(models, covering_lattice(models, n), opt);
    EXPECT_NEAR(rep.ratio, exact, 3.0 * rep.ratio_err + 1e-9 * exact) << m;
  }
}

TEST(VarietyCheck, BLWeightedMatchesPlainForTransversalData) {
  const std::vector<VarietyModel> models{VarietyModel::sphere(v2(0.5, 0.5), 1.0),
                                         VarietyModel::planes({{v2(0.3, 0.2), line(v2(1, 0.4))},
                                                               {v2(0.0, 0.0), line(v2(0.2, 1))}})};
  VarietyCheckOptions plain;
  plain.cell.radius = 1.0;
  plain.cell.samples = 2000;
  const Lattice lat{{-2, -2}, {3, 3}};
  auto bl = plain;
  bl.mode = VarietyMode::BLWeighted;
  bl.tau_j = {1, 1};
  bl.tau = 1;
  const auto a = variety_inequality_check(models, lat, plain);
  const auto b = variety_inequality_check(models, lat, bl);
  EXPECT_GT(a.lhs, 0.0);
  EXPECT_NEAR(a.ratio, b.ratio, 3.0 * std::hypot(a.ratio_err, b.ratio_err));
  EXPECT_EQ(a.rhs, b.rhs);
}

TEST(VarietyCheck, BLWeightedOnAxisLines) {
  const auto models = axis_line_unions(2);
  VarietyCheckOptions plain;
  plain.cell.radius = 3.0;
  plain.cell.samples = 16;
  auto bl = plain;
  bl.mode = VarietyMode::BLWeighted;
  bl.tau_j = {1, 1};
  const auto lat = covering_lattice(models, 3.0);
  const auto a = variety_inequality_check(models, lat, plain);
  const auto b = variety_inequality_check(models, lat, bl);
  EXPECT_NEAR(a.ratio, b.ratio, 3.0 * std::hypot(a.ratio_err, b.ratio_err) + 1e-9 * a.ratio);
}

TEST(VarietyCheck, SphereAndLineStableUnderRefinement) {
  const std::vector<VarietyModel> models{VarietyModel::sphere(v3(0.5, 0.5, 0.5), 1.0),
                                         VarietyModel::planes({{v3(0.7, 0.4, 0.0), line(v3(0.1, 0.2, 1.0))}})};
  VarietyCheckOptions coarse;
  coarse.cell.radius = 1.5;
  coarse.cell.samples = 400;
  auto fine = coarse;
  fine.cell.samples = 1600;
  fine.cell.seed = 5;
  const auto lat = covering_lattice(models, 1.5);
  const auto a = variety_inequality_check(models, lat, coarse);
  const auto b = variety_inequality_check(models, lat, fine);
  EXPECT_GT(a.nonzero_cells, 0u);
  EXPECT_TRUE(std::isfinite(a.ratio));
  EXPECT_NEAR(a.ratio, b.ratio, 3.0 * std::hypot(a.ratio_err, b.ratio_err));
  EXPECT_LT(b.ratio_err, a.ratio_err);
}

TEST(VarietyCheck, ScalingMismatchAndUnboundedLattice) {
  const auto models = axis_line_unions(1);
  VarietyCheckOptions bl;
  bl.mode = VarietyMode::BLWeighted;
  bl.tau_j = {2, 1};
  bl.tau = 1;
  EXPECT_THROW(variety_inequality_check(models, Lattice{{0, 0}, {1, 1}}, bl), Error);
  const std::vector<VarietyModel> parallel{VarietyModel::planes({{v2(0, 0), Subspace::coordinate(2, {0})}}),
                                           VarietyModel::planes({{v2(0, 1), Subspace::coordinate(2, {0})}})};
  EXPECT_THROW(covering_lattice(parallel, 2.0), Error);
}

TEST(VarietyCheck, ThreadCountDoesNotChangeBits) {
  const std::vector<VarietyModel> models{VarietyModel::sphere(v2(0.5, 0.5), 1.0),
                                         VarietyModel::planes({{v2(0.3, 0.2), line(v2(1, 0.4))}})};
  VarietyCheckOptions opt;
  opt.mode = VarietyMode::BLWeighted;
  opt.tau_j = {1, 1};
  opt.cell.radius = 1.0;
  opt.cell.samples = 300;
  const Lattice lat{{-2, -2}, {3, 3}};
  VarietyReport one, three;
  {
    ThreadsGuard g("1");
    one = variety_inequality_check(models, lat, opt);
  }
  {
    ThreadsGuard g("3");
    three = variety_inequality_check(models, lat, opt);
  }
  EXPECT_EQ(one.lhs, three.lhs);
  EXPECT_EQ(one.std_err, three.std_err);
}
