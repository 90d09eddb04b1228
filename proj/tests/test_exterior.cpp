#include <gtest/gtest.h>

#include <numeric>

#include <algorithm>
#include <numbers>

#include "bltk/exterior.hpp"
#include "support.hpp"

using namespace bltk;
using testsupport::Gen;
using testsupport::gram_wedge;

namespace {

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

Vec unit_axis(int d, int i) {
  Vec e = Vec::Zero(d);
  e[i] = 1.0;
  return e;
}

std::vector<Subspace> random_split(Gen& g, int d, const std::vector<int>& dims) {
  std::vector<Subspace> out;
  for (int k : dims) out.emplace_back(g.mat(d, k));
  return out;
}

std::vector<int> random_dims(Gen& g, int d) {
  std::vector<int> dims;
  int left = d;
  while (left > 0) {
    const int k = g.integer(1, left);
    dims.push_back(k);
    left -= k;
  }
  if (dims.size() < 2) {
    dims = {d - 1, 1};
    if (d == 1) dims = {1};
  }
  return dims;
}

}  // namespace

TEST(Orthonormalize, KeepsOrthonormalInput) {
  const Subspace s = orthonormalize({unit_axis(3, 0), unit_axis(3, 1)});
  EXPECT_EQ(s.dim(), 2);
  EXPECT_NEAR((s.projector() - Subspace::coordinate(3, {0, 1}).projector()).norm(), 0.0, 1e-14);
}

TEST(Orthonormalize, DiagonalPairSpansThePlane) {
  const Subspace s = orthonormalize({v2(1, 1), v2(1, -1)});
  EXPECT_NEAR((s.basis().transpose() * s.basis() - Mat::Identity(2, 2)).norm(), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(s.basis().col(0).dot(v2(1, 1) / std::sqrt(2.0))), 1.0, 1e-14);
}

TEST(Orthonormalize, RejectsDependentInput) {
  try {
    orthonormalize({v2(1, 0), v2(2, 0)});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::RankDeficient);
  }
}

TEST(VectorWedge, Examples) {
  std::vector<Vec> frame;
  for (int i = 0; i < 4; ++i) frame.push_back(unit_axis(4, i));
  EXPECT_NEAR(vector_wedge_norm(frame), 1.0, 1e-15);
  EXPECT_NEAR(vector_wedge_norm({v2(1, 0), v2(1, 1)}), 1.0, 1e-15);
  EXPECT_NEAR(vector_wedge_norm({v2(1, 0), v2(2, 0)}), 0.0, 1e-15);
}

TEST(VectorWedge, MismatchedDimensionsThrow) {
  Vec a = Vec::Zero(3);
  EXPECT_THROW(vector_wedge_norm({v2(1, 0), a}), Error);
}

TEST(VectorWedge, MatchesGramDeterminantOracle) {
  Gen g(11);
  for (int trial = 0; trial < 300; ++trial) {
    const int d = g.integer(1, 6);
    const int q = g.integer(1, d);
    const Mat m = g.mat(d, q);
    EXPECT_NEAR(wedge_norm_columns(m), gram_wedge(m), 1e-9 * std::max(1.0, gram_wedge(m)));
  }
}

TEST(SubspaceWedge, Examples) {
  EXPECT_NEAR(subspace_wedge_norm({Subspace::coordinate(3, {0, 2}), Subspace::coordinate(3, {1})}), 1.0, 1e-15);
  for (double th : {0.1, 0.7, 1.3, 2.9}) {
    const double w = subspace_wedge_norm({orthonormalize({v2(1, 0)}), orthonormalize({v2(std::cos(th), std::sin(th))})});
    EXPECT_NEAR(w, std::abs(std::sin(th)), 1e-14);
  }
  // Normals of three faces of the unit cube.
  EXPECT_NEAR(subspace_wedge_norm({Subspace::coordinate(3, {0}), Subspace::coordinate(3, {1}), Subspace::coordinate(3, {2})}),
              1.0, 1e-15);
}

TEST(SubspaceWedge, DimensionSumMustMatch) {
  try {
    subspace_wedge_norm({Subspace::coordinate(3, {0}), Subspace::coordinate(3, {1})});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DimensionMismatch);
  }
}

TEST(SubspaceWedge, PermutationRotationAndBasisInvariance) {
  Gen g(12);
  for (int trial = 0; trial < 400; ++trial) {
    const int d = g.integer(2, 6);
    const auto dims = random_dims(g, d);
    auto subs = random_split(g, d, dims);
    const double w = subspace_wedge_norm(subs);
    EXPECT_LE(w, 1.0 + 1e-12);
    // Oracle: Gram determinant of the concatenated bases.
    EXPECT_NEAR(w, gram_wedge(concat_bases(subs)), 1e-10);
    // Another orthonormal basis of each subspace.
    std::vector<Subspace> rebased;
    for (const auto& s : subs) rebased.emplace_back(s.basis() * g.mat(s.dim(), s.dim()));
    EXPECT_NEAR(subspace_wedge_norm(rebased), w, 1e-10);
    // A common rotation.
    const Mat r = g.orthogonal(d);
    std::vector<Subspace> rotated;
    for (const auto& s : subs) rotated.push_back(s.transformed(r));
    EXPECT_NEAR(subspace_wedge_norm(rotated), w, 1e-10);
    // A permutation of the list.
    std::reverse(subs.begin(), subs.end());
    EXPECT_NEAR(subspace_wedge_norm(subs), w, 1e-10);
  }
}

TEST(SubspaceWedge, OrthogonalComplementGivesOne) {
  Gen g(13);
  for (int trial = 0; trial < 100; ++trial) {
    const int d = g.integer(2, 6);
    const int k = g.integer(1, d - 1);
    const Subspace v(g.mat(d, k));
    EXPECT_NEAR(subspace_wedge_norm({v, v.complement()}), 1.0, 1e-12);
  }
}

TEST(SubspaceAngle, Examples) {
  const Subspace x = orthonormalize({v2(1, 0)});
  EXPECT_NEAR(subspace_angle_cos(x, x), 1.0, 1e-15);
  EXPECT_NEAR(subspace_angle_cos(x, orthonormalize({v2(0, 1)})), 0.0, 1e-15);
  for (double th : {0.2, 0.9, 1.4}) EXPECT_NEAR(subspace_angle_cos(x, orthonormalize({v2(std::cos(th), std::sin(th))})), std::cos(th), 1e-14);
  EXPECT_THROW(subspace_angle_cos(x, Subspace::full(2)), Error);
}

TEST(SubspaceAngle, SymmetricAndEqualsWedgeWithComplement) {
  Gen g(14);
  for (int trial = 0; trial < 300; ++trial) {
    const int d = g.integer(2, 6);
    const int k = g.integer(1, d - 1);
    const Subspace a(g.mat(d, k)), b(g.mat(d, k));
    const double c = subspace_angle_cos(a, b);
    EXPECT_GE(c, 0.0);
    EXPECT_LE(c, 1.0);
    EXPECT_NEAR(c, subspace_angle_cos(b, a), 1e-12);
    EXPECT_NEAR(c, subspace_wedge_norm({a, b.complement()}), 1e-10);
    // Oracle: |wedge of projections of a's basis onto b| / |wedge of a's basis|.
    const Mat proj = b.projector() * a.basis();
    EXPECT_NEAR(c, gram_wedge(proj), 1e-10);
  }
}

TEST(DualBasis, Examples) {
  auto u = dual_basis({v2(1, 0), v2(0, 1)});
  EXPECT_NEAR((u[0] - v2(1, 0)).norm() + (u[1] - v2(0, 1)).norm(), 0.0, 1e-15);
  u = dual_basis({v2(1, 0), v2(1, 1)});
  EXPECT_NEAR((u[0] - v2(1, -1)).norm() + (u[1] - v2(0, 1)).norm(), 0.0, 1e-14);
  u = dual_basis({v2(2, 0), v2(0, 2)});
  EXPECT_NEAR((u[0] - v2(0.5, 0)).norm() + (u[1] - v2(0, 0.5)).norm(), 0.0, 1e-15);
  EXPECT_THROW(dual_basis({v2(1, 0), v2(2, 0)}), Error);
}

TEST(DualBasis, BiorthogonalReciprocalAndInvolutive) {
  Gen g(15);
  for (int trial = 0; trial < 300; ++trial) {
    const int d = g.integer(1, 6);
    std::vector<Vec> w;
    for (int i = 0; i < d; ++i) w.push_back(g.vec(d));
    const auto u = dual_basis(w);
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) EXPECT_NEAR(w[a].dot(u[b]), a == b ? 1.0 : 0.0, 1e-9);
    EXPECT_NEAR(vector_wedge_norm(u) * vector_wedge_norm(w), 1.0, 1e-9);
    const auto ww = dual_basis(u);
    for (int i = 0; i < d; ++i) EXPECT_NEAR((ww[i] - w[i]).norm(), 0.0, 1e-8 * std::max(1.0, w[i].norm()));
  }
}

TEST(MinorAssignment, CountAndConstant) {
  EXPECT_EQ(admissible_assignment_count({1, 1}), 2u);
  EXPECT_EQ(admissible_assignment_count({2, 1}), 3u);
  EXPECT_EQ(admissible_assignment_count({1, 1, 1, 1}), 24u);
  EXPECT_EQ(admissible_assignment_count({2, 2, 2}), 90u);
  EXPECT_DOUBLE_EQ(minor_assignment_constant({2, 2}), 1.0 / 6.0);
}

TEST(MinorAssignment, CoordinateSubspacesTakeIdentityPartition) {
  const auto best = best_dual_minor_assignment({Subspace::coordinate(3, {0}), Subspace::coordinate(3, {1, 2})},
                                               {unit_axis(3, 0), unit_axis(3, 1), unit_axis(3, 2)});
  EXPECT_NEAR(best.value, 1.0, 1e-15);
  EXPECT_EQ(best.indices[0], std::vector<int>({0}));
  EXPECT_EQ(best.indices[1], std::vector<int>({1, 2}));
}

TEST(MinorAssignment, TwoLinesInThePlane) {
  for (double th = 0.05; th < std::numbers::pi; th += 0.1) {
    const std::vector<Subspace> v = {orthonormalize({v2(1, 0)}), orthonormalize({v2(std::cos(th), std::sin(th))})};
    const auto best = best_dual_minor_assignment(v, {v2(1, 0), v2(0, 1)});
    EXPECT_GE(best.value, std::abs(std::sin(th)) - 1e-14);
  }
}

TEST(MinorAssignment, DualBoundWithTenToMinusTwoFloorInFourDimensions) {
  Gen g(16);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto v = random_split(g, 4, {2, 2});
    std::vector<Vec> w;
    for (int i = 0; i < 4; ++i) w.push_back(g.vec(4));
    const double rhs = gram_wedge(concat_bases(v)) * gram_wedge(bltk::columns(w, 4));
    EXPECT_GE(best_dual_minor_assignment(v, w).value, 1e-2 * rhs);
  }
}

TEST(MinorAssignment, MatchesBruteForceOverPermutations) {
  // Oracle: enumerate all d! orderings and cut them into consecutive blocks.
  Gen g(17);
  for (int trial = 0; trial < 60; ++trial) {
    const int d = g.integer(2, 4);
    const auto dims = random_dims(g, d);
    const auto v = random_split(g, d, dims);
    std::vector<Vec> w;
    for (int i = 0; i < d; ++i) w.push_back(g.vec(d));
    std::vector<int> perm(static_cast<std::size_t>(d));
    std::iota(perm.begin(), perm.end(), 0);
    double best = 0.0;
    do {
      double prod = 1.0;
      int pos = 0;
      for (std::size_t j = 0; j < v.size(); ++j) {
        const Mat perp = v[j].complement_basis();
        Mat m(d, d);
        m.leftCols(perp.cols()) = perp;
        for (int h = 0; h < dims[j]; ++h) m.col(perp.cols() + h) = w[static_cast<std::size_t>(perm[static_cast<std::size_t>(pos++)])];
        prod *= std::abs(testsupport::laplace_det(m));
      }
      best = std::max(best, prod);
    } while (std::next_permutation(perm.begin(), perm.end()));
    EXPECT_NEAR(best_dual_minor_assignment(v, w).value, best, 1e-10 * std::max(1.0, best));
  }
}

TEST(MinorAssignment, DualIndicesFormAPartition) {
  Gen g(18);
  const auto v = random_split(g, 5, {2, 1, 2});
  std::vector<Vec> w;
  for (int i = 0; i < 5; ++i) w.push_back(g.vec(5));
  const auto best = best_dual_minor_assignment(v, w);
  std::vector<int> seen;
  for (std::size_t j = 0; j < v.size(); ++j) {
    EXPECT_EQ(static_cast<int>(best.indices[j].size()), v[j].dim());
    seen.insert(seen.end(), best.indices[j].begin(), best.indices[j].end());
  }
  std::sort(seen.begin(), seen.end());
  EXPECT_EQ(seen, std::vector<int>({0, 1, 2, 3, 4}));
}

TEST(MinorAssignment, PrimalUsesEachIndexNMinusOneTimes) {
  Gen g(19);
  const auto v = random_split(g, 4, {1, 2, 1});
  std::vector<Vec> w;
  for (int i = 0; i < 4; ++i) w.push_back(g.vec(4));
  const auto best = best_primal_minor_assignment(v, w);
  std::vector<int> counts(4, 0);
  for (const auto& idx : best.indices)
    for (int i : idx) counts[static_cast<std::size_t>(i)]++;
  for (int c : counts) EXPECT_EQ(c, 2);
}

TEST(MinorAssignment, TooLargeIsUnsupported) {
  std::vector<Vec> w;
  for (int i = 0; i < 9; ++i) w.push_back(unit_axis(9, i));
  try {
    best_dual_minor_assignment({Subspace::coordinate(9, {0, 1, 2, 3}), Subspace::coordinate(9, {4, 5, 6, 7, 8})}, w);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Unsupported);
  }
}

TEST(MinorAssignment, DegenerateWedgeIsAValidZero) {
  const auto best = best_dual_minor_assignment({orthonormalize({v2(1, 0)}), orthonormalize({v2(1, 0)})}, {v2(1, 0), v2(0, 1)});
  EXPECT_GE(best.value, 0.0);
}

TEST(DetIdentity, StandardBasesGiveZero) {
  // Identical bases repeat the head columns, so both sides vanish.
  const std::vector<Mat> bases(3, Mat::Identity(3, 3));
  const auto sides = det_identity_sides(bases, {1, 1, 1});
  EXPECT_EQ(sides.lhs, 0.0);
  EXPECT_EQ(sides.rhs, 0.0);
  EXPECT_EQ(det_identity_residual(bases, {1, 1, 1}), 0.0);
}

TEST(DetIdentity, ShiftedStandardBasesGiveOne) {
  // Basis j is the standard basis rotated so its first c_j columns are the j-th coordinate block.
  for (const std::vector<int>& cuts : {std::vector<int>{1, 1, 1}, std::vector<int>{2, 1}, std::vector<int>{1, 2, 0, 1}}) {
    const int d = std::accumulate(cuts.begin(), cuts.end(), 0);
    std::vector<Mat> bases;
    int offset = 0;
    for (int c : cuts) {
      Mat b(d, d);
      for (int i = 0; i < d; ++i) b.col(i) = Mat::Identity(d, d).col((i + offset) % d);
      bases.push_back(b);
      offset += c;
    }
    const auto sides = det_identity_sides(bases, cuts);
    EXPECT_NEAR(sides.lhs, 1.0, 1e-15);
    EXPECT_NEAR(sides.rhs, 1.0, 1e-15);
  }
}

TEST(DetIdentity, RandomRotationsSmallCases) {
  Gen g(20);
  for (int trial = 0; trial < 200; ++trial) {
    EXPECT_LT(det_identity_residual({g.orthogonal(2), g.orthogonal(2)}, {1, 1}), 1e-10);
    EXPECT_LT(det_identity_residual({g.orthogonal(3), g.orthogonal(3), g.orthogonal(3)}, {1, 1, 1}), 1e-10);
  }
}

TEST(DetIdentity, RightSideMatchesLaplaceOracle) {
  Gen g(21);
  for (int trial = 0; trial < 50; ++trial) {
    const std::vector<Mat> b = {g.orthogonal(3), g.orthogonal(3)};
    const auto sides = det_identity_sides(b, {2, 1});
    Mat heads(3, 3);
    heads << b[0].leftCols(2), b[1].leftCols(1);
    EXPECT_NEAR(sides.rhs, std::abs(testsupport::laplace_det(heads)), 1e-12);
    // The left side is a 3x3 block here: tails of basis 1 and basis 2 side by side.
    Mat tails(3, 3);
    tails << b[0].rightCols(1), b[1].rightCols(2);
    EXPECT_NEAR(sides.lhs, std::abs(testsupport::laplace_det(tails)), 1e-12);
  }
}

TEST(DetIdentity, RejectsBadInput) {
  EXPECT_THROW(det_identity_residual({Mat::Identity(2, 2), Mat::Identity(2, 2)}, {1, 2}), Error);
  Mat bad = Mat::Identity(2, 2);
  bad(0, 1) = 0.5;
  EXPECT_THROW(det_identity_residual({bad, Mat::Identity(2, 2)}, {1, 1}), Error);
}
