#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <vector>

#include "bltk/linalg.hpp"

namespace bltk {

// Linear subspace stored as an orthonormal basis (columns). The zero subspace
// (k = 0) is allowed so that complements and intersections stay closed.
class Subspace {
 public:
  Subspace() = default;

  // Re-orthonormalizes the given spanning columns; throws RankDeficient.
  explicit Subspace(const Mat& spanning) : d_(static_cast<int>(spanning.rows())) {
    const auto k = spanning.cols();
    if (k == 0) {
      basis_ = Mat(d_, 0);
      return;
    }
    if (k > d_) fail(ErrorKind::RankDeficient, "more spanning vectors than the ambient dimension");
    Mat n = spanning;
    for (Eigen::Index j = 0; j < k; ++j) {
      const double len = n.col(j).norm();
      if (!(len > 0.0) || !std::isfinite(len)) fail(ErrorKind::RankDeficient, "zero or non-finite spanning vector");
      n.col(j) /= len;
    }
    Eigen::JacobiSVD<Mat> svd(n);
    if (!(svd.singularValues()(k - 1) > 1e-12)) fail(ErrorKind::RankDeficient, "spanning vectors are dependent");
    Eigen::HouseholderQR<Mat> qr(n);
    basis_ = qr.householderQ() * Mat::Identity(d_, k);
  }

  static Subspace zero(int d) {
    Subspace s;
    s.d_ = d;
    s.basis_ = Mat(d, 0);
    return s;
  }
  static Subspace full(int d) { return Subspace(Mat::Identity(d, d)); }
  static Subspace coordinate(int d, const std::vector<int>& axes) {
    Mat b = Mat::Zero(d, static_cast<Eigen::Index>(axes.size()));
    for (std::size_t i = 0; i < axes.size(); ++i) b(axes[i], static_cast<Eigen::Index>(i)) = 1.0;
    return Subspace(b);
  }

  int ambient_dim() const { return d_; }
  int dim() const { return static_cast<int>(basis_.cols()); }
  const Mat& basis() const { return basis_; }
  Mat projector() const { return basis_ * basis_.transpose(); }
  Mat complement_basis() const { return bltk::complement_basis(basis_); }
  Subspace complement() const {
    Subspace s;
    s.d_ = d_;
    s.basis_ = complement_basis();
    return s;
  }
  Subspace transformed(const Mat& rotation) const {
    Subspace s;
    s.d_ = d_;
    s.basis_ = rotation * basis_;
    return s;
  }
  // Largest principal angle to another subspace of the same dimension.
  double max_angle_to(const Subspace& other) const {
    if (dim() == 0) return 0.0;
    Eigen::JacobiSVD<Mat> svd(basis_.transpose() * other.basis());
    const double smin = std::clamp(svd.singularValues().minCoeff(), 0.0, 1.0);
    return std::acos(smin);
  }

 private:
  int d_ = 0;
  Mat basis_;
};

struct AffineSubspace {
  Vec base_point;
  Subspace direction;
};

inline Subspace orthonormalize(const std::vector<Vec>& vectors) {
  if (vectors.empty()) fail(ErrorKind::RankDeficient, "empty vector list");
  return Subspace(columns(vectors, static_cast<int>(vectors.front().size())));
}

// sqrt(det Gram) of the columns; zero columns give 1, more than d columns give 0.
inline double wedge_norm_columns(const Mat& cols) {
  const auto d = cols.rows();
  const auto q = cols.cols();
  if (q == 0) return 1.0;
  if (q > d) return 0.0;
  Eigen::HouseholderQR<Mat> qr(cols);
  double p = 1.0;
  for (Eigen::Index i = 0; i < q; ++i) p *= qr.matrixQR()(i, i);
  return std::abs(p);
}

inline double vector_wedge_norm(const std::vector<Vec>& vectors) {
  if (vectors.empty()) return 1.0;
  return wedge_norm_columns(columns(vectors, static_cast<int>(vectors.front().size())));
}

inline Mat concat_bases(const std::vector<Subspace>& subspaces) {
  const int d = subspaces.front().ambient_dim();
  int total = 0;
  for (const auto& s : subspaces) {
    if (s.ambient_dim() != d) fail(ErrorKind::DimensionMismatch, "subspaces live in different ambient spaces");
    total += s.dim();
  }
  Mat m(d, total);
  int c = 0;
  for (const auto& s : subspaces) {
    m.middleCols(c, s.dim()) = s.basis();
    c += s.dim();
  }
  return m;
}

inline double subspace_wedge_norm(const std::vector<Subspace>& subspaces) {
  if (subspaces.empty()) fail(ErrorKind::DimensionMismatch, "empty subspace list");
  const Mat m = concat_bases(subspaces);
  if (m.cols() != m.rows()) fail(ErrorKind::DimensionMismatch, "subspace dimensions do not sum to the ambient dimension");
  return std::min(1.0, abs_det(m));
}

// Product of the cosines of the principal angles.
inline double subspace_angle_cos(const Subspace& x1, const Subspace& x2) {
  if (x1.ambient_dim() != x2.ambient_dim() || x1.dim() != x2.dim())
    fail(ErrorKind::DimensionMismatch, "angle needs subspaces of equal dimension");
  return std::min(1.0, abs_det(x1.basis().transpose() * x2.basis()));
}

inline std::vector<Vec> dual_basis(const std::vector<Vec>& w) {
  if (w.empty()) fail(ErrorKind::RankDeficient, "empty basis");
  const int d = static_cast<int>(w.front().size());
  if (static_cast<int>(w.size()) != d) fail(ErrorKind::RankDeficient, "need exactly d vectors");
  const Mat m = columns(w, d);
  Eigen::JacobiSVD<Mat> svd(m);
  const auto& s = svd.singularValues();
  if (!(s(d - 1) > 1e-12 * std::max(1.0, s(0)))) fail(ErrorKind::RankDeficient, "vectors do not form a basis");
  const Mat u = m.inverse().transpose();
  std::vector<Vec> out;
  for (int i = 0; i < d; ++i) out.push_back(u.col(i));
  return out;
}

struct MinorAssignment {
  std::vector<std::vector<int>> indices;  // per subspace, 0-based column indices
  double value = 0.0;
};

// Number of ordered partitions of {1..d} into blocks of the given sizes.
inline std::uint64_t admissible_assignment_count(const std::vector<int>& sizes) {
  std::uint64_t count = 1;
  int used = 0;
  for (int k : sizes) {
    // multiply by C(used + k, k)
    std::uint64_t c = 1;
    for (int i = 1; i <= k; ++i) c = c * static_cast<std::uint64_t>(used + i) / static_cast<std::uint64_t>(i);
    count *= c;
    used += k;
  }
  return count;
}

inline double minor_assignment_constant(const std::vector<int>& sizes) {
  return 1.0 / static_cast<double>(admissible_assignment_count(sizes));
}

namespace detail {

inline void for_each_partition(const std::vector<int>& sizes, int d,
                               const std::function<void(const std::vector<std::vector<int>>&)>& visit) {
  std::vector<std::vector<int>> groups(sizes.size());
  std::function<void(int)> rec = [&](int i) {
    if (i == d) {
      visit(groups);
      return;
    }
    for (std::size_t j = 0; j < sizes.size(); ++j) {
      if (static_cast<int>(groups[j].size()) < sizes[j]) {
        groups[j].push_back(i);
        rec(i + 1);
        groups[j].pop_back();
      }
    }
  };
  rec(0);
}

inline std::vector<int> check_minor_inputs(const std::vector<Subspace>& v, const std::vector<Vec>& w) {
  if (v.empty()) fail(ErrorKind::DimensionMismatch, "no subspaces");
  const int d = v.front().ambient_dim();
  std::vector<int> sizes;
  int total = 0;
  for (const auto& s : v) {
    if (s.ambient_dim() != d) fail(ErrorKind::DimensionMismatch, "subspaces in different ambient spaces");
    sizes.push_back(s.dim());
    total += s.dim();
  }
  if (total != d) fail(ErrorKind::DimensionMismatch, "subspace dimensions do not sum to d");
  if (static_cast<int>(w.size()) != d) fail(ErrorKind::DimensionMismatch, "need d vectors");
  for (const auto& x : w)
    if (x.size() != d) fail(ErrorKind::DimensionMismatch, "vector of wrong dimension");
  if (d > 8) fail(ErrorKind::Unsupported, "exhaustive assignment search is limited to d <= 8");
  return sizes;
}

}  // namespace detail

// Maximizes prod_j |V_j^perp ^ w_{S_j}| over partitions (S_j) of the indices with |S_j| = dim V_j.
inline MinorAssignment best_dual_minor_assignment(const std::vector<Subspace>& v, const std::vector<Vec>& w) {
  const std::vector<int> sizes = detail::check_minor_inputs(v, w);
  const int d = v.front().ambient_dim();
  std::vector<Mat> perp;
  for (const auto& s : v) perp.push_back(s.complement_basis());
  MinorAssignment best;
  best.value = -1.0;
  detail::for_each_partition(sizes, d, [&](const std::vector<std::vector<int>>& groups) {
    double prod = 1.0;
    for (std::size_t j = 0; j < groups.size() && prod > 0.0; ++j) {
      Mat m(d, d);
      m.leftCols(perp[j].cols()) = perp[j];
      for (std::size_t h = 0; h < groups[j].size(); ++h) m.col(perp[j].cols() + static_cast<Eigen::Index>(h)) = w[groups[j][h]];
      prod *= abs_det(m);
    }
    if (prod > best.value) {
      best.value = prod;
      best.indices = groups;
    }
  });
  return best;
}

// Maximizes prod_j |V_j ^ w_{complement of S_j}|; each index is used n-1 times.
// The returned indices list, per subspace, the vectors wedged with it.
inline MinorAssignment best_primal_minor_assignment(const std::vector<Subspace>& v, const std::vector<Vec>& w) {
  const std::vector<int> sizes = detail::check_minor_inputs(v, w);
  const int d = v.front().ambient_dim();
  MinorAssignment best;
  best.value = -1.0;
  detail::for_each_partition(sizes, d, [&](const std::vector<std::vector<int>>& groups) {
    double prod = 1.0;
    std::vector<std::vector<int>> used(groups.size());
    for (std::size_t j = 0; j < groups.size(); ++j) {
      std::vector<bool> in(static_cast<std::size_t>(d), false);
      for (int i : groups[j]) in[static_cast<std::size_t>(i)] = true;
      for (int i = 0; i < d; ++i)
        if (!in[static_cast<std::size_t>(i)]) used[j].push_back(i);
      if (prod == 0.0) continue;
      Mat m(d, d);
      m.leftCols(v[j].dim()) = v[j].basis();
      for (std::size_t h = 0; h < used[j].size(); ++h) m.col(v[j].dim() + static_cast<Eigen::Index>(h)) = w[used[j][h]];
      prod *= abs_det(m);
    }
    if (prod > best.value) {
      best.value = prod;
      best.indices = used;
    }
  });
  return best;
}

// Both sides of the block determinant identity for m orthonormal bases with cuts summing to d.
struct DetIdentitySides {
  double lhs = 0.0;
  double rhs = 0.0;
};

inline DetIdentitySides det_identity_sides(const std::vector<Mat>& bases, const std::vector<int>& cuts) {
  const std::size_t m = bases.size();
  if (m == 0 || cuts.size() != m) fail(ErrorKind::DimensionMismatch, "need one cut per basis");
  const auto d = bases.front().rows();
  int total = 0;
  for (std::size_t j = 0; j < m; ++j) {
    if (bases[j].rows() != d || bases[j].cols() != d) fail(ErrorKind::DimensionMismatch, "bases must be d x d");
    if ((bases[j].transpose() * bases[j] - Mat::Identity(d, d)).cwiseAbs().maxCoeff() > 1e-10)
      fail(ErrorKind::DimensionMismatch, "basis is not orthonormal");
    if (cuts[j] < 0 || cuts[j] > d) fail(ErrorKind::DimensionMismatch, "cut out of range");
    total += cuts[j];
  }
  if (total != d) fail(ErrorKind::DimensionMismatch, "cuts do not sum to d");

  // Row block r pairs the tail of basis 1 with the tail of basis r + 1.
  const auto n = static_cast<Eigen::Index>(m - 1) * d;
  Mat big = Mat::Zero(n, n);
  const auto t1 = d - cuts[0];
  Eigen::Index col = t1;
  for (std::size_t r = 0; r + 1 < m; ++r) {
    const auto row = static_cast<Eigen::Index>(r) * d;
    big.block(row, 0, d, t1) = bases[0].rightCols(t1);
    const auto tj = d - cuts[r + 1];
    big.block(row, col, d, tj) = bases[r + 1].rightCols(tj);
    col += tj;
  }
  Mat heads(d, d);
  Eigen::Index c = 0;
  for (std::size_t j = 0; j < m; ++j) {
    heads.middleCols(c, cuts[j]) = bases[j].leftCols(cuts[j]);
    c += cuts[j];
  }
  return {abs_det(big), abs_det(heads)};
}

inline double det_identity_residual(const std::vector<Mat>& bases, const std::vector<int>& cuts) {
  const auto s = det_identity_sides(bases, cuts);
  return std::abs(s.lhs - s.rhs);
}

}  // namespace bltk
