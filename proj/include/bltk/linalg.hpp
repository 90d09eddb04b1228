#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <vector>

#include "bltk/error.hpp"

namespace bltk {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Volume of the unit ball in R^d.
inline double unit_ball_volume(int d) {
  return std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d + 1.0);
}

// Surface area of the unit sphere S^{d-1}.
inline double unit_sphere_area(int d) { return d * unit_ball_volume(d); }

inline Mat columns(const std::vector<Vec>& vs, int d) {
  Mat m(d, static_cast<Eigen::Index>(vs.size()));
  for (std::size_t i = 0; i < vs.size(); ++i) {
    if (vs[i].size() != d) fail(ErrorKind::DimensionMismatch, "vector dimension differs from ambient dimension");
    m.col(static_cast<Eigen::Index>(i)) = vs[i];
  }
  return m;
}

inline Mat hcat(const Mat& a, const Mat& b) {
  Mat m(a.rows(), a.cols() + b.cols());
  m << a, b;
  return m;
}

inline double abs_det(const Mat& m) {
  if (m.rows() == 0) return 1.0;
  return std::abs(m.partialPivLu().determinant());
}

// Orthonormal basis of the orthogonal complement of the column span of an orthonormal B.
inline Mat complement_basis(const Mat& b) {
  const auto d = b.rows();
  const auto k = b.cols();
  if (k == 0) return Mat::Identity(d, d);
  if (k == d) return Mat(d, 0);
  Eigen::HouseholderQR<Mat> qr(b);
  Mat q = qr.householderQ() * Mat::Identity(d, d);
  return q.rightCols(d - k);
}

// Symmetric positive definite log-determinant; throws if not positive definite.
inline double log_det_spd(const Mat& m) {
  Eigen::LLT<Mat> llt(m);
  if (llt.info() != Eigen::Success) fail(ErrorKind::SingularDenominator, "matrix is not positive definite");
  double s = 0.0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) s += std::log(llt.matrixL()(i, i));
  return 2.0 * s;
}

inline Mat symmetrize(const Mat& m) { return 0.5 * (m + m.transpose()); }

}  // namespace bltk
