#pragma once

// Shared test helpers: seeded generators and oracles that avoid the library's
// own numerical routes.

#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "bltk/linalg.hpp"

namespace testsupport {

using bltk::Mat;
using bltk::Vec;

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : eng_(seed) {}
  double uniform(double a = 0.0, double b = 1.0) { return std::uniform_real_distribution<double>(a, b)(eng_); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(eng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(eng_); }
  Vec vec(int d) {
    Vec v(d);
    for (int i = 0; i < d; ++i) v[i] = normal();
    return v;
  }
  Vec unit(int d) {
    Vec v = vec(d);
    return v / v.norm();
  }
  Mat mat(int r, int c) {
    Mat m(r, c);
    for (int j = 0; j < c; ++j)
      for (int i = 0; i < r; ++i) m(i, j) = normal();
    return m;
  }
  // Orthogonal matrix by classical Gram-Schmidt on a Gaussian matrix.
  Mat orthogonal(int d) {
    Mat m = mat(d, d);
    for (int j = 0; j < d; ++j) {
      for (int i = 0; i < j; ++i) m.col(j) -= m.col(i).dot(m.col(j)) * m.col(i);
      m.col(j) /= m.col(j).norm();
    }
    return m;
  }
  // Orthonormal k-frame.
  Mat frame(int d, int k) { return orthogonal(d).leftCols(k); }
  // Symmetric positive definite matrix with eigenvalues in [lo, hi].
  Mat spd(int d, double lo = 0.3, double hi = 3.0) {
    const Mat q = orthogonal(d);
    Vec ev(d);
    for (int i = 0; i < d; ++i) ev[i] = uniform(lo, hi);
    return q * ev.asDiagonal() * q.transpose();
  }

 private:
  std::mt19937_64 eng_;
};

// Determinant by Laplace expansion along the first row.
inline double laplace_det(const Mat& m) {
  const auto n = m.rows();
  if (n == 0) return 1.0;
  if (n == 1) return m(0, 0);
  double s = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    Mat minor(n - 1, n - 1);
    for (Eigen::Index r = 1; r < n; ++r) {
      Eigen::Index cc = 0;
      for (Eigen::Index c = 0; c < n; ++c)
        if (c != j) minor(r - 1, cc++) = m(r, c);
    }
    s += ((j % 2) ? -1.0 : 1.0) * m(0, j) * laplace_det(minor);
  }
  return s;
}

// sqrt(det Gram) with the Gram determinant taken by Laplace expansion.
inline double gram_wedge(const Mat& cols) { return std::sqrt(std::max(0.0, laplace_det(cols.transpose() * cols))); }

inline double factorial(int n) { return std::tgamma(n + 1.0); }

}  // namespace testsupport
