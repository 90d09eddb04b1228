#pragma once

#include <cstdint>
#include <random>

#include "bltk/linalg.hpp"

namespace bltk {

// splitmix64 finalizer; used to derive independent stream seeds.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(mix_seed(seed, 0)) {}
  Rng(std::uint64_t seed, std::uint64_t stream) : eng_(mix_seed(seed, stream)) {}

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(eng_); }
  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(eng_); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(eng_); }
  int index(int n) { return std::uniform_int_distribution<int>(0, n - 1)(eng_); }
  std::uint64_t bits() { return eng_(); }

  Vec gaussian(int d) {
    Vec v(d);
    for (int i = 0; i < d; ++i) v[i] = normal();
    return v;
  }

  Vec unit_vector(int d) {
    for (;;) {
      Vec v = gaussian(d);
      const double n = v.norm();
      if (n > 1e-12) return v / n;
    }
  }

  // Uniform point in the unit ball of R^d.
  Vec in_ball(int d) { return unit_vector(d) * std::pow(uniform(), 1.0 / d); }

  // Haar-random orthogonal matrix.
  Mat orthogonal(int d) {
    Mat g(d, d);
    for (int j = 0; j < d; ++j)
      for (int i = 0; i < d; ++i) g(i, j) = normal();
    Eigen::HouseholderQR<Mat> qr(g);
    Mat q = qr.householderQ() * Mat::Identity(d, d);
    const Mat r = qr.matrixQR();
    for (int j = 0; j < d; ++j)
      if (r(j, j) < 0) q.col(j) = -q.col(j);
    return q;
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace bltk
