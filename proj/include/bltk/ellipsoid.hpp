#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <vector>

#include "bltk/exterior.hpp"
#include "bltk/parallel.hpp"
#include "bltk/rng.hpp"

namespace bltk {

// Origin-symmetric ellipsoid {x : x^T Q x <= 1}.
class Ellipsoid {
 public:
  Ellipsoid() = default;
  explicit Ellipsoid(const Mat& shape) {
    if (shape.rows() != shape.cols() || shape.rows() == 0) fail(ErrorKind::DimensionMismatch, "shape matrix must be square");
    if (!shape.allFinite()) fail(ErrorKind::InvalidInput, "non-finite shape matrix");
    const double scale = std::max(1.0, shape.cwiseAbs().maxCoeff());
    if ((shape - shape.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
      fail(ErrorKind::InvalidInput, "shape matrix is not symmetric");
    q_ = symmetrize(shape);
    Eigen::SelfAdjointEigenSolver<Mat> es(q_, Eigen::EigenvaluesOnly);
    if (!(es.eigenvalues().minCoeff() > 1e-14)) fail(ErrorKind::InvalidInput, "shape matrix is not positive definite");
  }

  static Ellipsoid ball(int d, double radius = 1.0) { return Ellipsoid(Mat::Identity(d, d) / (radius * radius)); }
  static Ellipsoid from_axes(const std::vector<double>& semi_axes) {
    const auto d = static_cast<Eigen::Index>(semi_axes.size());
    Mat q = Mat::Zero(d, d);
    for (Eigen::Index i = 0; i < d; ++i) q(i, i) = 1.0 / (semi_axes[static_cast<std::size_t>(i)] * semi_axes[static_cast<std::size_t>(i)]);
    return Ellipsoid(q);
  }

  int dim() const { return static_cast<int>(q_.rows()); }
  const Mat& shape() const { return q_; }

  // Semi-axis lengths, ascending.
  Vec semi_axes() const {
    Eigen::SelfAdjointEigenSolver<Mat> es(q_, Eigen::EigenvaluesOnly);
    Vec ev = es.eigenvalues();
    Vec out(ev.size());
    for (Eigen::Index i = 0; i < ev.size(); ++i) out[i] = 1.0 / std::sqrt(ev[ev.size() - 1 - i]);
    return out;
  }
  double condition_number() const {
    Eigen::SelfAdjointEigenSolver<Mat> es(q_, Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff() / es.eigenvalues().minCoeff();
  }
  // Gauge of the ellipsoid.
  double gauge(const Vec& x) const { return std::sqrt(std::max(0.0, x.dot(q_ * x))); }
  // Distance from the origin to the boundary along unit direction u.
  double radial(const Vec& u) const { return 1.0 / gauge(u); }
  bool contains(const Vec& x, double slack = 1e-12) const { return x.dot(q_ * x) <= 1.0 + slack; }

 private:
  Mat q_;
};

// Ellipsoid living in a subspace V, in the coordinates of V's orthonormal basis.
struct SubspaceEllipsoid {
  Subspace space;
  Ellipsoid body;

  // B Q_V B^T: the quadratic form restricted to V, expressed in ambient coordinates.
  Mat embedded_form() const { return space.basis() * body.shape() * space.basis().transpose(); }
};

inline double volume(const Ellipsoid& e) {
  return unit_ball_volume(e.dim()) * std::exp(-0.5 * log_det_spd(e.shape()));
}

inline Ellipsoid dual_ellipsoid(const Ellipsoid& e) {
  if (e.condition_number() > 1e12) fail(ErrorKind::IllConditioned, "shape matrix condition number exceeds 1e12");
  return Ellipsoid(symmetrize(e.shape().inverse()));
}

inline SubspaceEllipsoid section(const Ellipsoid& e, const Subspace& v) {
  if (v.dim() < 1 || v.ambient_dim() != e.dim()) fail(ErrorKind::DimensionMismatch, "section needs a nonzero subspace of the ambient space");
  const Mat& b = v.basis();
  return {v, Ellipsoid(symmetrize(b.transpose() * e.shape() * b))};
}

inline SubspaceEllipsoid projection(const Ellipsoid& e, const Subspace& v) {
  if (v.dim() < 1 || v.ambient_dim() != e.dim()) fail(ErrorKind::DimensionMismatch, "projection needs a nonzero subspace of the ambient space");
  if (e.condition_number() > 1e12) fail(ErrorKind::IllConditioned, "shape matrix condition number exceeds 1e12");
  const Mat& b = v.basis();
  const Mat inner = symmetrize(b.transpose() * e.shape().inverse() * b);
  return {v, Ellipsoid(symmetrize(inner.inverse()))};
}

inline SubspaceEllipsoid dual_in_subspace(const SubspaceEllipsoid& s) { return {s.space, dual_ellipsoid(s.body)}; }

// The constant C(d, d') of |proj(E, V)| |E cap V^perp| = C |E|.
inline double volume_product_constant(int d, int dprime) {
  return unit_ball_volume(dprime) * unit_ball_volume(d - dprime) / unit_ball_volume(d);
}

// Origin-symmetric convex body given by its gauge. A supporting functional
// (subgradient of the gauge) is optional; without it a central difference is used.
struct SymmetricBodyOracle {
  int dim = 0;
  std::function<double(const Vec&)> gauge;
  std::function<Vec(const Vec&)> subgradient;
  int sample_budget = 500;
  std::uint64_t seed = 0x5eed;
};

struct JohnApproximation {
  Ellipsoid inner;
  double factor = 1.0;
  int directions = 0;
};

// 2 d^2 fixed directions (coordinate axes and pairwise diagonals, both signs)
// followed by n_random random directions together with their antipodes.
inline std::vector<Vec> standard_directions(int d, int n_random, std::uint64_t seed) {
  std::vector<Vec> dirs;
  for (int i = 0; i < d; ++i) {
    Vec e = Vec::Zero(d);
    e[i] = 1.0;
    dirs.push_back(e);
    dirs.push_back(-e);
  }
  const double s = 1.0 / std::sqrt(2.0);
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j)
      for (int sign : {1, -1}) {
        Vec e = Vec::Zero(d);
        e[i] = s;
        e[j] = sign * s;
        dirs.push_back(e);
        dirs.push_back(-e);
      }
  Rng rng(seed, 17);
  for (int r = 0; r < n_random; r += 2) {
    Vec u = rng.unit_vector(d);
    dirs.push_back(u);
    dirs.push_back(-u);
  }
  return dirs;
}

namespace detail {

inline Vec gauge_subgradient(const SymmetricBodyOracle& body, const Vec& x) {
  if (body.subgradient) return body.subgradient(x);
  const int d = body.dim;
  const double h = 1e-6 * std::max(1.0, x.norm());
  Vec g(d);
  for (int i = 0; i < d; ++i) {
    Vec a = x, b = x;
    a[i] += h;
    b[i] -= h;
    g[i] = (body.gauge(a) - body.gauge(b)) / (2.0 * h);
  }
  return g;
}

// Centered minimum-volume enclosing ellipsoid of the points +-a_i, returned as the
// matrix A with {y : y^T A y <= 1}. Wolfe-Atwood iteration with away steps; the
// inverse moment matrix follows rank-one updates and is rebuilt periodically.
inline Mat mvee_centered(const std::vector<Vec>& input, double tol = 1e-9, int max_iter = 200000) {
  const int d = static_cast<int>(input.front().size());
  // Exact duplicates (up to sign) carry no extra information; merge them.
  std::map<std::vector<double>, std::size_t> seen;
  std::vector<Vec> pts;
  for (const auto& p : input) {
    Vec c = p;
    for (int i = 0; i < d; ++i)
      if (c[i] != 0.0) {
        if (c[i] < 0) c = -c;
        break;
      }
    std::vector<double> key(c.data(), c.data() + d);
    if (seen.emplace(key, pts.size()).second) pts.push_back(c);
  }
  const std::size_t m = pts.size();
  Mat pm(d, static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < m; ++i) pm.col(static_cast<Eigen::Index>(i)) = pts[i];
  Vec u = Vec::Constant(static_cast<Eigen::Index>(m), 1.0 / static_cast<double>(m));
  Vec kappa;
  Mat minv;
  auto refresh = [&] {
    const Mat mm = pm * u.asDiagonal() * pm.transpose();
    Eigen::LDLT<Mat> ldlt(mm);
    if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > 1e-14 * ldlt.vectorD().maxCoeff()))
      fail(ErrorKind::UnboundedBody, "points do not span the space");
    minv = symmetrize(ldlt.solve(Mat::Identity(d, d)));
    kappa = (pm.transpose() * minv).cwiseProduct(pm.transpose()).rowwise().sum();
  };
  refresh();
  for (int it = 0; it < max_iter; ++it) {
    Eigen::Index jmax = 0, jmin = -1;
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(m); ++i) {
      if (kappa[i] > kappa[jmax]) jmax = i;
      if (u[i] > 0 && (jmin < 0 || kappa[i] < kappa[jmin])) jmin = i;
    }
    const double up = kappa[jmax] / d - 1.0;
    const double down = 1.0 - kappa[jmin] / d;
    if (up <= tol && down <= tol) break;
    // M <- (1 - lam) M + lam p p^T with lam > 0 (toward) or lam < 0 (away).
    Eigen::Index j;
    double lam;
    if (up >= down) {
      j = jmax;
      lam = (kappa[j] - d) / (d * (kappa[j] - 1.0));
    } else {
      j = jmin;
      const double drop = u[j] / (1.0 - u[j]);
      const double step = kappa[j] > 1.0 ? std::min((d - kappa[j]) / (d * (kappa[j] - 1.0)), drop) : drop;
      lam = -step;
    }
    u *= (1.0 - lam);
    u[j] += lam;
    if (u[j] < 1e-15) u[j] = 0.0;
    if (it % 64 == 63) {
      refresh();
      continue;
    }
    const Vec w = minv * pm.col(j);
    const double denom = (1.0 - lam) + lam * kappa[j];
    const Vec proj = pm.transpose() * w;
    minv = (minv - (lam / denom) * w * w.transpose()) / (1.0 - lam);
    kappa = (kappa - (lam / denom) * proj.cwiseAbs2()) / (1.0 - lam);
  }
  refresh();
  // Exact containment after rescaling.
  return minv / kappa.maxCoeff();
}

struct GaugeSamples {
  std::vector<Vec> dirs;
  std::vector<double> g;
};

inline GaugeSamples sample_gauge(const SymmetricBodyOracle& body) {
  GaugeSamples s;
  s.dirs = standard_directions(body.dim, body.sample_budget, body.seed);
  s.g = parallel_map(s.dirs.size(), [&](std::size_t i) { return body.gauge(s.dirs[i]); });
  return s;
}

}  // namespace detail

// Maximum-volume ellipsoid inscribed in the outer polytope {|<s_i, x>| <= 1} cut out by
// supporting functionals at the gauge samples, shrunk until every sampled boundary
// point certifies containment. The factor is measured on the samples.
//
// Before that, the direction set is adapted to the body: each round fits the
// minimum-volume ellipsoid around the boundary points found so far and adds the
// base directions mapped through it, so thin bodies get sampled along their long axes.
inline JohnApproximation john_ellipsoid_from_samples(const SymmetricBodyOracle& body, const std::vector<Vec>& base,
                                                     const std::vector<double>& base_g, int rounds = 3) {
  const int d = body.dim;
  std::vector<Vec> dirs = base;
  std::vector<double> g = base_g;
  auto check = [&](std::size_t from) {
    for (std::size_t i = from; i < dirs.size(); ++i) {
      if (!(g[i] > 1e-12)) fail(ErrorKind::UnboundedBody, "gauge vanishes on a sampled direction");
      if (!std::isfinite(g[i])) fail(ErrorKind::InvalidInput, "body has empty interior along a sampled direction");
    }
  };
  check(0);
  for (int r = 0; r < rounds; ++r) {
    std::vector<Vec> pts;
    pts.reserve(dirs.size());
    for (std::size_t i = 0; i < dirs.size(); ++i) pts.push_back(dirs[i] / g[i]);
    const Mat a = detail::mvee_centered(pts, 1e-6);
    Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(a));
    const Mat root = es.eigenvectors() * es.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
    const std::size_t from = dirs.size();
    for (const auto& u : base) dirs.push_back((root * u).normalized());
    g.resize(dirs.size());
    const auto fresh = parallel_map(dirs.size() - from, [&](std::size_t i) { return body.gauge(dirs[from + i]); });
    std::copy(fresh.begin(), fresh.end(), g.begin() + static_cast<std::ptrdiff_t>(from));
    check(from);
  }
  std::vector<Vec> normals;
  normals.reserve(dirs.size());
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    const Vec x = dirs[i] / g[i];
    Vec s = detail::gauge_subgradient(body, x);
    const double sx = s.dot(x);
    if (!(sx > 1e-12)) continue;
    normals.push_back(s / sx);
  }
  if (normals.size() < static_cast<std::size_t>(d)) fail(ErrorKind::UnboundedBody, "too few supporting functionals");
  const Mat a = detail::mvee_centered(normals);
  Mat q = symmetrize(a.inverse());
  // Shrink so that each sampled boundary point lies outside the inner ellipsoid.
  double t = 1.0;
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    const double radial = 1.0 / std::sqrt(dirs[i].dot(q * dirs[i]));
    t = std::max(t, g[i] * radial);
  }
  q *= t * t;
  double factor = 1.0;
  for (std::size_t i = 0; i < dirs.size(); ++i) factor = std::max(factor, std::sqrt(dirs[i].dot(q * dirs[i])) / g[i]);
  return {Ellipsoid(symmetrize(q)), factor, static_cast<int>(dirs.size())};
}

inline void check_symmetric_samples(const std::vector<Vec>& dirs, const std::vector<double>& g) {
  // standard_directions stores each direction next to its antipode.
  for (std::size_t i = 0; i + 1 < dirs.size(); i += 2) {
    const double a = g[i], b = g[i + 1];
    if (std::isfinite(a) != std::isfinite(b) ||
        (std::isfinite(a) && std::abs(a - b) > 1e-9 * std::max({1.0, std::abs(a), std::abs(b)})))
      fail(ErrorKind::InvalidInput, "body is not origin-symmetric");
  }
}

inline JohnApproximation john_ellipsoid(const SymmetricBodyOracle& body) {
  const auto s = detail::sample_gauge(body);
  check_symmetric_samples(s.dirs, s.g);
  return john_ellipsoid_from_samples(body, s.dirs, s.g);
}

// True iff |<v, x>| <= 1 for every sampled boundary point x of the body.
inline bool dual_membership(const SymmetricBodyOracle& body, const Vec& v) {
  const auto s = detail::sample_gauge(body);
  for (std::size_t i = 0; i < s.dirs.size(); ++i) {
    if (!(s.g[i] > 0.0)) fail(ErrorKind::UnboundedBody, "gauge vanishes on a sampled direction");
    if (!std::isfinite(s.g[i])) continue;
    if (std::abs(v.dot(s.dirs[i])) / s.g[i] > 1.0 + 1e-12) return false;
  }
  return true;
}

struct VolumeEstimate {
  double value = 0.0;
  double std_err = 0.0;
};

// Volume of {g <= 1} from the radial function r = 1/g: (1/d) int_{S^{d-1}} r^d.
// d <= 3 uses a deterministic midpoint rule and reports the halving difference as the
// error; higher d uses seeded Monte Carlo over uniform directions.
inline VolumeEstimate body_volume(int d, const std::function<double(const Vec&)>& gauge, int resolution = 2048,
                                  std::uint64_t seed = 0x5eed) {
  auto rpow = [&](const Vec& u) {
    const double g = gauge(u);
    if (!(g > 0.0)) fail(ErrorKind::UnboundedBody, "gauge vanishes");
    return std::pow(1.0 / g, d);
  };
  if (d == 1) {
    Vec e(1);
    e[0] = 1.0;
    return {2.0 * rpow(e), 0.0};
  }
  if (d == 2) {
    // Area = int_0^pi r(theta)^2 dtheta by symmetry.
    auto area = [&](int n) {
      std::vector<double> v = parallel_map(static_cast<std::size_t>(n), [&](std::size_t i) {
        const double th = std::numbers::pi * (static_cast<double>(i) + 0.5) / n;
        Vec u(2);
        u << std::cos(th), std::sin(th);
        return rpow(u);
      });
      return pairwise_sum(v) * std::numbers::pi / n;
    };
    const double fine = area(resolution);
    const double coarse = area(resolution / 2);
    return {fine, std::abs(fine - coarse)};
  }
  if (d == 3) {
    // Volume = (1/3) int r^3 dsigma, dsigma = dz dphi; the upper hemisphere suffices.
    auto vol = [&](int nz) {
      const int nphi = 2 * nz;
      std::vector<double> rows = parallel_map(static_cast<std::size_t>(nz), [&](std::size_t i) {
        const double z = (static_cast<double>(i) + 0.5) / nz;
        const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
        std::vector<double> acc(static_cast<std::size_t>(nphi));
        for (int j = 0; j < nphi; ++j) {
          const double ph = 2.0 * std::numbers::pi * (j + 0.5) / nphi;
          Vec u(3);
          u << rho * std::cos(ph), rho * std::sin(ph), z;
          acc[static_cast<std::size_t>(j)] = rpow(u);
        }
        return pairwise_sum(acc);
      });
      const double cell = (1.0 / nz) * (2.0 * std::numbers::pi / nphi);
      return 2.0 * pairwise_sum(rows) * cell / 3.0;
    };
    const int nz = std::max(16, resolution / 8);
    const double fine = vol(nz);
    const double coarse = vol(nz / 2);
    return {fine, std::abs(fine - coarse)};
  }
  const int n = resolution * 16;
  std::vector<double> vals = parallel_map(static_cast<std::size_t>(n), [&](std::size_t i) {
    Rng rng(seed, 1000 + i);
    return rpow(rng.unit_vector(d));
  });
  const auto ms = mean_stderr(vals);
  const double w = unit_ball_volume(d);
  return {w * ms.mean, w * ms.std_err};
}

}  // namespace bltk
