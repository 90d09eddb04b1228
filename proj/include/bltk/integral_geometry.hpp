#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bltk/linalg.hpp"
#include "bltk/parallel.hpp"
#include "bltk/rng.hpp"

namespace bltk {

enum class PatchKind { Flat, Arc, Sphere, Chart };

inline const char* to_string(PatchKind k) {
  switch (k) {
    case PatchKind::Flat: return "flat";
    case PatchKind::Arc: return "arc";
    case PatchKind::Sphere: return "sphere";
    case PatchKind::Chart: return "chart";
  }
  return "unknown";
}

// A smooth compact piece of a submanifold given by a chart on a parameter box.
//   Flat:   origin + edges * y, y in [0,1]^k.
//   Arc:    center + r (cos t f1 + sin t f2), t in [lo, hi]; f1, f2 orthonormal columns of frame.
//   Sphere: center + r frame (sin th cos ph, sin th sin ph, cos th), (th, ph) in the box; d = 3.
//   Chart:  arbitrary map with Jacobian; usable on the quadrature side only.
class Patch {
 public:
  using ChartFn = std::function<Vec(const Vec&)>;
  using JacobianFn = std::function<Mat(const Vec&)>;

  static Patch flat(const Vec& origin, const Mat& edges, int resolution = 64) {
    if (edges.rows() != origin.size()) fail(ErrorKind::DimensionMismatch, "edge vectors live in a different dimension");
    if (edges.cols() < 1 || edges.cols() >= edges.rows())
      fail(ErrorKind::InvalidInput, "flat patch needs between 1 and d-1 edges");
    Patch z(PatchKind::Flat, static_cast<int>(origin.size()), static_cast<int>(edges.cols()), resolution);
    z.lo_ = Vec::Zero(edges.cols());
    z.hi_ = Vec::Ones(edges.cols());
    z.center_ = origin;
    z.frame_ = edges;
    z.validate();
    return z;
  }

  static Patch segment(const Vec& a, const Vec& b, int resolution = 64) {
    Mat e(a.size(), 1);
    e.col(0) = b - a;
    return flat(a, e, resolution);
  }

  // Arc of the circle through center with radius r in the plane of frame's two columns.
  static Patch arc(const Vec& center, double radius, double t0, double t1, int resolution = 256,
                   std::optional<Mat> frame = std::nullopt) {
    const int d = static_cast<int>(center.size());
    if (d < 2) fail(ErrorKind::DimensionMismatch, "arcs need d >= 2");
    Mat f = frame ? *frame : Mat(Mat::Identity(d, 2));
    if (f.rows() != d || f.cols() != 2) fail(ErrorKind::DimensionMismatch, "arc frame must be d x 2");
    if ((f.transpose() * f - Mat::Identity(2, 2)).norm() > 1e-9)
      fail(ErrorKind::InvalidInput, "arc frame must be orthonormal");
    if (!(radius > 0.0)) fail(ErrorKind::InvalidInput, "arc radius must be positive");
    if (!(t1 > t0) || t1 - t0 > 2.0 * std::numbers::pi + 1e-12)
      fail(ErrorKind::InvalidInput, "arc parameter range must be nonempty and at most one turn");
    Patch z(PatchKind::Arc, d, 1, resolution);
    z.lo_ = Vec::Constant(1, t0);
    z.hi_ = Vec::Constant(1, t1);
    z.center_ = center;
    z.radius_ = radius;
    z.frame_ = f;
    z.validate();
    return z;
  }

  static Patch circle(const Vec& center, double radius, int resolution = 256) {
    return arc(center, radius, 0.0, 2.0 * std::numbers::pi, resolution);
  }

  // Spherical patch in R^3 over (theta, phi) in [th0, th1] x [ph0, ph1].
  static Patch sphere(const Vec& center, double radius, double th0 = 0.0, double th1 = std::numbers::pi,
                      double ph0 = 0.0, double ph1 = 2.0 * std::numbers::pi, int resolution = 64,
                      std::optional<Mat> frame = std::nullopt) {
    if (center.size() != 3) fail(ErrorKind::DimensionMismatch, "sphere patches live in R^3");
    Mat f = frame ? *frame : Mat(Mat::Identity(3, 3));
    if (f.rows() != 3 || f.cols() != 3 || (f.transpose() * f - Mat::Identity(3, 3)).norm() > 1e-9)
      fail(ErrorKind::InvalidInput, "sphere frame must be orthogonal 3 x 3");
    if (!(radius > 0.0)) fail(ErrorKind::InvalidInput, "sphere radius must be positive");
    if (!(th0 >= 0.0 && th1 <= std::numbers::pi + 1e-12 && th1 > th0))
      fail(ErrorKind::InvalidInput, "theta range must lie in [0, pi]");
    if (!(ph1 > ph0) || ph1 - ph0 > 2.0 * std::numbers::pi + 1e-12)
      fail(ErrorKind::InvalidInput, "phi range must be nonempty and at most one turn");
    Patch z(PatchKind::Sphere, 3, 2, resolution);
    z.lo_ = Vec(2);
    z.lo_ << th0, ph0;
    z.hi_ = Vec(2);
    z.hi_ << th1, ph1;
    z.center_ = center;
    z.radius_ = radius;
    z.frame_ = f;
    z.validate();
    return z;
  }

  static Patch chart(int d, const Vec& lo, const Vec& hi, ChartFn f, JacobianFn jac, int resolution = 64) {
    if (lo.size() != hi.size() || lo.size() < 1 || lo.size() >= d)
      fail(ErrorKind::DimensionMismatch, "chart parameter box must have dimension in [1, d-1]");
    if (!((hi - lo).minCoeff() > 0.0)) fail(ErrorKind::InvalidInput, "chart parameter box is empty");
    Patch z(PatchKind::Chart, d, static_cast<int>(lo.size()), resolution);
    z.lo_ = lo;
    z.hi_ = hi;
    z.chart_ = std::move(f);
    z.jac_ = std::move(jac);
    z.validate();
    return z;
  }

  PatchKind kind() const { return kind_; }
  int dim() const { return d_; }
  int param_dim() const { return k_; }
  int codim() const { return d_ - k_; }
  int resolution() const { return res_; }
  const Vec& lo() const { return lo_; }
  const Vec& hi() const { return hi_; }
  const Vec& center() const { return center_; }  // origin for flat patches
  double radius() const { return radius_; }
  const Mat& frame() const { return frame_; }  // edges for flat patches

  Patch with_resolution(int r) const {
    Patch z = *this;
    z.res_ = r;
    z.validate();
    return z;
  }

  Vec point(const Vec& y) const {
    switch (kind_) {
      case PatchKind::Flat: return center_ + frame_ * y;
      case PatchKind::Arc: return center_ + radius_ * (std::cos(y[0]) * frame_.col(0) + std::sin(y[0]) * frame_.col(1));
      case PatchKind::Sphere: {
        Vec u(3);
        u << std::sin(y[0]) * std::cos(y[1]), std::sin(y[0]) * std::sin(y[1]), std::cos(y[0]);
        return center_ + radius_ * (frame_ * u);
      }
      case PatchKind::Chart: return chart_(y);
    }
    return {};
  }

  // d x k matrix of tangent vectors (partial derivatives of the chart).
  Mat tangent(const Vec& y) const {
    switch (kind_) {
      case PatchKind::Flat: return frame_;
      case PatchKind::Arc: {
        Mat t(d_, 1);
        t.col(0) = radius_ * (-std::sin(y[0]) * frame_.col(0) + std::cos(y[0]) * frame_.col(1));
        return t;
      }
      case PatchKind::Sphere: {
        Mat du(3, 2);
        du << std::cos(y[0]) * std::cos(y[1]), -std::sin(y[0]) * std::sin(y[1]),
            std::cos(y[0]) * std::sin(y[1]), std::sin(y[0]) * std::cos(y[1]), -std::sin(y[0]), 0.0;
        return radius_ * (frame_ * du);
      }
      case PatchKind::Chart: return jac_(y);
    }
    return {};
  }

  // Axis-aligned box containing the patch.
  std::pair<Vec, Vec> bounding_box() const {
    if (kind_ == PatchKind::Flat) {
      Vec lo = center_, hi = center_;
      for (Eigen::Index j = 0; j < frame_.cols(); ++j) {
        lo += frame_.col(j).cwiseMin(0.0);
        hi += frame_.col(j).cwiseMax(0.0);
      }
      return {lo, hi};
    }
    if (kind_ == PatchKind::Arc || kind_ == PatchKind::Sphere) {
      Vec ext(d_);
      for (int i = 0; i < d_; ++i) ext[i] = radius_ * frame_.row(i).norm();
      return {center_ - ext, center_ + ext};
    }
    fail(ErrorKind::UnsupportedShapes, "chart patches have no closed-form bounding box");
  }

  // Image under x -> r x + t with r orthogonal.
  Patch moved(const Mat& r, const Vec& t) const {
    if (r.rows() != d_ || r.cols() != d_ || t.size() != d_) fail(ErrorKind::DimensionMismatch, "motion dimension");
    Patch z = *this;
    if (kind_ == PatchKind::Chart) {
      auto f = chart_;
      auto j = jac_;
      z.chart_ = [f, r, t](const Vec& y) -> Vec { return r * f(y) + t; };
      z.jac_ = [j, r](const Vec& y) -> Mat { return r * j(y); };
      return z;
    }
    z.center_ = r * center_ + t;
    z.frame_ = r * frame_;
    return z;
  }

 private:
  Patch(PatchKind kind, int d, int k, int res) : kind_(kind), d_(d), k_(k), res_(res) {}

  void validate() const {
    if (res_ < 1) fail(ErrorKind::InvalidInput, "quadrature resolution must be positive");
    if (kind_ == PatchKind::Flat) {
      Eigen::JacobiSVD<Mat> svd(frame_);
      const auto& s = svd.singularValues();
      if (s[s.size() - 1] <= 1e-12 * std::max(1.0, s[0])) fail(ErrorKind::RankDeficient, "flat patch edges are dependent");
    }
  }

  PatchKind kind_;
  int d_;
  int k_;
  int res_;
  Vec lo_, hi_;
  Vec center_;
  double radius_ = 0.0;
  Mat frame_;
  ChartFn chart_;
  JacobianFn jac_;
};

// One factor of a product window, constraining a single translation vector.
struct WindowFactor {
  enum class Kind { Box, Ball, Slab, All };
  Kind kind = Kind::All;
  Vec a;           // Box: lower corner. Ball: center. Slab: unit normal.
  Vec b;           // Box: upper corner.
  double r = 0.0;  // Ball: radius. Slab: width.

  static WindowFactor box(const Vec& lo, const Vec& hi) {
    if (lo.size() != hi.size()) fail(ErrorKind::DimensionMismatch, "box corners differ in dimension");
    if (!((hi - lo).minCoeff() > 0.0)) fail(ErrorKind::InvalidInput, "box is empty");
    return {Kind::Box, lo, hi, 0.0};
  }
  static WindowFactor ball(const Vec& center, double radius) {
    if (!(radius > 0.0)) fail(ErrorKind::InvalidInput, "ball radius must be positive");
    return {Kind::Ball, center, Vec(), radius};
  }
  static WindowFactor slab(const Vec& normal, double width) {
    if (!(width > 0.0) || normal.norm() == 0.0) fail(ErrorKind::InvalidInput, "slab needs a normal and a positive width");
    return {Kind::Slab, normal.normalized(), Vec(), width};
  }
  static WindowFactor all(int d) { return {Kind::All, Vec::Zero(d), Vec(), 0.0}; }

  int dim() const { return static_cast<int>(a.size()); }
  bool bounded() const { return kind == Kind::Box || kind == Kind::Ball; }

  bool contains(const double* v) const {
    const int d = dim();
    switch (kind) {
      case Kind::All: return true;
      case Kind::Box:
        for (int i = 0; i < d; ++i)
          if (v[i] < a[i] || v[i] > b[i]) return false;
        return true;
      case Kind::Ball: {
        double s = 0.0;
        for (int i = 0; i < d; ++i) s += (v[i] - a[i]) * (v[i] - a[i]);
        return s <= r * r;
      }
      case Kind::Slab: {
        double s = 0.0;
        for (int i = 0; i < d; ++i) s += v[i] * a[i];
        return std::abs(s) <= 0.5 * r;
      }
    }
    return false;
  }

  double volume() const {
    if (kind == Kind::Box) return (b - a).prod();
    if (kind == Kind::Ball) return unit_ball_volume(dim()) * std::pow(r, dim());
    return std::numeric_limits<double>::infinity();
  }

  // Bounding box, infinite where unconstrained.
  std::pair<Vec, Vec> box_hull() const {
    const int d = dim();
    const double inf = std::numeric_limits<double>::infinity();
    if (kind == Kind::Box) return {a, b};
    if (kind == Kind::Ball) return {a.array() - r, a.array() + r};
    Vec lo = Vec::Constant(d, -inf), hi = Vec::Constant(d, inf);
    if (kind == Kind::Slab) {
      for (int i = 0; i < d; ++i) {
        bool only_axis = true;
        for (int j = 0; j < d; ++j)
          if (j != i && a[j] != 0.0) only_axis = false;
        if (only_axis) {
          lo[i] = -0.5 * r / std::abs(a[i]);
          hi[i] = 0.5 * r / std::abs(a[i]);
        }
      }
    }
    return {lo, hi};
  }
};

// Window U in (R^d)^{m-1}: a product of per-vector factors, optionally intersected
// with "all pairwise distances among p_1..p_m below a bound".
class TranslationWindow {
 public:
  static TranslationWindow all(int d, int count) {
    return product(std::vector<WindowFactor>(static_cast<std::size_t>(count), WindowFactor::all(d)));
  }

  static TranslationWindow product(std::vector<WindowFactor> factors) {
    if (factors.empty()) fail(ErrorKind::InvalidInput, "window needs at least one factor");
    const int d = factors.front().dim();
    for (const auto& f : factors)
      if (f.dim() != d) fail(ErrorKind::DimensionMismatch, "window factors differ in dimension");
    TranslationWindow w;
    w.factors_ = std::move(factors);
    w.d_ = d;
    return w;
  }

  // |p_i - p_j| < bound for all pairs, where p_j = p_1 + v_j.
  static TranslationWindow pairwise(int d, int count, double bound) {
    if (!(bound > 0.0)) fail(ErrorKind::InvalidInput, "pairwise distance bound must be positive");
    TranslationWindow w = product(std::vector<WindowFactor>(static_cast<std::size_t>(count),
                                                            WindowFactor::ball(Vec::Zero(d), bound)));
    w.pair_bound_ = bound;
    return w;
  }

  int dim() const { return d_; }
  int count() const { return static_cast<int>(factors_.size()); }
  const std::vector<WindowFactor>& factors() const { return factors_; }
  std::optional<double> pair_bound() const { return pair_bound_; }

  bool all_space() const {
    return std::all_of(factors_.begin(), factors_.end(),
                       [](const WindowFactor& f) { return f.kind == WindowFactor::Kind::All; });
  }

  bool bounded() const {
    return std::all_of(factors_.begin(), factors_.end(), [](const WindowFactor& f) { return f.bounded(); });
  }

  // v holds count() consecutive vectors of length dim().
  bool contains(const double* v) const {
    for (std::size_t j = 0; j < factors_.size(); ++j)
      if (!factors_[j].contains(v + j * static_cast<std::size_t>(d_))) return false;
    if (pair_bound_) {
      const double b2 = *pair_bound_ * *pair_bound_;
      for (int i = 0; i < count(); ++i)
        for (int j = i + 1; j < count(); ++j) {
          double s = 0.0;
          for (int k = 0; k < d_; ++k) {
            const double t = v[i * d_ + k] - v[j * d_ + k];
            s += t * t;
          }
          if (s >= b2) return false;
        }
    }
    return true;
  }

  bool contains(const std::vector<Vec>& v) const {
    if (static_cast<int>(v.size()) != count()) fail(ErrorKind::DimensionMismatch, "wrong number of translations");
    std::vector<double> flat;
    for (const auto& x : v) {
      if (x.size() != d_) fail(ErrorKind::DimensionMismatch, "translation dimension");
      flat.insert(flat.end(), x.data(), x.data() + x.size());
    }
    return contains(flat.data());
  }

  // Lebesgue measure. Pairwise windows with three or more translations are
  // estimated by seeded Monte Carlo; the second member is the standard error.
  MeanStderr volume(std::uint64_t samples = 1u << 20) const {
    if (!bounded()) return {std::numeric_limits<double>::infinity(), 0.0};
    double prod = 1.0;
    for (const auto& f : factors_) prod *= f.volume();
    if (!pair_bound_ || count() == 1) return {prod, 0.0};
    const int n = count();
    const std::uint64_t chunk = 4096;
    const std::uint64_t chunks = (samples + chunk - 1) / chunk;
    auto hits = parallel_map(static_cast<std::size_t>(chunks), [&](std::size_t c) {
      Rng rng(0x5eed, c);
      std::vector<double> v(static_cast<std::size_t>(n * d_));
      double h = 0.0;
      for (std::uint64_t s = 0; s < chunk; ++s) {
        for (int j = 0; j < n; ++j) {
          const Vec x = rng.in_ball(d_) * *pair_bound_;
          std::copy(x.data(), x.data() + d_, v.begin() + j * d_);
        }
        if (contains(v.data())) h += 1.0;
      }
      return h;
    });
    const double total = static_cast<double>(chunks * chunk);
    const double p = pairwise_sum(hits) / total;
    return {prod * p, prod * std::sqrt(p * (1.0 - p) / total)};
  }

  TranslationWindow rotated(const Mat& r) const {
    TranslationWindow w = *this;
    for (auto& f : w.factors_) {
      switch (f.kind) {
        case WindowFactor::Kind::Box: fail(ErrorKind::Unsupported, "box windows are not rotation invariant");
        case WindowFactor::Kind::Ball:
        case WindowFactor::Kind::Slab: f.a = r * f.a; break;
        case WindowFactor::Kind::All: break;
      }
    }
    return w;
  }

 private:
  std::vector<WindowFactor> factors_;
  int d_ = 0;
  std::optional<double> pair_bound_;
};

namespace detail {

// |det| of a row-major n x n array by partial pivoting; destroys a.
inline double small_abs_det(double* a, int n) {
  double det = 1.0;
  for (int k = 0; k < n; ++k) {
    int p = k;
    double best = std::abs(a[k * n + k]);
    for (int i = k + 1; i < n; ++i)
      if (std::abs(a[i * n + k]) > best) {
        best = std::abs(a[i * n + k]);
        p = i;
      }
    if (best == 0.0) return 0.0;
    if (p != k)
      for (int j = k; j < n; ++j) std::swap(a[k * n + j], a[p * n + j]);
    const double piv = a[k * n + k];
    det *= piv;
    for (int i = k + 1; i < n; ++i) {
      const double f = a[i * n + k] / piv;
      for (int j = k + 1; j < n; ++j) a[i * n + j] -= f * a[k * n + j];
    }
  }
  return std::abs(det);
}

// Midpoint nodes of a patch: points, orthonormal normal bases and surface weights.
struct PatchNodes {
  int d = 0;
  int c = 0;
  std::vector<double> points;   // count x d
  std::vector<double> normals;  // count x (c x d), normal vectors stored consecutively
  std::vector<double> weights;
  std::size_t size() const { return weights.size(); }
};

inline PatchNodes patch_nodes(const Patch& z, int resolution) {
  const int k = z.param_dim();
  const int d = z.dim();
  std::size_t count = 1;
  for (int i = 0; i < k; ++i) count *= static_cast<std::size_t>(resolution);
  const Vec h = (z.hi() - z.lo()) / resolution;
  const double cell = h.prod();
  PatchNodes out;
  out.d = d;
  out.c = z.codim();
  out.points.resize(count * d);
  out.normals.resize(count * d * out.c);
  out.weights.resize(count);
  auto fill = [&](std::size_t idx) {
    Vec y(k);
    std::size_t r = idx;
    for (int i = 0; i < k; ++i) {
      y[i] = z.lo()[i] + (static_cast<double>(r % resolution) + 0.5) * h[i];
      r /= resolution;
    }
    const Vec p = z.point(y);
    const Mat t = z.tangent(y);
    const double g = std::sqrt(std::max(0.0, (t.transpose() * t).determinant()));
    if (!(g > 1e-14 * std::max(1.0, t.squaredNorm())))
      fail(ErrorKind::RankDeficient, "tangent vectors have zero wedge at a quadrature node");
    const Mat n = complement_basis(t);
    std::copy(p.data(), p.data() + d, out.points.begin() + idx * d);
    for (int a = 0; a < out.c; ++a)
      for (int i = 0; i < d; ++i) out.normals[(idx * out.c + a) * d + i] = n(i, a);
    out.weights[idx] = g * cell;
    return 0;
  };
  parallel_map(count, fill);
  return out;
}

inline void check_codims(const std::vector<Patch>& z) {
  if (z.size() < 2) fail(ErrorKind::InvalidInput, "need at least two patches");
  int sum = 0;
  for (const auto& p : z) {
    if (p.dim() != z.front().dim()) fail(ErrorKind::DimensionMismatch, "patches live in different dimensions");
    sum += p.codim();
  }
  if (sum != z.front().dim()) fail(ErrorKind::DimensionMismatch, "codimensions must add up to the ambient dimension");
}

inline void check_window(const std::vector<Patch>& z, const TranslationWindow& u) {
  if (u.dim() != z.front().dim() || u.count() + 1 != static_cast<int>(z.size()))
    fail(ErrorKind::DimensionMismatch, "window must hold one translation per patch after the first");
}

}  // namespace detail

// Quadrature of chi_U(p1->p2, ..., p1->pm) |N_{p1} ^ ... ^ N_{pm}| over Z_1 x ... x Z_m,
// each patch sampled on resolution^k midpoint cells (scale overrides the patch resolution).
inline double lhs_wedge_integral(const std::vector<Patch>& z, const TranslationWindow& u, double scale = 1.0) {
  detail::check_codims(z);
  detail::check_window(z, u);
  const int d = z.front().dim();
  const int m = static_cast<int>(z.size());
  std::vector<detail::PatchNodes> nodes;
  for (const auto& p : z)
    nodes.push_back(detail::patch_nodes(p, std::max(1, static_cast<int>(std::lround(p.resolution() * scale)))));
  const bool everything = u.all_space();
  auto partial = [&](std::size_t i0) {
    std::vector<double> diff(static_cast<std::size_t>((m - 1) * d));
    std::vector<double> rows(static_cast<std::size_t>(d * d));
    std::vector<std::size_t> idx(static_cast<std::size_t>(m), 0);
    idx[0] = i0;
    const double* p0 = nodes[0].points.data() + i0 * d;
    double sum = 0.0;
    // Odometer over the remaining patches.
    for (;;) {
      bool inside = true;
      if (!everything) {
        for (int j = 1; j < m; ++j) {
          const double* pj = nodes[j].points.data() + idx[j] * d;
          for (int k = 0; k < d; ++k) diff[(j - 1) * d + k] = pj[k] - p0[k];
        }
        inside = u.contains(diff.data());
      }
      if (inside) {
        double w = 1.0;
        int row = 0;
        for (int j = 0; j < m; ++j) {
          const auto& nj = nodes[j];
          w *= nj.weights[idx[j]];
          const double* src = nj.normals.data() + idx[j] * nj.c * d;
          std::copy(src, src + nj.c * d, rows.begin() + row * d);
          row += nj.c;
        }
        sum += w * detail::small_abs_det(rows.data(), d);
      }
      int j = m - 1;
      while (j >= 1) {
        if (++idx[j] < nodes[j].size()) break;
        idx[j] = 0;
        --j;
      }
      if (j < 1) break;
    }
    return sum;
  };
  return pairwise_sum(parallel_map(nodes[0].size(), partial));
}

struct QuadratureReport {
  double value = 0.0;
  double coarse = 0.0;  // same quadrature at half the resolution
  double delta() const { return std::abs(value - coarse); }
  double relative_delta() const { return value == 0.0 ? delta() : delta() / std::abs(value); }
};

inline QuadratureReport lhs_with_refinement(const std::vector<Patch>& z, const TranslationWindow& u) {
  return {lhs_wedge_integral(z, u, 1.0), lhs_wedge_integral(z, u, 0.5)};
}

struct IntersectionCount {
  int count = 0;
  int flagged = 0;  // intersections within the boundary tolerance
};

// Exact counter for |Z_1 cap (Z_2 - v_2) cap ... cap (Z_m - v_m)|, i.e. points p_1 in Z_1 with
// p_1 + v_j in Z_j. Supported: all-flat tuples in any d; in d = 2 segment/arc and arc/arc;
// in d = 3 segment/sphere, arc/flat plane and arc/sphere.
class IntersectionCounter {
 public:
  static constexpr double kBoundaryTol = 1e-9;

  explicit IntersectionCounter(std::vector<Patch> z) : z_(std::move(z)) {
    detail::check_codims(z_);
    d_ = z_.front().dim();
    const bool all_flat =
        std::all_of(z_.begin(), z_.end(), [](const Patch& p) { return p.kind() == PatchKind::Flat; });
    if (all_flat) {
      mode_ = Mode::Linear;
      const int m = static_cast<int>(z_.size());
      Mat a = Mat::Zero((m - 1) * d_, (m - 1) * d_);
      int col = z_[0].param_dim();
      for (int j = 1; j < m; ++j) {
        a.block((j - 1) * d_, 0, d_, z_[0].param_dim()) = z_[0].frame();
        a.block((j - 1) * d_, col, d_, z_[j].param_dim()) = -z_[j].frame();
        col += z_[j].param_dim();
      }
      double scale = 1.0;
      for (Eigen::Index c = 0; c < a.cols(); ++c) scale *= a.col(c).norm();
      lu_ = a.fullPivLu();
      singular_ = std::abs(lu_.determinant()) <= 1e-12 * scale;
      return;
    }
    if (z_.size() != 2) fail(ErrorKind::UnsupportedShapes, "curved patches are supported only in pairs");
    const auto k0 = z_[0].kind(), k1 = z_[1].kind();
    auto is = [&](PatchKind a, PatchKind b) { return (k0 == a && k1 == b) || (k0 == b && k1 == a); };
    auto seg = [](const Patch& p) { return p.kind() == PatchKind::Flat && p.param_dim() == 1; };
    auto plane = [](const Patch& p) { return p.kind() == PatchKind::Flat && p.param_dim() == 2; };
    if (d_ == 2 && is(PatchKind::Arc, PatchKind::Arc)) {
      mode_ = Mode::ArcArc;
    } else if (d_ == 2 && (k0 == PatchKind::Arc || k1 == PatchKind::Arc) && (seg(z_[0]) || seg(z_[1]))) {
      mode_ = Mode::SegmentRound;
    } else if (d_ == 3 && (k0 == PatchKind::Sphere || k1 == PatchKind::Sphere) && (seg(z_[0]) || seg(z_[1]))) {
      mode_ = Mode::SegmentRound;
    } else if (d_ == 3 && (k0 == PatchKind::Arc || k1 == PatchKind::Arc) && (plane(z_[0]) || plane(z_[1]))) {
      mode_ = Mode::ArcPlane;
    } else if (d_ == 3 && is(PatchKind::Arc, PatchKind::Sphere)) {
      mode_ = Mode::ArcSphere;
    } else {
      fail(ErrorKind::UnsupportedShapes, std::string("no exact intersection counter for ") + to_string(k0) + "/" +
                                             to_string(k1) + " in d=" + std::to_string(d_));
    }
  }

  const std::vector<Patch>& patches() const { return z_; }

  // v holds m-1 consecutive translations.
  IntersectionCount operator()(const double* v) const {
    IntersectionCount out;
    if (mode_ == Mode::Linear) {
      count_linear(v, out);
      return out;
    }
    // The intersection of Z_1 and Z_2 - v as a point set; only the shifts matter.
    const Eigen::Map<const Vec> shift(v, d_);
    const Vec zero = Vec::Zero(d_);
    const Vec s0 = zero, s1 = -shift;
    switch (mode_) {
      case Mode::ArcArc: arc_arc(z_[0], s0, z_[1], s1, out); break;
      case Mode::SegmentRound:
        if (z_[0].kind() == PatchKind::Flat) segment_round(z_[0], s0, z_[1], s1, out);
        else segment_round(z_[1], s1, z_[0], s0, out);
        break;
      case Mode::ArcPlane:
        if (z_[0].kind() == PatchKind::Arc) arc_plane(z_[0], s0, z_[1], s1, out);
        else arc_plane(z_[1], s1, z_[0], s0, out);
        break;
      case Mode::ArcSphere:
        if (z_[0].kind() == PatchKind::Arc) arc_sphere(z_[0], s0, z_[1], s1, out);
        else arc_sphere(z_[1], s1, z_[0], s0, out);
        break;
      case Mode::Linear: break;
    }
    return out;
  }

 private:
  enum class Mode { Linear, ArcArc, SegmentRound, ArcPlane, ArcSphere };

  static bool in_interval(double x, double lo, double hi, bool& flag) {
    const double tol = kBoundaryTol * std::max(1.0, hi - lo);
    if (x < lo - tol || x > hi + tol) return false;
    if (x < lo + tol || x > hi - tol) flag = true;
    return true;
  }

  // Periodic parameter t tested against [lo, hi] with hi - lo <= 2 pi.
  static bool in_angle(double t, double lo, double hi, bool& flag) {
    const double two_pi = 2.0 * std::numbers::pi;
    const double tol = kBoundaryTol * two_pi;
    if (hi - lo >= two_pi - 1e-12) return true;
    double s = std::fmod(t - lo, two_pi);
    if (s < 0.0) s += two_pi;
    if (s > two_pi - tol) s -= two_pi;  // just below lo
    return in_interval(lo + s, lo, hi, flag);
  }

  void count_linear(const double* v, IntersectionCount& out) const {
    if (singular_) return;
    const int m = static_cast<int>(z_.size());
    Vec rhs((m - 1) * d_);
    for (int j = 1; j < m; ++j)
      for (int i = 0; i < d_; ++i) rhs[(j - 1) * d_ + i] = z_[j].center()[i] - v[(j - 1) * d_ + i] - z_[0].center()[i];
    const Vec y = lu_.solve(rhs);
    bool flag = false;
    int col = 0;
    for (int j = 0; j < m; ++j) {
      const int k = z_[j].param_dim();
      for (int a = 0; a < k; ++a)
        if (!in_interval(y[col + a], 0.0, 1.0, flag)) return;
      col += k;
    }
    out.count = 1;
    out.flagged = flag ? 1 : 0;
  }

  static double arc_param(const Patch& arc, const Vec& center, const Vec& x) {
    const Vec r = x - center;
    return std::atan2(r.dot(arc.frame().col(1)), r.dot(arc.frame().col(0)));
  }

  static bool on_sphere_patch(const Patch& s, const Vec& center, const Vec& x, bool& flag) {
    const Vec u = s.frame().transpose() * (x - center) / s.radius();
    const double th = std::acos(std::clamp(u[2], -1.0, 1.0));
    const double ph = std::atan2(u[1], u[0]);
    return in_interval(th, s.lo()[0], s.hi()[0], flag) && in_angle(ph, s.lo()[1], s.hi()[1], flag);
  }

  static void record(bool flag, IntersectionCount& out) {
    ++out.count;
    if (flag) ++out.flagged;
  }

  // Segment against a circle (d = 2) or sphere (d = 3), each with its own shift.
  static void segment_round(const Patch& seg, const Vec& sseg, const Patch& round, const Vec& sround,
                            IntersectionCount& out) {
    const Vec a = seg.frame().col(0);
    const Vec o = seg.center() + sseg;
    const Vec c = round.center() + sround;
    const Vec w = o - c;
    const double qa = a.squaredNorm(), qb = 2.0 * a.dot(w), qc = w.squaredNorm() - round.radius() * round.radius();
    const double disc = qb * qb - 4.0 * qa * qc;
    if (disc <= 0.0) return;
    const double sq = std::sqrt(disc);
    for (double s : {(-qb - sq) / (2.0 * qa), (-qb + sq) / (2.0 * qa)}) {
      bool flag = false;
      if (!in_interval(s, 0.0, 1.0, flag)) continue;
      const Vec x = o + s * a;
      bool ok;
      if (round.kind() == PatchKind::Arc) ok = in_angle(arc_param(round, c, x), round.lo()[0], round.hi()[0], flag);
      else ok = on_sphere_patch(round, c, x, flag);
      if (ok) record(flag, out);
    }
  }

  static void arc_arc(const Patch& p, const Vec& sp, const Patch& q, const Vec& sq, IntersectionCount& out) {
    const Vec c1 = p.center() + sp, c2 = q.center() + sq;
    const double r1 = p.radius(), r2 = q.radius();
    const Vec dvec = c2 - c1;
    const double dist = dvec.norm();
    if (dist == 0.0 || dist >= r1 + r2 || dist <= std::abs(r1 - r2)) return;
    const double a = (dist * dist + r1 * r1 - r2 * r2) / (2.0 * dist);
    const double h = std::sqrt(std::max(0.0, r1 * r1 - a * a));
    const Vec e = dvec / dist;
    Vec perp(2);
    perp << -e[1], e[0];
    for (double sgn : {-1.0, 1.0}) {
      const Vec x = c1 + a * e + sgn * h * perp;
      bool flag = false;
      if (in_angle(arc_param(p, c1, x), p.lo()[0], p.hi()[0], flag) &&
          in_angle(arc_param(q, c2, x), q.lo()[0], q.hi()[0], flag))
        record(flag, out);
    }
  }

  // Solutions of alpha cos t + beta sin t = gamma.
  static std::vector<double> trig_roots(double alpha, double beta, double gamma) {
    const double rho = std::hypot(alpha, beta);
    if (rho == 0.0 || std::abs(gamma) >= rho) return {};
    const double phi = std::atan2(beta, alpha);
    const double delta = std::acos(gamma / rho);
    return {phi - delta, phi + delta};
  }

  static void arc_plane(const Patch& arc, const Vec& sa, const Patch& pl, const Vec& sp, IntersectionCount& out) {
    const Vec c = arc.center() + sa;
    const Vec o = pl.center() + sp;
    const Mat& e = pl.frame();
    const Eigen::Vector3d e0 = e.col(0), e1 = e.col(1);
    const Vec n = e0.cross(e1).normalized();
    const double r = arc.radius();
    const auto ts = trig_roots(r * n.dot(arc.frame().col(0)), r * n.dot(arc.frame().col(1)), n.dot(o - c));
    const Eigen::Matrix2d gram = (e.transpose() * e);
    for (double t : ts) {
      bool flag = false;
      if (!in_angle(t, arc.lo()[0], arc.hi()[0], flag)) continue;
      const Vec x = c + r * (std::cos(t) * arc.frame().col(0) + std::sin(t) * arc.frame().col(1));
      const Eigen::Vector2d y = gram.ldlt().solve(e.transpose() * (x - o));
      if (in_interval(y[0], 0.0, 1.0, flag) && in_interval(y[1], 0.0, 1.0, flag)) record(flag, out);
    }
  }

  static void arc_sphere(const Patch& arc, const Vec& sa, const Patch& sph, const Vec& ss, IntersectionCount& out) {
    const Vec c = arc.center() + sa;
    const Vec cs = sph.center() + ss;
    const double r = arc.radius(), big = sph.radius();
    const Vec w = c - cs;
    // |w + r(cos t f1 + sin t f2)|^2 = R^2.
    const auto ts = trig_roots(2.0 * r * w.dot(arc.frame().col(0)), 2.0 * r * w.dot(arc.frame().col(1)),
                               big * big - w.squaredNorm() - r * r);
    for (double t : ts) {
      bool flag = false;
      if (!in_angle(t, arc.lo()[0], arc.hi()[0], flag)) continue;
      const Vec x = c + r * (std::cos(t) * arc.frame().col(0) + std::sin(t) * arc.frame().col(1));
      if (on_sphere_patch(sph, cs, x, flag)) record(flag, out);
    }
  }

  std::vector<Patch> z_;
  int d_ = 0;
  Mode mode_ = Mode::Linear;
  Eigen::FullPivLU<Mat> lu_;
  bool singular_ = false;
};

struct TranslationEstimate {
  double mean = 0.0;     // estimate of the integral over U of the intersection count
  double std_err = 0.0;
  std::uint64_t samples = 0;
  std::uint64_t flagged = 0;  // boundary-adjacent intersections encountered
};

// Monte Carlo for the translation side. Translations are drawn uniformly from the box
// where an intersection is possible, clipped to the hull of U; chi_U is applied exactly.
inline TranslationEstimate rhs_translation_integral(const std::vector<Patch>& z, const TranslationWindow& u,
                                                    std::uint64_t samples, std::uint64_t seed) {
  detail::check_codims(z);
  detail::check_window(z, u);
  if (samples == 0) fail(ErrorKind::InvalidInput, "need at least one sample");
  const IntersectionCounter counter(z);
  const int d = z.front().dim();
  const int n = u.count();
  const auto [lo0, hi0] = z[0].bounding_box();
  std::vector<Vec> lo(n), hi(n);
  double box_volume = 1.0;
  for (int j = 0; j < n; ++j) {
    const auto [loj, hij] = z[j + 1].bounding_box();
    const auto [wlo, whi] = u.factors()[j].box_hull();
    lo[j] = (loj - hi0).cwiseMax(wlo);
    hi[j] = (hij - lo0).cwiseMin(whi);
    for (int i = 0; i < d; ++i) {
      const double len = hi[j][i] - lo[j][i];
      box_volume *= std::max(len, 0.0);
    }
  }
  TranslationEstimate est;
  est.samples = samples;
  if (box_volume == 0.0) return est;
  struct Chunk {
    double n = 0.0, mean = 0.0, m2 = 0.0;
    std::uint64_t flagged = 0;
  };
  const std::uint64_t chunk = 8192;
  const std::uint64_t chunks = (samples + chunk - 1) / chunk;
  auto parts = parallel_map(static_cast<std::size_t>(chunks), [&](std::size_t c) {
    Rng rng(seed, c);
    const std::uint64_t begin = c * chunk;
    const std::uint64_t end = std::min(samples, begin + chunk);
    std::vector<double> v(static_cast<std::size_t>(n * d));
    Chunk out;
    for (std::uint64_t s = begin; s < end; ++s) {
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < d; ++i) v[j * d + i] = rng.uniform(lo[j][i], hi[j][i]);
      double x = 0.0;
      if (u.contains(v.data())) {
        const auto cnt = counter(v.data());
        x = box_volume * cnt.count;
        out.flagged += static_cast<std::uint64_t>(cnt.flagged);
      }
      out.n += 1.0;
      const double delta = x - out.mean;
      out.mean += delta / out.n;
      out.m2 += delta * (x - out.mean);
    }
    return out;
  });
  Chunk total;
  for (const auto& p : parts) {
    if (p.n == 0.0) continue;
    const double nn = total.n + p.n;
    const double delta = p.mean - total.mean;
    total.mean += delta * p.n / nn;
    total.m2 += p.m2 + delta * delta * total.n * p.n / nn;
    total.n = nn;
    total.flagged += p.flagged;
  }
  est.mean = total.mean;
  est.std_err = total.n > 1.0 ? std::sqrt(total.m2 / (total.n - 1.0) / total.n) : 0.0;
  est.flagged = total.flagged;
  return est;
}

// A sampled algebraic variety: patches covering it plus its degree.
struct DegreeTaggedVariety {
  std::vector<Patch> patches;
  int degree = 1;

  int dim() const { return patches.empty() ? 0 : patches.front().dim(); }
  int codim() const { return patches.empty() ? 0 : patches.front().codim(); }
};

struct BezoutReport {
  double lhs = 0.0;
  double coarse = 0.0;     // lhs at half resolution
  double volume = 0.0;     // Vol(U)
  double bound = 0.0;      // Vol(U) * prod s_j
  double tolerance = 0.0;  // relative slack granted for quadrature
  bool holds = false;
};

// Quadrature side summed over every choice of one patch per variety, compared
// against Vol(U) times the product of degrees.
inline BezoutReport bezout_cap_check(const std::vector<DegreeTaggedVariety>& vars, const TranslationWindow& u,
                                     double tolerance = 0.02) {
  if (vars.size() < 2) fail(ErrorKind::InvalidInput, "need at least two varieties");
  for (const auto& v : vars) {
    if (v.patches.empty()) fail(ErrorKind::InvalidInput, "variety without patches");
    if (v.degree < 1) fail(ErrorKind::InvalidInput, "degree must be at least 1");
    for (const auto& p : v.patches)
      if (p.codim() != v.codim() || p.dim() != v.dim())
        fail(ErrorKind::DimensionMismatch, "patches of one variety differ in dimension");
  }
  if (!u.bounded()) fail(ErrorKind::InvalidInput, "the degree bound needs a bounded window");
  BezoutReport rep;
  rep.tolerance = tolerance;
  std::vector<std::size_t> idx(vars.size(), 0);
  bool more = true;
  while (more) {
    std::vector<Patch> tuple;
    for (std::size_t j = 0; j < vars.size(); ++j) tuple.push_back(vars[j].patches[idx[j]]);
    rep.lhs += lhs_wedge_integral(tuple, u, 1.0);
    rep.coarse += lhs_wedge_integral(tuple, u, 0.5);
    more = false;
    for (std::size_t j = vars.size(); j-- > 0;) {
      if (++idx[j] < vars[j].patches.size()) {
        more = true;
        break;
      }
      idx[j] = 0;
    }
  }
  const auto vol = u.volume();
  rep.volume = vol.mean;
  double degrees = 1.0;
  for (const auto& v : vars) degrees *= v.degree;
  rep.bound = (vol.mean + 3.0 * vol.std_err) * degrees;
  rep.holds = rep.lhs <= rep.bound * (1.0 + tolerance);
  return rep;
}

}  // namespace bltk
