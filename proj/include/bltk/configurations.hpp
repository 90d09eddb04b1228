#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bltk/brascamp_lieb.hpp"
#include "bltk/exterior.hpp"
#include "bltk/parallel.hpp"
#include "bltk/rational.hpp"
#include "bltk/rng.hpp"

namespace bltk {

inline constexpr double kInfiniteSize = std::numeric_limits<double>::infinity();

// Product of a ball of radius `size` in the core directions and a ball of radius
// `radius` in the orthogonal directions, centered at core.base_point.
struct Slab {
  AffineSubspace core;
  double size = kInfiniteSize;
  double radius = 1.0;
  double weight = 1.0;

  int ambient_dim() const { return core.direction.ambient_dim(); }
  int dim() const { return core.direction.dim(); }

  bool contains(const Vec& x) const {
    const Vec r = x - core.base_point;
    const Mat& c = core.direction.basis();
    const Vec along = c.transpose() * r;
    if (std::isfinite(size) && along.norm() > size) return false;
    return (r - c * along).norm() <= radius;
  }

  Slab moved(const Mat& rotation, const Vec& shift) const {
    Slab s = *this;
    s.core.base_point = rotation * core.base_point + shift;
    s.core.direction = core.direction.transformed(rotation);
    return s;
  }
};

inline Slab make_slab(Vec base, const Subspace& direction, double size = kInfiniteSize, double radius = 1.0,
                      double weight = 1.0) {
  if (base.size() != direction.ambient_dim()) fail(ErrorKind::DimensionMismatch, "base point and core differ in dimension");
  if (!(size > 0.0)) fail(ErrorKind::InvalidInput, "slab size must be positive");
  if (!(radius > 0.0) || !std::isfinite(radius)) fail(ErrorKind::InvalidInput, "slab radius must be positive and finite");
  if (!std::isfinite(weight)) fail(ErrorKind::InvalidInput, "slab weight must be finite");
  return Slab{{std::move(base), direction}, size, radius, weight};
}

struct SlabFamily {
  Subspace nominal;
  double delta = 0.0;
  std::vector<Slab> slabs;

  int dim() const { return nominal.dim(); }
  std::size_t count() const { return slabs.size(); }

  double max_core_angle() const {
    double a = 0.0;
    for (const auto& s : slabs) a = std::max(a, s.core.direction.max_angle_to(nominal));
    return a;
  }

  // Nonempty when some core leaves the recorded delta-neighborhood of the nominal subspace.
  std::optional<std::string> tolerance_warning() const {
    const double a = max_core_angle();
    if (a <= delta + 1e-12) return std::nullopt;
    return "core angle " + std::to_string(a) + " exceeds delta " + std::to_string(delta);
  }

  SlabFamily moved(const Mat& rotation, const Vec& shift) const {
    SlabFamily f{nominal.transformed(rotation), delta, {}};
    for (const auto& s : slabs) f.slabs.push_back(s.moved(rotation, shift));
    return f;
  }
};

// Midpoint value at cell size h/2, with |I(h) - I(h/2)| as the error estimate.
struct QuadratureValue {
  double value = 0.0;
  double coarse = 0.0;
  double error = 0.0;
  std::size_t cells = 0;
};

struct SlabInequalityReport {
  QuadratureValue lhs;
  double rhs = 0.0;
  double ratio = 0.0;
  double bl = 1.0;
  std::vector<std::string> warnings;
};

namespace detail {

inline constexpr std::size_t kMaxTuples = 100000;
inline constexpr double kMaxCells = 1e8;

struct RealBox {
  Vec lo, hi;
};

// Exact coordinate extent of a single slab; infinite along unbounded core directions.
inline RealBox slab_box(const Slab& s) {
  const int d = s.ambient_dim();
  const Mat& c = s.core.direction.basis();
  const Mat p = s.core.direction.complement_basis();
  RealBox b{Vec(d), Vec(d)};
  for (int i = 0; i < d; ++i) {
    const double cr = c.cols() ? c.row(i).norm() : 0.0;
    const double pr = p.cols() ? p.row(i).norm() : 0.0;
    const double along = cr > 1e-15 ? s.size * cr : 0.0;
    const double half = along + s.radius * pr;
    b.lo[i] = s.core.base_point[i] - half;
    b.hi[i] = s.core.base_point[i] + half;
  }
  return b;
}

// Coordinate box containing the intersection of the given slabs, or nullopt if
// the boxes already show it is empty. Each slab contributes |u.(x - b)| <= r for
// the rows u of its complement basis (radius) and of its core basis (size, when
// finite). For any row subset U of full column rank, x = U^+ U x bounds every
// coordinate; the complement rows alone and all rows are both tried, since the
// large size radii would otherwise leak into directions the radii already fix.
inline std::optional<RealBox> tuple_box(const std::vector<const Slab*>& tuple) {
  const int d = tuple.front()->ambient_dim();
  std::vector<Vec> rows;
  std::vector<double> centers, radii;
  const auto add = [&](const Mat& basis, const Vec& base, double r) {
    for (Eigen::Index l = 0; l < basis.cols(); ++l) {
      rows.push_back(basis.col(l));
      centers.push_back(basis.col(l).dot(base));
      radii.push_back(r);
    }
  };
  for (const Slab* s : tuple) add(s->core.direction.complement_basis(), s->core.base_point, s->radius);
  const std::size_t complement_rows = rows.size();
  for (const Slab* s : tuple)
    if (std::isfinite(s->size)) add(s->core.direction.basis(), s->core.base_point, s->size);
  RealBox box{Vec::Constant(d, -kInfiniteSize), Vec::Constant(d, kInfiniteSize)};
  for (const std::size_t m : {complement_rows, rows.size()}) {
    if (static_cast<int>(m) < d) continue;
    Mat u(static_cast<Eigen::Index>(m), d);
    for (std::size_t i = 0; i < m; ++i) u.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
    Eigen::JacobiSVD<Mat> svd(u, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vec& sv = svd.singularValues();
    if (!(sv(d - 1) > 1e-12 * sv(0))) continue;
    const Mat pinv = svd.matrixV() * sv.cwiseInverse().asDiagonal() * svd.matrixU().transpose();
    const Vec mid = pinv * Eigen::Map<const Vec>(centers.data(), static_cast<Eigen::Index>(m));
    const Vec half = pinv.cwiseAbs() * Eigen::Map<const Vec>(radii.data(), static_cast<Eigen::Index>(m));
    box.lo = box.lo.cwiseMax(mid - half);
    box.hi = box.hi.cwiseMin(mid + half);
  }
  for (const Slab* s : tuple) {
    const RealBox b = slab_box(*s);
    box.lo = box.lo.cwiseMax(b.lo);
    box.hi = box.hi.cwiseMin(b.hi);
  }
  for (int i = 0; i < d; ++i)
    if (box.lo[i] > box.hi[i]) return std::nullopt;
  if (!box.lo.allFinite() || !box.hi.allFinite())
    fail(ErrorKind::InvalidInput, "overlap region of a slab tuple is unbounded");
  return box;
}

// Half-open cell index box.
struct CellBox {
  std::vector<std::int64_t> lo, hi;

  double count() const {
    double c = 1.0;
    for (std::size_t i = 0; i < lo.size(); ++i) c *= static_cast<double>(hi[i] - lo[i]);
    return c;
  }
  bool meets(const CellBox& o) const {
    for (std::size_t i = 0; i < lo.size(); ++i)
      if (hi[i] <= o.lo[i] || o.hi[i] <= lo[i]) return false;
    return true;
  }
  void absorb(const CellBox& o) {
    for (std::size_t i = 0; i < lo.size(); ++i) {
      lo[i] = std::min(lo[i], o.lo[i]);
      hi[i] = std::max(hi[i], o.hi[i]);
    }
  }
};

inline CellBox cells_covering(const RealBox& b, double h) {
  CellBox c;
  for (Eigen::Index i = 0; i < b.lo.size(); ++i) {
    const double lo = std::floor(b.lo[i] / h), hi = std::ceil(b.hi[i] / h);
    if (hi - lo > 1e9) fail(ErrorKind::Unsupported, "quadrature grid exceeds the cell budget");
    c.lo.push_back(static_cast<std::int64_t>(lo));
    c.hi.push_back(std::max(static_cast<std::int64_t>(hi), static_cast<std::int64_t>(lo) + 1));
  }
  return c;
}

// Merges overlapping boxes until the remaining ones are pairwise disjoint.
inline std::vector<CellBox> disjoint_cover(std::vector<CellBox> boxes) {
  bool merged = true;
  while (merged) {
    merged = false;
    std::vector<CellBox> out;
    for (auto& b : boxes) {
      bool taken = false;
      for (auto& o : out)
        if (o.meets(b)) {
          o.absorb(b);
          taken = merged = true;
          break;
        }
      if (!taken) out.push_back(std::move(b));
    }
    boxes = std::move(out);
  }
  std::sort(boxes.begin(), boxes.end(), [](const CellBox& a, const CellBox& b) { return a.lo < b.lo; });
  return boxes;
}

inline std::size_t tuple_count(const std::vector<SlabFamily>& fams) {
  std::size_t t = 1;
  for (const auto& f : fams) {
    t *= f.count();
    if (t > kMaxTuples) fail(ErrorKind::Unsupported, "too many slab tuples");
  }
  return t;
}

inline std::vector<std::size_t> tuple_digits(std::size_t t, const std::vector<SlabFamily>& fams) {
  std::vector<std::size_t> a(fams.size());
  for (std::size_t j = fams.size(); j-- > 0;) {
    a[j] = t % fams[j].count();
    t /= fams[j].count();
  }
  return a;
}

inline std::size_t tuple_index(const std::vector<int>& a, const std::vector<SlabFamily>& fams) {
  std::size_t t = 0;
  for (std::size_t j = 0; j < fams.size(); ++j) t = t * fams[j].count() + static_cast<std::size_t>(a[j]);
  return t;
}

using Active = std::vector<std::vector<int>>;

// Midpoint rule on the grid of cubes of side h anchored at the origin,
// restricted to cells that can meet the support of some admitted tuple.
template <class F>
std::pair<double, std::size_t> slab_quadrature(const std::vector<SlabFamily>& fams, double h,
                                               const std::function<bool(std::size_t)>& admit, F&& integrand) {
  const int d = fams.front().slabs.front().ambient_dim();
  const std::size_t tuples = tuple_count(fams);
  std::vector<CellBox> boxes;
  for (std::size_t t = 0; t < tuples; ++t) {
    if (!admit(t)) continue;
    const auto digits = tuple_digits(t, fams);
    std::vector<const Slab*> tuple;
    for (std::size_t j = 0; j < fams.size(); ++j) tuple.push_back(&fams[j].slabs[digits[j]]);
    if (const auto b = tuple_box(tuple)) boxes.push_back(cells_covering(*b, h));
  }
  boxes = disjoint_cover(std::move(boxes));
  double total = 0.0;
  std::vector<double> prefix{0.0};
  for (const auto& b : boxes) {
    total += b.count();
    prefix.push_back(total);
  }
  if (total > kMaxCells) fail(ErrorKind::Unsupported, "quadrature grid exceeds the cell budget");
  const auto cells = static_cast<std::size_t>(total);
  constexpr std::size_t chunk = 4096;
  const std::size_t chunks = (cells + chunk - 1) / chunk;
  const double vol = std::pow(h, d);
  const auto partial = parallel_map(chunks, [&](std::size_t c) {
    Active active(fams.size());
    std::vector<double> vals;
    Vec x(d);
    const std::size_t end = std::min(cells, (c + 1) * chunk);
    std::size_t bi = static_cast<std::size_t>(
        std::upper_bound(prefix.begin(), prefix.end(), static_cast<double>(c * chunk)) - prefix.begin() - 1);
    for (std::size_t g = c * chunk; g < end; ++g) {
      while (static_cast<double>(g) >= prefix[bi + 1]) ++bi;
      const CellBox& b = boxes[bi];
      auto local = static_cast<std::int64_t>(g - static_cast<std::size_t>(prefix[bi]));
      for (int i = d - 1; i >= 0; --i) {
        const std::int64_t w = b.hi[static_cast<std::size_t>(i)] - b.lo[static_cast<std::size_t>(i)];
        x[i] = (static_cast<double>(b.lo[static_cast<std::size_t>(i)] + local % w) + 0.5) * h;
        local /= w;
      }
      bool all = true;
      for (std::size_t j = 0; j < fams.size() && all; ++j) {
        active[j].clear();
        for (std::size_t a = 0; a < fams[j].slabs.size(); ++a)
          if (fams[j].slabs[a].contains(x)) active[j].push_back(static_cast<int>(a));
        all = !active[j].empty();
      }
      vals.push_back(all ? integrand(active) : 0.0);
    }
    return pairwise_sum(vals);
  });
  return {pairwise_sum(partial) * vol, cells};
}

template <class F>
QuadratureValue refined_quadrature(const std::vector<SlabFamily>& fams, double h,
                                   const std::function<bool(std::size_t)>& admit, F&& integrand) {
  QuadratureValue q;
  q.coarse = slab_quadrature(fams, h, admit, integrand).first;
  const auto fine = slab_quadrature(fams, 0.5 * h, admit, integrand);
  q.value = fine.first;
  q.cells = fine.second;
  q.error = std::abs(q.value - q.coarse);
  return q;
}

inline void check_families(const std::vector<SlabFamily>& fams, bool need_complementary) {
  if (fams.size() < 2) fail(ErrorKind::InvalidInput, "need at least two slab families");
  const int d = fams.front().nominal.ambient_dim();
  int total = 0;
  for (const auto& f : fams) {
    if (f.slabs.empty()) fail(ErrorKind::EmptyFamily, "slab family is empty");
    if (f.nominal.ambient_dim() != d) fail(ErrorKind::DimensionMismatch, "families live in different dimensions");
    for (const auto& s : f.slabs)
      if (s.ambient_dim() != d || s.dim() != f.dim())
        fail(ErrorKind::DimensionMismatch, "slab core dimension differs from its family");
    total += f.dim();
  }
  if (need_complementary && total != d) fail(ErrorKind::DimensionMismatch, "family dimensions must add up to d");
  if (d > 4) fail(ErrorKind::Unsupported, "slab quadrature supports d <= 4");
}

inline double default_cell(const std::vector<SlabFamily>& fams) {
  double r = kInfiniteSize;
  for (const auto& f : fams)
    for (const auto& s : f.slabs) r = std::min(r, s.radius);
  return r / 8.0;
}

inline std::vector<std::string> family_warnings(const std::vector<SlabFamily>& fams) {
  std::vector<std::string> w;
  for (std::size_t j = 0; j < fams.size(); ++j)
    if (auto m = fams[j].tolerance_warning()) w.push_back("family " + std::to_string(j) + ": " + *m);
  return w;
}

}  // namespace detail

// int (prod_j sum_a chi_{T_ja})^{1/(n-1)} against prod_j A(j)^{1/(n-1)}. h <= 0 picks radius/8.
inline SlabInequalityReport lhs_kjplane(const std::vector<SlabFamily>& fams, double h = 0.0) {
  detail::check_families(fams, true);
  if (h <= 0.0) h = detail::default_cell(fams);
  const double q = 1.0 / static_cast<double>(fams.size() - 1);
  SlabInequalityReport rep;
  rep.lhs = detail::refined_quadrature(fams, h, [](std::size_t) { return true; }, [&](const detail::Active& act) {
    double p = 1.0;
    for (const auto& a : act) p *= static_cast<double>(a.size());
    return std::pow(p, q);
  });
  rep.rhs = 1.0;
  for (const auto& f : fams) rep.rhs *= std::pow(static_cast<double>(f.count()), q);
  rep.ratio = rep.lhs.value / rep.rhs;
  rep.warnings = detail::family_warnings(fams);
  return rep;
}

// int |sum over tuples of prod rho chi |H_1 ^ ... ^ H_n||^{1/(n-1)} against
// prod_j (sum_a |rho_ja|)^{1/(n-1)}. Tuples with zero wedge or zero weight carry
// no mass and are left out of the support.
inline SlabInequalityReport lhs_affine(const std::vector<SlabFamily>& fams, double h = 0.0) {
  detail::check_families(fams, true);
  if (h <= 0.0) h = detail::default_cell(fams);
  const double q = 1.0 / static_cast<double>(fams.size() - 1);
  const std::size_t tuples = detail::tuple_count(fams);
  std::vector<double> factor(tuples);
  for (std::size_t t = 0; t < tuples; ++t) {
    const auto digits = detail::tuple_digits(t, fams);
    std::vector<Subspace> cores;
    double w = 1.0;
    for (std::size_t j = 0; j < fams.size(); ++j) {
      const Slab& s = fams[j].slabs[digits[j]];
      cores.push_back(s.core.direction);
      w *= s.weight;
    }
    const double wedge = subspace_wedge_norm(cores);
    factor[t] = wedge < 1e-14 ? 0.0 : w * wedge;
  }
  SlabInequalityReport rep;
  const auto admit = [&](std::size_t t) { return factor[t] != 0.0; };
  if (std::none_of(factor.begin(), factor.end(), [](double f) { return f != 0.0; })) {
    rep.lhs = {};
  } else {
    rep.lhs = detail::refined_quadrature(fams, h, admit, [&](const detail::Active& act) {
      std::vector<int> a(act.size());
      double s = 0.0;
      std::function<void(std::size_t)> walk = [&](std::size_t j) {
        if (j == act.size()) {
          s += factor[detail::tuple_index(a, fams)];
          return;
        }
        for (int i : act[j]) {
          a[j] = i;
          walk(j + 1);
        }
      };
      walk(0);
      return std::pow(std::abs(s), q);
    });
  }
  rep.rhs = 1.0;
  for (const auto& f : fams) {
    double s = 0.0;
    for (const auto& sl : f.slabs) s += std::abs(sl.weight);
    rep.rhs *= std::pow(s, q);
  }
  rep.ratio = rep.rhs > 0.0 ? rep.lhs.value / rep.rhs : 0.0;
  rep.warnings = detail::family_warnings(fams);
  return rep;
}

// int prod_j (sum_a chi_{T_ja})^{p_j} against prod_j |T_j|^{p_j}, gated on a
// finite constant for the datum whose kernels are the families' nominal subspaces.
inline SlabInequalityReport lhs_bl(const std::vector<SlabFamily>& fams, const std::vector<Rational>& p, double h = 0.0,
                                   const BLOptions& bopt = {}) {
  detail::check_families(fams, false);
  if (p.size() != fams.size()) fail(ErrorKind::DimensionMismatch, "one exponent per family");
  std::vector<Subspace> kernels;
  for (const auto& f : fams) kernels.push_back(f.nominal);
  const auto od = make_ortho_datum(kernels, p);
  const BLDatum datum = od.datum();
  if (!scaling_condition(datum)) fail(ErrorKind::InfiniteBLConstant, "scaling condition fails");
  if (!dimension_condition(datum).pass) fail(ErrorKind::InfiniteBLConstant, "dimension condition has a counterexample");
  const auto bl = bl_constant(datum, bopt);
  if (!bl.finite()) fail(ErrorKind::InfiniteBLConstant, "constant diverged: " + bl.reason);
  if (h <= 0.0) h = detail::default_cell(fams);
  std::vector<double> e;
  for (const auto& x : p) e.push_back(x.value());
  SlabInequalityReport rep;
  rep.bl = bl.value;
  rep.lhs = detail::refined_quadrature(fams, h, [](std::size_t) { return true; }, [&](const detail::Active& act) {
    double v = 1.0;
    for (std::size_t j = 0; j < act.size(); ++j) v *= std::pow(static_cast<double>(act[j].size()), e[j]);
    return v;
  });
  rep.rhs = 1.0;
  for (std::size_t j = 0; j < fams.size(); ++j) rep.rhs *= std::pow(static_cast<double>(fams[j].count()), e[j]);
  rep.ratio = rep.lhs.value / rep.rhs;
  rep.warnings = detail::family_warnings(fams);
  return rep;
}

// ---------------------------------------------------------------------------
// Generators

// Horizontal and vertical strips of radius 1 through the origin, core size R.
inline std::vector<SlabFamily> perpendicular_strips(double size = kInfiniteSize) {
  std::vector<SlabFamily> f;
  for (int axis = 0; axis < 2; ++axis) {
    const Subspace s = Subspace::coordinate(2, {axis});
    f.push_back({s, 0.0, {make_slab(Vec::Zero(2), s, size)}});
  }
  return f;
}

// m horizontal and m vertical strips of radius 1 at multiples of `spacing`.
inline std::vector<SlabFamily> axis_strip_grid(int m, double spacing = 4.0, double size = kInfiniteSize) {
  if (m < 1) fail(ErrorKind::EmptyFamily, "grid needs at least one strip per family");
  std::vector<SlabFamily> f;
  for (int axis = 0; axis < 2; ++axis) {
    const Subspace s = Subspace::coordinate(2, {axis});
    SlabFamily fam{s, 0.0, {}};
    for (int a = 0; a < m; ++a) {
      Vec b = Vec::Zero(2);
      b[1 - axis] = spacing * a;
      fam.slabs.push_back(make_slab(b, s, size));
    }
    f.push_back(std::move(fam));
  }
  return f;
}

// Coordinate blocks K_j partitioning {0..d-1}, with A(j) slabs per family.
struct NearAxisSpec {
  int d = 2;
  std::vector<std::vector<int>> blocks;
  std::vector<int> counts;
  double delta = 0.05;
  double offset = 0.25;
};

inline NearAxisSpec random_near_axis_spec(int d, std::uint64_t seed, double delta = 0.05) {
  if (d < 2) fail(ErrorKind::InvalidInput, "near-axis families need d >= 2");
  Rng rng(seed, 0xa7);
  std::vector<int> axes(static_cast<std::size_t>(d));
  std::iota(axes.begin(), axes.end(), 0);
  for (int i = d - 1; i > 0; --i) std::swap(axes[static_cast<std::size_t>(i)], axes[static_cast<std::size_t>(rng.index(i + 1))]);
  const int n = 2 + rng.index(d - 1);
  NearAxisSpec spec;
  spec.d = d;
  spec.delta = delta;
  spec.blocks.resize(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) spec.blocks[static_cast<std::size_t>(j)].push_back(axes[static_cast<std::size_t>(j)]);
  for (int i = n; i < d; ++i) spec.blocks[static_cast<std::size_t>(rng.index(n))].push_back(axes[static_cast<std::size_t>(i)]);
  for (int j = 0; j < n; ++j) spec.counts.push_back(1 + rng.index(3));
  return spec;
}

// Slabs of radius 1 and size R whose cores lie within delta of the coordinate
// subspaces e_{K_j} and pass within `offset` of the origin. The geometry does
// not depend on R, so a sweep over R changes nothing but the core extent.
inline std::vector<SlabFamily> near_axis_families(const NearAxisSpec& spec, double size, std::uint64_t seed) {
  const int d = spec.d;
  if (spec.blocks.size() != spec.counts.size() || spec.blocks.size() < 2)
    fail(ErrorKind::InvalidInput, "need at least two blocks with one count each");
  Rng rng(seed, 0x5ab);
  std::vector<SlabFamily> fams;
  for (std::size_t j = 0; j < spec.blocks.size(); ++j) {
    const Subspace nominal = Subspace::coordinate(d, spec.blocks[j]);
    const Mat comp = nominal.complement_basis();
    SlabFamily fam{nominal, spec.delta, {}};
    for (int a = 0; a < spec.counts[j]; ++a) {
      Mat x(comp.cols(), nominal.dim());
      for (Eigen::Index c = 0; c < x.cols(); ++c)
        for (Eigen::Index r = 0; r < x.rows(); ++r) x(r, c) = rng.normal();
      const double norm = x.size() ? Eigen::JacobiSVD<Mat>(x).singularValues()(0) : 0.0;
      const double target = std::tan(spec.delta * rng.uniform());
      if (norm > 0.0) x *= target / norm;
      // Principal angles to the nominal subspace are atan of the singular values of x.
      const Subspace core(Mat(nominal.basis() + comp * x));
      // Centered at the foot of the core, so the core extent is symmetric about the overlap.
      const Vec c = rng.in_ball(d) * spec.offset;
      const Mat& cb = core.basis();
      fam.slabs.push_back(make_slab(Vec(c - cb * (cb.transpose() * c)), core, size));
    }
    fams.push_back(std::move(fam));
  }
  return fams;
}

// ---------------------------------------------------------------------------
// Size sweep

enum class SweepMode { KjPlane, BL };

struct SweepPoint {
  double size = 0.0;
  double lhs = 0.0;
  double error = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
};

struct SweepReport {
  std::vector<SweepPoint> points;
  double slope = 0.0;
  double tolerance = 0.05;
  bool endpoint = false;  // |slope| < tolerance
};

struct SweepOptions {
  SweepMode mode = SweepMode::KjPlane;
  std::vector<Rational> exponents;  // BL mode only
  double h = 0.0;
  double tolerance = 0.05;
  // Test hook: multiplies the comparator by R^growth, so a nonzero value must
  // be caught by the slope check.
  double comparator_growth = 0.0;
};

// Least-squares slope of y against x.
inline double fitted_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) fail(ErrorKind::InvalidInput, "slope needs at least two points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n, my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (!(sxx > 0.0)) fail(ErrorKind::InvalidInput, "slope needs distinct abscissae");
  return sxy / sxx;
}

inline SweepReport size_sweep(const std::function<std::vector<SlabFamily>(double)>& generator,
                              const std::vector<double>& sizes, const SweepOptions& opt = {}) {
  if (sizes.size() < 2) fail(ErrorKind::InvalidInput, "sweep needs at least two sizes");
  SweepReport rep;
  rep.tolerance = opt.tolerance;
  std::vector<double> lx, ly;
  for (double r : sizes) {
    if (!(r > 0.0) || !std::isfinite(r)) fail(ErrorKind::InvalidInput, "sweep sizes must be positive and finite");
    const auto fams = generator(r);
    const auto s = opt.mode == SweepMode::KjPlane ? lhs_kjplane(fams, opt.h) : lhs_bl(fams, opt.exponents, opt.h);
    SweepPoint pt{r, s.lhs.value, s.lhs.error, s.rhs * std::pow(r, opt.comparator_growth), 0.0};
    pt.ratio = pt.lhs / pt.rhs;
    rep.points.push_back(pt);
    lx.push_back(std::log(r));
    ly.push_back(std::log(pt.ratio));
  }
  const bool positive = std::all_of(rep.points.begin(), rep.points.end(), [](const SweepPoint& p) { return p.ratio > 0.0; });
  rep.slope = positive ? fitted_slope(lx, ly) : std::numeric_limits<double>::quiet_NaN();
  rep.endpoint = positive && std::abs(rep.slope) < opt.tolerance;
  return rep;
}

// ---------------------------------------------------------------------------
// Sampled varieties

struct VarietySample {
  Vec point;
  Subspace tangent;
  double weight = 0.0;  // inverse sampling density times the ball indicator
};

class VarietyModel {
 public:
  enum class Kind { PlaneUnion, Sphere, Graph };
  using GraphMap = std::function<Vec(const Vec&)>;
  using GraphJacobian = std::function<Mat(const Vec&)>;

  // Union of affine k-planes; the degree is the number of planes.
  static VarietyModel planes(std::vector<AffineSubspace> planes) {
    if (planes.empty()) fail(ErrorKind::EmptyFamily, "plane union needs at least one plane");
    VarietyModel m;
    m.kind_ = Kind::PlaneUnion;
    m.d_ = planes.front().direction.ambient_dim();
    m.k_ = planes.front().direction.dim();
    for (const auto& p : planes)
      if (p.direction.ambient_dim() != m.d_ || p.direction.dim() != m.k_ || p.base_point.size() != m.d_)
        fail(ErrorKind::DimensionMismatch, "planes differ in dimension");
    if (m.k_ < 1 || m.k_ >= m.d_) fail(ErrorKind::InvalidInput, "plane dimension must lie in [1, d-1]");
    m.degree_ = static_cast<int>(planes.size());
    m.planes_ = std::move(planes);
    return m;
  }

  static VarietyModel sphere(Vec center, double radius) {
    if (!(radius > 0.0)) fail(ErrorKind::InvalidInput, "sphere radius must be positive");
    if (center.size() < 2) fail(ErrorKind::DimensionMismatch, "sphere needs d >= 2");
    VarietyModel m;
    m.kind_ = Kind::Sphere;
    m.d_ = static_cast<int>(center.size());
    m.k_ = m.d_ - 1;
    m.degree_ = 2;
    m.center_ = std::move(center);
    m.radius_ = radius;
    return m;
  }

  // {(u, g(u)) : u in [lo, hi]} in R^d with u in R^k; the degree is supplied.
  static VarietyModel graph(int d, Vec lo, Vec hi, GraphMap g, GraphJacobian jac, int degree) {
    const int k = static_cast<int>(lo.size());
    if (k < 1 || k >= d || hi.size() != k) fail(ErrorKind::DimensionMismatch, "graph parameter box must have 1 <= k < d");
    if (degree < 1) fail(ErrorKind::InvalidInput, "degree must be positive");
    for (int i = 0; i < k; ++i)
      if (!(lo[i] < hi[i])) fail(ErrorKind::InvalidInput, "empty graph parameter box");
    VarietyModel m;
    m.kind_ = Kind::Graph;
    m.d_ = d;
    m.k_ = k;
    m.degree_ = degree;
    m.lo_ = std::move(lo);
    m.hi_ = std::move(hi);
    m.g_ = std::move(g);
    m.jac_ = std::move(jac);
    return m;
  }

  Kind kind() const { return kind_; }
  int ambient_dim() const { return d_; }
  int dim() const { return k_; }
  int degree() const { return degree_; }
  const std::vector<AffineSubspace>& plane_list() const { return planes_; }

  // False only when the variety certainly misses the closed ball.
  bool may_meet_ball(const Vec& o, double n) const {
    switch (kind_) {
      case Kind::PlaneUnion:
        for (const auto& p : planes_)
          if (plane_distance(p, o) <= n) return true;
        return false;
      case Kind::Sphere: return std::abs((o - center_).norm() - radius_) <= n;
      case Kind::Graph: return true;
    }
    return true;
  }

  // Coordinate box containing the n-neighborhood; infinite where unbounded.
  std::pair<Vec, Vec> neighborhood_box(double n) const {
    Vec lo = Vec::Constant(d_, kInfiniteSize), hi = Vec::Constant(d_, -kInfiniteSize);
    if (kind_ == Kind::PlaneUnion) {
      for (const auto& p : planes_) {
        const auto b = detail::slab_box(Slab{p, kInfiniteSize, n, 1.0});
        lo = lo.cwiseMin(b.lo);
        hi = hi.cwiseMax(b.hi);
      }
    } else if (kind_ == Kind::Sphere) {
      lo = center_.array() - (radius_ + n);
      hi = center_.array() + (radius_ + n);
    } else {
      lo.fill(-kInfiniteSize);
      hi.fill(kInfiniteSize);
    }
    return {lo, hi};
  }

  // One draw from the part of the variety inside B(o, n).
  VarietySample sample(const Vec& o, double n, Rng& rng) const {
    switch (kind_) {
      case Kind::PlaneUnion: return sample_planes(o, n, rng);
      case Kind::Sphere: return sample_sphere(o, n, rng);
      case Kind::Graph: return sample_graph(o, n, rng);
    }
    return {};
  }

 private:
  static double plane_distance(const AffineSubspace& p, const Vec& o) {
    const Vec r = o - p.base_point;
    const Mat& c = p.direction.basis();
    return (r - c * (c.transpose() * r)).norm();
  }

  VarietySample sample_planes(const Vec& o, double n, Rng& rng) const {
    std::vector<double> rho(planes_.size(), 0.0), mass(planes_.size(), 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < planes_.size(); ++i) {
      const double dist = plane_distance(planes_[i], o);
      if (dist >= n) continue;
      rho[i] = std::sqrt(n * n - dist * dist);
      mass[i] = unit_ball_volume(k_) * std::pow(rho[i], k_);
      total += mass[i];
    }
    if (!(total > 0.0)) return {o, planes_.front().direction, 0.0};
    const double u = rng.uniform() * total;
    std::size_t i = 0;
    for (double acc = 0.0; i < planes_.size(); ++i) {
      acc += mass[i];
      if (mass[i] > 0.0 && u < acc) break;
    }
    if (i == planes_.size())
      while (mass[--i] == 0.0) {
      }
    const auto& p = planes_[i];
    const Mat& c = p.direction.basis();
    const Vec foot = p.base_point + c * (c.transpose() * (o - p.base_point));
    return {foot + c * (rng.in_ball(k_) * rho[i]), p.direction, total};
  }

  // Uniform on the cap inside the ball for d = 2, 3; whole-sphere rejection otherwise.
  VarietySample sample_sphere(const Vec& o, double n, Rng& rng) const {
    const Vec rel = o - center_;
    const double s = rel.norm();
    double cos_a = s > 0.0 ? (radius_ * radius_ + s * s - n * n) / (2.0 * radius_ * s) : (n >= radius_ ? -1.0 : 2.0);
    if (cos_a > 1.0) return {center_, Subspace::zero(d_), 0.0};
    cos_a = std::max(cos_a, -1.0);
    const Vec axis = s > 0.0 ? Vec(rel / s) : Vec(Vec::Unit(d_, 0));
    Vec dir;
    double weight;
    if (d_ == 2) {
      const double a = std::acos(cos_a);
      const double t = rng.uniform(-a, a);
      const Vec perp(Vec{{-axis[1], axis[0]}});
      dir = std::cos(t) * axis + std::sin(t) * perp;
      weight = 2.0 * a * radius_;
    } else if (d_ == 3) {
      const double z = rng.uniform(cos_a, 1.0);
      const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const Mat frame = complement_basis(axis);
      dir = z * axis + std::sqrt(std::max(0.0, 1.0 - z * z)) * (std::cos(phi) * frame.col(0) + std::sin(phi) * frame.col(1));
      weight = 2.0 * std::numbers::pi * radius_ * radius_ * (1.0 - cos_a);
    } else {
      dir = rng.unit_vector(d_);
      weight = unit_sphere_area(d_) * std::pow(radius_, d_ - 1);
      if (dir.dot(axis) < cos_a) weight = 0.0;
    }
    return {center_ + radius_ * dir, Subspace(complement_basis(dir)), weight};
  }

  VarietySample sample_graph(const Vec& o, double n, Rng& rng) const {
    Vec u(k_);
    double vol = 1.0;
    for (int i = 0; i < k_; ++i) {
      u[i] = rng.uniform(lo_[i], hi_[i]);
      vol *= hi_[i] - lo_[i];
    }
    const Vec gv = g_(u);
    const Mat jg = jac_(u);
    if (gv.size() != d_ - k_ || jg.rows() != d_ - k_ || jg.cols() != k_)
      fail(ErrorKind::DimensionMismatch, "graph map or Jacobian has the wrong shape");
    Vec y(d_);
    y << u, gv;
    Mat t(d_, k_);
    t << Mat::Identity(k_, k_), jg;
    const double jacobian = std::sqrt((t.transpose() * t).determinant());
    const double w = (y - o).norm() <= n ? vol * jacobian : 0.0;
    return {y, Subspace(t), w};
  }

  Kind kind_ = Kind::PlaneUnion;
  int d_ = 0, k_ = 0, degree_ = 0;
  std::vector<AffineSubspace> planes_;
  Vec center_;
  double radius_ = 0.0;
  Vec lo_, hi_;
  GraphMap g_;
  GraphJacobian jac_;
};

struct CellFunctional {
  std::vector<std::int64_t> cell;
  double value = 0.0;
  double std_err = 0.0;
};

// Cell radius N: min(100 e^d, 50).
inline double default_cell_radius(int d) { return std::min(100.0 * std::exp(static_cast<double>(d)), 50.0); }

struct CellOptions {
  double radius = 0.0;  // N; 0 picks default_cell_radius(d)
  int samples = 512;
  std::uint64_t seed = 0;
};

namespace detail {

inline Vec cell_center(const std::vector<std::int64_t>& cell) {
  Vec o(static_cast<Eigen::Index>(cell.size()));
  for (std::size_t i = 0; i < cell.size(); ++i) o[static_cast<Eigen::Index>(i)] = static_cast<double>(cell[i]) + 0.5;
  return o;
}

inline std::uint64_t cell_stream(const std::vector<std::int64_t>& cell) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (auto c : cell) {
    auto u = static_cast<std::uint64_t>(c);
    for (int b = 0; b < 8; ++b) {
      h ^= (u >> (8 * b)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

inline int check_models(const std::vector<VarietyModel>& models) {
  if (models.size() < 2) fail(ErrorKind::InvalidInput, "need at least two varieties");
  const int d = models.front().ambient_dim();
  for (const auto& m : models)
    if (m.ambient_dim() != d) fail(ErrorKind::DimensionMismatch, "varieties live in different dimensions");
  return d;
}

// Monte Carlo mean of f over `samples` draws, each draw taking copies[j] points
// from model j inside B(O_cell, N).
template <class F>
CellFunctional cell_monte_carlo(const std::vector<VarietyModel>& models, const std::vector<int>& copies,
                                const std::vector<std::int64_t>& cell, const CellOptions& opt, F&& f) {
  const int d = models.front().ambient_dim();
  if (static_cast<int>(cell.size()) != d) fail(ErrorKind::DimensionMismatch, "cell index has the wrong dimension");
  const double n = opt.radius > 0.0 ? opt.radius : default_cell_radius(d);
  const Vec o = cell_center(cell);
  CellFunctional g{cell, 0.0, 0.0};
  for (const auto& m : models)
    if (!m.may_meet_ball(o, n)) return g;
  Rng rng(opt.seed, cell_stream(cell));
  std::vector<double> vals(static_cast<std::size_t>(opt.samples));
  std::vector<std::vector<Subspace>> tangents(models.size());
  for (auto& v : vals) {
    double w = 1.0;
    for (std::size_t j = 0; j < models.size(); ++j) {
      tangents[j].clear();
      for (int c = 0; c < copies[j]; ++c) {
        auto s = models[j].sample(o, n, rng);
        w *= s.weight;
        tangents[j].push_back(std::move(s.tangent));
      }
    }
    v = w == 0.0 ? 0.0 : w * f(tangents);
  }
  const auto ms = mean_stderr(vals);
  g.value = ms.mean;
  g.std_err = ms.std_err;
  return g;
}

}  // namespace detail

// G(Q) = int over H_1 x ... x H_n near O of |T_{y_1} H_1 ^ ... ^ T_{y_n} H_n|.
inline CellFunctional cell_functional_variety(const std::vector<VarietyModel>& models,
                                              const std::vector<std::int64_t>& cell, const CellOptions& opt = {}) {
  const int d = detail::check_models(models);
  int total = 0;
  for (const auto& m : models) total += m.dim();
  if (total != d) fail(ErrorKind::DimensionMismatch, "variety dimensions must add up to d");
  return detail::cell_monte_carlo(models, std::vector<int>(models.size(), 1), cell, opt,
                                  [](const std::vector<std::vector<Subspace>>& t) {
                                    std::vector<Subspace> flat;
                                    for (const auto& g : t) flat.push_back(g.front());
                                    return subspace_wedge_norm(flat);
                                  });
}

// BL constants of pointwise data, memoized on tangent spaces quantized on the
// Grassmannian. The value stored for a key is computed from a representative
// derived from the key alone, so concurrent writers always agree.
class BLWeightCache {
 public:
  explicit BLWeightCache(int tau, double quantum = 1e-3, BLOptions opt = {}) : tau_(tau), quantum_(quantum), opt_(opt) {}

  // BL(B(y), p(y))^{-tau}; zero when the constant is infinite.
  double weight(const std::vector<std::vector<Subspace>>& tangents) {
    if (quantum_ <= 0.0) return compute(tangents);
    std::vector<std::int64_t> key;
    std::vector<std::vector<Subspace>> rep;
    for (const auto& group : tangents) {
      rep.emplace_back();
      for (const auto& t : group) {
        const Mat p = t.projector();
        Mat q(p.rows(), p.cols());
        for (Eigen::Index c = 0; c < p.cols(); ++c)
          for (Eigen::Index r = 0; r < p.rows(); ++r) {
            const auto v = static_cast<std::int64_t>(std::llround(p(r, c) / quantum_));
            key.push_back(v);
            q(r, c) = static_cast<double>(v) * quantum_;
          }
        key.push_back(-(1LL << 40));
        Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(q));
        rep.back().emplace_back(Mat(es.eigenvectors().rightCols(t.dim())));
      }
    }
    {
      std::lock_guard<std::mutex> lock(mu_);
      if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    }
    const double w = compute(rep);
    std::lock_guard<std::mutex> lock(mu_);
    memo_.emplace(std::move(key), w);
    return w;
  }

  std::size_t size() const {
    std::lock_guard<std::mutex> lock(mu_);
    return memo_.size();
  }

 private:
  double compute(const std::vector<std::vector<Subspace>>& tangents) const {
    for (const auto& g : tangents)
      for (const auto& t : g)
        if (t.dim() == 0) return 0.0;
    const auto od = pointwise_datum(tangents, tau_);
    const auto bl = bl_constant(od.datum(), opt_);
    return bl.finite() ? std::pow(bl.value, -tau_) : 0.0;
  }

  int tau_;
  double quantum_;
  BLOptions opt_;
  mutable std::mutex mu_;
  std::map<std::vector<std::int64_t>, double> memo_;
};

// G_BL(Q) = int over H_1^{tau_1} x ... x H_n^{tau_n} near O of BL(B(y), p(y))^{-tau}.
inline CellFunctional cell_functional_bl(const std::vector<VarietyModel>& models, const std::vector<int>& tau_j,
                                         int tau, const std::vector<std::int64_t>& cell, BLWeightCache& cache,
                                         const CellOptions& opt = {}) {
  const int d = detail::check_models(models);
  if (tau_j.size() != models.size()) fail(ErrorKind::DimensionMismatch, "one tau_j per variety");
  int codims = 0;
  for (std::size_t j = 0; j < models.size(); ++j) {
    if (tau_j[j] < 1) fail(ErrorKind::InvalidInput, "tau_j must be positive");
    codims += tau_j[j] * (d - models[j].dim());
  }
  if (tau < 1 || codims != tau * d) fail(ErrorKind::ScalingMismatch, "sum of tau_j (d - k_j) must equal tau * d");
  return detail::cell_monte_carlo(models, tau_j, cell, opt,
                                  [&](const std::vector<std::vector<Subspace>>& t) { return cache.weight(t); });
}

// Half-open range of unit-cube indices.
struct Lattice {
  std::vector<std::int64_t> lo, hi;

  std::size_t size() const {
    std::size_t s = 1;
    for (std::size_t i = 0; i < lo.size(); ++i) s *= static_cast<std::size_t>(std::max<std::int64_t>(0, hi[i] - lo[i]));
    return s;
  }
  std::vector<std::int64_t> cell(std::size_t i) const {
    std::vector<std::int64_t> c(lo.size());
    for (std::size_t a = lo.size(); a-- > 0;) {
      const auto w = static_cast<std::size_t>(hi[a] - lo[a]);
      c[a] = lo[a] + static_cast<std::int64_t>(i % w);
      i /= w;
    }
    return c;
  }
};

// Cells whose centers can lie within N of every variety; throws when unbounded.
inline Lattice covering_lattice(const std::vector<VarietyModel>& models, double n) {
  const int d = detail::check_models(models);
  Vec lo = Vec::Constant(d, -kInfiniteSize), hi = Vec::Constant(d, kInfiniteSize);
  for (const auto& m : models) {
    const auto b = m.neighborhood_box(n);
    lo = lo.cwiseMax(b.first);
    hi = hi.cwiseMin(b.second);
  }
  if (!lo.allFinite() || !hi.allFinite())
    fail(ErrorKind::Unsupported, "neighborhoods do not bound a finite lattice; pass one explicitly");
  Lattice l;
  for (int i = 0; i < d; ++i) {
    l.lo.push_back(static_cast<std::int64_t>(std::floor(lo[i] - 0.5)));
    l.hi.push_back(std::max(l.lo.back(), static_cast<std::int64_t>(std::ceil(hi[i] - 0.5)) + 1));
  }
  return l;
}

enum class VarietyMode { Plain, BLWeighted };

struct VarietyCheckOptions {
  VarietyMode mode = VarietyMode::Plain;
  std::vector<int> tau_j;  // BL-weighted mode
  int tau = 1;
  double quantum = 1e-3;
  CellOptions cell;
};

struct VarietyReport {
  double lhs = 0.0;      // sum over cells of G^{q}
  double std_err = 0.0;  // delta-method propagation of the per-cell errors
  double rhs = 0.0;      // prod_j A(j)^{p_j}
  double ratio = 0.0;
  double ratio_err = 0.0;
  std::size_t cells = 0;
  std::size_t nonzero_cells = 0;
  std::vector<CellFunctional> functionals;  // nonzero cells only
};

// Plain: sum_nu G^{1/(n-1)} against prod A(j)^{1/(n-1)}. BL-weighted: sum_nu
// G_BL^{1/tau} against prod A(j)^{tau_j/tau}.
inline VarietyReport variety_inequality_check(const std::vector<VarietyModel>& models, const Lattice& lattice,
                                              const VarietyCheckOptions& opt = {}) {
  const int d = detail::check_models(models);
  if (static_cast<int>(lattice.lo.size()) != d || lattice.hi.size() != lattice.lo.size())
    fail(ErrorKind::DimensionMismatch, "lattice has the wrong dimension");
  const bool bl = opt.mode == VarietyMode::BLWeighted;
  const double q = bl ? 1.0 / opt.tau : 1.0 / static_cast<double>(models.size() - 1);
  std::optional<BLWeightCache> cache;
  if (bl) cache.emplace(opt.tau, opt.quantum);
  const auto gs = parallel_map(lattice.size(), [&](std::size_t i) {
    const auto c = lattice.cell(i);
    return bl ? cell_functional_bl(models, opt.tau_j, opt.tau, c, *cache, opt.cell)
              : cell_functional_variety(models, c, opt.cell);
  });
  VarietyReport rep;
  rep.cells = gs.size();
  std::vector<double> terms, vars;
  for (const auto& g : gs) {
    if (g.value <= 0.0) continue;
    ++rep.nonzero_cells;
    terms.push_back(std::pow(g.value, q));
    const double deriv = q * std::pow(g.value, q - 1.0);
    vars.push_back(deriv * deriv * g.std_err * g.std_err);
    rep.functionals.push_back(g);
  }
  rep.lhs = pairwise_sum(terms);
  rep.std_err = std::sqrt(pairwise_sum(vars));
  rep.rhs = 1.0;
  for (std::size_t j = 0; j < models.size(); ++j) {
    const double p = bl ? static_cast<double>(opt.tau_j[j]) / opt.tau : q;
    rep.rhs *= std::pow(static_cast<double>(models[j].degree()), p);
  }
  rep.ratio = rep.lhs / rep.rhs;
  rep.ratio_err = rep.std_err / rep.rhs;
  return rep;
}

// Horizontal and vertical lines at multiples of `spacing`, m of each.
inline std::vector<VarietyModel> axis_line_unions(int m, double spacing = 3.0) {
  if (m < 1) fail(ErrorKind::EmptyFamily, "need at least one line per family");
  std::vector<VarietyModel> out;
  for (int axis = 0; axis < 2; ++axis) {
    std::vector<AffineSubspace> lines;
    for (int a = 0; a < m; ++a) {
      Vec b = Vec::Zero(2);
      b[1 - axis] = spacing * a;
      lines.push_back({b, Subspace::coordinate(2, {axis})});
    }
    out.push_back(VarietyModel::planes(std::move(lines)));
  }
  return out;
}

}  // namespace bltk
