#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "bltk/ellipsoid.hpp"
#include "bltk/parallel.hpp"
#include "bltk/polynomial.hpp"
#include "bltk/rng.hpp"

namespace bltk {

struct WeightedVector {
  double weight = 0.0;
  Vec f;
};

// Finite measure space with a vector field: atoms (mu_i, f_i).
using VectorFieldSample = std::vector<WeightedVector>;

// sum_i mu_i |<v, f_i>|.
inline double absolute_form(const std::vector<WeightedVector>& atoms, const Vec& v) {
  double s = 0.0;
  for (const auto& a : atoms) s += a.weight * std::abs(a.f.dot(v));
  return s;
}

namespace detail {

// Polynomial restricted to the chord of U along point + t dir, reparametrized to
// s in (-1, 1). Lines lying inside Z(P) are shifted sideways by 1e-9 of the region
// size until the restriction is nonzero; a line that cannot be freed is skipped.
struct ChordRestriction {
  Vec base, step;
  UniPoly q;
};

inline std::optional<ChordRestriction> chord_restriction(const MultiPoly& p, const Region& u, Vec point, const Vec& dir) {
  const double extent = (u.hi() - u.lo()).maxCoeff();
  Mat side;
  for (int attempt = 0; attempt < 4; ++attempt) {
    const auto chord = u.chord(point, dir);
    if (!chord) return std::nullopt;
    const double m = 0.5 * (chord->first + chord->second), h = 0.5 * (chord->second - chord->first);
    ChordRestriction r{point + m * dir, h * dir, {}};
    r.q = p.restrict_to_line(r.base, r.step);
    if (r.q.max_abs() > 1e-13 * p.magnitude_bound(r.base, r.step)) return r;
    if (side.size() == 0) side = complement_basis(dir.normalized());
    if (side.cols() == 0) return std::nullopt;
    point += 1e-9 * extent * side.col(attempt % side.cols()) * (attempt + 1);
  }
  return std::nullopt;
}

inline int fiber_count(const MultiPoly& p, const Region& u, const Vec& point, const Vec& dir) {
  const auto r = chord_restriction(p, u, point, dir);
  if (!r) return 0;
  return count_real_roots(r->q, -1.0, 1.0);
}

// Midpoint lattice with n cells per axis on a box of the given lower corner and
// widths; offsets in [0, 1) shift every point (0.5 is the plain midpoint rule).
inline std::vector<Vec> cell_points(const Vec& lo, const Vec& width, int n, const Vec& offset) {
  const auto k = lo.size();
  std::size_t total = 1;
  for (Eigen::Index i = 0; i < k; ++i) total *= static_cast<std::size_t>(n);
  std::vector<Vec> pts;
  pts.reserve(total);
  std::vector<int> idx(static_cast<std::size_t>(k), 0);
  for (std::size_t c = 0; c < total; ++c) {
    Vec y(k);
    for (Eigen::Index i = 0; i < k; ++i) y[i] = lo[i] + (idx[static_cast<std::size_t>(i)] + offset[i]) * width[i] / n;
    pts.push_back(y);
    for (Eigen::Index i = 0; i < k; ++i) {
      if (++idx[static_cast<std::size_t>(i)] < n) break;
      idx[static_cast<std::size_t>(i)] = 0;
    }
  }
  return pts;
}

}  // namespace detail

struct DirectedVolumeOptions {
  int grid = 64;
  // Per-axis shift of the fiber lattice in cell units; defaults to the midpoint rule.
  std::optional<Vec> offset;
};

struct DirectedVolumeEstimate {
  double value = 0.0;
  // Largest difference to the estimates on the halved grid and on the
  // half-cell shifted grid.
  double error = 0.0;
};

// Integral over v-perp of the number of points of Z(P) on each line parallel to v
// inside U, times |v|. Root counts are exact per fiber; the outer integral is a
// lattice rule over the shadow of U.
inline DirectedVolumeEstimate directed_volume_estimate(const MultiPoly& p, const Region& u, const Vec& v,
                                                       const DirectedVolumeOptions& opt = {}) {
  const int d = p.dim();
  if (u.dim() != d || v.size() != d) fail(ErrorKind::DimensionMismatch, "polynomial, region and direction differ in dimension");
  const double len = v.norm();
  if (len == 0.0) return {0.0, 0.0};
  // Fibers are unoriented lines, so v and -v share one lattice.
  Vec dir = v / len;
  for (int i = 0; i < d; ++i)
    if (dir[i] != 0.0) {
      if (dir[i] < 0) dir = -dir;
      break;
    }
  const Mat basis = complement_basis(dir);
  Vec lo = Vec::Constant(d - 1, std::numeric_limits<double>::infinity());
  Vec hi = -lo;
  if (u.kind() == Region::Kind::Ball) {
    const Vec c = basis.transpose() * u.center();
    lo = c.array() - u.radius();
    hi = c.array() + u.radius();
  } else {
    for (int corner = 0; corner < (1 << d); ++corner) {
      Vec x(d);
      for (int i = 0; i < d; ++i) x[i] = (corner >> i & 1) ? u.hi()[i] : u.lo()[i];
      const Vec y = basis.transpose() * x;
      lo = lo.cwiseMin(y);
      hi = hi.cwiseMax(y);
    }
  }
  const Vec width = hi - lo;
  const Vec offset = opt.offset.value_or(Vec::Constant(d - 1, 0.5));
  auto integrate = [&](int n, const Vec& shift) {
    const auto pts = detail::cell_points(lo, width, n, shift);
    const auto counts = parallel_map(pts.size(), [&](std::size_t i) {
      return static_cast<double>(detail::fiber_count(p, u, basis * pts[i], dir));
    });
    double cell = 1.0;
    for (int i = 0; i < d - 1; ++i) cell *= width[i] / n;
    return pairwise_sum(counts) * cell;
  };
  const double fine = integrate(opt.grid, offset);
  if (d == 1) return {len * fine, 0.0};
  // Fiber counts jump across the shadow of the boundary, so the halving
  // difference alone can vanish by coincidence; a half-cell shifted lattice
  // gives a second, independent comparison.
  const double coarse = integrate(std::max(1, opt.grid / 2), offset);
  Vec shifted = offset.array() + 0.5;
  for (int i = 0; i < d - 1; ++i) shifted[i] -= std::floor(shifted[i]);
  const double moved = integrate(opt.grid, shifted);
  return {len * fine, len * std::max(std::abs(fine - coarse), std::abs(fine - moved))};
}

inline double directed_volume(const MultiPoly& p, const Region& u, const Vec& v, const DirectedVolumeOptions& opt = {}) {
  return directed_volume_estimate(p, u, v, opt).value;
}

// Uniform sample from the geodesic ball of radius eps around P in RP^K.
inline MultiPoly perturb_projective(const MultiPoly& p, double eps, Rng& rng) {
  const int k = p.projective_dim();
  if (k == 0 || eps == 0.0) return p;
  const Vec& c = p.coeffs();
  Vec t = rng.gaussian(k + 1);
  t -= t.dot(c) * c;
  t.normalize();
  double theta;
  for (;;) {
    theta = eps * std::pow(rng.uniform(), 1.0 / k);
    const double accept = theta > 0 ? std::pow(std::sin(theta) / theta, k - 1) : 1.0;
    if (rng.uniform() < accept) break;
  }
  return MultiPoly(p.dim(), p.degree(), std::cos(theta) * c + std::sin(theta) * t);
}

// Average of directed_volume over the eps-ball around P. Every sample also draws a
// fresh lattice shift, which makes each term an unbiased estimate of the
// mollified integral, so the standard error covers the quadrature as well.
inline MeanStderr mollified_directed_volume(const MultiPoly& p, const Region& u, const Vec& v, double eps, int samples,
                                            std::uint64_t seed, int grid = 32) {
  if (!(eps >= 0.0)) fail(ErrorKind::InvalidInput, "mollification radius must be nonnegative");
  if (samples < 1) fail(ErrorKind::InvalidInput, "need at least one sample");
  if (v.norm() == 0.0) return {0.0, 0.0};
  const int d = p.dim();
  const auto vals = parallel_map(static_cast<std::size_t>(samples), [&](std::size_t i) {
    Rng rng(seed, i);
    const MultiPoly q = perturb_projective(p, eps, rng);
    Vec off(d - 1);
    for (int k = 0; k < d - 1; ++k) off[k] = rng.uniform();
    DirectedVolumeOptions opt;
    opt.grid = grid;
    opt.offset = off;
    return directed_volume(q, u, v, opt);
  });
  return mean_stderr(vals);
}

struct NormalMeasureOptions {
  // Lattice spacing; 0 picks the largest side of the bounding box over `cells`.
  double spacing = 0.0;
  int cells = 64;
  // Lattice shift in cell units, one entry per coordinate.
  std::optional<Vec> offset;
  bool compress = true;
};

struct NormalMeasure {
  std::vector<WeightedVector> atoms;
  // Crossings dropped because the gradient vanished there.
  long dropped = 0;
};

// Merges atoms whose unit normals agree after sign canonicalization and rounding
// to a 1e-3 grid.
inline std::vector<WeightedVector> compress_normals(const std::vector<WeightedVector>& atoms, double quantum = 1e-3) {
  std::map<std::vector<long>, double> bins;
  for (const auto& a : atoms) {
    if (a.weight == 0.0) continue;
    Vec n = a.f.normalized();
    for (int i = 0; i < n.size(); ++i)
      if (n[i] != 0.0) {
        if (n[i] < 0) n = -n;
        break;
      }
    std::vector<long> key(static_cast<std::size_t>(n.size()));
    for (int i = 0; i < n.size(); ++i) key[static_cast<std::size_t>(i)] = std::lround(n[i] / quantum);
    bins[key] += a.weight * a.f.norm();
  }
  std::vector<WeightedVector> out;
  out.reserve(bins.size());
  for (const auto& [key, w] : bins) {
    Vec n(static_cast<Eigen::Index>(key.size()));
    for (std::size_t i = 0; i < key.size(); ++i) n[static_cast<Eigen::Index>(i)] = static_cast<double>(key[i]) * quantum;
    const double len = n.norm();
    if (len == 0.0) continue;
    out.push_back({w, n / len});
  }
  return out;
}

// Surface measure of Z(P) inside U pushed forward to unit normals. Lines along each
// coordinate axis a sit on a lattice anchored at the origin; a crossing with unit
// normal n carries weight cell * |n_a|, so summing over the axes recovers area
// because sum_a n_a^2 = 1. The directed volume is then sum w |<v, n>|.
inline NormalMeasure normal_measure(const MultiPoly& p, const Region& u, const NormalMeasureOptions& opt = {}) {
  const int d = p.dim();
  if (u.dim() != d) fail(ErrorKind::DimensionMismatch, "polynomial and region differ in dimension");
  const double h = opt.spacing > 0 ? opt.spacing : (u.hi() - u.lo()).maxCoeff() / opt.cells;
  const Vec off = opt.offset.value_or(Vec::Constant(d, 0.5));
  const double cell = std::pow(h, d - 1);
  struct LineResult {
    std::vector<WeightedVector> atoms;
    long dropped = 0;
  };
  NormalMeasure out;
  for (int a = 0; a < d; ++a) {
    std::vector<int> others;
    for (int i = 0; i < d; ++i)
      if (i != a) others.push_back(i);
    std::vector<long> first(others.size()), count(others.size());
    std::size_t total = 1;
    for (std::size_t j = 0; j < others.size(); ++j) {
      const int i = others[j];
      first[j] = static_cast<long>(std::ceil(u.lo()[i] / h - off[i]));
      const long last = static_cast<long>(std::floor(u.hi()[i] / h - off[i]));
      count[j] = std::max(0L, last - first[j] + 1);
      total *= static_cast<std::size_t>(count[j]);
    }
    Vec dir = Vec::Zero(d);
    dir[a] = 1.0;
    const auto lines = parallel_map(total, [&](std::size_t idx) {
      LineResult r;
      Vec point = Vec::Zero(d);
      std::size_t rest = idx;
      for (std::size_t j = 0; j < others.size(); ++j) {
        const long kk = first[j] + static_cast<long>(rest % static_cast<std::size_t>(count[j]));
        rest /= static_cast<std::size_t>(count[j]);
        point[others[j]] = (static_cast<double>(kk) + off[others[j]]) * h;
      }
      const auto cr = detail::chord_restriction(p, u, point, dir);
      if (!cr) return r;
      for (double s : real_roots(cr->q, -1.0, 1.0)) {
        const Vec x = cr->base + s * cr->step;
        const Vec g = p.gradient(x);
        const double gn = g.norm();
        if (!(gn > 1e-10 * std::pow(std::max(1.0, x.norm()), std::max(0, p.degree() - 1)))) {
          ++r.dropped;
          continue;
        }
        const Vec n = g / gn;
        r.atoms.push_back({cell * std::abs(n[a]), n});
      }
      return r;
    });
    for (const auto& l : lines) {
      out.dropped += l.dropped;
      out.atoms.insert(out.atoms.end(), l.atoms.begin(), l.atoms.end());
    }
  }
  if (opt.compress) out.atoms = compress_normals(out.atoms);
  return out;
}

struct FadingZoneEstimate {
  int dim = 0;
  // Directed volume as sum w |<v, f>| over these atoms.
  std::vector<WeightedVector> measure;
  JohnApproximation john;
  // 1 / |F| from radial quadrature.
  double vis = 0.0;
  // Sandwich interval [(1/|E|) / C^d, (1/|E|) C^d] from the John ellipsoid E and factor C.
  double vis_low = 0.0;
  double vis_high = 0.0;
  double std_err = 0.0;
  long dropped = 0;

  // max(|v|, V(v)); its unit ball is the fading zone.
  double gauge(const Vec& v) const { return std::max(v.norm(), absolute_form(measure, v)); }
};

struct ZoneOptions {
  // Direction grid for the John step; empty means standard_directions(d, random_directions, seed).
  std::vector<Vec> grid;
  int random_directions = 200;
  int volume_resolution = 512;
  std::uint64_t seed = 0x5eed;
};

namespace detail {

inline std::vector<Vec> zone_grid(int d, const ZoneOptions& opt) {
  if (!opt.grid.empty()) {
    for (const auto& g : opt.grid)
      if (g.size() != d || !(g.norm() > 0)) fail(ErrorKind::InvalidInput, "bad grid direction");
    return opt.grid;
  }
  return standard_directions(d, opt.random_directions, opt.seed);
}

inline SymmetricBodyOracle zone_body(int d, const std::vector<WeightedVector>& atoms) {
  SymmetricBodyOracle body;
  body.dim = d;
  body.gauge = [&atoms](const Vec& v) { return std::max(v.norm(), absolute_form(atoms, v)); };
  body.subgradient = [&atoms, d](const Vec& v) {
    const double n = v.norm();
    const double a = absolute_form(atoms, v);
    if (n >= a) return Vec(v / n);
    Vec g = Vec::Zero(d);
    for (const auto& at : atoms) {
      const double s = at.f.dot(v);
      if (s != 0.0) g += at.weight * (s > 0 ? 1.0 : -1.0) * at.f;
    }
    return g;
  };
  return body;
}

}  // namespace detail

// Fading zone of the atoms: John approximation, radial volume and the sandwich interval.
inline FadingZoneEstimate zone_from_measure(int d, std::vector<WeightedVector> atoms, const ZoneOptions& opt = {}) {
  FadingZoneEstimate z;
  z.dim = d;
  for (const auto& a : atoms) {
    if (a.f.size() != d) fail(ErrorKind::DimensionMismatch, "atom has wrong dimension");
    if (!(a.weight >= 0.0) || !std::isfinite(a.weight) || !a.f.allFinite()) fail(ErrorKind::InvalidInput, "atoms need finite nonnegative weights");
  }
  std::erase_if(atoms, [](const WeightedVector& a) { return a.weight == 0.0 || a.f.norm() == 0.0; });
  z.measure = std::move(atoms);
  if (z.measure.empty()) {
    z.john = {Ellipsoid::ball(d), 1.0, 0};
    z.vis = z.vis_low = z.vis_high = 1.0 / unit_ball_volume(d);
    return z;
  }
  const auto grid = detail::zone_grid(d, opt);
  const auto body = detail::zone_body(d, z.measure);
  std::vector<double> g(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) g[i] = body.gauge(grid[i]);
  z.john = john_ellipsoid_from_samples(body, grid, g);
  const auto vol = body_volume(d, body.gauge, opt.volume_resolution, opt.seed);
  z.vis = 1.0 / vol.value;
  z.std_err = z.vis * vol.std_err / vol.value;
  const double ell = 1.0 / volume(z.john.inner);
  const double spread = std::pow(z.john.factor, d);
  z.vis_low = ell / spread;
  z.vis_high = ell * spread;
  return z;
}

struct FadingZoneOptions : ZoneOptions {
  double eps = 1e-3;
  // Mollification samples; 0 means the unmollified zero set on the midpoint lattice.
  int samples = 16;
  int batches = 4;
  NormalMeasureOptions lattice;
};

// Fading zone {|v| <= 1, V(v) <= 1} of Z(P) inside U with the mollified directed
// volume V. The reported standard error is the spread of the visibility across
// independent batches of mollification samples.
inline FadingZoneEstimate fading_zone(const MultiPoly& p, const Region& u, const FadingZoneOptions& opt = {}) {
  const int d = p.dim();
  if (u.dim() != d) fail(ErrorKind::DimensionMismatch, "polynomial and region differ in dimension");
  if (opt.samples == 0 || opt.eps == 0.0) {
    auto nm = normal_measure(p, u, opt.lattice);
    auto z = zone_from_measure(d, std::move(nm.atoms), opt);
    z.dropped = nm.dropped;
    return z;
  }
  if (opt.samples < 0 || opt.batches < 1 || opt.samples % opt.batches != 0)
    fail(ErrorKind::InvalidInput, "samples must be a positive multiple of batches");
  const auto measures = parallel_map(static_cast<std::size_t>(opt.samples), [&](std::size_t i) {
    Rng rng(opt.seed, 1000 + i);
    const MultiPoly q = perturb_projective(p, opt.eps, rng);
    NormalMeasureOptions lat = opt.lattice;
    Vec off(d);
    for (int k = 0; k < d; ++k) off[k] = rng.uniform();
    lat.offset = off;
    return normal_measure(q, u, lat);
  });
  const int per = opt.samples / opt.batches;
  std::vector<WeightedVector> all;
  std::vector<std::vector<WeightedVector>> batch(static_cast<std::size_t>(opt.batches));
  long dropped = 0;
  for (std::size_t i = 0; i < measures.size(); ++i) {
    dropped += measures[i].dropped;
    for (const auto& a : measures[i].atoms) {
      all.push_back({a.weight / opt.samples, a.f});
      batch[i / static_cast<std::size_t>(per)].push_back({a.weight / per, a.f});
    }
  }
  auto z = zone_from_measure(d, compress_normals(all), opt);
  z.dropped = dropped;
  if (opt.batches > 1) {
    const auto vis = parallel_map(batch.size(), [&](std::size_t b) {
      const auto atoms = compress_normals(batch[b]);
      if (atoms.empty()) return 1.0 / unit_ball_volume(d);
      const auto body = detail::zone_body(d, atoms);
      return 1.0 / body_volume(d, body.gauge, opt.volume_resolution, opt.seed).value;
    });
    z.std_err = std::hypot(z.std_err, mean_stderr(vis).std_err);
  }
  return z;
}

inline void check_field(const VectorFieldSample& x) {
  if (x.empty()) fail(ErrorKind::EmptyFamily, "vector field sample is empty");
  const auto d = x.front().f.size();
  if (d < 1) fail(ErrorKind::DimensionMismatch, "vectors must have positive dimension");
  for (const auto& a : x) {
    if (a.f.size() != d) fail(ErrorKind::DimensionMismatch, "vectors differ in dimension");
    if (!(a.weight >= 0.0) || !std::isfinite(a.weight) || !a.f.allFinite())
      fail(ErrorKind::InvalidInput, "weights must be finite and nonnegative");
  }
}

// Fading zone of a weighted vector field, with V(v) = sum mu_i |<v, f_i>|.
inline FadingZoneEstimate field_zone(const VectorFieldSample& x, const ZoneOptions& opt = {}) {
  check_field(x);
  return zone_from_measure(static_cast<int>(x.front().f.size()), x, opt);
}

// 1 / |F(X, f)|. In one dimension F is the interval of half-length min(1, 1/S)
// with S = sum mu |f|.
inline double general_visibility(const VectorFieldSample& x, const ZoneOptions& opt = {}) {
  check_field(x);
  const auto d = x.front().f.size();
  if (d == 1) {
    double s = 0.0;
    for (const auto& a : x) s += a.weight * std::abs(a.f[0]);
    return std::max(0.5 * s, 0.5);
  }
  return field_zone(x, opt).vis;
}

struct WedgeEstimate {
  double lhs = 0.0;
  double vis = 0.0;
  double ratio = 0.0;
};

// Sum over ordered d-tuples of prod mu |f_1 ^ ... ^ f_d|: d! times the sum over
// d-subsets, since repeated or reordered tuples add nothing new.
inline double wedge_tuple_sum(const VectorFieldSample& x) {
  check_field(x);
  const int d = static_cast<int>(x.front().f.size());
  const int n = static_cast<int>(x.size());
  if (n < d) return 0.0;
  std::vector<std::vector<int>> subsets;
  std::vector<int> pick(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) pick[static_cast<std::size_t>(i)] = i;
  for (;;) {
    subsets.push_back(pick);
    int i = d - 1;
    while (i >= 0 && pick[static_cast<std::size_t>(i)] == n - d + i) --i;
    if (i < 0) break;
    ++pick[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < d; ++j) pick[static_cast<std::size_t>(j)] = pick[static_cast<std::size_t>(j - 1)] + 1;
  }
  const auto terms = parallel_map(subsets.size(), [&](std::size_t s) {
    Mat m(d, d);
    double w = 1.0;
    for (int j = 0; j < d; ++j) {
      const auto& a = x[static_cast<std::size_t>(subsets[s][static_cast<std::size_t>(j)])];
      m.col(j) = a.f;
      w *= a.weight;
    }
    return w == 0.0 ? 0.0 : w * abs_det(m);
  });
  return std::tgamma(d + 1.0) * pairwise_sum(terms);
}

// Checks the hypothesis V(v) >= 1 on the unit grid directions, then compares the
// tuple sum with the visibility.
inline WedgeEstimate wedge_estimate_check(const VectorFieldSample& x, const ZoneOptions& opt = {}) {
  check_field(x);
  const int d = static_cast<int>(x.front().f.size());
  for (const auto& g : detail::zone_grid(d, opt))
    if (absolute_form(x, g.normalized()) < 1.0 - 1e-12) fail(ErrorKind::HypothesisViolated, "directed volume below 1 on a grid direction");
  WedgeEstimate w;
  w.lhs = wedge_tuple_sum(x);
  w.vis = general_visibility(x, opt);
  w.ratio = w.lhs / w.vis;
  return w;
}

// Seeded random field satisfying V >= 1 on the grid: Gaussian vectors with random
// weights, then either rescaled or completed with the coordinate frame.
inline VectorFieldSample random_hypothesis_field(int d, std::uint64_t seed, const ZoneOptions& opt = {}) {
  Rng rng(seed, 77);
  const int n = d + rng.index(6);
  VectorFieldSample x;
  for (int i = 0; i < n; ++i) x.push_back({rng.uniform(0.05, 1.0), rng.gaussian(d) * rng.uniform(0.2, 2.0)});
  double lowest = std::numeric_limits<double>::infinity();
  for (const auto& g : detail::zone_grid(d, opt)) lowest = std::min(lowest, absolute_form(x, g.normalized()));
  if (lowest >= 1.0) return x;
  if (lowest > 0.0 && rng.uniform() < 0.5) {
    for (auto& a : x) a.weight /= lowest;
    return x;
  }
  for (int i = 0; i < d; ++i) {
    Vec e = Vec::Zero(d);
    e[i] = 1.0;
    x.push_back({1.0 - lowest, e});
  }
  return x;
}

// P times the d coordinate forms x_i - c_i through the center of U.
inline MultiPoly augment_with_hyperplanes(const MultiPoly& p, const Region& u, int degree_cap = 16) {
  if (u.dim() != p.dim()) fail(ErrorKind::DimensionMismatch, "polynomial and region differ in dimension");
  if (p.degree() + p.dim() > degree_cap) fail(ErrorKind::DegreeOverflow, "augmented degree exceeds the cap");
  const Vec c = u.center();
  MultiPoly q = p;
  for (int i = 0; i < p.dim(); ++i) q = q * MultiPoly::linear(p.dim(), i, c[i]);
  return q;
}

}  // namespace bltk
