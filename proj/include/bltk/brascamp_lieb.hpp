#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "bltk/calibration.hpp"
#include "bltk/exterior.hpp"
#include "bltk/rational.hpp"
#include "bltk/rng.hpp"
#include "bltk/visibility.hpp"

namespace bltk {

inline constexpr std::int64_t kMaxExponentDenominator = 64;

// Surjections B_j : R^d -> R^{d_j} with rational exponents p_j > 0.
struct BLDatum {
  int d = 0;
  std::vector<Mat> maps;
  std::vector<Rational> exponents;

  std::size_t size() const { return maps.size(); }
};

inline BLDatum make_datum(std::vector<Mat> maps, std::vector<Rational> exponents) {
  if (maps.empty()) fail(ErrorKind::EmptyFamily, "datum needs at least one map");
  if (maps.size() != exponents.size()) fail(ErrorKind::DimensionMismatch, "one exponent per map");
  BLDatum b;
  b.d = static_cast<int>(maps.front().cols());
  for (const auto& m : maps) {
    if (m.cols() != b.d) fail(ErrorKind::DimensionMismatch, "maps have different source dimensions");
    if (m.rows() < 1 || m.rows() > b.d) fail(ErrorKind::RankDeficient, "map target dimension out of range");
    Eigen::JacobiSVD<Mat> svd(m);
    if (!(svd.singularValues()(m.rows() - 1) > 1e-10)) fail(ErrorKind::RankDeficient, "map is not surjective");
  }
  for (const auto& p : exponents) {
    if (!(Rational(0) < p)) fail(ErrorKind::InvalidInput, "exponents must be positive");
    if (p.den > kMaxExponentDenominator) fail(ErrorKind::InvalidInput, "exponent denominator exceeds 64");
  }
  b.maps = std::move(maps);
  b.exponents = std::move(exponents);
  return b;
}

// Orthogonal projections described by their kernels.
struct OrthoProjectionDatum {
  std::vector<Subspace> kernels;
  std::vector<Rational> exponents;

  int dim() const { return kernels.empty() ? 0 : kernels.front().ambient_dim(); }

  // d x d projector onto the complement of kernel j.
  Mat projector(std::size_t j) const {
    const int d = dim();
    return Mat::Identity(d, d) - kernels[j].projector();
  }

  // Same constant: B_j written in an orthonormal basis of its image.
  BLDatum datum() const {
    std::vector<Mat> maps;
    for (const auto& k : kernels) {
      if (k.dim() >= k.ambient_dim()) fail(ErrorKind::RankDeficient, "kernel is the whole space");
      maps.push_back(k.complement_basis().transpose());
    }
    return make_datum(std::move(maps), exponents);
  }
};

inline OrthoProjectionDatum make_ortho_datum(std::vector<Subspace> kernels, std::vector<Rational> exponents) {
  if (kernels.empty()) fail(ErrorKind::EmptyFamily, "datum needs at least one kernel");
  for (const auto& k : kernels)
    if (k.ambient_dim() != kernels.front().ambient_dim()) fail(ErrorKind::DimensionMismatch, "kernels differ in ambient dimension");
  OrthoProjectionDatum o{std::move(kernels), std::move(exponents)};
  o.datum();  // validates
  return o;
}

inline bool scaling_condition(const BLDatum& b) {
  Rational s(0);
  for (std::size_t j = 0; j < b.size(); ++j) s = s + b.exponents[j] * Rational(b.maps[j].rows());
  return s == Rational(b.d);
}

namespace detail {

inline int numeric_rank(const Mat& m, double threshold = 1e-9) {
  if (m.cols() == 0 || m.rows() == 0) return 0;
  Eigen::JacobiSVD<Mat> svd(m);
  int r = 0;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > threshold) ++r;
  return r;
}

// Orthonormal basis of the column span, rank decided by the same threshold.
inline Subspace span_of(const Mat& cols, int d) {
  if (cols.cols() == 0) return Subspace::zero(d);
  Eigen::JacobiSVD<Mat> svd(cols, Eigen::ComputeThinU);
  const int r = numeric_rank(cols);
  if (r == 0) return Subspace::zero(d);
  return Subspace(svd.matrixU().leftCols(r));
}

inline Subspace subspace_sum(const Subspace& a, const Subspace& b) {
  return span_of(hcat(a.basis(), b.basis()), a.ambient_dim());
}

inline Subspace subspace_meet(const Subspace& a, const Subspace& b) {
  const int d = a.ambient_dim();
  const Subspace s = span_of(hcat(a.complement_basis(), b.complement_basis()), d);
  return span_of(s.complement_basis(), d);
}

inline bool same_subspace(const Subspace& a, const Subspace& b) {
  return a.dim() == b.dim() && (a.projector() - b.projector()).norm() < 1e-8;
}

}  // namespace detail

struct DimensionVerdict {
  bool pass = true;              // heuristic: only the listed candidates were checked
  int candidates_checked = 0;
  std::optional<Subspace> counterexample;
  Rational slack{0};             // sum p_j dim(B_j V) - dim V at the counterexample
};

// dim V <= sum p_j dim(B_j V) over the lattice generated by the kernels, all
// coordinate subspaces and `probes` random subspaces of each dimension.
inline DimensionVerdict dimension_condition(const BLDatum& b, int probes = 100, std::uint64_t seed = 0) {
  const int d = b.d;
  std::vector<Subspace> cand;
  auto add = [&](const Subspace& s) {
    if (s.dim() == 0) return false;
    for (const auto& c : cand)
      if (detail::same_subspace(c, s)) return false;
    cand.push_back(s);
    return true;
  };
  for (const auto& m : b.maps) {
    Eigen::FullPivLU<Mat> lu(m);
    add(detail::span_of(lu.kernel(), d));
  }
  // Closure under sums and intersections; the lattice of a finite datum is finite,
  // but a cap keeps pathological inputs bounded.
  const std::size_t cap = 4096;
  for (std::size_t i = 0; i < cand.size() && cand.size() < cap; ++i)
    for (std::size_t j = 0; j < i && cand.size() < cap; ++j) {
      add(detail::subspace_sum(cand[i], cand[j]));
      add(detail::subspace_meet(cand[i], cand[j]));
    }
  for (int mask = 1; mask < (1 << d); ++mask) {
    std::vector<int> axes;
    for (int i = 0; i < d; ++i)
      if (mask & (1 << i)) axes.push_back(i);
    add(Subspace::coordinate(d, axes));
  }
  Rng rng(seed, 0xd1);
  std::vector<Subspace> all = cand;
  for (int k = 1; k <= d; ++k)
    for (int t = 0; t < probes; ++t) {
      Mat g(d, k);
      for (int c = 0; c < k; ++c) g.col(c) = rng.gaussian(d);
      all.push_back(Subspace(g));
    }
  DimensionVerdict v;
  for (const auto& s : all) {
    ++v.candidates_checked;
    Rational rhs(0);
    for (std::size_t j = 0; j < b.size(); ++j)
      rhs = rhs + b.exponents[j] * Rational(detail::numeric_rank(b.maps[j] * s.basis()));
    if (rhs < Rational(s.dim())) {
      v.pass = false;
      v.counterexample = s;
      v.slack = rhs + Rational(-s.dim());
      return v;
    }
  }
  return v;
}

// (prod det(A_j)^{p_j} / det(sum p_j B_j^T A_j B_j))^{1/2}.
inline double lieb_ratio(const BLDatum& b, const std::vector<Mat>& a) {
  if (a.size() != b.size()) fail(ErrorKind::DimensionMismatch, "one Gaussian input per map");
  if (!scaling_condition(b)) fail(ErrorKind::ScalingMismatch, "scaling condition fails; the ratio is not dilation invariant");
  Mat m = Mat::Zero(b.d, b.d);
  double num = 0.0;
  for (std::size_t j = 0; j < b.size(); ++j) {
    if (a[j].rows() != b.maps[j].rows() || a[j].cols() != b.maps[j].rows())
      fail(ErrorKind::DimensionMismatch, "Gaussian input has the wrong size");
    Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(a[j]), Eigen::EigenvaluesOnly);
    if (!(es.eigenvalues().minCoeff() > 1e-12)) fail(ErrorKind::InvalidInput, "Gaussian input is not positive definite");
    const double p = b.exponents[j].value();
    num += p * es.eigenvalues().array().log().sum();
    m += p * b.maps[j].transpose() * a[j] * b.maps[j];
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(m), Eigen::EigenvaluesOnly);
  if (!(es.eigenvalues().minCoeff() >= 1e-12)) fail(ErrorKind::SingularDenominator, "sum p_j B_j^T A_j B_j is singular");
  return std::exp(0.5 * (num - es.eigenvalues().array().log().sum()));
}

enum class BLStatus { Finite, Diverged };

struct BLResult {
  BLStatus status = BLStatus::Diverged;
  double value = std::numeric_limits<double>::infinity();
  std::vector<double> trace;  // Lieb ratio after each round
  bool monotone = true;
  int iterations = 0;
  std::string reason;
  std::vector<Mat> inputs;    // maximizing Gaussian inputs when finite

  bool finite() const { return status == BLStatus::Finite; }
};

struct BLOptions {
  double tol = 1e-9;
  int max_iter = 10000;
  int stable_rounds = 10;
  double ratio_cap = 1e8;
  double condition_cap = 1e12;
};

// Maximizes the Lieb ratio from A_j = I. Each round replaces every A_j by
// (B_j M^{-1} B_j^T)^{-1}, the maximizer of the bound obtained by linearizing the
// concave log det M at the current point, so the ratio never decreases.
inline BLResult bl_constant(const BLDatum& b, const BLOptions& opt = {}) {
  if (!scaling_condition(b)) fail(ErrorKind::ScalingMismatch, "scaling condition fails");
  BLResult res;
  std::vector<Mat> a;
  for (const auto& m : b.maps) a.push_back(Mat::Identity(m.rows(), m.rows()));
  int stable = 0;
  for (int it = 0; it < opt.max_iter; ++it) {
    Mat m = Mat::Zero(b.d, b.d);
    for (std::size_t j = 0; j < b.size(); ++j) m += b.exponents[j].value() * b.maps[j].transpose() * a[j] * b.maps[j];
    // The ratio is invariant under a common dilation; keep trace(M) = d.
    const double s = b.d / m.trace();
    for (auto& x : a) x *= s;
    m = symmetrize(Mat(s * m));
    Eigen::SelfAdjointEigenSolver<Mat> es(m);
    const double lmin = es.eigenvalues().minCoeff(), lmax = es.eigenvalues().maxCoeff();
    if (!(lmin >= 1e-12 * lmax) || lmax / lmin > opt.condition_cap) {
      res.reason = "conditioning of sum p_j B_j^T A_j B_j exceeded the cap";
      res.iterations = it;
      return res;
    }
    double r;
    try {
      r = lieb_ratio(b, a);
    } catch (const Error& e) {
      res.reason = e.what();
      res.iterations = it;
      return res;
    }
    if (!res.trace.empty() && r < res.trace.back() - 1e-10 * std::max(1.0, std::abs(res.trace.back())))
      res.monotone = false;
    const double prev = res.trace.empty() ? -1.0 : res.trace.back();
    res.trace.push_back(r);
    res.iterations = it + 1;
    if (r > opt.ratio_cap) {
      res.reason = "Lieb ratio exceeded the cap";
      return res;
    }
    stable = std::abs(r - prev) < opt.tol ? stable + 1 : 0;
    if (stable >= opt.stable_rounds) {
      res.status = BLStatus::Finite;
      res.value = r;
      res.inputs = a;
      return res;
    }
    const Mat minv = es.eigenvectors() * es.eigenvalues().cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
    for (std::size_t j = 0; j < b.size(); ++j) a[j] = symmetrize(Mat((b.maps[j] * minv * b.maps[j].transpose()).inverse()));
  }
  res.reason = "no convergence within the iteration budget";
  return res;
}

// tau_j copies of B_j with common exponent 1/tau, where p_j = tau_j / tau.
inline BLDatum duplicate_datum(const BLDatum& b) {
  std::int64_t tau = 1;
  for (const auto& p : b.exponents) tau = std::lcm(tau, p.den);
  std::vector<Mat> maps;
  std::vector<Rational> exps;
  for (std::size_t j = 0; j < b.size(); ++j) {
    const std::int64_t copies = b.exponents[j].num * (tau / b.exponents[j].den);
    for (std::int64_t c = 0; c < copies; ++c) {
      maps.push_back(b.maps[j]);
      exps.emplace_back(1, tau);
    }
  }
  return make_datum(std::move(maps), std::move(exps));
}

// Datum with kernels at the given tangent spaces (tau_j of them for family j) and
// every exponent 1/tau.
inline OrthoProjectionDatum pointwise_datum(const std::vector<std::vector<Subspace>>& tangent_spaces, int tau) {
  if (tau < 1) fail(ErrorKind::InvalidInput, "tau must be positive");
  std::vector<Subspace> kernels;
  for (const auto& group : tangent_spaces) kernels.insert(kernels.end(), group.begin(), group.end());
  if (kernels.empty()) fail(ErrorKind::EmptyFamily, "no tangent spaces");
  const int d = kernels.front().ambient_dim();
  int codims = 0;
  for (const auto& k : kernels) codims += d - k.dim();
  if (codims != tau * d) fail(ErrorKind::ScalingMismatch, "sum of codimensions must equal tau * d");
  std::vector<Rational> exps(kernels.size(), Rational(1, tau));
  return make_ortho_datum(std::move(kernels), std::move(exps));
}

// r! times the sum over r-subsets S of prod mu |det(Q^T f_S)|, for an orthonormal d x r frame Q.
inline double projected_tuple_sum(const VectorFieldSample& x, const Mat& q) {
  check_field(x);
  const int r = static_cast<int>(q.cols());
  const int n = static_cast<int>(x.size());
  if (r == 0) return 1.0;
  if (n < r) return 0.0;
  std::vector<Vec> proj;
  for (const auto& a : x) proj.push_back(q.transpose() * a.f);
  std::vector<int> pick(static_cast<std::size_t>(r));
  std::iota(pick.begin(), pick.end(), 0);
  std::vector<double> terms;
  Mat m(r, r);
  for (;;) {
    double w = 1.0;
    for (int j = 0; j < r; ++j) {
      m.col(j) = proj[static_cast<std::size_t>(pick[static_cast<std::size_t>(j)])];
      w *= x[static_cast<std::size_t>(pick[static_cast<std::size_t>(j)])].weight;
    }
    terms.push_back(w == 0.0 ? 0.0 : w * abs_det(m));
    int i = r - 1;
    while (i >= 0 && pick[static_cast<std::size_t>(i)] == n - r + i) --i;
    if (i < 0) break;
    ++pick[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < r; ++j) pick[static_cast<std::size_t>(j)] = pick[static_cast<std::size_t>(j - 1)] + 1;
  }
  return std::tgamma(r + 1.0) * pairwise_sum(terms);
}

struct BLWedgeReport {
  std::vector<double> primal_factors;  // int over X^{d-k_j} of |B_j ^ f ^ ... ^ f|
  std::vector<double> dual_factors;    // int over X^{k_j} of |E_j ^ f ^ ... ^ f|
  double primal = 0.0;
  double dual = 0.0;
  double vis = 0.0;
  double bl = 0.0;
  int tau = 1;
  int n = 0;
  double primal_ratio = 0.0;  // primal / (BL^-tau Vis^tau)
  double dual_ratio = 0.0;    // dual / (BL^-tau Vis^(n - tau))
  double primal_floor = 0.0;
  double dual_floor = 0.0;
  bool holds = false;
};

inline BLWedgeReport bl_weighted_wedge_check(const VectorFieldSample& x, const OrthoProjectionDatum& od,
                                             const ZoneOptions& zopt = {}, const BLOptions& bopt = {}) {
  check_field(x);
  const int d = static_cast<int>(x.front().f.size());
  if (od.dim() != d) fail(ErrorKind::DimensionMismatch, "datum and field differ in dimension");
  if (od.kernels.size() != od.exponents.size() || od.kernels.empty())
    fail(ErrorKind::DimensionMismatch, "one exponent per kernel");
  const Rational p = od.exponents.front();
  for (const auto& e : od.exponents)
    if (!(e == p) || p.num != 1) fail(ErrorKind::ScalingMismatch, "all exponents must equal 1/tau");
  const int tau = static_cast<int>(p.den);
  int codims = 0;
  for (const auto& k : od.kernels) {
    if (k.dim() < 1 || k.dim() >= d) fail(ErrorKind::InvalidInput, "kernel dimensions must lie in [1, d-1]");
    codims += d - k.dim();
  }
  if (codims != tau * d) fail(ErrorKind::ScalingMismatch, "sum of (d - k_j) must equal tau * d");
  for (const auto& g : detail::zone_grid(d, zopt))
    if (absolute_form(x, g.normalized()) < 1.0 - 1e-12)
      fail(ErrorKind::HypothesisViolated, "directed volume below 1 on a grid direction");

  BLWedgeReport rep;
  rep.tau = tau;
  rep.n = static_cast<int>(od.kernels.size());
  rep.primal = 1.0;
  rep.dual = 1.0;
  for (const auto& k : od.kernels) {
    rep.primal_factors.push_back(projected_tuple_sum(x, k.complement_basis()));
    rep.dual_factors.push_back(projected_tuple_sum(x, k.basis()));
    rep.primal *= rep.primal_factors.back();
    rep.dual *= rep.dual_factors.back();
  }
  rep.vis = general_visibility(x, zopt);
  const auto bl = bl_constant(od.datum(), bopt);
  rep.bl = bl.value;
  rep.primal_floor = bl_primal_floor(d);
  rep.dual_floor = bl_dual_floor(d);
  if (!bl.finite()) {
    // Infinite constant: both lower bounds are zero.
    rep.primal_ratio = rep.dual_ratio = std::numeric_limits<double>::infinity();
    rep.holds = true;
    return rep;
  }
  const double scale = std::pow(rep.bl, -tau);
  rep.primal_ratio = rep.primal / (scale * std::pow(rep.vis, tau));
  rep.dual_ratio = rep.dual / (scale * std::pow(rep.vis, rep.n - tau));
  rep.holds = rep.primal_ratio >= rep.primal_floor && rep.dual_ratio >= rep.dual_floor;
  return rep;
}

struct BLInstance {
  VectorFieldSample field;
  OrthoProjectionDatum datum;
};

// Seeded field satisfying the hypothesis together with random kernels whose
// codimensions add up to tau * d, tau in {1, 2}.
inline BLInstance random_bl_instance(int d, std::uint64_t seed) {
  Rng rng(seed, 0xb1);
  const int tau = 1 + rng.index(2);
  std::vector<int> codims;
  int left = tau * d;
  while (left > 0) {
    const int c = 1 + rng.index(std::min(d - 1, left));
    codims.push_back(c);
    left -= c;
  }
  std::vector<Subspace> kernels;
  for (int c : codims) {
    const Mat q = rng.orthogonal(d);
    kernels.emplace_back(q.leftCols(d - c));
  }
  return {random_hypothesis_field(d, mix_seed(seed, 0xf1)),
          make_ortho_datum(std::move(kernels), std::vector<Rational>(codims.size(), Rational(1, tau)))};
}

}  // namespace bltk
