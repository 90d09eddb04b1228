#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <utility>
#include <vector>

#include "bltk/error.hpp"
#include "bltk/linalg.hpp"

namespace bltk {

// Dense univariate polynomial, coefficients in ascending powers.
struct UniPoly {
  std::vector<double> c;

  int degree() const {
    for (int i = static_cast<int>(c.size()) - 1; i >= 0; --i)
      if (c[static_cast<std::size_t>(i)] != 0.0) return i;
    return -1;
  }
  bool is_zero() const { return degree() < 0; }
  double operator()(double t) const {
    double s = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) s = s * t + *it;
    return s;
  }
  double max_abs() const {
    double m = 0.0;
    for (double x : c) m = std::max(m, std::abs(x));
    return m;
  }
  UniPoly derivative() const {
    UniPoly d;
    for (std::size_t i = 1; i < c.size(); ++i) d.c.push_back(static_cast<double>(i) * c[i]);
    return d;
  }
  void trim(double abs_tol = 0.0) {
    for (auto& x : c)
      if (std::abs(x) <= abs_tol) x = 0.0;
    c.resize(static_cast<std::size_t>(degree() + 1));
  }
};

inline UniPoly operator*(const UniPoly& a, const UniPoly& b) {
  if (a.c.empty() || b.c.empty()) return {};
  UniPoly r;
  r.c.assign(a.c.size() + b.c.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.c.size(); ++i)
    for (std::size_t j = 0; j < b.c.size(); ++j) r.c[i + j] += a.c[i] * b.c[j];
  return r;
}

namespace detail {

// Remainder of a / b. Coefficients that cancel to below tol relative to the
// operands are treated as exact zeros.
inline UniPoly poly_rem(UniPoly a, const UniPoly& b, double tol) {
  const int db = b.degree();
  const double lead = b.c[static_cast<std::size_t>(db)];
  double qmax = 0.0;
  const double amax = a.max_abs();
  for (int k = a.degree(); k >= db; k = std::min(k - 1, a.degree())) {
    const double q = a.c[static_cast<std::size_t>(k)] / lead;
    qmax = std::max(qmax, std::abs(q));
    for (int i = 0; i <= db; ++i) a.c[static_cast<std::size_t>(k - db + i)] -= q * b.c[static_cast<std::size_t>(i)];
    a.c[static_cast<std::size_t>(k)] = 0.0;
  }
  a.trim(tol * std::max(amax, qmax * b.max_abs()));
  return a;
}

inline UniPoly scaled_to_unit(UniPoly p) {
  const double m = p.max_abs();
  if (m > 0.0)
    for (auto& x : p.c) x /= m;
  return p;
}

}  // namespace detail

// Sturm chain p, p', -rem(p, p'), ... with each member rescaled by a positive factor.
inline std::vector<UniPoly> sturm_chain(const UniPoly& p, double tol = 1e-11) {
  std::vector<UniPoly> chain;
  UniPoly p0 = detail::scaled_to_unit(p);
  p0.trim(1e-13);
  if (p0.is_zero()) fail(ErrorKind::IdenticallyZero, "polynomial vanishes identically");
  chain.push_back(p0);
  UniPoly p1 = detail::scaled_to_unit(p0.derivative());
  p1.trim();
  if (p1.is_zero()) return chain;
  chain.push_back(p1);
  for (;;) {
    const auto& a = chain[chain.size() - 2];
    const auto& b = chain.back();
    UniPoly r = detail::poly_rem(a, b, tol);
    if (r.is_zero()) break;
    for (auto& x : r.c) x = -x;
    chain.push_back(detail::scaled_to_unit(r));
    if (chain.back().degree() == 0) break;
  }
  return chain;
}

inline int sign_variations(const std::vector<UniPoly>& chain, double x) {
  int count = 0;
  int last = 0;
  for (const auto& q : chain) {
    const double v = q(x);
    const int s = v > 0 ? 1 : (v < 0 ? -1 : 0);
    if (s == 0) continue;
    if (last != 0 && s != last) ++count;
    last = s;
  }
  return count;
}

namespace detail {

// Moves an endpoint that is (numerically) a root slightly into the interval.
inline double nudge_inward(const UniPoly& p0, double x, double toward) {
  const double scale = std::max(1.0, std::abs(x));
  double step = 1e-12 * std::max(std::abs(toward - x), scale * 1e-3);
  for (int i = 0; i < 8 && std::abs(p0(x)) <= 1e-14; ++i) {
    x += (toward > x ? step : -step);
    step *= 4.0;
  }
  return x;
}

inline int count_with_chain(const std::vector<UniPoly>& chain, double a, double b) {
  a = nudge_inward(chain.front(), a, b);
  b = nudge_inward(chain.front(), b, a);
  if (!(a < b)) return 0;
  return std::max(0, sign_variations(chain, a) - sign_variations(chain, b));
}

}  // namespace detail

// Number of distinct real roots in the open interval (a, b).
inline int count_real_roots(const UniPoly& p, double a, double b) {
  if (!(a < b)) fail(ErrorKind::InvalidInput, "empty interval");
  const auto chain = sturm_chain(p);
  if (chain.front().degree() == 0) return 0;
  return detail::count_with_chain(chain, a, b);
}

// Distinct real roots in (a, b), isolated by Sturm counts and refined by bisection.
inline std::vector<double> real_roots(const UniPoly& p, double a, double b) {
  const auto chain = sturm_chain(p);
  std::vector<double> roots;
  if (chain.front().degree() == 0) return roots;
  const UniPoly& p0 = chain.front();
  struct Piece {
    double lo, hi;
    int n;
  };
  std::vector<Piece> stack{{a, b, detail::count_with_chain(chain, a, b)}};
  const double min_width = 1e-14 * std::max({1.0, std::abs(a), std::abs(b)});
  while (!stack.empty()) {
    const Piece piece = stack.back();
    stack.pop_back();
    if (piece.n <= 0) continue;
    double lo = piece.lo, hi = piece.hi;
    if (piece.n == 1) {
      double flo = p0(lo), fhi = p0(hi);
      for (int it = 0; it < 200 && hi - lo > min_width; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = p0(mid);
        if (fm == 0.0) {
          lo = hi = mid;
          break;
        }
        if ((flo < 0) != (fhi < 0) && flo != 0.0 && fhi != 0.0) {
          if ((fm < 0) == (flo < 0)) {
            lo = mid;
            flo = fm;
          } else {
            hi = mid;
            fhi = fm;
          }
        } else if (detail::count_with_chain(chain, lo, mid) > 0) {
          hi = mid;
          fhi = fm;
        } else {
          lo = mid;
          flo = fm;
        }
      }
      roots.push_back(0.5 * (lo + hi));
      continue;
    }
    const double mid = 0.5 * (lo + hi);
    if (hi - lo <= min_width) {
      roots.push_back(mid);
      continue;
    }
    const int left = detail::count_with_chain(chain, lo, mid);
    const int right = detail::count_with_chain(chain, mid, hi);
    if (left + right < piece.n) roots.push_back(mid);
    stack.push_back({mid, hi, right});
    stack.push_back({lo, mid, left});
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

// Exponent tuples of all monomials of total degree <= D in d variables, graded
// and lexicographically descending within a degree.
struct MonomialTable {
  int dim = 0;
  int degree = 0;
  std::vector<std::vector<int>> alphas;
  std::map<std::vector<int>, std::size_t> index;
};

inline std::shared_ptr<const MonomialTable> monomial_table(int d, int D) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::shared_ptr<const MonomialTable>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[{d, D}];
  if (slot) return slot;
  auto t = std::make_shared<MonomialTable>();
  t->dim = d;
  t->degree = D;
  std::vector<int> alpha(static_cast<std::size_t>(d), 0);
  for (int total = 0; total <= D; ++total) {
    auto rec = [&](auto&& self, int i, int left) -> void {
      if (i == d - 1) {
        alpha[static_cast<std::size_t>(i)] = left;
        t->alphas.push_back(alpha);
        return;
      }
      for (int a = left; a >= 0; --a) {
        alpha[static_cast<std::size_t>(i)] = a;
        self(self, i + 1, left - a);
      }
    };
    if (d == 0) {
      if (total == 0) t->alphas.push_back({});
      continue;
    }
    rec(rec, 0, total);
  }
  for (std::size_t i = 0; i < t->alphas.size(); ++i) t->index[t->alphas[i]] = i;
  slot = t;
  return slot;
}

struct Term {
  std::vector<int> alpha;
  double coeff = 0.0;
};

// Real polynomial in d variables of declared degree D, stored densely over all
// monomials of degree <= D with a unit-norm coefficient vector (a point of RP^K).
class MultiPoly {
 public:
  MultiPoly(int dim, int degree, const Vec& coeffs) : table_(monomial_table(dim, degree)), c_(coeffs) {
    if (dim < 1 || degree < 0) fail(ErrorKind::InvalidInput, "bad polynomial shape");
    if (static_cast<std::size_t>(c_.size()) != table_->alphas.size())
      fail(ErrorKind::DimensionMismatch, "coefficient vector does not match the monomial count");
    if (!c_.allFinite()) fail(ErrorKind::InvalidInput, "non-finite coefficient");
    const double n = c_.norm();
    if (!(n > 0.0)) fail(ErrorKind::InvalidInput, "polynomial is identically zero");
    c_ /= n;
  }

  // Degree defaults to the largest total degree among the terms.
  static MultiPoly from_terms(int dim, const std::vector<Term>& terms, int degree = -1) {
    int top = 0;
    for (const auto& t : terms) {
      if (static_cast<int>(t.alpha.size()) != dim) fail(ErrorKind::DimensionMismatch, "exponent tuple has wrong length");
      int s = 0;
      for (int a : t.alpha) {
        if (a < 0) fail(ErrorKind::InvalidInput, "negative exponent");
        s += a;
      }
      top = std::max(top, s);
    }
    if (degree < 0) degree = top;
    if (top > degree) fail(ErrorKind::InvalidInput, "term exceeds the declared degree");
    const auto table = monomial_table(dim, degree);
    Vec c = Vec::Zero(static_cast<Eigen::Index>(table->alphas.size()));
    for (const auto& t : terms) c[static_cast<Eigen::Index>(table->index.at(t.alpha))] += t.coeff;
    return MultiPoly(dim, degree, c);
  }

  static MultiPoly constant(int dim) { return from_terms(dim, {{std::vector<int>(static_cast<std::size_t>(dim), 0), 1.0}}); }

  // x_i - shift.
  static MultiPoly linear(int dim, int i, double shift = 0.0) {
    std::vector<int> a(static_cast<std::size_t>(dim), 0);
    std::vector<Term> terms{{a, -shift}};
    a[static_cast<std::size_t>(i)] = 1;
    terms.push_back({a, 1.0});
    return from_terms(dim, terms);
  }

  int dim() const { return table_->dim; }
  int degree() const { return table_->degree; }
  const Vec& coeffs() const { return c_; }
  const std::vector<std::vector<int>>& alphas() const { return table_->alphas; }
  // Number of coefficients minus one: the dimension K of the projective space.
  int projective_dim() const { return static_cast<int>(c_.size()) - 1; }

  std::vector<Term> terms() const {
    std::vector<Term> out;
    for (std::size_t i = 0; i < table_->alphas.size(); ++i)
      if (c_[static_cast<Eigen::Index>(i)] != 0.0) out.push_back({table_->alphas[i], c_[static_cast<Eigen::Index>(i)]});
    return out;
  }

  double operator()(const Vec& x) const {
    const auto pw = powers(x);
    double s = 0.0;
    for (std::size_t m = 0; m < table_->alphas.size(); ++m) {
      const double cm = c_[static_cast<Eigen::Index>(m)];
      if (cm == 0.0) continue;
      double term = cm;
      for (int i = 0; i < dim(); ++i) term *= pw[static_cast<std::size_t>(i)][static_cast<std::size_t>(table_->alphas[m][static_cast<std::size_t>(i)])];
      s += term;
    }
    return s;
  }

  Vec gradient(const Vec& x) const {
    const int d = dim();
    const auto pw = powers(x);
    Vec g = Vec::Zero(d);
    for (std::size_t m = 0; m < table_->alphas.size(); ++m) {
      const double cm = c_[static_cast<Eigen::Index>(m)];
      if (cm == 0.0) continue;
      const auto& a = table_->alphas[m];
      for (int k = 0; k < d; ++k) {
        const int ak = a[static_cast<std::size_t>(k)];
        if (ak == 0) continue;
        double term = cm * ak;
        for (int i = 0; i < d; ++i) {
          const int e = a[static_cast<std::size_t>(i)] - (i == k ? 1 : 0);
          term *= pw[static_cast<std::size_t>(i)][static_cast<std::size_t>(e)];
        }
        g[k] += term;
      }
    }
    return g;
  }

  // Upper bound for |P| on the segment point + s dir, |s| <= 1.
  double magnitude_bound(const Vec& point, const Vec& dir) const {
    Vec r = point.cwiseAbs() + dir.cwiseAbs();
    const auto pw = powers(r);
    double s = 0.0;
    for (std::size_t m = 0; m < table_->alphas.size(); ++m) {
      double term = std::abs(c_[static_cast<Eigen::Index>(m)]);
      if (term == 0.0) continue;
      for (int i = 0; i < dim(); ++i) term *= pw[static_cast<std::size_t>(i)][static_cast<std::size_t>(table_->alphas[m][static_cast<std::size_t>(i)])];
      s += term;
    }
    return s;
  }

  // Coefficients of t -> P(point + t dir).
  UniPoly restrict_to_line(const Vec& point, const Vec& dir) const {
    const int d = dim(), D = degree();
    if (point.size() != d || dir.size() != d) fail(ErrorKind::DimensionMismatch, "line has wrong dimension");
    // lin[i][k] = (point_i + t dir_i)^k.
    std::vector<std::vector<UniPoly>> lin(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
      auto& row = lin[static_cast<std::size_t>(i)];
      row.push_back(UniPoly{{1.0}});
      const UniPoly base{{point[i], dir[i]}};
      for (int k = 1; k <= D; ++k) row.push_back(row.back() * base);
    }
    UniPoly out;
    out.c.assign(static_cast<std::size_t>(D + 1), 0.0);
    std::vector<double> buf, tmp;
    for (std::size_t m = 0; m < table_->alphas.size(); ++m) {
      const double cm = c_[static_cast<Eigen::Index>(m)];
      if (cm == 0.0) continue;
      buf.assign(1, cm);
      for (int i = 0; i < d; ++i) {
        const int a = table_->alphas[m][static_cast<std::size_t>(i)];
        if (a == 0) continue;
        const auto& f = lin[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)].c;
        tmp.assign(buf.size() + f.size() - 1, 0.0);
        for (std::size_t x = 0; x < buf.size(); ++x)
          for (std::size_t y = 0; y < f.size(); ++y) tmp[x + y] += buf[x] * f[y];
        buf.swap(tmp);
      }
      for (std::size_t k = 0; k < buf.size(); ++k) out.c[k] += buf[k];
    }
    return out;
  }

 private:
  std::vector<std::vector<double>> powers(const Vec& x) const {
    if (x.size() != dim()) fail(ErrorKind::DimensionMismatch, "point has wrong dimension");
    std::vector<std::vector<double>> pw(static_cast<std::size_t>(dim()));
    for (int i = 0; i < dim(); ++i) {
      auto& row = pw[static_cast<std::size_t>(i)];
      row.resize(static_cast<std::size_t>(degree() + 1));
      row[0] = 1.0;
      for (int k = 1; k <= degree(); ++k) row[static_cast<std::size_t>(k)] = row[static_cast<std::size_t>(k - 1)] * x[i];
    }
    return pw;
  }

  std::shared_ptr<const MonomialTable> table_;
  Vec c_;
};

inline UniPoly restrict_to_line(const MultiPoly& p, const Vec& point, const Vec& dir) {
  if (!(dir.norm() > 0.0)) fail(ErrorKind::InvalidInput, "line direction must be nonzero");
  return p.restrict_to_line(point, dir);
}

inline MultiPoly operator*(const MultiPoly& a, const MultiPoly& b) {
  if (a.dim() != b.dim()) fail(ErrorKind::DimensionMismatch, "product of polynomials in different dimensions");
  const int d = a.dim();
  const auto table = monomial_table(d, a.degree() + b.degree());
  Vec c = Vec::Zero(static_cast<Eigen::Index>(table->alphas.size()));
  const auto ta = a.terms(), tb = b.terms();
  std::vector<int> alpha(static_cast<std::size_t>(d));
  for (const auto& x : ta)
    for (const auto& y : tb) {
      for (int i = 0; i < d; ++i) alpha[static_cast<std::size_t>(i)] = x.alpha[static_cast<std::size_t>(i)] + y.alpha[static_cast<std::size_t>(i)];
      c[static_cast<Eigen::Index>(table->index.at(alpha))] += x.coeff * y.coeff;
    }
  return MultiPoly(d, a.degree() + b.degree(), c);
}

// Axis-aligned box or Euclidean ball.
class Region {
 public:
  enum class Kind { Box, Ball };

  static Region box(const Vec& lo, const Vec& hi) {
    if (lo.size() != hi.size() || lo.size() < 1) fail(ErrorKind::DimensionMismatch, "box corners differ in dimension");
    if (!lo.allFinite() || !hi.allFinite()) fail(ErrorKind::InvalidInput, "box must be bounded");
    for (int i = 0; i < lo.size(); ++i)
      if (!(lo[i] < hi[i])) fail(ErrorKind::InvalidInput, "box is empty");
    Region r;
    r.kind_ = Kind::Box;
    r.lo_ = lo;
    r.hi_ = hi;
    return r;
  }
  static Region cube(int d, double side = 1.0, const std::optional<Vec>& center = std::nullopt) {
    const Vec c = center.value_or(Vec::Zero(d));
    return box(c.array() - side / 2, c.array() + side / 2);
  }
  static Region ball(const Vec& center, double radius) {
    if (center.size() < 1 || !center.allFinite()) fail(ErrorKind::InvalidInput, "ball center must be finite");
    if (!(radius > 0.0) || !std::isfinite(radius)) fail(ErrorKind::InvalidInput, "ball radius must be positive");
    Region r;
    r.kind_ = Kind::Ball;
    r.lo_ = center.array() - radius;
    r.hi_ = center.array() + radius;
    r.radius_ = radius;
    return r;
  }

  Kind kind() const { return kind_; }
  int dim() const { return static_cast<int>(lo_.size()); }
  // Bounding box; equals the region for boxes.
  const Vec& lo() const { return lo_; }
  const Vec& hi() const { return hi_; }
  Vec center() const { return (lo_ + hi_) / 2; }
  double radius() const { return radius_; }

  double volume() const {
    if (kind_ == Kind::Ball) return unit_ball_volume(dim()) * std::pow(radius_, dim());
    return (hi_ - lo_).prod();
  }

  bool contains(const Vec& x) const {
    if (kind_ == Kind::Ball) return (x - center()).squaredNorm() <= radius_ * radius_;
    return (x.array() >= lo_.array()).all() && (x.array() <= hi_.array()).all();
  }

  // Parameter interval of {point + t dir} inside the region, if nonempty.
  std::optional<std::pair<double, double>> chord(const Vec& point, const Vec& dir) const {
    if (kind_ == Kind::Ball) {
      const Vec w = point - center();
      const double a = dir.squaredNorm(), b = w.dot(dir), c = w.squaredNorm() - radius_ * radius_;
      const double disc = b * b - a * c;
      if (!(a > 0.0) || disc <= 0.0) return std::nullopt;
      const double s = std::sqrt(disc);
      return std::make_pair((-b - s) / a, (-b + s) / a);
    }
    double t0 = -std::numeric_limits<double>::infinity(), t1 = std::numeric_limits<double>::infinity();
    for (int i = 0; i < dim(); ++i) {
      if (dir[i] == 0.0) {
        if (point[i] < lo_[i] || point[i] > hi_[i]) return std::nullopt;
        continue;
      }
      double a = (lo_[i] - point[i]) / dir[i], b = (hi_[i] - point[i]) / dir[i];
      if (a > b) std::swap(a, b);
      t0 = std::max(t0, a);
      t1 = std::min(t1, b);
    }
    if (!(t0 < t1)) return std::nullopt;
    return std::make_pair(t0, t1);
  }

 private:
  Kind kind_ = Kind::Box;
  Vec lo_, hi_;
  double radius_ = 0.0;
};

}  // namespace bltk
