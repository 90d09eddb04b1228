#pragma once

// Configuration loading, check runners and report emission behind the bltk CLI.

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <limits>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "bltk/brascamp_lieb.hpp"
#include "bltk/configurations.hpp"
#include "bltk/error.hpp"
#include "bltk/integral_geometry.hpp"
#include "bltk/polynomial.hpp"
#include "bltk/visibility.hpp"

namespace bltk::harness {

using nlohmann::json;

inline constexpr const char* kToolkit = "bltk";
inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kSchema = 1;

enum class Verdict { Pass, Fail, Info };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    case Verdict::Info: return "info";
  }
  return "info";
}

inline Verdict verdict_of(bool ok) { return ok ? Verdict::Pass : Verdict::Fail; }

inline constexpr double kNone = std::numeric_limits<double>::quiet_NaN();

// Non-finite numbers are written as null.
struct CheckRecord {
  std::string name;
  double param = kNone;
  double lhs = kNone;
  double rhs = kNone;
  double ratio = kNone;
  double std_err = kNone;
  Verdict verdict = Verdict::Info;
  json detail = json::object();
};

struct RunOptions {
  std::uint64_t seed = 0;
  int refine = 0;
};

struct Report {
  std::string command;
  std::string config_hash;
  RunOptions run;
  std::vector<CheckRecord> checks;

  bool passed() const {
    for (const auto& c : checks)
      if (c.verdict == Verdict::Fail) return false;
    return true;
  }
};

inline std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = digits[h & 0xf];
  return out;
}

inline json number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

// Shortest round-trip decimal; empty for non-finite values.
inline std::string csv_number(double x) {
  if (!std::isfinite(x)) return "";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline json to_json(const Report& r) {
  json checks = json::array();
  for (const auto& c : r.checks) {
    json j;
    j["name"] = c.name;
    j["param"] = number(c.param);
    j["lhs"] = number(c.lhs);
    j["rhs"] = number(c.rhs);
    j["ratio"] = number(c.ratio);
    j["stderr"] = number(c.std_err);
    j["verdict"] = to_string(c.verdict);
    if (!c.detail.empty()) j["detail"] = c.detail;
    checks.push_back(std::move(j));
  }
  json out;
  out["toolkit"] = kToolkit;
  out["version"] = kVersion;
  out["schema"] = kSchema;
  out["command"] = r.command;
  out["config_hash"] = r.config_hash;
  out["seed"] = r.run.seed;
  out["refine"] = r.run.refine;
  out["checks"] = std::move(checks);
  out["verdict"] = r.passed() ? "pass" : "fail";
  return out;
}

inline constexpr const char* kCsvHeader = "name,param,lhs,rhs,ratio,stderr,verdict";

// Header comments carry the provenance; rows follow the fixed column order.
inline std::string to_csv(const Report& r) {
  std::ostringstream os;
  os << "# toolkit=" << kToolkit << " version=" << kVersion << " command=" << r.command
     << " config_hash=" << r.config_hash << " seed=" << r.run.seed << " refine=" << r.run.refine << "\n";
  os << kCsvHeader << "\n";
  for (const auto& c : r.checks)
    os << csv_field(c.name) << ',' << csv_number(c.param) << ',' << csv_number(c.lhs) << ',' << csv_number(c.rhs) << ','
       << csv_number(c.ratio) << ',' << csv_number(c.std_err) << ',' << to_string(c.verdict) << "\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Config access with field paths in every diagnostic

[[noreturn]] inline void config_error(const std::string& path, const std::string& what) {
  fail(ErrorKind::ConfigError, "field '" + path + "': " + what);
}

inline std::string child(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
inline std::string at_index(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

inline json parse_config(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    const std::size_t end = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    fail(ErrorKind::ConfigError, "line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + e.what());
  }
}

inline void require_object(const json& j, const std::string& path) {
  if (!j.is_object()) config_error(path.empty() ? "<root>" : path, "expected an object");
}

inline void allow_only(const json& j, const std::string& path, std::initializer_list<const char*> keys) {
  require_object(j, path);
  const std::set<std::string> ok(keys.begin(), keys.end());
  for (const auto& [k, v] : j.items())
    if (!ok.count(k)) config_error(child(path, k), "unknown field");
}

inline const json& required(const json& j, const std::string& path, const char* key) {
  const auto it = j.find(key);
  if (it == j.end()) config_error(child(path, key), "missing required field");
  return *it;
}

inline const json* optional_field(const json& j, const char* key) {
  const auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

inline double get_number(const json& j, const std::string& path) {
  if (j.is_string() && (j == "inf" || j == "infinity")) return std::numeric_limits<double>::infinity();
  if (!j.is_number()) config_error(path, "expected a number");
  return j.get<double>();
}

inline double get_finite(const json& j, const std::string& path) {
  const double x = get_number(j, path);
  if (!std::isfinite(x)) config_error(path, "expected a finite number");
  return x;
}

inline double get_positive(const json& j, const std::string& path) {
  const double x = get_finite(j, path);
  if (!(x > 0.0)) config_error(path, "expected a positive number");
  return x;
}

inline std::int64_t get_integer(const json& j, const std::string& path, std::int64_t lo, std::int64_t hi) {
  if (!j.is_number_integer()) config_error(path, "expected an integer");
  const auto v = j.get<std::int64_t>();
  if (v < lo || v > hi) config_error(path, "integer out of range [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return v;
}

inline std::string get_string(const json& j, const std::string& path) {
  if (!j.is_string()) config_error(path, "expected a string");
  return j.get<std::string>();
}

inline const json& get_array(const json& j, const std::string& path) {
  if (!j.is_array()) config_error(path, "expected an array");
  return j;
}

inline Vec get_vec(const json& j, const std::string& path, int dim = -1) {
  const auto& a = get_array(j, path);
  if (dim >= 0 && static_cast<int>(a.size()) != dim) config_error(path, "expected " + std::to_string(dim) + " entries");
  Vec v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<Eigen::Index>(i)] = get_finite(a[i], at_index(path, i));
  return v;
}

// Rows of equal length `cols`.
inline Mat get_rows(const json& j, const std::string& path, int cols) {
  const auto& a = get_array(j, path);
  Mat m(static_cast<Eigen::Index>(a.size()), cols);
  for (std::size_t i = 0; i < a.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = get_vec(a[i], at_index(path, i), cols).transpose();
  return m;
}

// Span of the listed vectors; an empty list is the zero subspace.
inline Subspace get_span(const json& j, const std::string& path, int d) {
  const Mat rows = get_rows(j, path, d);
  try {
    return Subspace(Mat(rows.transpose()));
  } catch (const Error& e) {
    config_error(path, e.what());
  }
}

// Accepts an integer or a "p/q" string.
inline Rational get_rational(const json& j, const std::string& path) {
  if (j.is_number_integer()) return Rational(j.get<std::int64_t>());
  if (!j.is_string()) config_error(path, "expected an integer or a \"p/q\" string");
  const std::string s = j.get<std::string>();
  const auto slash = s.find('/');
  auto parse = [&](std::string_view t) {
    std::int64_t v = 0;
    const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || r.ec != std::errc() || r.ptr != t.data() + t.size())
      config_error(path, "malformed rational \"" + s + "\"");
    return v;
  };
  const std::string_view sv(s);
  const std::int64_t num = parse(slash == std::string::npos ? sv : sv.substr(0, slash));
  const std::int64_t den = slash == std::string::npos ? 1 : parse(sv.substr(slash + 1));
  if (den == 0) config_error(path, "zero denominator in \"" + s + "\"");
  return Rational(num, den);
}

inline std::vector<Rational> get_rationals(const json& j, const std::string& path) {
  const auto& a = get_array(j, path);
  std::vector<Rational> out;
  for (std::size_t i = 0; i < a.size(); ++i) out.push_back(get_rational(a[i], at_index(path, i)));
  return out;
}

inline int get_dimension(const json& cfg) { return static_cast<int>(get_integer(required(cfg, "", "dimension"), "dimension", 1, 8)); }

inline void check_schema(const json& cfg) {
  require_object(cfg, "");
  const auto& s = required(cfg, "", "schema");
  if (!s.is_number_integer() || s.get<std::int64_t>() != kSchema)
    config_error("schema", "unsupported schema version (expected " + std::to_string(kSchema) + ")");
}

struct Expectation {
  double value = 0.0;
  double tolerance = 0.0;
};

inline std::optional<Expectation> get_expectation(const json& cfg, const char* key, double default_tol) {
  const json* e = optional_field(cfg, "expect");
  if (!e) return std::nullopt;
  allow_only(*e, "expect", {key, "tolerance"});
  const json* v = optional_field(*e, key);
  if (!v) return std::nullopt;
  Expectation x{get_finite(*v, std::string("expect.") + key), default_tol};
  if (const json* t = optional_field(*e, "tolerance")) x.tolerance = get_finite(*t, "expect.tolerance");
  if (x.tolerance < 0.0) config_error("expect.tolerance", "must be nonnegative");
  return x;
}

// ---------------------------------------------------------------------------
// bl

inline Report run_bl(const json& cfg, const RunOptions& run) {
  check_schema(cfg);
  allow_only(cfg, "", {"schema", "maps", "exponents", "expect", "options"});
  const auto& maps_j = get_array(required(cfg, "", "maps"), "maps");
  if (maps_j.empty()) config_error("maps", "need at least one map");
  std::vector<Mat> maps;
  int d = -1;
  for (std::size_t j = 0; j < maps_j.size(); ++j) {
    const std::string p = at_index("maps", j);
    const auto& rows = get_array(maps_j[j], p);
    if (rows.empty()) config_error(p, "a map needs at least one row");
    if (d < 0) d = static_cast<int>(get_array(rows[0], at_index(p, 0)).size());
    maps.push_back(get_rows(rows, p, d));
  }
  const auto exps = get_rationals(required(cfg, "", "exponents"), "exponents");
  for (std::size_t j = 0; j < exps.size(); ++j) {
    if (!(Rational(0) < exps[j])) config_error(at_index("exponents", j), "exponent must be positive");
    if (exps[j].den > kMaxExponentDenominator) config_error(at_index("exponents", j), "denominator exceeds 64");
  }
  if (exps.size() != maps.size()) config_error("exponents", "need one exponent per map");
  BLOptions bopt;
  int probes = 100;
  if (const json* o = optional_field(cfg, "options")) {
    allow_only(*o, "options", {"tol", "max_iter", "probes"});
    if (const json* x = optional_field(*o, "tol")) bopt.tol = get_positive(*x, "options.tol");
    if (const json* x = optional_field(*o, "max_iter")) bopt.max_iter = static_cast<int>(get_integer(*x, "options.max_iter", 1, 10000000));
    if (const json* x = optional_field(*o, "probes")) probes = static_cast<int>(get_integer(*x, "options.probes", 0, 100000));
  }
  const auto expect = get_expectation(cfg, "constant", 1e-6);
  for (int r = 0; r < run.refine; ++r) {
    bopt.tol /= 10.0;
    probes *= 2;
  }

  const BLDatum b = make_datum(maps, exps);
  Report rep{"bl", "", run, {}};

  double lhs = 0.0;
  for (std::size_t j = 0; j < b.size(); ++j) lhs += exps[j].value() * static_cast<double>(b.maps[j].rows());
  const bool scaling = scaling_condition(b);
  CheckRecord sc{"scaling", kNone, lhs, static_cast<double>(b.d), lhs / b.d, kNone, verdict_of(scaling)};
  rep.checks.push_back(sc);

  const auto dim = dimension_condition(b, probes, run.seed);
  CheckRecord dc{"dimension", kNone, static_cast<double>(dim.candidates_checked), kNone, kNone, kNone, verdict_of(dim.pass)};
  dc.detail["heuristic"] = true;
  if (dim.counterexample) {
    dc.detail["counterexample_dim"] = dim.counterexample->dim();
    dc.detail["slack"] = dim.slack.str();
  }
  rep.checks.push_back(dc);

  CheckRecord cc{"constant"};
  if (!scaling) {
    cc.verdict = Verdict::Fail;
    cc.detail["status"] = "ScalingMismatch";
  } else {
    const auto res = bl_constant(b, bopt);
    cc.lhs = res.value;
    cc.detail["status"] = res.finite() ? "Finite" : "Diverged";
    cc.detail["iterations"] = res.iterations;
    cc.detail["monotone"] = res.monotone;
    cc.detail["trace_length"] = res.trace.size();
    if (!res.trace.empty()) {
      cc.detail["trace_first"] = number(res.trace.front());
      cc.detail["trace_last"] = number(res.trace.back());
    }
    if (!res.reason.empty()) cc.detail["reason"] = res.reason;
    if (expect) {
      cc.rhs = expect->value;
      cc.ratio = res.value / expect->value;
      cc.detail["tolerance"] = expect->tolerance;
      cc.verdict = verdict_of(res.finite() && std::abs(res.value - expect->value) <= expect->tolerance);
    } else {
      cc.verdict = verdict_of(res.finite());
    }
  }
  rep.checks.push_back(cc);
  return rep;
}

// ---------------------------------------------------------------------------
// verify / sweep

struct VerifySetup {
  int d = 0;
  std::string mode = "kjplane";
  std::vector<Rational> exponents;
  double cell = 0.0;
  std::optional<Expectation> expect;
  std::optional<std::vector<double>> sweep_sizes;
  double sweep_tolerance = 0.05;
  // Families at a given core size; `size` < 0 keeps the sizes of the file.
  std::function<std::vector<SlabFamily>(double)> families;
};

inline std::vector<SlabFamily> parse_families(const json& j, int d) {
  const auto& a = get_array(j, "families");
  std::vector<SlabFamily> fams;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const std::string p = at_index("families", i);
    allow_only(a[i], p, {"nominal", "delta", "slabs"});
    SlabFamily f;
    f.nominal = get_span(required(a[i], p, "nominal"), child(p, "nominal"), d);
    if (const json* x = optional_field(a[i], "delta")) f.delta = get_finite(*x, child(p, "delta"));
    const auto& slabs = get_array(required(a[i], p, "slabs"), child(p, "slabs"));
    if (slabs.empty()) config_error(child(p, "slabs"), "family is empty");
    for (std::size_t s = 0; s < slabs.size(); ++s) {
      const std::string q = at_index(child(p, "slabs"), s);
      allow_only(slabs[s], q, {"base", "core", "size", "radius", "weight"});
      const Vec base = get_vec(required(slabs[s], q, "base"), child(q, "base"), d);
      const Subspace core = optional_field(slabs[s], "core") ? get_span(slabs[s]["core"], child(q, "core"), d) : f.nominal;
      if (core.dim() != f.nominal.dim()) config_error(child(q, "core"), "core dimension differs from the nominal subspace");
      double size = kInfiniteSize, radius = 1.0, weight = 1.0;
      if (const json* x = optional_field(slabs[s], "size")) {
        size = get_number(*x, child(q, "size"));
        if (!(size > 0.0)) config_error(child(q, "size"), "must be positive or \"inf\"");
      }
      if (const json* x = optional_field(slabs[s], "radius")) radius = get_positive(*x, child(q, "radius"));
      if (const json* x = optional_field(slabs[s], "weight")) weight = get_finite(*x, child(q, "weight"));
      f.slabs.push_back(make_slab(base, core, size, radius, weight));
    }
    fams.push_back(std::move(f));
  }
  if (fams.size() < 2) config_error("families", "need at least two families");
  return fams;
}

inline NearAxisSpec parse_near_axis(const json& j, int d, std::uint64_t* seed) {
  allow_only(j, "near_axis", {"blocks", "counts", "delta", "offset", "seed"});
  NearAxisSpec spec;
  spec.d = d;
  const auto& blocks = get_array(required(j, "near_axis", "blocks"), "near_axis.blocks");
  std::set<int> seen;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const std::string p = at_index("near_axis.blocks", b);
    std::vector<int> axes;
    for (std::size_t i = 0; i < get_array(blocks[b], p).size(); ++i) {
      const int ax = static_cast<int>(get_integer(blocks[b][i], at_index(p, i), 0, d - 1));
      if (!seen.insert(ax).second) config_error(at_index(p, i), "axis listed twice");
      axes.push_back(ax);
    }
    if (axes.empty()) config_error(p, "block is empty");
    spec.blocks.push_back(std::move(axes));
  }
  if (static_cast<int>(seen.size()) != d) config_error("near_axis.blocks", "blocks must partition the axes");
  const auto& counts = get_array(required(j, "near_axis", "counts"), "near_axis.counts");
  for (std::size_t i = 0; i < counts.size(); ++i)
    spec.counts.push_back(static_cast<int>(get_integer(counts[i], at_index("near_axis.counts", i), 1, 64)));
  if (spec.counts.size() != spec.blocks.size()) config_error("near_axis.counts", "need one count per block");
  if (spec.blocks.size() < 2) config_error("near_axis.blocks", "need at least two blocks");
  if (const json* x = optional_field(j, "delta")) spec.delta = get_finite(*x, "near_axis.delta");
  if (const json* x = optional_field(j, "offset")) spec.offset = get_finite(*x, "near_axis.offset");
  if (const json* x = optional_field(j, "seed")) *seed = static_cast<std::uint64_t>(get_integer(*x, "near_axis.seed", 0, std::numeric_limits<std::int64_t>::max()));
  return spec;
}

inline VerifySetup parse_verify(const json& cfg, const RunOptions& run) {
  check_schema(cfg);
  allow_only(cfg, "", {"schema", "dimension", "mode", "exponents", "cell", "families", "near_axis", "expect", "sweep"});
  VerifySetup s;
  s.d = get_dimension(cfg);
  if (const json* m = optional_field(cfg, "mode")) {
    s.mode = get_string(*m, "mode");
    if (s.mode != "kjplane" && s.mode != "affine" && s.mode != "bl") config_error("mode", "expected kjplane, affine or bl");
  }
  if (const json* e = optional_field(cfg, "exponents")) {
    if (s.mode != "bl") config_error("exponents", "only used in bl mode");
    s.exponents = get_rationals(*e, "exponents");
  } else if (s.mode == "bl") {
    config_error("exponents", "bl mode needs exponents");
  }
  if (const json* c = optional_field(cfg, "cell")) s.cell = get_positive(*c, "cell");
  s.expect = get_expectation(cfg, "ratio", 0.0);
  if (const json* sw = optional_field(cfg, "sweep")) {
    allow_only(*sw, "sweep", {"sizes", "tolerance"});
    std::vector<double> sizes;
    const auto& a = get_array(required(*sw, "sweep", "sizes"), "sweep.sizes");
    for (std::size_t i = 0; i < a.size(); ++i) sizes.push_back(get_positive(a[i], at_index("sweep.sizes", i)));
    if (sizes.size() < 2) config_error("sweep.sizes", "need at least two sizes");
    s.sweep_sizes = sizes;
    if (const json* t = optional_field(*sw, "tolerance")) s.sweep_tolerance = get_positive(*t, "sweep.tolerance");
  }
  const json* fj = optional_field(cfg, "families");
  const json* nj = optional_field(cfg, "near_axis");
  if ((fj == nullptr) == (nj == nullptr)) config_error("families", "give exactly one of families or near_axis");
  if (fj) {
    auto fams = parse_families(*fj, s.d);
    if (s.mode == "bl" && s.exponents.size() != fams.size()) config_error("exponents", "need one exponent per family");
    s.families = [fams](double size) {
      if (size < 0.0) return fams;
      auto out = fams;
      for (auto& f : out)
        for (auto& sl : f.slabs) sl.size = size;
      return out;
    };
  } else {
    std::uint64_t seed = run.seed;
    const NearAxisSpec spec = parse_near_axis(*nj, s.d, &seed);
    if (s.mode == "bl" && s.exponents.size() != spec.blocks.size()) config_error("exponents", "need one exponent per family");
    s.families = [spec, seed](double size) { return near_axis_families(spec, size < 0.0 ? kInfiniteSize : size, seed); };
  }
  return s;
}

inline double refined_cell(const VerifySetup& s, const std::vector<SlabFamily>& fams, int refine) {
  double h = s.cell > 0.0 ? s.cell : detail::default_cell(fams);
  return std::ldexp(h, -refine);
}

inline SlabInequalityReport evaluate(const VerifySetup& s, const std::vector<SlabFamily>& fams, double h) {
  if (s.mode == "affine") return lhs_affine(fams, h);
  if (s.mode == "bl") return lhs_bl(fams, s.exponents, h);
  return lhs_kjplane(fams, h);
}

inline void append_sweep(Report& rep, const VerifySetup& s, const RunOptions& run) {
  if (s.mode == "affine") config_error("mode", "sweeps support kjplane and bl modes");
  SweepOptions opt;
  opt.mode = s.mode == "bl" ? SweepMode::BL : SweepMode::KjPlane;
  opt.exponents = s.exponents;
  opt.tolerance = s.sweep_tolerance;
  opt.h = refined_cell(s, s.families(s.sweep_sizes->front()), run.refine);
  const auto sw = size_sweep(s.families, *s.sweep_sizes, opt);
  for (const auto& p : sw.points) {
    CheckRecord c{"sweep_point", p.size, p.lhs, p.rhs, p.ratio, p.error, Verdict::Info};
    rep.checks.push_back(c);
  }
  CheckRecord c{"sweep_slope", kNone, sw.slope, sw.tolerance, kNone, kNone, verdict_of(sw.endpoint)};
  c.detail["cell"] = opt.h;
  rep.checks.push_back(c);
}

inline Report run_verify(const json& cfg, const RunOptions& run) {
  const VerifySetup s = parse_verify(cfg, run);
  Report rep{"verify", "", run, {}};
  const auto fams = s.families(-1.0);
  const double h = refined_cell(s, fams, run.refine);
  SlabInequalityReport r;
  try {
    r = evaluate(s, fams, h);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::InfiniteBLConstant) throw;
    CheckRecord c{"slab_inequality", kNone, kNone, kNone, kNone, kNone, Verdict::Fail};
    c.detail["mode"] = s.mode;
    c.detail["reason"] = e.what();
    rep.checks.push_back(c);
    return rep;
  }
  CheckRecord c{"slab_inequality", kNone, r.lhs.value, r.rhs, r.ratio, r.lhs.error, Verdict::Info};
  if (s.expect) {
    c.verdict = verdict_of(std::abs(r.ratio - s.expect->value) <= s.expect->tolerance);
    c.detail["expected_ratio"] = s.expect->value;
    c.detail["tolerance"] = s.expect->tolerance;
  }
  c.detail["mode"] = s.mode;
  c.detail["cell"] = h;
  c.detail["cells"] = r.lhs.cells;
  c.detail["coarse"] = number(r.lhs.coarse);
  if (s.mode == "bl") c.detail["bl_constant"] = number(r.bl);
  if (!r.warnings.empty()) c.detail["warnings"] = r.warnings;
  rep.checks.push_back(c);
  if (s.sweep_sizes) append_sweep(rep, s, run);
  return rep;
}

inline Report run_sweep(const json& cfg, const RunOptions& run) {
  const VerifySetup s = parse_verify(cfg, run);
  if (!s.sweep_sizes) config_error("sweep", "missing required field");
  Report rep{"sweep", "", run, {}};
  append_sweep(rep, s, run);
  return rep;
}

// ---------------------------------------------------------------------------
// vis

inline Region parse_region(const json& j, int d) {
  require_object(j, "region");
  const std::string kind = get_string(required(j, "region", "kind"), "region.kind");
  if (kind == "cube") {
    allow_only(j, "region", {"kind", "side", "center"});
    const double side = optional_field(j, "side") ? get_positive(j["side"], "region.side") : 1.0;
    std::optional<Vec> c;
    if (const json* x = optional_field(j, "center")) c = get_vec(*x, "region.center", d);
    return Region::cube(d, side, c);
  }
  if (kind == "box") {
    allow_only(j, "region", {"kind", "lo", "hi"});
    const Vec lo = get_vec(required(j, "region", "lo"), "region.lo", d), hi = get_vec(required(j, "region", "hi"), "region.hi", d);
    for (int i = 0; i < d; ++i)
      if (!(lo[i] < hi[i])) config_error("region.hi", "box is empty");
    return Region::box(lo, hi);
  }
  if (kind == "ball") {
    allow_only(j, "region", {"kind", "center", "radius"});
    return Region::ball(get_vec(required(j, "region", "center"), "region.center", d),
                        get_positive(required(j, "region", "radius"), "region.radius"));
  }
  config_error("region.kind", "expected cube, box or ball");
}

inline MultiPoly parse_polynomial(const json& j, int d) {
  allow_only(j, "polynomial", {"terms", "degree"});
  const auto& terms_j = get_array(required(j, "polynomial", "terms"), "polynomial.terms");
  if (terms_j.empty()) config_error("polynomial.terms", "need at least one term");
  std::vector<Term> terms;
  for (std::size_t i = 0; i < terms_j.size(); ++i) {
    const std::string p = at_index("polynomial.terms", i);
    allow_only(terms_j[i], p, {"coeff", "powers"});
    Term t;
    t.coeff = get_finite(required(terms_j[i], p, "coeff"), child(p, "coeff"));
    const auto& pw = get_array(required(terms_j[i], p, "powers"), child(p, "powers"));
    if (static_cast<int>(pw.size()) != d) config_error(child(p, "powers"), "expected " + std::to_string(d) + " entries");
    for (std::size_t k = 0; k < pw.size(); ++k) t.alpha.push_back(static_cast<int>(get_integer(pw[k], at_index(child(p, "powers"), k), 0, 64)));
    terms.push_back(std::move(t));
  }
  int degree = -1;
  if (const json* x = optional_field(j, "degree")) degree = static_cast<int>(get_integer(*x, "polynomial.degree", 0, 64));
  try {
    return MultiPoly::from_terms(d, terms, degree);
  } catch (const Error& e) {
    config_error("polynomial", e.what());
  }
}

inline Report run_vis(const json& cfg, const RunOptions& run) {
  check_schema(cfg);
  allow_only(cfg, "", {"schema", "dimension", "polynomial", "region", "options", "expect"});
  const int d = get_dimension(cfg);
  const MultiPoly p = parse_polynomial(required(cfg, "", "polynomial"), d);
  const Region u = parse_region(required(cfg, "", "region"), d);
  FadingZoneOptions opt;
  opt.seed = run.seed;
  if (const json* o = optional_field(cfg, "options")) {
    allow_only(*o, "options", {"eps", "samples", "batches", "cells", "random_directions", "volume_resolution"});
    if (const json* x = optional_field(*o, "eps")) opt.eps = get_positive(*x, "options.eps");
    if (const json* x = optional_field(*o, "samples")) opt.samples = static_cast<int>(get_integer(*x, "options.samples", 0, 1 << 20));
    if (const json* x = optional_field(*o, "batches")) opt.batches = static_cast<int>(get_integer(*x, "options.batches", 1, 1024));
    if (const json* x = optional_field(*o, "cells")) opt.lattice.cells = static_cast<int>(get_integer(*x, "options.cells", 1, 1 << 16));
    if (const json* x = optional_field(*o, "random_directions")) opt.random_directions = static_cast<int>(get_integer(*x, "options.random_directions", 0, 1 << 20));
    if (const json* x = optional_field(*o, "volume_resolution")) opt.volume_resolution = static_cast<int>(get_integer(*x, "options.volume_resolution", 8, 1 << 20));
  }
  opt.lattice.cells <<= run.refine;
  opt.volume_resolution <<= run.refine;
  std::optional<double> contains;
  std::optional<Expectation> value;
  if (const json* e = optional_field(cfg, "expect")) {
    allow_only(*e, "expect", {"contains", "value", "tolerance"});
    if (const json* x = optional_field(*e, "contains")) contains = get_finite(*x, "expect.contains");
    if (const json* x = optional_field(*e, "value")) {
      value = Expectation{get_finite(*x, "expect.value"), 0.0};
      if (const json* t = optional_field(*e, "tolerance")) value->tolerance = get_finite(*t, "expect.tolerance");
    }
  }

  const auto z = fading_zone(p, u, opt);
  Report rep{"vis", "", run, {}};
  CheckRecord iv{"vis_interval", kNone, z.vis_low, z.vis_high, kNone, kNone, Verdict::Info};
  if (contains) {
    iv.ratio = *contains;
    iv.verdict = verdict_of(z.vis_low <= *contains && *contains <= z.vis_high);
  }
  iv.detail["atoms"] = z.measure.size();
  iv.detail["dropped"] = z.dropped;
  rep.checks.push_back(iv);
  CheckRecord pv{"vis", kNone, z.vis, kNone, kNone, z.std_err, Verdict::Info};
  if (value) {
    pv.rhs = value->value;
    pv.ratio = z.vis / value->value;
    pv.verdict = verdict_of(std::abs(z.vis - value->value) <= 3.0 * z.std_err + value->tolerance);
  }
  pv.detail["eps"] = opt.eps;
  pv.detail["samples"] = opt.samples;
  rep.checks.push_back(pv);
  return rep;
}

// ---------------------------------------------------------------------------
// intgeo

inline std::optional<Mat> parse_frame(const json& j, const std::string& path, int d, int cols) {
  const json* f = optional_field(j, "frame");
  if (!f) return std::nullopt;
  const Mat rows = get_rows(*f, child(path, "frame"), d);
  if (rows.rows() != cols) config_error(child(path, "frame"), "expected " + std::to_string(cols) + " frame vectors");
  return Mat(rows.transpose());
}

inline Patch parse_patch(const json& j, const std::string& p, int d, int refine) {
  require_object(j, p);
  const std::string kind = get_string(required(j, p, "kind"), child(p, "kind"));
  auto res = [&](int dflt) {
    int r = dflt;
    if (const json* x = optional_field(j, "resolution")) r = static_cast<int>(get_integer(*x, child(p, "resolution"), 1, 1 << 16));
    return r << refine;
  };
  if (kind == "flat") {
    allow_only(j, p, {"kind", "origin", "edges", "resolution"});
    const Mat edges = get_rows(required(j, p, "edges"), child(p, "edges"), d);
    if (edges.rows() < 1) config_error(child(p, "edges"), "need at least one edge");
    return Patch::flat(get_vec(required(j, p, "origin"), child(p, "origin"), d), Mat(edges.transpose()), res(64));
  }
  if (kind == "segment") {
    allow_only(j, p, {"kind", "a", "b", "resolution"});
    return Patch::segment(get_vec(required(j, p, "a"), child(p, "a"), d), get_vec(required(j, p, "b"), child(p, "b"), d), res(64));
  }
  if (kind == "arc") {
    allow_only(j, p, {"kind", "center", "radius", "t0", "t1", "frame", "resolution"});
    const double t0 = optional_field(j, "t0") ? get_finite(j["t0"], child(p, "t0")) : 0.0;
    const double t1 = optional_field(j, "t1") ? get_finite(j["t1"], child(p, "t1")) : 2.0 * std::numbers::pi;
    return Patch::arc(get_vec(required(j, p, "center"), child(p, "center"), d),
                      get_positive(required(j, p, "radius"), child(p, "radius")), t0, t1, res(256), parse_frame(j, p, d, 2));
  }
  if (kind == "sphere") {
    allow_only(j, p, {"kind", "center", "radius", "theta", "phi", "frame", "resolution"});
    double th[2] = {0.0, std::numbers::pi}, ph[2] = {0.0, 2.0 * std::numbers::pi};
    if (const json* x = optional_field(j, "theta")) {
      const Vec v = get_vec(*x, child(p, "theta"), 2);
      th[0] = v[0];
      th[1] = v[1];
    }
    if (const json* x = optional_field(j, "phi")) {
      const Vec v = get_vec(*x, child(p, "phi"), 2);
      ph[0] = v[0];
      ph[1] = v[1];
    }
    return Patch::sphere(get_vec(required(j, p, "center"), child(p, "center"), d),
                         get_positive(required(j, p, "radius"), child(p, "radius")), th[0], th[1], ph[0], ph[1], res(64),
                         parse_frame(j, p, d, 3));
  }
  config_error(child(p, "kind"), "expected flat, segment, arc or sphere");
}

inline WindowFactor parse_factor(const json& j, const std::string& p, int d) {
  require_object(j, p);
  const std::string kind = get_string(required(j, p, "kind"), child(p, "kind"));
  if (kind == "all") {
    allow_only(j, p, {"kind"});
    return WindowFactor::all(d);
  }
  if (kind == "box") {
    allow_only(j, p, {"kind", "lo", "hi"});
    return WindowFactor::box(get_vec(required(j, p, "lo"), child(p, "lo"), d), get_vec(required(j, p, "hi"), child(p, "hi"), d));
  }
  if (kind == "ball") {
    allow_only(j, p, {"kind", "center", "radius"});
    return WindowFactor::ball(get_vec(required(j, p, "center"), child(p, "center"), d),
                              get_positive(required(j, p, "radius"), child(p, "radius")));
  }
  if (kind == "slab") {
    allow_only(j, p, {"kind", "normal", "width"});
    return WindowFactor::slab(get_vec(required(j, p, "normal"), child(p, "normal"), d),
                              get_positive(required(j, p, "width"), child(p, "width")));
  }
  config_error(child(p, "kind"), "expected all, box, ball or slab");
}

inline TranslationWindow parse_window(const json* j, int d, int count) {
  if (!j) return TranslationWindow::all(d, count);
  require_object(*j, "window");
  const std::string kind = get_string(required(*j, "window", "kind"), "window.kind");
  if (kind == "all") {
    allow_only(*j, "window", {"kind"});
    return TranslationWindow::all(d, count);
  }
  if (kind == "pairwise") {
    allow_only(*j, "window", {"kind", "bound"});
    return TranslationWindow::pairwise(d, count, get_positive(required(*j, "window", "bound"), "window.bound"));
  }
  if (kind == "product") {
    allow_only(*j, "window", {"kind", "factors"});
    const auto& a = get_array(required(*j, "window", "factors"), "window.factors");
    if (static_cast<int>(a.size()) != count) config_error("window.factors", "need one factor per patch after the first");
    std::vector<WindowFactor> f;
    for (std::size_t i = 0; i < a.size(); ++i) f.push_back(parse_factor(a[i], at_index("window.factors", i), d));
    return TranslationWindow::product(std::move(f));
  }
  config_error("window.kind", "expected all, pairwise or product");
}

inline Report run_intgeo(const json& cfg, const RunOptions& run) {
  check_schema(cfg);
  allow_only(cfg, "", {"schema", "dimension", "patches", "window", "samples", "expect"});
  const int d = get_dimension(cfg);
  const auto& pj = get_array(required(cfg, "", "patches"), "patches");
  if (pj.size() < 2) config_error("patches", "need at least two patches");
  std::vector<Patch> z;
  for (std::size_t i = 0; i < pj.size(); ++i) z.push_back(parse_patch(pj[i], at_index("patches", i), d, run.refine));
  const TranslationWindow u = parse_window(optional_field(cfg, "window"), d, static_cast<int>(z.size()) - 1);
  std::uint64_t samples = 1000000;
  if (const json* x = optional_field(cfg, "samples")) samples = static_cast<std::uint64_t>(get_integer(*x, "samples", 1, std::int64_t{1} << 40));
  const auto expect = get_expectation(cfg, "value", kNone);

  detail::check_codims(z);
  detail::check_window(z, u);
  IntersectionCounter{z};  // rejects unsupported shape tuples before any quadrature
  const auto q = lhs_with_refinement(z, u);
  const auto mc = rhs_translation_integral(z, u, samples, run.seed);
  Report rep{"intgeo", "", run, {}};
  CheckRecord id{"identity", kNone, q.value, mc.mean, q.value / mc.mean, mc.std_err,
                 verdict_of(std::abs(q.value - mc.mean) <= 3.0 * mc.std_err + 2.0 * q.delta() + 1e-9)};
  id.detail["quadrature_delta"] = q.delta();
  id.detail["samples"] = mc.samples;
  id.detail["flagged"] = mc.flagged;
  rep.checks.push_back(id);
  if (expect) {
    const double tol = std::isnan(expect->tolerance) ? 1e-6 * std::max(1.0, std::abs(expect->value)) : expect->tolerance;
    CheckRecord l{"lhs_expected", kNone, q.value, expect->value, q.value / expect->value, q.delta(),
                  verdict_of(std::abs(q.value - expect->value) <= 2.0 * q.delta() + tol)};
    CheckRecord r{"rhs_expected", kNone, mc.mean, expect->value, mc.mean / expect->value, mc.std_err,
                  verdict_of(std::abs(mc.mean - expect->value) <= 3.0 * mc.std_err + tol)};
    rep.checks.push_back(l);
    rep.checks.push_back(r);
  }
  return rep;
}

// ---------------------------------------------------------------------------

inline Report run_command(const std::string& command, const std::string& config_text, const RunOptions& run) {
  const json cfg = parse_config(config_text);
  Report rep;
  if (command == "bl") {
    rep = run_bl(cfg, run);
  } else if (command == "verify") {
    rep = run_verify(cfg, run);
  } else if (command == "sweep") {
    rep = run_sweep(cfg, run);
  } else if (command == "vis") {
    rep = run_vis(cfg, run);
  } else if (command == "intgeo") {
    rep = run_intgeo(cfg, run);
  } else {
    fail(ErrorKind::ConfigError, "unknown command '" + command + "'");
  }
  rep.config_hash = fnv1a_hex(config_text);
  return rep;
}

inline constexpr int kExitPass = 0;
inline constexpr int kExitVerdict = 2;
inline constexpr int kExitConfig = 3;
inline constexpr int kExitUnsupported = 4;

inline int exit_code(const Report& r) { return r.passed() ? kExitPass : kExitVerdict; }

// Unsupported shapes and sizes get their own code; every other library error is
// an input problem traced back to the configuration.
inline int exit_code(const Error& e) {
  if (e.kind() == ErrorKind::Unsupported || e.kind() == ErrorKind::UnsupportedShapes) return kExitUnsupported;
  return kExitConfig;
}

}  // namespace bltk::harness
