// Measures the minimum ratios behind the frozen floors in bltk/calibration.hpp.
// Calibration seeds start at --seed-base so they stay disjoint from the seeds the
// acceptance suite checks against the floors.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdint>
#include <iostream>
#include <limits>

#include "bltk/brascamp_lieb.hpp"
#include "bltk/visibility.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Calibrate the wedge and weighted-wedge ratio floors"};
  int instances = 1000;
  std::uint64_t seed_base = 1000000;
  double safety = 0.5;
  app.add_option("--instances", instances, "instances per dimension")->check(CLI::PositiveNumber);
  app.add_option("--seed-base", seed_base, "first calibration seed");
  app.add_option("--safety", safety, "frozen floor = safety * observed minimum")->check(CLI::Range(0.0, 1.0));
  CLI11_PARSE(app, argc, argv);

  nlohmann::json out;
  out["instances"] = instances;
  out["seed_base"] = seed_base;
  out["safety"] = safety;
  for (int d = 1; d <= 3; ++d) {
    const auto ratios = bltk::parallel_map(static_cast<std::size_t>(instances), [&](std::size_t i) {
      const auto x = bltk::random_hypothesis_field(d, seed_base + i);
      return bltk::wedge_estimate_check(x).ratio;
    });
    const double lo = *std::min_element(ratios.begin(), ratios.end());
    out["wedge"][std::to_string(d)] = {{"min_ratio", lo}, {"floor", safety * lo}};
  }
  for (int d = 2; d <= 3; ++d) {
    struct Pair {
      double primal = std::numeric_limits<double>::infinity();
      double dual = std::numeric_limits<double>::infinity();
    };
    const auto ratios = bltk::parallel_map(static_cast<std::size_t>(instances), [&](std::size_t i) {
      const auto inst = bltk::random_bl_instance(d, seed_base + i);
      const auto rep = bltk::bl_weighted_wedge_check(inst.field, inst.datum);
      return Pair{rep.primal_ratio, rep.dual_ratio};
    });
    double p = std::numeric_limits<double>::infinity(), q = p;
    for (const auto& r : ratios) {
      p = std::min(p, r.primal);
      q = std::min(q, r.dual);
    }
    out["bl"][std::to_string(d)] = {{"min_primal", p}, {"min_dual", q}, {"primal_floor", safety * p},
                                    {"dual_floor", safety * q}};
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}
