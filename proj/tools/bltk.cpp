// Command-line front end: loads a JSON config, runs the requested checks and
// writes a JSON or CSV report.

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "bltk/harness.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) bltk::fail(bltk::ErrorKind::ConfigError, "cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  namespace h = bltk::harness;
  CLI::App app{"Numerical checks for multilinear slab, visibility and Brascamp-Lieb inequalities"};
  app.set_version_flag("--version", std::string(h::kVersion));
  app.require_subcommand(1);

  std::string config, out, format = "json";
  h::RunOptions run;
  const struct {
    const char* name;
    const char* help;
  } commands[] = {
      {"bl", "Brascamp-Lieb datum: scaling and dimension conditions, constant"},
      {"verify", "Slab family inequality with optional size sweep"},
      {"vis", "Fading-zone visibility of a polynomial zero set"},
      {"intgeo", "Wedge integral against the translation integral"},
      {"sweep", "Size sweep of a slab family configuration"},
  };
  for (const auto& c : commands) {
    auto* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--config", config, "JSON configuration file")->required();
    sub->add_option("--seed", run.seed, "64-bit seed recorded in the report");
    sub->add_option("--out", out, "output file (default: stdout)");
    sub->add_option("--format", format, "report format")->check(CLI::IsMember({"json", "csv"}));
    sub->add_option("--refine", run.refine, "extra refinement levels")->check(CLI::Range(0, 6));
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : h::kExitConfig;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    const auto report = h::run_command(command, read_file(config), run);
    const std::string text = format == "csv" ? h::to_csv(report) : h::to_json(report).dump(2) + "\n";
    if (out.empty()) {
      std::cout << text;
    } else {
      std::ofstream os(out, std::ios::binary);
      if (!(os << text)) {
        std::cerr << "bltk: cannot write '" << out << "'\n";
        return h::kExitConfig;
      }
    }
    return h::exit_code(report);
  } catch (const bltk::Error& e) {
    std::cerr << "bltk: " << e.what() << "\n";
    return h::exit_code(e);
  }
}
