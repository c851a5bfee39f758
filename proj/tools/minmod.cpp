// minmod: minimum-modulus and escape diagnostics for entire functions.
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "minmod/cli.hpp"

namespace {

struct RawOptions {
  std::string range = "1:100";
  std::string window = "-10:10:-10:10";
  double R = 0.0, r = 0.0, T = 0.0, start = 0.0;
};

void add_options(CLI::App* sub, minmod::RunConfig& cfg, RawOptions& raw) {
  sub->add_option("--fn", cfg.fn, "function of z, e.g. \"2*z*(1+exp(-z))\"");
  sub->add_option("--coeffs", cfg.coeffs_path, "coefficient file (poly: header, one 're im' pair per line)");
  sub->add_option("--range", raw.range, "radius window lo:hi")->capture_default_str();
  sub->add_option("--grid", cfg.grid, "profile radii (geometric grid)")->capture_default_str();
  sub->add_option("--tol", cfg.tol, "relative bracket tolerance")->capture_default_str();
  sub->add_option("--C", cfg.C, "exponent C > 1 for maxmin and regularity")->capture_default_str();
  sub->add_option("--alpha", cfg.alpha, "Hayman gap exponent")->capture_default_str();
  sub->add_option("--R", raw.R, "base radius R for regularity");
  sub->add_option("--r", raw.r, "radius for Taylor coefficients (default 1)");
  sub->add_option("--T", raw.T, "orbit threshold (default: from escape-check)");
  sub->add_option("--start", raw.start, "plan start radius for render; start point for the zip diagnostic");
  sub->add_option("--horizon", cfg.horizon, "iteration horizon")->capture_default_str();
  sub->add_option("--window", raw.window, "render window x0:x1:y0:y1")->capture_default_str();
  sub->add_option("--res", cfg.res, "render resolution (square)")->capture_default_str();
  sub->add_option("--out", cfg.out_dir, "output directory")->capture_default_str();
  sub->add_option("--threads", cfg.threads, "worker threads (0: all cores); never changes output")
      ->capture_default_str();
  sub->add_option("--plan", cfg.plan, "m-iterates, envelope-iterates or M-iterates")->capture_default_str();
  sub->add_option("--series", cfg.series, "phi for escape and orbits: m, envelope or M")->capture_default_str();
  sub->add_option("--targets", cfg.targets, "slow-orbit targets lin:a:b or geo:a:q")->capture_default_str();
  sub->add_option("--count", cfg.count, "number of Taylor coefficients")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Minimum modulus, escape conditions and escape-set rendering for entire functions.\n"
               "Exit status: 0 success, 2 negative verdict, 1 error."};
  app.require_subcommand(1);
  minmod::RunConfig cfg;
  RawOptions raw;
  const char* help[] = {"modulus profile CSV",
                        "test m~(r) > r on the window",
                        "fastest orbit certificate",
                        "slow orbit certificate",
                        "order, gaps, maxmin, V = A and regularity report",
                        "search for m^n(r) >= M^n(R)",
                        "regularity sequence for M",
                        "first-exit image (PPM, CSV, JSON)",
                        "Taylor coefficients CSV"};
  for (std::size_t i = 0; i < minmod::subcommands().size(); ++i) {
    CLI::App* sub = app.add_subcommand(minmod::subcommands()[i], help[i]);
    add_options(sub, cfg, raw);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << nlohmann::json{{"error", "usage"}, {"message", e.what()}}.dump() << '\n';
    return minmod::kExitError;
  }
  CLI::App* sub = app.get_subcommands().front();
  cfg.command = sub->get_name();
  try {
    const auto [lo, hi] = minmod::parse_range(raw.range);
    cfg.range_lo = lo;
    cfg.range_hi = hi;
    cfg.window = minmod::parse_window(raw.window);
  } catch (const std::invalid_argument& e) {
    std::cerr << nlohmann::json{{"error", "invalid_argument"}, {"message", e.what()}}.dump() << '\n';
    return minmod::kExitError;
  }
  if (sub->count("--R")) cfg.R = raw.R;
  if (sub->count("--r")) cfg.r = raw.r;
  if (sub->count("--T")) cfg.T = raw.T;
  if (sub->count("--start")) cfg.start = raw.start;
  return minmod::run(cfg, std::cout, std::cerr);
}
