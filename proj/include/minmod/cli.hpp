// Command-line front end shared by the minmod tool and its tests.
#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "minmod/grid.hpp"

namespace minmod {

/// Exit statuses of `run`.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitNegative = 2;  // a correct "fails" or "inapplicable" verdict

struct RunConfig {
  std::string command;
  std::optional<std::string> fn;
  std::optional<std::string> coeffs_path;
  double range_lo = 1.0;
  double range_hi = 100.0;
  std::size_t grid = 400;
  double tol = 1e-10;
  double C = 2.0;
  double alpha = 2.5;
  std::optional<double> R;
  std::optional<double> r;
  std::optional<double> T;
  std::optional<double> start;
  std::size_t horizon = 8;
  Window window{-10.0, 10.0, -10.0, 10.0, 256, 256};
  std::size_t res = 256;
  std::string out_dir = ".";
  unsigned threads = 1;
  std::string plan = "envelope-iterates";
  std::string series = "m";
  std::string targets = "lin:10:1";
  std::size_t count = 32;
};

/// "lo:hi" with lo < hi.
std::pair<double, double> parse_range(const std::string& text);
/// "x0:x1:y0:y1"; the resolution is filled in separately.
Window parse_window(const std::string& text);
/// a_n for n = 0..count-1 from "lin:a:b" (a + b n) or "geo:a:q" (a q^n).
std::vector<double> parse_targets(const std::string& text, std::size_t count);

/// Checks documented ranges; throws std::invalid_argument.
void validate(const RunConfig& cfg);

/// Every parameter except the thread count, which must not affect output.
nlohmann::json config_json(const RunConfig& cfg);

/// Runs one subcommand. Reports go to `out` and to files in cfg.out_dir;
/// failures produce an error JSON object on `err`.
int run(const RunConfig& cfg, std::ostream& out, std::ostream& err);

/// The subcommand names accepted by `run`.
const std::vector<std::string>& subcommands();

}  // namespace minmod
