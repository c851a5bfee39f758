// Minimum and maximum modulus on circles, and profiles over radius grids.
#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "minmod/eval.hpp"
#include "minmod/expr.hpp"
#include "minmod/growth_model.hpp"

namespace minmod {

enum class ExtremumKind { Min, Max };

/// Bracket on min or max of |f| over |z| = radius.
///
/// `low`/`high` are plain values and may saturate to 0 or inf; `ln_low` and
/// `ln_high` always carry the bracket in log form. When `log_domain` is set the
/// refinement ran on ln|f| and the tolerance applies to the log bracket.
struct CircleExtremum {
  double radius = 0.0;
  ExtremumKind kind = ExtremumKind::Min;
  double low = 0.0;
  double high = 0.0;
  double ln_low = 0.0;
  double ln_high = 0.0;
  double arg_theta = 0.0;
  bool certified = false;
  bool log_domain = false;
  std::size_t evaluations = 0;
};

struct ModulusOptions {
  double tol = 1e-10;
  std::size_t initial_samples = 512;
  std::size_t max_evals = 200000;
  /// Worker hint for profiles; 0 picks the hardware concurrency.
  unsigned threads = 1;
  /// Insert geometric midpoints around interior local maxima of m.
  bool refine_envelope = true;
};

class ModulusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shares the compiled function and its derivative across many circles.
class ModulusSolver {
 public:
  explicit ModulusSolver(const Expr& f, ModulusOptions opts = {});

  CircleExtremum min(double r) const;
  CircleExtremum max(double r) const;

  /// True when f(conj z) == conj f(z) at a fixed set of probe points; the
  /// search then covers theta in [0, pi] only.
  bool symmetric() const { return symmetric_; }
  const Expr& function() const { return f_; }
  const ModulusOptions& options() const { return opts_; }

 private:
  CircleExtremum solve(double r, ExtremumKind kind) const;

  Expr f_;
  CompiledExpr fc_;
  CompiledExpr dfc_;
  ModulusOptions opts_;
  bool symmetric_ = false;
};

CircleExtremum min_modulus(const Expr& f, double r, double tol);
CircleExtremum max_modulus(const Expr& f, double r, double tol);

struct ModulusProfile {
  std::vector<double> radii;
  std::vector<CircleExtremum> min;
  std::vector<CircleExtremum> max;
  /// Running maximum of min[i].low from the first grid radius.
  std::vector<double> envelope;
  std::vector<double> ln_envelope;
  std::vector<std::size_t> envelope_src;
  /// Present for profiles built from a function; needed for crossing refinement.
  std::optional<Expr> f;
  ModulusOptions options;

  std::size_t size() const { return radii.size(); }
};

/// Geometric grid of `grid` radii on [r_min, r_max], extrema at each radius,
/// then one level of local subdivision around interior maxima of m.
ModulusProfile build_profile(const Expr& f, double r_min, double r_max, std::size_t grid,
                             ModulusOptions opts = {});

/// Recomputes envelope, ln_envelope and envelope_src from the min brackets.
void recompute_envelope(ModulusProfile& profile);

enum class CrossingDirection { Up, Down };

struct Crossing {
  double radius = 0.0;
  /// Up: envelope - r changes from negative to positive as r increases.
  CrossingDirection direction = CrossingDirection::Up;
  std::size_t grid_index = 0;  // left grid point of the bracketing pair
};

/// Sign changes of envelope(r) - r between adjacent grid points, refined by
/// bisection to 1e-6 r when the profile carries its function. Differences
/// within `zero_tol * r` of zero count as no sign.
std::vector<Crossing> envelope_crossings(const ModulusProfile& profile, double zero_tol = 1e-9);

std::string profile_csv(const ModulusProfile& profile);

enum class ProfileSeries { Min, Envelope, Max };

/// Growth model on the profile radii. Min uses the lower bracket of m, Max
/// the upper bracket of M. Rows with non-positive values are dropped.
GrowthModel growth_model_from_profile(const ModulusProfile& profile, ProfileSeries series);

}  // namespace minmod
