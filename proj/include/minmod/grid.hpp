// First-exit rendering of a rectangle of the plane against an increasing
// sequence of threshold circles.
#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "minmod/growth_model.hpp"
#include "minmod/modulus.hpp"

namespace minmod {

enum class PlanKind { MIterates, EnvelopeIterates, MaxIterates, Custom };
std::string plan_kind_name(PlanKind k);
PlanKind plan_kind_from_name(const std::string& name);

struct ThresholdPlan {
  PlanKind kind = PlanKind::Custom;
  std::vector<ExtReal> radii;
  std::vector<Regime> flags;
  /// Entries past tower level 2 are replaced by infinity and flagged here.
  std::vector<bool> saturated;
  std::string source;
};

class PlanError : public std::runtime_error {
 public:
  PlanError(std::size_t step, const std::string& what) : std::runtime_error(what), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

/// radii[n] = model^n(start) for n = 0..horizon. Throws PlanError when the
/// iterates stop increasing or leave the model's range.
ThresholdPlan plan_thresholds(const GrowthModel& model, PlanKind kind, double start, std::size_t horizon);
/// Uses the profile series matching `kind` (m, envelope or M).
ThresholdPlan plan_thresholds(const ModulusProfile& profile, PlanKind kind, double start, std::size_t horizon);
ThresholdPlan custom_plan(std::vector<ExtReal> radii, std::string source);

struct Window {
  double x0 = -1.0;
  double x1 = 1.0;
  double y0 = -1.0;
  double y1 = 1.0;
  std::size_t width = 64;
  std::size_t height = 64;
};

/// Pixel (col, row) center; row 0 is the top edge (y1).
Complex pixel_center(const Window& w, std::size_t col, std::size_t row);

struct PointResult {
  int exit = -1;  // least n with |f^n(z)| >= radii[n], -1 if none
  bool overflow = false;
  double last_log = 0.0;  // ln |w_n| at the last finite iterate
};

/// Iterates z, f(z), ... comparing |w_n| with radii[n] for n = 0..horizon.
/// An iterate that cannot be represented counts as an exit with the
/// overflow flag set.
PointResult classify_point(const CompiledExpr& f, const ThresholdPlan& plan, Complex z, std::size_t horizon);

struct EscapeGrid {
  Window window;
  std::size_t horizon = 0;
  std::vector<int> exit;  // row-major
  std::vector<std::uint8_t> overflow;
  std::vector<double> last_log;

  std::size_t index(std::size_t col, std::size_t row) const { return row * window.width + col; }
};

/// Requires plan.radii.size() > horizon.
EscapeGrid render_escape_grid(const Expr& f, const ThresholdPlan& plan, const Window& window, std::size_t horizon,
                              unsigned threads = 1);

/// Binary P6 image; exit index modulo a 16-colour palette, no exit black.
std::string to_ppm(const EscapeGrid& g);
/// One line per image row of comma-separated exit indices.
std::string to_csv(const EscapeGrid& g);
nlohmann::json to_json(const ThresholdPlan& p);
nlohmann::json sidecar_json(const EscapeGrid& g, const ThresholdPlan& p);

}  // namespace minmod
