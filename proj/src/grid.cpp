#include "minmod/grid.hpp"

#include <array>
#include <cmath>
#include <map>
#include <sstream>

#include "minmod/classify.hpp"
#include "minmod/eval.hpp"
#include "minmod/parallel.hpp"

namespace minmod {

namespace {

constexpr std::array<std::array<std::uint8_t, 3>, 16> kPalette{{
    {230, 25, 75},   {60, 180, 75},   {255, 225, 25}, {0, 130, 200},  {245, 130, 48},  {145, 30, 180},
    {70, 240, 240},  {240, 50, 230},  {210, 245, 60}, {250, 190, 212}, {0, 128, 128},  {220, 190, 255},
    {170, 110, 40},  {255, 250, 200}, {128, 0, 0},    {170, 255, 195},
}};

ProfileSeries series_for(PlanKind k) {
  switch (k) {
    case PlanKind::MIterates: return ProfileSeries::Min;
    case PlanKind::EnvelopeIterates: return ProfileSeries::Envelope;
    case PlanKind::MaxIterates: return ProfileSeries::Max;
    case PlanKind::Custom: break;
  }
  throw std::invalid_argument("a custom plan cannot be built from a profile");
}

void check_increasing(const ThresholdPlan& p) {
  for (std::size_t n = 1; n < p.radii.size(); ++n) {
    if (p.saturated[n]) break;
    if (!(p.radii[n] > p.radii[n - 1])) {
      throw PlanError(n, "threshold radii stop increasing at step " + std::to_string(n) + ": " +
                             p.radii[n - 1].describe() + " -> " + p.radii[n].describe());
    }
  }
}

}  // namespace

std::string plan_kind_name(PlanKind k) {
  switch (k) {
    case PlanKind::MIterates: return "m-iterates";
    case PlanKind::EnvelopeIterates: return "envelope-iterates";
    case PlanKind::MaxIterates: return "M-iterates";
    case PlanKind::Custom: return "custom";
  }
  return "?";
}

PlanKind plan_kind_from_name(const std::string& name) {
  for (PlanKind k : {PlanKind::MIterates, PlanKind::EnvelopeIterates, PlanKind::MaxIterates, PlanKind::Custom}) {
    if (plan_kind_name(k) == name) return k;
  }
  throw std::invalid_argument("unknown plan kind '" + name + "'");
}

ThresholdPlan plan_thresholds(const GrowthModel& model, PlanKind kind, double start, std::size_t horizon) {
  if (horizon == 0) throw std::invalid_argument("horizon must be at least 1");
  if (!(start > 0.0)) throw std::invalid_argument("plan start must be positive");
  ThresholdPlan p;
  p.kind = kind;
  p.source = model.descriptor();
  p.radii.push_back(ExtReal::from_value(start));
  p.flags.push_back(Regime::Sampled);
  p.saturated.push_back(false);
  bool saturated = false;
  for (std::size_t n = 1; n <= horizon; ++n) {
    if (saturated) {
      p.radii.push_back(ExtReal::infinity());
      p.flags.push_back(Regime::Extrapolated);
      p.saturated.push_back(true);
      continue;
    }
    GrowthValue g;
    try {
      g = model(p.radii.back());
    } catch (const std::out_of_range& e) {
      throw PlanError(n, std::string("threshold iterate left the model range: ") + e.what());
    }
    const Regime flag = g.regime == Regime::Extrapolated || p.flags.back() == Regime::Extrapolated
                            ? Regime::Extrapolated
                            : Regime::Sampled;
    saturated = g.value.level() > 2;
    p.radii.push_back(saturated ? ExtReal::infinity() : g.value);
    p.flags.push_back(flag);
    p.saturated.push_back(saturated);
  }
  check_increasing(p);
  return p;
}

ThresholdPlan plan_thresholds(const ModulusProfile& profile, PlanKind kind, double start, std::size_t horizon) {
  return plan_thresholds(growth_model_from_profile(profile, series_for(kind)), kind, start, horizon);
}

ThresholdPlan custom_plan(std::vector<ExtReal> radii, std::string source) {
  if (radii.empty()) throw std::invalid_argument("custom plan needs at least one radius");
  ThresholdPlan p;
  p.kind = PlanKind::Custom;
  p.source = std::move(source);
  p.flags.assign(radii.size(), Regime::Sampled);
  for (const ExtReal& r : radii) p.saturated.push_back(r.is_infinite());
  p.radii = std::move(radii);
  check_increasing(p);
  return p;
}

Complex pixel_center(const Window& w, std::size_t col, std::size_t row) {
  const double x = w.x0 + (w.x1 - w.x0) * (static_cast<double>(col) + 0.5) / static_cast<double>(w.width);
  const double y = w.y1 - (w.y1 - w.y0) * (static_cast<double>(row) + 0.5) / static_cast<double>(w.height);
  return {x, y};
}

PointResult classify_point(const CompiledExpr& f, const ThresholdPlan& plan, Complex z, std::size_t horizon) {
  PointResult out;
  Complex w = z;
  out.last_log = std::log(std::abs(w));
  for (std::size_t n = 0;; ++n) {
    if (ExtReal::from_value(std::abs(w)) >= plan.radii[n]) {
      out.exit = static_cast<int>(n);
      return out;
    }
    if (n == horizon) return out;
    const EvalResult next = f(w);
    if (!next.is_finite() || !std::isfinite(std::abs(next.value()))) {
      out.exit = static_cast<int>(n + 1);
      out.overflow = true;
      if (next.log_valid() && std::isfinite(next.log_abs())) out.last_log = next.log_abs();
      return out;
    }
    w = next.value();
    out.last_log = std::log(std::abs(w));
  }
}

EscapeGrid render_escape_grid(const Expr& f, const ThresholdPlan& plan, const Window& window, std::size_t horizon,
                              unsigned threads) {
  if (window.width == 0 || window.height == 0) throw std::invalid_argument("window resolution must be positive");
  if (!(window.x1 > window.x0) || !(window.y1 > window.y0))
    throw std::invalid_argument("window must satisfy x0 < x1 and y0 < y1");
  if (plan.radii.size() <= horizon) throw std::invalid_argument("plan is shorter than the horizon");
  const CompiledExpr fc(f);
  EscapeGrid g;
  g.window = window;
  g.horizon = horizon;
  const std::size_t n = window.width * window.height;
  g.exit.assign(n, -1);
  g.overflow.assign(n, 0);
  g.last_log.assign(n, 0.0);
  parallel_for(window.height, threads, [&](std::size_t row) {
    for (std::size_t col = 0; col < window.width; ++col) {
      const PointResult r = classify_point(fc, plan, pixel_center(window, col, row), horizon);
      const std::size_t i = g.index(col, row);
      g.exit[i] = r.exit;
      g.overflow[i] = r.overflow ? 1 : 0;
      g.last_log[i] = r.last_log;
    }
  });
  return g;
}

std::string to_ppm(const EscapeGrid& g) {
  std::string out = "P6\n" + std::to_string(g.window.width) + " " + std::to_string(g.window.height) + "\n255\n";
  out.reserve(out.size() + 3 * g.exit.size());
  for (int e : g.exit) {
    if (e < 0) {
      out.append(3, '\0');
    } else {
      for (std::uint8_t c : kPalette[static_cast<std::size_t>(e) % kPalette.size()]) out.push_back(static_cast<char>(c));
    }
  }
  return out;
}

std::string to_csv(const EscapeGrid& g) {
  std::ostringstream os;
  for (std::size_t row = 0; row < g.window.height; ++row) {
    for (std::size_t col = 0; col < g.window.width; ++col) {
      if (col) os << ',';
      os << g.exit[g.index(col, row)];
    }
    os << '\n';
  }
  return os.str();
}

nlohmann::json to_json(const ThresholdPlan& p) {
  nlohmann::json radii = nlohmann::json::array();
  for (std::size_t n = 0; n < p.radii.size(); ++n) {
    radii.push_back({{"n", n},
                     {"radius", to_json(p.radii[n])},
                     {"regime", regime_name(p.flags[n])},
                     {"saturated", static_cast<bool>(p.saturated[n])}});
  }
  return {{"kind", plan_kind_name(p.kind)}, {"source", p.source}, {"radii", radii}};
}

nlohmann::json sidecar_json(const EscapeGrid& g, const ThresholdPlan& p) {
  std::map<int, std::size_t> hist;
  std::size_t overflow = 0;
  for (std::size_t i = 0; i < g.exit.size(); ++i) {
    ++hist[g.exit[i]];
    overflow += g.overflow[i];
  }
  nlohmann::json h = nlohmann::json::object();
  for (const auto& [k, v] : hist) h[k < 0 ? std::string("none") : std::to_string(k)] = v;
  const Window& w = g.window;
  return {{"schema_version", 1},
          {"plan", to_json(p)},
          {"window", {{"x0", w.x0}, {"x1", w.x1}, {"y0", w.y0}, {"y1", w.y1}, {"width", w.width}, {"height", w.height}}},
          {"horizon", g.horizon},
          {"pixel_rule", "least n in 0..horizon with |f^n(z)| >= radius[n]; pixel centres, row 0 at the top"},
          {"threshold_shape", "circles"},
          {"exit_histogram", h},
          {"overflow_pixels", overflow}};
}

}  // namespace minmod
