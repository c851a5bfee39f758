#include "minmod/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "minmod/classify.hpp"
#include "minmod/realdyn.hpp"

namespace minmod {

namespace {

namespace fs = std::filesystem;

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : text) {
    if (c == sep) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  parts.push_back(cur);
  return parts;
}

double to_number(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size() || !std::isfinite(v))
    throw std::invalid_argument("malformed number '" + s + "' in " + what);
  return v;
}

struct Loaded {
  Expr f;
  std::string descriptor;
};

Loaded load_function(const RunConfig& cfg) {
  if (cfg.fn && cfg.coeffs_path) throw std::invalid_argument("give either --fn or --coeffs, not both");
  if (cfg.fn) return {parse(*cfg.fn), *cfg.fn};
  if (cfg.coeffs_path) {
    if (!fs::exists(*cfg.coeffs_path)) throw IoError("cannot read coefficient file " + *cfg.coeffs_path);
    return {load_coefficient_file(*cfg.coeffs_path), "coefficients from " + *cfg.coeffs_path};
  }
  throw std::invalid_argument("a function is required: use --fn or --coeffs");
}

void write_file(const RunConfig& cfg, const std::string& name, const std::string& content) {
  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  const fs::path path = fs::path(cfg.out_dir) / name;
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path.string());
  os << content;
  if (!os) throw IoError("write failed for " + path.string());
}

ModulusOptions modulus_options(const RunConfig& cfg) {
  ModulusOptions o;
  o.tol = cfg.tol;
  o.threads = cfg.threads;
  return o;
}

DynOptions dyn_options(const RunConfig& cfg) {
  DynOptions o;
  o.threads = cfg.threads;
  return o;
}

ProfileSeries series_from_name(const std::string& s) {
  if (s == "m") return ProfileSeries::Min;
  if (s == "envelope") return ProfileSeries::Envelope;
  if (s == "M") return ProfileSeries::Max;
  throw std::invalid_argument("unknown series '" + s + "' (expected m, envelope or M)");
}

std::string coeff_csv(const std::vector<Complex>& c, const std::vector<double>* err) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "k,re,im" << (err ? ",error_bound" : "") << '\n';
  for (std::size_t k = 0; k < c.size(); ++k) {
    os << k << ',' << c[k].real() << ',' << c[k].imag();
    if (err) os << ',' << (*err)[k];
    os << '\n';
  }
  return os.str();
}

struct Outcome {
  nlohmann::json result;
  bool negative = false;
};

Outcome cmd_profile(const RunConfig& cfg, const Loaded& L) {
  const ModulusProfile p = build_profile(L.f, cfg.range_lo, cfg.range_hi, cfg.grid, modulus_options(cfg));
  write_file(cfg, "profile.csv", profile_csv(p));
  std::size_t uncertified = 0;
  for (std::size_t i = 0; i < p.size(); ++i) uncertified += !p.min[i].certified + !p.max[i].certified;
  return {{{"rows", p.size()}, {"uncertified_brackets", uncertified}, {"files", {"profile.csv"}}}, false};
}

Outcome cmd_escape(const RunConfig& cfg, const Loaded& L) {
  const ModulusProfile p = build_profile(L.f, cfg.range_lo, cfg.range_hi, cfg.grid, modulus_options(cfg));
  const EscapeVerdict v = check_escape(phi_from_profile(p, series_from_name(cfg.series)), dyn_options(cfg));
  nlohmann::json j = to_json(v);
  j["crossings"] = nlohmann::json::array();
  for (const Crossing& c : envelope_crossings(p)) {
    j["crossings"].push_back(
        {{"radius", c.radius}, {"direction", c.direction == CrossingDirection::Up ? "up" : "down"}});
  }
  return {j, v.outcome == EscapeOutcome::Fails};
}

Outcome cmd_orbit(const RunConfig& cfg, const Loaded& L, bool slow) {
  const ModulusProfile p = build_profile(L.f, cfg.range_lo, cfg.range_hi, cfg.grid, modulus_options(cfg));
  const PhiFunction phi = phi_from_profile(p, series_from_name(cfg.series));
  const DynOptions opts = dyn_options(cfg);
  double T = 0.0;
  if (cfg.T) {
    T = *cfg.T;
  } else {
    const EscapeVerdict v = check_escape(phi, opts);
    if (v.outcome == EscapeOutcome::Fails) {
      return {{{"verdict", "escape condition fails on the window"}, {"escape", to_json(v)}}, true};
    }
    T = *v.threshold * (1.0 + 1e-9);
  }
  try {
    const OrbitCertificate c = slow ? slow_orbit(phi, T, parse_targets(cfg.targets, cfg.horizon + 1), cfg.horizon, opts)
                                    : fastest_orbit(phi, T, cfg.horizon, opts);
    const ReplayReport r = replay(c, phi, opts);
    return {{{"certificate", to_json(c)},
             {"replay", {{"ok", r.ok}, {"failures", r.failures}, {"max_residual", r.max_residual}}}},
            !r.ok};
  } catch (const CoveringError& e) {
    return {{{"verdict", "no covering"}, {"step", e.step()}, {"reason", e.what()}}, true};
  } catch (const InapplicableError& e) {
    return {{{"verdict", "inapplicable"}, {"reason", e.what()}}, true};
  }
}

std::vector<ExtReal> point_orbit(const Expr& f, double z0, std::size_t steps) {
  const CompiledExpr fc(f);
  std::vector<ExtReal> out;
  Complex w{z0, 0.0};
  for (std::size_t n = 0; n < steps; ++n) {
    const EvalResult e = fc(w);
    if (!e.is_finite()) {
      if (e.log_valid()) out.push_back(ExtReal::from_log(e.log_abs()));
      break;
    }
    w = e.value();
    out.push_back(ExtReal::from_value(std::abs(w)));
  }
  return out;
}

Outcome cmd_classify(const RunConfig& cfg, const Loaded& L) {
  const ModulusProfile p = build_profile(L.f, cfg.range_lo, cfg.range_hi, cfg.grid, modulus_options(cfg));
  ClassificationReport rep;
  rep.descriptor = L.descriptor;
  nlohmann::json notes = nlohmann::json::object();
  try {
    rep.orders = estimate_orders(p);
  } catch (const ClassifyError& e) {
    notes["orders"] = e.what();
  }
  try {
    std::vector<Complex> coeffs;
    if (L.f.root().kind == NodeKind::Coeffs) coeffs = L.f.root().series->coeffs;
    else coeffs = taylor_coefficients(L.f, cfg.count, cfg.r.value_or(1.0)).coeffs;
    rep.gaps = gap_analysis(coeffs, 1e-12, cfg.alpha);
  } catch (const std::exception& e) {
    notes["gaps"] = e.what();
  }
  try {
    rep.maxmin = maxmin_check(p, cfg.C);
  } catch (const ClassifyError& e) {
    notes["maxmin"] = e.what();
  }
  const GrowthModel mm = growth_model_from_profile(p, ProfileSeries::Min);
  const GrowthModel MM = growth_model_from_profile(p, ProfileSeries::Max);
  try {
    rep.va = va_check(p, mm, MM, cfg.horizon);
  } catch (const ClassifyError& e) {
    notes["va"] = e.what();
  }
  try {
    const double R = cfg.R.value_or(rep.va && rep.va->found ? rep.va->R : std::max(cfg.range_lo, std::exp(1.0)));
    rep.regularity = regularity_check(MM, R, cfg.C, cfg.horizon);
  } catch (const std::exception& e) {
    notes["regularity"] = e.what();
  }
  if (cfg.start) rep.zip = zip_rate(point_orbit(L.f, *cfg.start, cfg.horizon));
  nlohmann::json j = to_json(rep);
  j["notes"] = notes;
  write_file(cfg, "classify.json", j.dump(2) + "\n");
  return {j, false};
}

Outcome cmd_va(const RunConfig& cfg, const Loaded& L) {
  const ModulusProfile p = build_profile(L.f, cfg.range_lo, cfg.range_hi, cfg.grid, modulus_options(cfg));
  const VaReport v = va_check(p, growth_model_from_profile(p, ProfileSeries::Min),
                              growth_model_from_profile(p, ProfileSeries::Max), cfg.horizon);
  return {to_json(v), !v.found};
}

Outcome cmd_regularity(const RunConfig& cfg, const Loaded& L) {
  if (!cfg.R) throw std::invalid_argument("regularity needs --R");
  const ModulusProfile p = build_profile(L.f, cfg.range_lo, cfg.range_hi, cfg.grid, modulus_options(cfg));
  const RegularityReport r =
      regularity_check(growth_model_from_profile(p, ProfileSeries::Max), *cfg.R, cfg.C, cfg.horizon);
  return {to_json(r), !r.feasible};
}

Outcome cmd_render(const RunConfig& cfg, const Loaded& L) {
  if (!cfg.start) throw std::invalid_argument("render needs --start");
  const PlanKind kind = plan_kind_from_name(cfg.plan);
  if (kind == PlanKind::Custom) throw std::invalid_argument("render builds plans from a profile; custom is not available");
  const ModulusProfile p = build_profile(L.f, cfg.range_lo, cfg.range_hi, cfg.grid, modulus_options(cfg));
  ThresholdPlan plan;
  try {
    plan = plan_thresholds(p, kind, *cfg.start, cfg.horizon);
  } catch (const PlanError& e) {
    return {{{"verdict", "threshold iterates do not increase"}, {"step", e.step()}, {"reason", e.what()}}, true};
  }
  Window w = cfg.window;
  w.width = w.height = cfg.res;
  const EscapeGrid g = render_escape_grid(L.f, plan, w, cfg.horizon, cfg.threads);
  nlohmann::json side = sidecar_json(g, plan);
  side["function"] = L.descriptor;
  write_file(cfg, "render.ppm", to_ppm(g));
  write_file(cfg, "render.csv", to_csv(g));
  write_file(cfg, "render.json", side.dump(2) + "\n");
  side["files"] = {"render.ppm", "render.csv", "render.json"};
  return {side, false};
}

Outcome cmd_coeffs(const RunConfig& cfg, const Loaded& L) {
  std::string csv;
  if (L.f.root().kind == NodeKind::Coeffs) {
    csv = coeff_csv(L.f.root().series->coeffs, nullptr);
  } else {
    const TaylorResult t = taylor_coefficients(L.f, cfg.count, cfg.r.value_or(1.0));
    csv = coeff_csv(t.coeffs, &t.error_bound);
  }
  write_file(cfg, "coeffs.csv", csv);
  return {{{"count", cfg.count}, {"radius", cfg.r.value_or(1.0)}, {"files", {"coeffs.csv"}}}, false};
}

nlohmann::json error_json(const std::string& kind, const std::string& message) {
  return {{"error", kind}, {"message", message}};
}

}  // namespace

std::pair<double, double> parse_range(const std::string& text) {
  const auto parts = split(text, ':');
  if (parts.size() != 2) throw std::invalid_argument("range must look like lo:hi");
  const double lo = to_number(parts[0], "range"), hi = to_number(parts[1], "range");
  if (!(lo > 0.0 && hi > lo)) throw std::invalid_argument("range needs 0 < lo < hi");
  return {lo, hi};
}

Window parse_window(const std::string& text) {
  const auto parts = split(text, ':');
  if (parts.size() != 4) throw std::invalid_argument("window must look like x0:x1:y0:y1");
  Window w;
  w.x0 = to_number(parts[0], "window");
  w.x1 = to_number(parts[1], "window");
  w.y0 = to_number(parts[2], "window");
  w.y1 = to_number(parts[3], "window");
  if (!(w.x1 > w.x0 && w.y1 > w.y0)) throw std::invalid_argument("window needs x0 < x1 and y0 < y1");
  return w;
}

std::vector<double> parse_targets(const std::string& text, std::size_t count) {
  const auto parts = split(text, ':');
  if (parts.size() != 3 || (parts[0] != "lin" && parts[0] != "geo"))
    throw std::invalid_argument("targets must look like lin:a:b or geo:a:q");
  const double a = to_number(parts[1], "targets"), b = to_number(parts[2], "targets");
  std::vector<double> out(count);
  for (std::size_t n = 0; n < count; ++n)
    out[n] = parts[0] == "lin" ? a + b * static_cast<double>(n) : a * std::pow(b, static_cast<double>(n));
  return out;
}

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"profile",  "escape-check", "orbit-fast", "orbit-slow", "classify",
                                              "va-check", "regularity",   "render",     "coeffs"};
  return names;
}

void validate(const RunConfig& c) {
  auto need = [](bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
  };
  need(std::find(subcommands().begin(), subcommands().end(), c.command) != subcommands().end(),
       "unknown subcommand '" + c.command + "'");
  need(c.range_lo > 0.0 && c.range_hi > c.range_lo && std::isfinite(c.range_hi), "range needs 0 < lo < hi");
  need(c.grid >= 8 && c.grid <= 1000000, "grid must lie in [8, 1e6]");
  need(c.tol > 0.0 && c.tol <= 0.1, "tol must lie in (0, 0.1]");
  need(c.C > 1.0 && c.C <= 1000.0, "C must lie in (1, 1000]");
  need(std::isfinite(c.alpha) && c.alpha > 0.0, "alpha must be positive");
  need(c.horizon >= 1 && c.horizon <= 100000, "horizon must lie in [1, 1e5]");
  need(c.res >= 1 && c.res <= 8192, "res must lie in [1, 8192]");
  need(c.count >= 1 && c.count <= 100000, "count must lie in [1, 1e5]");
  need(c.threads <= 1024, "threads must be at most 1024");
  need(c.window.x1 > c.window.x0 && c.window.y1 > c.window.y0, "window needs x0 < x1 and y0 < y1");
  need(!c.R || *c.R > 1.0, "R must exceed 1");
  need(!c.r || *c.r > 0.0, "r must be positive");
  need(!c.T || *c.T > 0.0, "T must be positive");
  need(!c.start || std::isfinite(*c.start), "start must be finite");
}

nlohmann::json config_json(const RunConfig& c) {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  return {{"fn", c.fn ? nlohmann::json(*c.fn) : nlohmann::json(nullptr)},
          {"coeffs", c.coeffs_path ? nlohmann::json(*c.coeffs_path) : nlohmann::json(nullptr)},
          {"range", {c.range_lo, c.range_hi}},
          {"grid", c.grid},
          {"tol", c.tol},
          {"C", c.C},
          {"alpha", c.alpha},
          {"R", opt(c.R)},
          {"r", opt(c.r)},
          {"T", opt(c.T)},
          {"start", opt(c.start)},
          {"horizon", c.horizon},
          {"window", {c.window.x0, c.window.x1, c.window.y0, c.window.y1}},
          {"res", c.res},
          {"plan", c.plan},
          {"series", c.series},
          {"targets", c.targets},
          {"count", c.count}};
}

int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    validate(cfg);
    const Loaded L = load_function(cfg);
    Outcome o;
    const std::string& c = cfg.command;
    if (c == "profile") o = cmd_profile(cfg, L);
    else if (c == "escape-check") o = cmd_escape(cfg, L);
    else if (c == "orbit-fast") o = cmd_orbit(cfg, L, false);
    else if (c == "orbit-slow") o = cmd_orbit(cfg, L, true);
    else if (c == "classify") o = cmd_classify(cfg, L);
    else if (c == "va-check") o = cmd_va(cfg, L);
    else if (c == "regularity") o = cmd_regularity(cfg, L);
    else if (c == "render") o = cmd_render(cfg, L);
    else o = cmd_coeffs(cfg, L);
    const nlohmann::json doc{{"schema_version", 1},
                             {"command", c},
                             {"function", L.descriptor},
                             {"config", config_json(cfg)},
                             {"status", o.negative ? "negative" : "ok"},
                             {"result", o.result}};
    out << doc.dump(2) << '\n';
    return o.negative ? kExitNegative : kExitOk;
  } catch (const ParseError& e) {
    nlohmann::json j = error_json("parse", e.what());
    j["offset"] = e.offset();
    err << j.dump() << '\n';
  } catch (const IoError& e) {
    err << error_json("io", e.what()).dump() << '\n';
  } catch (const std::invalid_argument& e) {
    err << error_json("invalid_argument", e.what()).dump() << '\n';
  } catch (const std::exception& e) {
    err << error_json("runtime", e.what()).dump() << '\n';
  }
  return kExitError;
}

}  // namespace minmod
