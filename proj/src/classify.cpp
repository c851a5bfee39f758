#include "minmod/classify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace minmod {

namespace {

constexpr double kLn10 = 2.302585092994046;

struct Pt {
  double x;
  double y;
};

double cross(const Pt& a, const Pt& b, const Pt& c) {
  return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

// Vertices of the upper (sign = 1) or lower (sign = -1) hull of points
// sorted by x.
std::vector<Pt> hull(const std::vector<Pt>& pts, double sign) {
  std::vector<Pt> h;
  for (const Pt& p : pts) {
    while (h.size() >= 2 && sign * cross(h[h.size() - 2], h.back(), p) >= 0.0) h.pop_back();
    h.push_back(p);
  }
  return h;
}

SlopeFit ls_slope(const std::vector<Pt>& pts) {
  SlopeFit f;
  f.points = pts.size();
  const double n = static_cast<double>(pts.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const Pt& p : pts) {
    sx += p.x;
    sy += p.y;
    sxx += p.x * p.x;
    sxy += p.x * p.y;
  }
  const double den = n * sxx - sx * sx;
  if (!(den > 0.0)) throw ClassifyError("degenerate slope fit");
  f.value = (n * sxy - sx * sy) / den;
  const double icpt = (sy - f.value * sx) / n;
  double ss = 0.0;
  for (const Pt& p : pts) ss += std::pow(p.y - (f.value * p.x + icpt), 2);
  f.residual = std::sqrt(ss / n);
  return f;
}

// ln ln r as a double; r > 1.
double lnln(const ExtReal& r) { return r.log().log().to_double(); }

bool is_extrapolated(Regime r) { return r == Regime::Extrapolated; }

}  // namespace

OrderEstimate estimate_orders(const ModulusProfile& profile) {
  std::vector<Pt> rows;
  for (std::size_t i = 0; i < profile.size(); ++i) {
    const double lm = profile.max[i].ln_high;
    if (std::isfinite(lm) && lm > 0.0) rows.push_back({std::log(profile.radii[i]), std::log(lm)});
  }
  if (rows.size() < 3 || rows.back().x - rows.front().x < 2.0 * kLn10 * (1.0 - 1e-9))
    throw ClassifyError("profile spans less than two decades with finite ln M > 0");
  const double top = rows.back().x - kLn10;
  std::vector<Pt> fit;
  for (const Pt& p : rows) {
    if (p.x >= top) fit.push_back(p);
  }
  OrderEstimate out;
  out.r_lo = std::exp(fit.front().x);
  out.r_hi = std::exp(fit.back().x);
  out.order = ls_slope(hull(fit, 1.0));
  out.lower_order = ls_slope(hull(fit, -1.0));
  double hi = -std::numeric_limits<double>::infinity(), lo = std::numeric_limits<double>::infinity();
  for (const Pt& p : fit) {
    const double t = std::exp(p.y - out.order.value * p.x);  // ln M / r^rho
    hi = std::max(hi, t);
    lo = std::min(lo, t);
  }
  out.type = SlopeFit{hi, hi - lo, fit.size()};
  return out;
}

std::string gap_verdict_name(GapVerdict v) {
  switch (v) {
    case GapVerdict::Consistent: return "consistent";
    case GapVerdict::Inconsistent: return "inconsistent";
    case GapVerdict::Inconclusive: return "inconclusive";
  }
  return "?";
}

GapReport gap_analysis(const std::vector<Complex>& coeffs, double zero_tol, double alpha) {
  GapReport g;
  g.zero_tol = zero_tol;
  g.alpha = alpha;
  const std::size_t n = coeffs.size();
  for (std::size_t j = 0; j < n; ++j) {
    double near = 0.0;
    for (std::size_t i = j >= 2 ? j - 2 : 0; i <= std::min(n - 1, j + 2); ++i) near = std::max(near, std::abs(coeffs[i]));
    if (std::abs(coeffs[j]) > zero_tol * near) g.indices.push_back(j);
  }
  if (g.indices.size() < 10) throw ClassifyError("fewer than 10 nonzero coefficients");

  const std::size_t K = g.indices.size();
  std::vector<Pt> ratio;
  for (std::size_t k = std::max<std::size_t>(K / 2, 1); k < K; ++k)
    ratio.push_back({static_cast<double>(k), static_cast<double>(g.indices[k]) / static_cast<double>(k)});
  g.fabry_slope = ls_slope(ratio).value;
  double mean = 0.0;
  for (const Pt& p : ratio) mean += p.y;
  mean /= static_cast<double>(ratio.size());
  g.fabry_statistic = g.fabry_slope * (ratio.back().x - ratio.front().x) / mean;
  if (g.fabry_statistic >= 0.25) g.fabry = GapVerdict::Consistent;
  else if (std::abs(g.fabry_statistic) <= 0.05) g.fabry = GapVerdict::Inconsistent;
  else g.fabry = GapVerdict::Inconclusive;

  for (std::size_t k = 10; k < K; ++k) {
    const double kk = static_cast<double>(k);
    const double bound = kk * std::log(kk) * std::pow(std::log(std::log(kk)), alpha);
    ++g.hayman_tested;
    if (static_cast<double>(g.indices[k]) > bound) ++g.hayman_satisfied;
  }
  g.hayman_fraction = g.hayman_tested ? static_cast<double>(g.hayman_satisfied) / g.hayman_tested : 0.0;
  return g;
}

std::string maxmin_status_name(MaxminStatus s) {
  switch (s) {
    case MaxminStatus::Witness: return "witness";
    case MaxminStatus::Failure: return "failure";
    case MaxminStatus::CoverageGap: return "coverage_gap";
  }
  return "?";
}

MaxminReport maxmin_check(const ModulusProfile& profile, double C, const std::vector<double>& radii) {
  if (!(C > 1.0)) throw std::invalid_argument("C must exceed 1");
  const std::vector<double>& grid = profile.radii;
  if (grid.empty()) throw ClassifyError("empty profile");
  std::vector<std::size_t> tested;
  if (radii.empty()) {
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (grid[i] > 1.0 && C * std::log(grid[i]) <= std::log(grid.back()) * (1 + 1e-12)) tested.push_back(i);
    }
  } else {
    for (double r : radii) {
      const auto it = std::lower_bound(grid.begin(), grid.end(), r * (1 - 1e-12));
      if (it == grid.end() || std::abs(*it - r) > 1e-12 * r)
        throw std::invalid_argument("maxmin radius " + std::to_string(r) + " is not a profile grid point");
      if (!(r > 1.0)) throw std::invalid_argument("maxmin radii must exceed 1");
      tested.push_back(static_cast<std::size_t>(it - grid.begin()));
    }
  }
  if (tested.empty()) throw ClassifyError("no radius r with [r, r^C] inside the profile");

  MaxminReport rep;
  rep.C = C;
  for (std::size_t i : tested) {
    MaxminEntry e;
    e.r = grid[i];
    e.ln_M = profile.max[i].ln_high;
    const double ln_top = C * std::log(e.r);
    const double slack = 1e-12 * std::abs(ln_top);
    e.status = ln_top > std::log(grid.back()) + slack ? MaxminStatus::CoverageGap : MaxminStatus::Failure;
    for (std::size_t j = i + 1; j < grid.size() && std::log(grid[j]) < ln_top - slack; ++j) {
      if (profile.min[j].ln_low >= e.ln_M) {
        e.status = MaxminStatus::Witness;
        e.s = grid[j];
        e.ln_m = profile.min[j].ln_low;
        break;
      }
    }
    switch (e.status) {
      case MaxminStatus::Witness: ++rep.witnesses; break;
      case MaxminStatus::Failure: ++rep.failures; break;
      case MaxminStatus::CoverageGap: ++rep.gaps; break;
    }
    rep.entries.push_back(e);
  }
  rep.pass_fraction = static_cast<double>(rep.witnesses) / static_cast<double>(rep.entries.size());
  return rep;
}

VaReport va_check(const ModulusProfile& profile, const GrowthModel& model_m, const GrowthModel& model_M,
                  std::size_t horizon) {
  if (horizon == 0) throw std::invalid_argument("horizon must be at least 1");
  const std::vector<double>& grid = profile.radii;
  const std::size_t N = grid.size();
  std::vector<bool> above(N + 1, true);  // envelope > identity on grid[i..]
  for (std::size_t i = N; i-- > 0;) above[i] = above[i + 1] && profile.envelope[i] > grid[i];

  std::map<std::size_t, std::optional<std::vector<GrowthValue>>> m_cache;
  auto m_iter = [&](std::size_t j) -> const std::optional<std::vector<GrowthValue>>& {
    auto it = m_cache.find(j);
    if (it != m_cache.end()) return it->second;
    std::optional<std::vector<GrowthValue>> v;
    try {
      v = iterate_growth_map(model_m, ExtReal::from_value(grid[j]), horizon);
    } catch (const std::out_of_range&) {
    }
    return m_cache.emplace(j, std::move(v)).first->second;
  };

  VaReport rep;
  rep.horizon = horizon;
  bool any_step = false;
  for (std::size_t i = 0; i < N && !rep.found; ++i) {
    try {
      model_M(ExtReal::from_value(grid[i]));
      any_step = true;
    } catch (const std::out_of_range&) {
      continue;
    }
    if (!above[i]) continue;
    std::vector<GrowthValue> Mit;
    try {
      Mit = iterate_growth_map(model_M, ExtReal::from_value(grid[i]), horizon);
    } catch (const std::out_of_range&) {
      continue;
    }
    bool increasing = true;
    for (std::size_t n = 0; n < horizon; ++n) increasing = increasing && Mit[n + 1].value > Mit[n].value;
    if (!increasing) continue;
    for (std::size_t j = i; j < N; ++j) {
      const auto& mit = m_iter(j);
      if (!mit) continue;
      ++rep.pairs_tested;
      bool ok = true;
      for (std::size_t n = 1; n <= horizon && ok; ++n) ok = (*mit)[n].value >= Mit[n].value;
      if (!ok) continue;
      rep.found = true;
      rep.R = grid[i];
      rep.r = grid[j];
      for (std::size_t n = 1; n <= horizon; ++n) {
        IterateComparison c;
        c.m_n = (*mit)[n].value;
        c.M_n = Mit[n].value;
        c.m_regime = (*mit)[n].regime;
        c.M_regime = Mit[n].regime;
        c.compare = ext_compare(c.m_n, c.M_n);
        const double a = c.m_n.ln_value(), b = c.M_n.ln_value();
        if (std::isfinite(a) && std::isfinite(b)) c.ln_margin = a - b;
        rep.model_based = rep.model_based || is_extrapolated(c.m_regime) || is_extrapolated(c.M_regime);
        rep.margins.push_back(c);
      }
      break;
    }
  }
  if (!any_step) throw ClassifyError("the M model cannot iterate once from any grid radius");
  return rep;
}

RegularityReport regularity_check(const GrowthModel& model_M, double R, double C, std::size_t horizon) {
  if (!(R > 1.0)) throw std::invalid_argument("R must exceed 1");
  if (!(C > 0.0)) throw std::invalid_argument("C must be positive");
  if (horizon == 0) throw std::invalid_argument("horizon must be at least 1");
  RegularityReport rep;
  rep.R = R;
  rep.C = C;
  rep.horizon = horizon;
  std::vector<GrowthValue> lower;
  try {
    lower = iterate_growth_map(model_M, ExtReal::from_value(R), horizon);
  } catch (const std::out_of_range& e) {
    throw ClassifyError(std::string("growth model range exhausted: ") + e.what());
  }
  for (const auto& g : lower) {
    rep.lower.push_back(g.value);
    rep.regimes.push_back(g.regime);
    rep.model_based = rep.model_based || is_extrapolated(g.regime);
  }

  // M(r) >= r_next^C, compared through logs.
  auto satisfies = [&](const ExtReal& r, const ExtReal& target_ln) {
    GrowthValue g;
    try {
      g = model_M(r);
    } catch (const std::out_of_range& e) {
      throw ClassifyError(std::string("growth model range exhausted: ") + e.what());
    }
    if (!(g.value > ExtReal::from_value(1.0))) return false;
    rep.model_based = rep.model_based || is_extrapolated(g.regime);
    return g.value.log() >= target_ln;
  };
  auto at = [](double w) { return ExtReal::tower(2, w); };

  rep.witness.assign(horizon + 1, ExtReal{});
  rep.witness[horizon] = rep.lower[horizon];
  for (std::size_t n = horizon; n-- > 0;) {
    const ExtReal target = rep.witness[n + 1].log().mul_const(C);
    const ExtReal floor = rep.lower[n];
    if (satisfies(floor, target)) {
      rep.witness[n] = floor;
      continue;
    }
    double lo = lnln(floor);
    double step = 1.0;
    double hi = lo + step;
    int guard = 0;
    while (!satisfies(at(hi), target)) {
      lo = hi;
      step *= 2.0;
      hi = lo + step;
      if (++guard > 60 || !std::isfinite(hi)) throw ClassifyError("no radius meets the regularity bound");
    }
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (!(mid > lo && mid < hi)) break;
      (satisfies(at(mid), target) ? hi : lo) = mid;
    }
    rep.witness[n] = at(hi);
  }

  rep.feasible = true;
  for (std::size_t n = 0; n < horizon; ++n) {
    const double a = lnln(rep.witness[n]), b = lnln(rep.witness[n + 1]);
    if (!(b > a + 1e-9 * std::max(1.0, std::abs(a)))) {
      rep.feasible = false;
      rep.stall_step = n;
      break;
    }
  }
  return rep;
}

std::vector<double> zip_rate(const std::vector<ExtReal>& orbit) {
  std::vector<double> out;
  const ExtReal one = ExtReal::from_value(1.0);
  for (std::size_t i = 0; i < orbit.size(); ++i) {
    double v = 0.0;
    if (orbit[i] > one) {
      const ExtReal l = orbit[i].log();
      if (l > one) v = l.log().to_double();
    }
    out.push_back(v / static_cast<double>(i + 1));
  }
  return out;
}

nlohmann::json to_json(const ExtReal& x) {
  nlohmann::json j{{"level", x.level()}, {"describe", x.describe()}};
  if (x.is_infinite()) j["residual"] = nullptr;
  else j["residual"] = x.residual();
  return j;
}

namespace {
nlohmann::json fit_json(const SlopeFit& f) { return {{"value", f.value}, {"residual", f.residual}, {"points", f.points}}; }
nlohmann::json maybe(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }
}  // namespace

nlohmann::json to_json(const OrderEstimate& o) {
  return {{"order", fit_json(o.order)},
          {"lower_order", fit_json(o.lower_order)},
          {"type", fit_json(o.type)},
          {"fit_range", {o.r_lo, o.r_hi}}};
}

nlohmann::json to_json(const GapReport& g) {
  return {{"zero_tol", g.zero_tol},
          {"nonzero_indices", g.indices},
          {"fabry", {{"slope", g.fabry_slope}, {"statistic", g.fabry_statistic}, {"verdict", gap_verdict_name(g.fabry)}}},
          {"hayman",
           {{"alpha", g.alpha},
            {"tested", g.hayman_tested},
            {"satisfied", g.hayman_satisfied},
            {"fraction", g.hayman_fraction}}}};
}

nlohmann::json to_json(const MaxminReport& m) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : m.entries) {
    nlohmann::json j{{"r", e.r}, {"ln_M", maybe(e.ln_M)}, {"status", maxmin_status_name(e.status)}};
    if (e.status == MaxminStatus::Witness) {
      j["s"] = e.s;
      j["ln_m"] = e.ln_m;
    }
    entries.push_back(j);
  }
  return {{"C", m.C},
          {"witnesses", m.witnesses},
          {"failures", m.failures},
          {"coverage_gaps", m.gaps},
          {"pass_fraction", m.pass_fraction},
          {"entries", entries}};
}

nlohmann::json to_json(const VaReport& v) {
  nlohmann::json j{{"horizon", v.horizon}, {"found", v.found}, {"pairs_tested", v.pairs_tested}};
  if (v.found) {
    j["r"] = v.r;
    j["R"] = v.R;
    j["model_based"] = v.model_based;
    nlohmann::json ms = nlohmann::json::array();
    for (std::size_t n = 0; n < v.margins.size(); ++n) {
      const auto& c = v.margins[n];
      ms.push_back({{"n", n + 1},
                    {"m_n", to_json(c.m_n)},
                    {"M_n", to_json(c.M_n)},
                    {"m_regime", regime_name(c.m_regime)},
                    {"M_regime", regime_name(c.M_regime)},
                    {"compare", c.compare},
                    {"ln_margin", c.ln_margin ? nlohmann::json(*c.ln_margin) : nlohmann::json(nullptr)}});
    }
    j["margins"] = ms;
  }
  return j;
}

nlohmann::json to_json(const RegularityReport& r) {
  nlohmann::json seq = nlohmann::json::array();
  for (std::size_t n = 0; n < r.witness.size(); ++n) {
    seq.push_back({{"n", n},
                   {"lower", to_json(r.lower[n])},
                   {"r_n", to_json(r.witness[n])},
                   {"regime", regime_name(r.regimes[n])}});
  }
  nlohmann::json j{{"R", r.R},   {"C", r.C},     {"horizon", r.horizon}, {"feasible", r.feasible},
                   {"model_based", r.model_based}, {"sequence", seq}};
  j["stall_step"] = r.stall_step ? nlohmann::json(*r.stall_step) : nlohmann::json(nullptr);
  return j;
}

nlohmann::json to_json(const ClassificationReport& c) {
  nlohmann::json j{{"schema_version", ClassificationReport::kSchemaVersion}, {"function", c.descriptor}};
  j["orders"] = c.orders ? to_json(*c.orders) : nlohmann::json(nullptr);
  j["gaps"] = c.gaps ? to_json(*c.gaps) : nlohmann::json(nullptr);
  j["maxmin"] = c.maxmin ? to_json(*c.maxmin) : nlohmann::json(nullptr);
  j["va"] = c.va ? to_json(*c.va) : nlohmann::json(nullptr);
  j["regularity"] = c.regularity ? to_json(*c.regularity) : nlohmann::json(nullptr);
  if (c.zip) {
    nlohmann::json z = nlohmann::json::array();
    for (double v : *c.zip) z.push_back(maybe(v));
    j["zip"] = z;
  } else {
    j["zip"] = nullptr;
  }
  return j;
}

}  // namespace minmod
