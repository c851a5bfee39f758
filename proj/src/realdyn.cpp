#include "minmod/realdyn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "minmod/parallel.hpp"

namespace minmod {

namespace {

using Samples = std::vector<std::pair<double, double>>;

double rel_scale(double x) { return std::max(1.0, std::abs(x)); }

// Point in [a, b] where g crosses `level`, given a sign change of g - level
// between the endpoints. Returns whichever final endpoint is closer.
double bisect_level(const PhiFunction& g, double a, double b, double level) {
  double ga = g(a) - level;
  double gb = g(b) - level;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (a + b);
    if (!(mid > std::min(a, b) && mid < std::max(a, b))) break;
    const double gm = g(mid) - level;
    if ((gm < 0.0) == (ga < 0.0)) {
      a = mid;
      ga = gm;
    } else {
      b = mid;
      gb = gm;
    }
  }
  return std::abs(ga) <= std::abs(gb) ? a : b;
}

std::vector<double> build_ladder(const PhiFunction& mf, double T, std::size_t max_len) {
  std::vector<double> ladder{T};
  while (ladder.size() < max_len) {
    const double next = mf(ladder.back());
    if (!(next > ladder.back())) {
      throw CoveringError(ladder.size() - 1, "the running maximum does not exceed the identity at t = " +
                                                  std::to_string(ladder.back()));
    }
    if (!mf.in_window(next)) break;
    ladder.push_back(next);
  }
  return ladder;
}

// Backward shooting along intervals[0..N]; fills shooting, evidence, orbit,
// residuals and witness.
void shoot(const PhiFunction& phi, OrbitCertificate& cert, const std::vector<const Samples*>& samples) {
  const std::size_t N = cert.intervals.size() - 1;
  cert.shooting.assign(N + 1, Interval{});
  cert.evidence.assign(N, CoveringEvidence{});
  std::vector<std::pair<double, double>> ends(N + 1);  // (p, q): phi(p) = left J_{n+1}, phi(q) = right
  cert.shooting[N] = cert.intervals[N];
  for (std::size_t step = N; step-- > 0;) {
    const Samples& s = *samples[step];
    const Interval& next = cert.intervals[step + 1];
    const Interval& target = cert.shooting[step + 1];
    std::size_t iu = 0, iv = 0;
    for (std::size_t k = 1; k < s.size(); ++k) {
      if (s[k].second < s[iu].second) iu = k;
      if (s[k].second > s[iv].second) iv = k;
    }
    CoveringEvidence ev{s[iu].first, s[iu].second, s[iv].first, s[iv].second};
    cert.evidence[step] = ev;
    if (ev.phi_u > next.lo || ev.phi_v < next.hi) {
      std::ostringstream msg;
      msg << "no covering evidence at step " << step << ": phi ranges over [" << ev.phi_u << ", " << ev.phi_v
          << "] but the next interval is [" << next.lo << ", " << next.hi << "]";
      throw CoveringError(step, msg.str());
    }
    const double a = target.lo, b = target.hi;
    const std::ptrdiff_t dir = iv > iu ? 1 : -1;
    std::ptrdiff_t k = static_cast<std::ptrdiff_t>(iu);
    while (s[k].second < b) k += dir;
    const double q = k == static_cast<std::ptrdiff_t>(iu) ? s[k].first
                                                          : bisect_level(phi, s[k - dir].first, s[k].first, b);
    std::ptrdiff_t j = k - dir;
    while (j != static_cast<std::ptrdiff_t>(iu) && s[j].second > a) j -= dir;
    double p = s[j].first;
    if (s[j].second < a) p = bisect_level(phi, s[j].first, s[j + dir].first, a);
    ends[step] = {p, q};
    cert.shooting[step] = Interval{std::min(p, q), std::max(p, q)};
  }

  cert.orbit.assign(N + 1, 0.0);
  cert.residuals.assign(N, 0.0);
  cert.orbit[N] = 0.5 * (cert.shooting[N].lo + cert.shooting[N].hi);
  for (std::size_t step = N; step-- > 0;) {
    const auto [p, q] = ends[step];
    const double x = p == q ? p : bisect_level(phi, p, q, cert.orbit[step + 1]);
    cert.orbit[step] = x;
    cert.residuals[step] = std::abs(phi(x) - cert.orbit[step + 1]) / rel_scale(cert.orbit[step + 1]);
  }
  cert.witness = cert.orbit[0];
}

// Samples phi on each interval. For analytic phi the nodes of its maximal
// function are added, so the sampled maxima reproduce the ladder values exactly.
std::vector<Samples> sample_all(const PhiFunction& phi, const PhiFunction& mf, const std::vector<Interval>& ivs,
                                const DynOptions& opts) {
  PhiFunction src = phi;
  if (!phi.is_tabulated()) {
    std::vector<double> hints = phi.nodes();
    hints.insert(hints.end(), mf.nodes().begin(), mf.nodes().end());
    src = PhiFunction::analytic([phi](double t) { return phi(t); }, phi.lo(), phi.hi(), phi.descriptor(),
                                std::move(hints));
  }
  std::vector<Samples> out(ivs.size());
  parallel_for(ivs.size(), opts.threads,
               [&](std::size_t i) { out[i] = sample_interval(src, ivs[i].lo, ivs[i].hi, opts); });
  return out;
}

nlohmann::json interval_json(const Interval& iv) { return nlohmann::json::array({iv.lo, iv.hi}); }

}  // namespace

bool Interval::contains(double t, double rel_tol) const {
  const double slack = rel_tol * std::max(rel_scale(lo), rel_scale(hi));
  return t >= lo - slack && t <= hi + slack;
}

EscapeVerdict check_escape(const PhiFunction& phi, const DynOptions& opts) {
  const PhiFunction mf = maximal_function(phi, opts);
  const std::vector<double>& grid = mf.nodes();
  EscapeVerdict v;
  v.window_lo = phi.lo();
  v.window_hi = phi.hi();
  v.tail_start = phi.lo() > 0.0 ? phi.lo() * std::pow(phi.hi() / phi.lo(), opts.tail_fraction)
                                : phi.lo() + opts.tail_fraction * (phi.hi() - phi.lo());
  auto gap = [&](double t) { return mf(t) - t; };
  auto thr = [&](double t) { return opts.tol * rel_scale(t); };

  std::vector<double> d(grid.size());
  bool any_positive = false;
  std::optional<std::size_t> last_fail;
  double min_gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    d[i] = gap(grid[i]);
    min_gap = std::min(min_gap, d[i]);
    if (d[i] > thr(grid[i])) any_positive = true;
    if (std::abs(d[i]) <= thr(grid[i])) v.tangencies.push_back(grid[i]);
    if (d[i] < -thr(grid[i])) {
      ++v.failure_points;
      last_fail = i;
    }
  }
  if (!any_positive) {
    v.outcome = EscapeOutcome::Fails;
    v.counterexample = last_fail ? grid[*last_fail] : phi.hi();
    return v;
  }
  if (last_fail && (grid[*last_fail] > v.tail_start || *last_fail + 1 == grid.size())) {
    v.outcome = EscapeOutcome::Fails;
    v.counterexample = grid[*last_fail];
    v.margin = min_gap;
    return v;
  }
  v.outcome = EscapeOutcome::HoldsOnWindow;
  double T = phi.lo();
  if (last_fail) {
    double lo = grid[*last_fail], hi = grid[*last_fail + 1];
    while (hi - lo > 1e-6 * hi) {
      const double mid = 0.5 * (lo + hi);
      if (gap(mid) < -thr(mid)) lo = mid;
      else hi = mid;
    }
    T = hi;
  }
  v.threshold = T;
  double margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] > T) margin = std::min(margin, d[i]);
  }
  if (std::isfinite(margin)) v.margin = margin;
  return v;
}

OrbitCertificate fastest_orbit(const PhiFunction& phi, double T, std::size_t horizon, const DynOptions& opts) {
  if (!phi.in_window(T)) throw std::invalid_argument("T lies outside the window of phi");
  if (horizon == 0) throw std::invalid_argument("horizon must be at least 1");
  const PhiFunction mf = maximal_function(phi, opts);
  const std::vector<double> ladder = build_ladder(mf, T, horizon + 2);
  if (ladder.size() < 2) throw CoveringError(0, "window too small for a single interval");

  OrbitCertificate cert;
  cert.kind = "fastest";
  cert.phi_source = phi.descriptor();
  cert.window_lo = phi.lo();
  cert.window_hi = phi.hi();
  cert.T = T;
  cert.requested_horizon = horizon;
  cert.horizon = ladder.size() - 2;
  cert.ladder = ladder;
  for (std::size_t n = 0; n + 1 < ladder.size(); ++n) cert.intervals.push_back({ladder[n], ladder[n + 1]});
  const std::vector<Samples> samples = sample_all(phi, mf, cert.intervals, opts);
  std::vector<const Samples*> ptrs;
  for (const auto& s : samples) ptrs.push_back(&s);
  shoot(phi, cert, ptrs);
  return cert;
}

OrbitCertificate slow_orbit(const PhiFunction& phi, double T, const std::vector<double>& targets,
                            std::size_t horizon, const DynOptions& opts) {
  if (!phi.in_window(T)) throw std::invalid_argument("T lies outside the window of phi");
  if (horizon == 0) throw std::invalid_argument("horizon must be at least 1");
  if (targets.size() < horizon + 1) throw std::invalid_argument("need a target a_n for every n up to the horizon");
  for (std::size_t i = 1; i < targets.size(); ++i) {
    if (!(targets[i] > targets[i - 1])) throw std::invalid_argument("targets must increase");
  }
  const PhiFunction mf = maximal_function(phi, opts);
  const std::vector<double> ladder = build_ladder(mf, T, std::numeric_limits<std::size_t>::max());
  if (ladder.size() < 3) throw InapplicableError("window holds fewer than two intervals E_n");
  std::vector<Interval> E;
  for (std::size_t n = 0; n + 1 < ladder.size(); ++n) E.push_back({ladder[n], ladder[n + 1]});
  const std::vector<Samples> samples = sample_all(phi, mf, E, opts);
  std::vector<double> min_phi(E.size());
  for (std::size_t n = 0; n < E.size(); ++n) {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& pt : samples[n]) m = std::min(m, pt.second);
    min_phi[n] = m;
  }

  std::optional<std::size_t> n0;
  for (std::size_t n = 0; n < E.size() && !n0; ++n) {
    if (min_phi[n] <= ladder[n]) n0 = n;
  }
  if (!n0) throw InapplicableError("no interval E_n maps below its own left end: no pit in the window");
  std::vector<std::size_t> pits{*n0};
  for (std::size_t n = *n0 + 1; n < E.size(); ++n) {
    if (min_phi[n] <= ladder[*n0]) pits.push_back(n);
  }
  if (pits.size() < 2) throw InapplicableError("no pit above n(0) in the window");

  OrbitCertificate cert;
  cert.kind = "slow";
  cert.phi_source = phi.descriptor();
  cert.window_lo = phi.lo();
  cert.window_hi = phi.hi();
  cert.T = T;
  cert.requested_horizon = horizon;
  cert.ladder = ladder;
  cert.pits = pits;
  cert.targets.assign(targets.begin(), targets.begin() + horizon + 1);

  std::vector<std::size_t>& chain = cert.chain;
  chain.push_back(*n0);
  for (std::size_t k = 1; k < pits.size() && chain.size() <= horizon; ++k) {
    const double top = ladder[pits[k] + 1];
    std::size_t need = 0;
    for (std::size_t m = 1; m < targets.size(); ++m) {
      if (targets[m] >= top) {
        need = m;
        break;
      }
    }
    if (need == 0) break;
    cert.waits.push_back(need);
    while (chain.size() - 1 < need && chain.size() <= horizon) chain.push_back(*n0);
    for (std::size_t j = *n0 + 1; j <= pits[k]; ++j) chain.push_back(j);
    chain.push_back(*n0);
  }
  while (chain.size() <= horizon) chain.push_back(*n0);
  chain.resize(horizon + 1);
  cert.horizon = horizon;
  for (std::size_t idx : chain) cert.intervals.push_back(E[idx]);

  std::size_t n_a = horizon + 1;
  for (std::size_t m = horizon + 1; m-- > 0;) {
    if (cert.intervals[m].hi > targets[m]) break;
    n_a = m;
  }
  if (n_a > horizon) throw InapplicableError("targets stay below the chain at the horizon");
  cert.n_a = n_a;

  std::vector<const Samples*> ptrs;
  for (std::size_t idx : chain) ptrs.push_back(&samples[idx]);
  shoot(phi, cert, ptrs);
  return cert;
}

ReplayReport replay(const OrbitCertificate& cert, const PhiFunction& phi, const DynOptions& opts, double rel_tol) {
  ReplayReport rep;
  auto fail = [&](const std::string& what) {
    rep.ok = false;
    rep.failures.push_back(what);
  };
  const std::size_t N = cert.intervals.size() - 1;
  if (cert.orbit.size() != N + 1 || cert.evidence.size() != N || cert.shooting.size() != N + 1 ||
      cert.residuals.size() != N) {
    fail("certificate arrays have inconsistent lengths");
    return rep;
  }

  const PhiFunction mf = maximal_function(phi, opts);
  std::vector<double> ladder{cert.T};
  const std::size_t need = cert.kind == "slow" ? cert.ladder.size() : N + 2;
  while (ladder.size() < need) ladder.push_back(mf(ladder.back()));
  for (std::size_t m = 0; m <= N; ++m) {
    const std::size_t n = cert.kind == "slow" ? cert.chain.at(m) : m;
    const double e1 = std::abs(cert.intervals[m].lo - ladder[n]) / rel_scale(ladder[n]);
    const double e2 = std::abs(cert.intervals[m].hi - ladder[n + 1]) / rel_scale(ladder[n + 1]);
    rep.max_ladder_error = std::max({rep.max_ladder_error, e1, e2});
    if (e1 > rel_tol || e2 > rel_tol) fail("interval " + std::to_string(m) + " does not match the recomputed ladder");
  }

  constexpr double kEval = 1e-12;
  for (std::size_t m = 0; m < N; ++m) {
    const CoveringEvidence& ev = cert.evidence[m];
    const Interval& next = cert.intervals[m + 1];
    if (!cert.intervals[m].contains(ev.u, kEval) || !cert.intervals[m].contains(ev.v, kEval))
      fail("evidence points outside interval " + std::to_string(m));
    if (phi(ev.u) > next.lo + kEval * rel_scale(next.lo)) fail("phi(u) above the next interval at step " + std::to_string(m));
    if (phi(ev.v) < next.hi - kEval * rel_scale(next.hi)) fail("phi(v) below the next interval at step " + std::to_string(m));
  }
  for (std::size_t m = 0; m <= N; ++m) {
    const Interval& J = cert.shooting[m];
    if (!cert.intervals[m].contains(J.lo, rel_tol) || !cert.intervals[m].contains(J.hi, rel_tol))
      fail("J_" + std::to_string(m) + " leaves its interval");
    if (!J.contains(cert.orbit[m], rel_tol) || !cert.intervals[m].contains(cert.orbit[m], rel_tol))
      fail("orbit point " + std::to_string(m) + " outside its interval");
  }
  for (std::size_t m = 0; m < N; ++m) {
    const double res = std::abs(phi(cert.orbit[m]) - cert.orbit[m + 1]) / rel_scale(cert.orbit[m + 1]);
    rep.max_residual = std::max(rep.max_residual, res);
    if (res > std::max(2.0 * cert.residuals[m], 1e-15) || res > rel_tol)
      fail("residual at step " + std::to_string(m) + " exceeds its stated bound");
  }
  if (cert.witness != cert.orbit[0]) fail("witness differs from the first orbit point");
  if (cert.kind == "slow") {
    for (std::size_t m = cert.n_a; m <= N; ++m) {
      if (cert.orbit[m] > cert.targets.at(m)) fail("orbit above a_n at n = " + std::to_string(m));
    }
  }
  return rep;
}

PhiOrbit iterate_phi(const PhiFunction& phi, double t, std::size_t horizon) {
  PhiOrbit out;
  double x = t;
  for (std::size_t n = 0; n < horizon; ++n) {
    if (!phi.in_window(x)) {
      out.exit = OrbitExit::EscapedWindow;
      return out;
    }
    x = phi(x);
    if (!phi.in_window(x)) {
      out.exit = OrbitExit::EscapedWindow;
      return out;
    }
    out.values.push_back(x);
  }
  return out;
}

nlohmann::json to_json(const EscapeVerdict& v) {
  nlohmann::json j;
  j["outcome"] = v.outcome == EscapeOutcome::HoldsOnWindow ? "holds-on-window" : "fails";
  j["threshold"] = v.threshold ? nlohmann::json(*v.threshold) : nlohmann::json(nullptr);
  j["counterexample"] = v.counterexample ? nlohmann::json(*v.counterexample) : nlohmann::json(nullptr);
  j["margin"] = v.margin ? nlohmann::json(*v.margin) : nlohmann::json(nullptr);
  j["tangencies"] = v.tangencies;
  j["failure_points"] = v.failure_points;
  j["window"] = {v.window_lo, v.window_hi};
  j["tail_start"] = v.tail_start;
  return j;
}

nlohmann::json to_json(const OrbitCertificate& c) {
  nlohmann::json j;
  j["schema_version"] = OrbitCertificate::kSchemaVersion;
  j["kind"] = c.kind;
  j["phi_source_descriptor"] = c.phi_source;
  j["window"] = {c.window_lo, c.window_hi};
  j["T"] = c.T;
  j["requested_horizon"] = c.requested_horizon;
  j["horizon"] = c.horizon;
  j["intervals"] = nlohmann::json::array();
  for (const auto& iv : c.intervals) j["intervals"].push_back(interval_json(iv));
  j["shooting"] = nlohmann::json::array();
  for (const auto& iv : c.shooting) j["shooting"].push_back(interval_json(iv));
  j["evidence"] = nlohmann::json::array();
  for (const auto& e : c.evidence) {
    j["evidence"].push_back({{"u", e.u}, {"phi_u", e.phi_u}, {"v", e.v}, {"phi_v", e.phi_v}});
  }
  j["witness"] = c.witness;
  j["orbit"] = c.orbit;
  j["residuals"] = c.residuals;
  if (c.kind == "slow") {
    j["chain"] = c.chain;
    j["ladder"] = c.ladder;
    j["pits"] = c.pits;
    j["waits"] = c.waits;
    j["targets"] = c.targets;
    j["n_a"] = c.n_a;
  }
  return j;
}

}  // namespace minmod
