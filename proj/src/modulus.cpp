#include "minmod/modulus.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <queue>
#include <sstream>

#include "minmod/parallel.hpp"

namespace minmod {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInflate = 1.25;
// Outside this log range plain doubles lose the extremum, so the search
// switches to ln|f|.
constexpr double kLinearLogRange = 690.0;

struct Sample {
  bool valid = false;
  double lin = 0.0;     // |f|
  double ln = 0.0;      // ln|f|
  double rdf = 0.0;     // r |f'|, bounds |d|f|/dtheta|
  double dlin = 0.0;    // d|f|/dtheta
  double dlog = 0.0;    // d ln|f| / dtheta
  double logcap = 0.0;  // r |f'| / |f|, bounds |d ln|f| / dtheta|
};

Sample take_sample(const CompiledExpr& f, const CompiledExpr& df, double r, double theta) {
  Sample s;
  const Complex z = std::polar(r, theta);
  Complex w, d;
  const bool fplain = f.try_plain(z, w);
  const ScaledComplex fs = fplain ? ScaledComplex::from(w) : f.eval_scaled(z);
  if (!fs.valid()) return s;
  const bool dplain = df.try_plain(z, d);
  const ScaledComplex ds = dplain ? ScaledComplex::from(d) : df.eval_scaled(z);
  if (!ds.valid()) return s;
  s.valid = true;
  s.lin = fplain ? std::abs(w) : std::exp(fs.log_mag);
  s.ln = fplain ? std::log(s.lin) : fs.log_mag;
  const double ln_rdf = std::log(r) + ds.log_mag;
  s.rdf = dplain ? r * std::abs(d) : std::exp(ln_rdf);
  if (fs.is_zero()) {
    s.dlin = kNaN;
    s.dlog = kNaN;
    s.logcap = kInf;
    return s;
  }
  // d|f|/dtheta = Re(conj f * i z f') / |f|
  const double c = (Complex(0.0, 1.0) * std::polar(1.0, theta) * ds.phase / fs.phase).real();
  s.dlin = c * s.rdf;
  s.logcap = std::exp(ln_rdf - s.ln);
  s.dlog = c * s.logcap;
  return s;
}

// A piece of the theta domain carrying 5 equally spaced samples of the
// objective value and its slope.
struct Piece {
  double a = 0.0;
  double w = 0.0;
  std::array<double, 5> v{};
  std::array<double, 5> s{};
  std::array<double, 5> cap{};
  double lb = 0.0;
};

struct PieceOrder {
  bool operator()(const Piece& x, const Piece& y) const { return x.lb > y.lb; }
};

void bound_piece(Piece& p) {
  const double q = p.w / 4.0;
  double cap = 0.0;
  for (double c : p.cap) cap = std::max(cap, c);
  cap = std::isnan(cap) ? kInf : kInflate * cap;
  double curv = 0.0;
  bool slopes_ok = true;
  for (int j = 0; j < 4; ++j) {
    const double ds = std::abs(p.s[j + 1] - p.s[j]);
    if (std::isnan(ds) || std::isinf(ds)) slopes_ok = false;
    else curv = std::max(curv, ds / q);
  }
  curv *= kInflate;
  double lb = kInf;
  for (int j = 0; j < 4; ++j) {
    double slope = cap;
    if (slopes_ok) {
      const double local = kInflate * std::max(std::abs(p.s[j]), std::abs(p.s[j + 1])) + curv * q / 2.0;
      slope = std::min(slope, local);
    }
    const double piece_lb = 0.5 * (p.v[j] + p.v[j + 1]) - slope * q / 2.0;
    lb = std::min(lb, std::isnan(piece_lb) ? -kInf : piece_lb);
  }
  p.lb = lb;
}

}  // namespace

ModulusSolver::ModulusSolver(const Expr& f, ModulusOptions opts)
    : f_(f), fc_(f), dfc_(derivative(f)), opts_(opts) {
  if (opts_.initial_samples < 8) opts_.initial_samples = 8;
  opts_.initial_samples = (opts_.initial_samples + 3) / 4 * 4;
  const Complex probes[] = {{0.71, 0.33}, {-1.27, 2.09}, {2.93, -0.41}, {0.12, 0.05}, {-3.3, -1.7}};
  symmetric_ = true;
  for (Complex z : probes) {
    Complex a, b;
    if (!fc_.try_plain(z, a) || !fc_.try_plain(std::conj(z), b)) {
      symmetric_ = false;
      break;
    }
    const double scale = std::max(std::abs(a), 1e-300);
    if (std::abs(std::conj(a) - b) > 1e-12 * scale) {
      symmetric_ = false;
      break;
    }
  }
}

CircleExtremum ModulusSolver::min(double r) const { return solve(r, ExtremumKind::Min); }
CircleExtremum ModulusSolver::max(double r) const { return solve(r, ExtremumKind::Max); }

CircleExtremum ModulusSolver::solve(double r, ExtremumKind kind) const {
  if (!(r > 0.0) || !std::isfinite(r)) throw std::invalid_argument("radius must be positive and finite");
  const double span = symmetric_ ? kPi : 2.0 * kPi;
  const std::size_t n0 = opts_.initial_samples;
  const double step = span / static_cast<double>(n0);

  std::vector<Sample> init(n0 + 1);
  for (std::size_t k = 0; k < n0; ++k) init[k] = take_sample(fc_, dfc_, r, step * k);
  init[n0] = symmetric_ ? take_sample(fc_, dfc_, r, span) : init[0];
  std::size_t evals = n0 + (symmetric_ ? 1 : 0);

  bool log_mode = false;
  for (const Sample& s : init) {
    if (!s.valid) throw ModulusError("function not evaluable on the circle |z| = " + std::to_string(r));
    if (s.lin == 0.0) continue;
    if (!std::isfinite(s.lin) || std::abs(s.ln) > kLinearLogRange) log_mode = true;
  }
  const double sign = kind == ExtremumKind::Min ? 1.0 : -1.0;
  auto value = [&](const Sample& s) { return sign * (log_mode ? s.ln : s.lin); };
  auto slope = [&](const Sample& s) { return sign * (log_mode ? s.dlog : s.dlin); };
  auto cap = [&](const Sample& s) { return log_mode ? s.logcap : s.rdf; };

  double best = kInf;
  double best_theta = 0.0;
  auto consider = [&](const Sample& s, double theta) {
    const double v = value(s);
    if (v < best) {
      best = v;
      best_theta = theta;
    }
  };
  for (std::size_t k = 0; k <= n0; ++k) consider(init[k], std::min(step * k, span));

  std::priority_queue<Piece, std::vector<Piece>, PieceOrder> heap;
  for (std::size_t k = 0; k < n0; k += 4) {
    Piece p;
    p.a = step * k;
    p.w = 4 * step;
    for (int j = 0; j < 5; ++j) {
      p.v[j] = value(init[k + j]);
      p.s[j] = slope(init[k + j]);
      p.cap[j] = cap(init[k + j]);
    }
    bound_piece(p);
    heap.push(p);
  }

  bool converged = false;
  bool all_valid = true;
  while (!heap.empty()) {
    const double gap_tol = opts_.tol * std::max(1.0, std::abs(best));
    if (best - heap.top().lb <= gap_tol) {
      converged = true;
      break;
    }
    if (evals >= opts_.max_evals) break;
    const Piece p = heap.top();
    heap.pop();
    const double q = p.w / 4.0;
    for (int j = 0; j < 4; ++j) {
      Piece c;
      c.a = p.a + j * q;
      c.w = q;
      c.v[0] = p.v[j];
      c.s[0] = p.s[j];
      c.cap[0] = p.cap[j];
      c.v[4] = p.v[j + 1];
      c.s[4] = p.s[j + 1];
      c.cap[4] = p.cap[j + 1];
      for (int k = 1; k < 4; ++k) {
        const double theta = c.a + k * q / 4.0;
        const Sample s = take_sample(fc_, dfc_, r, theta);
        ++evals;
        if (!s.valid) {
          all_valid = false;
          c.v[k] = kNaN;
          c.s[k] = kNaN;
          c.cap[k] = kInf;
          continue;
        }
        c.v[k] = value(s);
        c.s[k] = slope(s);
        c.cap[k] = cap(s);
        consider(s, theta);
      }
      bound_piece(c);
      if (c.lb < best) heap.push(c);
    }
  }
  if (heap.empty()) converged = true;
  const double lb = heap.empty() ? best : std::min(best, heap.top().lb);

  CircleExtremum out;
  out.radius = r;
  out.kind = kind;
  out.log_domain = log_mode;
  out.certified = converged && all_valid;
  out.evaluations = evals;
  out.arg_theta = best_theta >= 2.0 * kPi ? 0.0 : best_theta;
  if (kind == ExtremumKind::Min) {
    if (log_mode) {
      out.ln_low = lb;
      out.ln_high = best;
      out.low = std::exp(lb);
      out.high = std::exp(best);
    } else {
      out.low = std::max(lb, 0.0);
      out.high = best;
      out.ln_low = std::log(out.low);
      out.ln_high = std::log(out.high);
    }
  } else {
    if (log_mode) {
      out.ln_low = -best;
      out.ln_high = -lb;
      out.low = std::exp(-best);
      out.high = std::exp(-lb);
    } else {
      out.low = -best;
      out.high = -lb;
      out.ln_low = std::log(out.low);
      out.ln_high = std::log(out.high);
    }
  }
  return out;
}

CircleExtremum min_modulus(const Expr& f, double r, double tol) {
  ModulusOptions o;
  o.tol = tol;
  return ModulusSolver(f, o).min(r);
}

CircleExtremum max_modulus(const Expr& f, double r, double tol) {
  ModulusOptions o;
  o.tol = tol;
  return ModulusSolver(f, o).max(r);
}

void recompute_envelope(ModulusProfile& p) {
  const std::size_t n = p.radii.size();
  p.envelope.assign(n, 0.0);
  p.ln_envelope.assign(n, 0.0);
  p.envelope_src.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (i == 0 || p.min[i].ln_low > p.ln_envelope[i - 1]) {
      p.envelope[i] = p.min[i].low;
      p.ln_envelope[i] = p.min[i].ln_low;
      p.envelope_src[i] = i;
    } else {
      p.envelope[i] = p.envelope[i - 1];
      p.ln_envelope[i] = p.ln_envelope[i - 1];
      p.envelope_src[i] = p.envelope_src[i - 1];
    }
  }
}

ModulusProfile build_profile(const Expr& f, double r_min, double r_max, std::size_t grid,
                             ModulusOptions opts) {
  if (grid == 0) throw std::invalid_argument("profile grid is empty");
  if (!(r_min > 0.0) || !(r_max > r_min) || !std::isfinite(r_max))
    throw std::invalid_argument("profile range must satisfy 0 < r_min < r_max");
  const ModulusSolver solver(f, opts);

  std::vector<double> radii(grid);
  const double ratio = std::log(r_max / r_min);
  for (std::size_t i = 0; i < grid; ++i) {
    radii[i] = grid == 1 ? r_min : r_min * std::exp(ratio * static_cast<double>(i) / (grid - 1));
  }
  radii.back() = grid == 1 ? r_min : r_max;

  auto compute = [&](const std::vector<double>& rs, std::vector<CircleExtremum>& mins,
                     std::vector<CircleExtremum>& maxs) {
    mins.resize(rs.size());
    maxs.resize(rs.size());
    parallel_for(rs.size(), opts.threads, [&](std::size_t i) {
      mins[i] = solver.min(rs[i]);
      maxs[i] = solver.max(rs[i]);
    });
  };

  std::vector<CircleExtremum> mins, maxs;
  compute(radii, mins, maxs);

  if (opts.refine_envelope && grid >= 3) {
    std::vector<double> extra;
    for (std::size_t i = 1; i + 1 < grid; ++i) {
      if (mins[i].low > mins[i - 1].low && mins[i].low > mins[i + 1].low) {
        const double left = std::sqrt(radii[i - 1] * radii[i]);
        const double right = std::sqrt(radii[i] * radii[i + 1]);
        if (extra.empty() || extra.back() < left) extra.push_back(left);
        extra.push_back(right);
      }
    }
    if (!extra.empty()) {
      std::vector<CircleExtremum> emin, emax;
      compute(extra, emin, emax);
      std::vector<double> all_r;
      std::vector<CircleExtremum> all_min, all_max;
      std::size_t a = 0, b = 0;
      while (a < grid || b < extra.size()) {
        if (b == extra.size() || (a < grid && radii[a] < extra[b])) {
          all_r.push_back(radii[a]);
          all_min.push_back(mins[a]);
          all_max.push_back(maxs[a]);
          ++a;
        } else {
          all_r.push_back(extra[b]);
          all_min.push_back(emin[b]);
          all_max.push_back(emax[b]);
          ++b;
        }
      }
      radii = std::move(all_r);
      mins = std::move(all_min);
      maxs = std::move(all_max);
    }
  }

  ModulusProfile p;
  p.radii = std::move(radii);
  p.min = std::move(mins);
  p.max = std::move(maxs);
  p.f = f;
  p.options = opts;
  recompute_envelope(p);
  return p;
}

std::vector<Crossing> envelope_crossings(const ModulusProfile& p, double zero_tol) {
  std::vector<Crossing> out;
  const std::size_t n = p.radii.size();
  auto sign_of = [&](double h, double r) { return std::abs(h) <= zero_tol * r ? 0 : (h > 0 ? 1 : -1); };
  std::optional<ModulusSolver> solver;
  if (p.f) solver.emplace(*p.f, p.options);

  int last_sign = 0;
  std::size_t last_index = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const int s = sign_of(p.envelope[i] - p.radii[i], p.radii[i]);
    if (s == 0) continue;
    if (last_sign != 0 && s != last_sign) {
      Crossing c;
      c.direction = s > 0 ? CrossingDirection::Up : CrossingDirection::Down;
      c.grid_index = last_index;
      double lo = p.radii[last_index], hi = p.radii[i];
      if (solver) {
        const double base = p.envelope[last_index];
        while (hi - lo > 1e-6 * lo) {
          const double mid = 0.5 * (lo + hi);
          const double h = std::max(base, solver->min(mid).low) - mid;
          const int ms = sign_of(h, mid);
          if (ms == last_sign) lo = mid;
          else hi = mid;
        }
      }
      c.radius = 0.5 * (lo + hi);
      out.push_back(c);
    }
    last_sign = s;
    last_index = i;
  }
  return out;
}

std::string profile_csv(const ModulusProfile& p) {
  std::ostringstream out;
  out << "r,m_low,m_high,M_low,M_high,envelope,envelope_src_index,certified_min,certified_max\n";
  char buf[256];
  for (std::size_t i = 0; i < p.radii.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%zu,%d,%d\n", p.radii[i],
                  p.min[i].low, p.min[i].high, p.max[i].low, p.max[i].high, p.envelope[i],
                  p.envelope_src[i], p.min[i].certified ? 1 : 0, p.max[i].certified ? 1 : 0);
    out << buf;
  }
  return out.str();
}

GrowthModel growth_model_from_profile(const ModulusProfile& p, ProfileSeries series) {
  std::vector<double> xs, ys;
  std::string name;
  for (std::size_t i = 0; i < p.radii.size(); ++i) {
    double y = 0.0;
    switch (series) {
      case ProfileSeries::Min: y = p.min[i].ln_low; name = "m"; break;
      case ProfileSeries::Envelope: y = p.ln_envelope[i]; name = "envelope"; break;
      case ProfileSeries::Max: y = p.max[i].ln_high; name = "M"; break;
    }
    if (!std::isfinite(y)) continue;
    xs.push_back(std::log(p.radii[i]));
    ys.push_back(y);
  }
  if (xs.empty()) throw std::invalid_argument("profile has no positive values for the growth model");
  return GrowthModel(std::move(xs), std::move(ys), name + " profile");
}

}  // namespace minmod
