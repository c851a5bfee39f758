#include <algorithm>
#include <cmath>
#include <limits>

#include "minmod/realdyn.hpp"

namespace minmod {

namespace {

constexpr double kGolden = 0.6180339887498949;

// Golden-section search for an extremum of fn on [a, b]; sign = +1 finds a
// maximum, -1 a minimum. Returns the best point seen.
std::pair<double, double> golden(const PhiFunction& fn, double a, double b, double sign) {
  double x1 = b - kGolden * (b - a);
  double x2 = a + kGolden * (b - a);
  double f1 = sign * fn(x1), f2 = sign * fn(x2);
  for (int it = 0; it < 80 && (b - a) > 1e-12 * std::max(1.0, std::abs(b)); ++it) {
    if (f1 > f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kGolden * (b - a);
      f1 = sign * fn(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kGolden * (b - a);
      f2 = sign * fn(x2);
    }
  }
  return f1 > f2 ? std::make_pair(x1, sign * f1) : std::make_pair(x2, sign * f2);
}

std::vector<double> analytic_grid(const PhiFunction& phi, const DynOptions& opts) {
  const double lo = phi.lo(), hi = phi.hi();
  std::vector<double> t;
  if (opts.max_step > 0.0) {
    const std::size_t n = static_cast<std::size_t>(std::ceil((hi - lo) / opts.max_step)) + 1;
    t.resize(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = lo + (hi - lo) * static_cast<double>(i) / (n - 1);
  } else {
    const std::size_t n = std::max<std::size_t>(opts.samples, 2);
    t.resize(n);
    const bool geometric = lo > 0.0 && hi / lo > 100.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double s = static_cast<double>(i) / (n - 1);
      t[i] = geometric ? lo * std::pow(hi / lo, s) : lo + (hi - lo) * s;
    }
  }
  t.front() = lo;
  t.back() = hi;
  for (double x : phi.nodes()) t.push_back(x);
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end()), t.end());
  return t;
}

// Adds golden-section refinements of interior local extrema to sorted samples.
void refine_extrema(const PhiFunction& phi, std::vector<std::pair<double, double>>& pts, bool maxima,
                    bool minima) {
  std::vector<std::pair<double, double>> extra;
  for (std::size_t i = 1; i + 1 < pts.size(); ++i) {
    const double l = pts[i - 1].second, c = pts[i].second, r = pts[i + 1].second;
    const bool is_max = c >= l && c >= r && (c > l || c > r);
    const bool is_min = c <= l && c <= r && (c < l || c < r);
    if ((maxima && is_max) || (minima && is_min)) {
      extra.push_back(golden(phi, pts[i - 1].first, pts[i + 1].first, is_max ? 1.0 : -1.0));
    }
  }
  pts.insert(pts.end(), extra.begin(), extra.end());
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](const auto& x, const auto& y) { return x.first == y.first; }),
            pts.end());
}

}  // namespace

PhiFunction PhiFunction::analytic(Fn fn, double lo, double hi, std::string descriptor,
                                  std::vector<double> hints) {
  if (!(hi > lo)) throw std::invalid_argument("phi window must satisfy lo < hi");
  std::sort(hints.begin(), hints.end());
  PhiFunction p;
  p.nodes_ = std::move(hints);
  p.fn_ = std::move(fn);
  p.lo_ = lo;
  p.hi_ = hi;
  p.descriptor_ = std::move(descriptor);
  return p;
}

PhiFunction PhiFunction::tabulated(std::vector<double> t, std::vector<double> v, std::string descriptor) {
  if (t.size() != v.size() || t.size() < 2) throw std::invalid_argument("phi table needs at least two rows");
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!std::isfinite(t[i]) || !std::isfinite(v[i]) || v[i] < 0.0)
      throw std::invalid_argument("phi table must hold finite non-negative values");
    if (i > 0 && !(t[i] > t[i - 1])) throw std::invalid_argument("phi table nodes must increase");
  }
  PhiFunction p;
  p.lo_ = t.front();
  p.hi_ = t.back();
  p.nodes_ = std::move(t);
  p.values_ = std::move(v);
  p.descriptor_ = std::move(descriptor);
  return p;
}

bool PhiFunction::in_window(double t) const {
  const double slack = 1e-12 * std::max(1.0, std::abs(hi_));
  return t >= lo_ - slack && t <= hi_ + slack;
}

double PhiFunction::operator()(double t) const {
  if (!in_window(t)) throw std::out_of_range("phi evaluated outside its window");
  t = std::clamp(t, lo_, hi_);
  if (fn_) return fn_(t);
  const auto it = std::upper_bound(nodes_.begin(), nodes_.end(), t);
  if (it == nodes_.end()) return values_.back();
  const std::size_t hi = std::max<std::size_t>(static_cast<std::size_t>(it - nodes_.begin()), 1);
  const std::size_t lo = hi - 1;
  const double w = (t - nodes_[lo]) / (nodes_[hi] - nodes_[lo]);
  return values_[lo] + w * (values_[hi] - values_[lo]);
}

PhiFunction phi_from_profile(const ModulusProfile& profile, ProfileSeries series) {
  std::vector<double> v(profile.size());
  for (std::size_t i = 0; i < profile.size(); ++i) {
    switch (series) {
      case ProfileSeries::Min: v[i] = profile.min[i].low; break;
      case ProfileSeries::Envelope: v[i] = profile.envelope[i]; break;
      case ProfileSeries::Max: v[i] = profile.max[i].high; break;
    }
  }
  const char* name = series == ProfileSeries::Min ? "m" : (series == ProfileSeries::Envelope ? "envelope" : "M");
  return PhiFunction::tabulated(profile.radii, std::move(v), std::string("tabulated ") + name + " profile");
}

PhiFunction maximal_function(const PhiFunction& phi, const DynOptions& opts) {
  if (phi.is_tabulated()) {
    const auto& t = phi.nodes();
    const auto& v = phi.values();
    std::vector<double> nt{t[0]}, nv{v[0]};
    double run = v[0];
    for (std::size_t i = 1; i < t.size(); ++i) {
      if (v[i] > run) {
        if (v[i - 1] < run) {
          // the segment climbs through the running maximum
          const double s = t[i - 1] + (t[i] - t[i - 1]) * (run - v[i - 1]) / (v[i] - v[i - 1]);
          if (s > nt.back() && s < t[i]) {
            nt.push_back(s);
            nv.push_back(run);
          }
        }
        run = v[i];
      }
      nt.push_back(t[i]);
      nv.push_back(run);
    }
    return PhiFunction::tabulated(std::move(nt), std::move(nv), "running max of " + phi.descriptor());
  }

  const std::vector<double> grid = analytic_grid(phi, opts);
  std::vector<std::pair<double, double>> pts(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) pts[i] = {grid[i], phi(grid[i])};
  refine_extrema(phi, pts, true, false);
  auto nodes = std::make_shared<std::vector<double>>();
  auto run = std::make_shared<std::vector<double>>();
  nodes->reserve(pts.size());
  run->reserve(pts.size());
  double m = -std::numeric_limits<double>::infinity();
  for (const auto& [t, v] : pts) {
    m = std::max(m, v);
    nodes->push_back(t);
    run->push_back(m);
  }
  const PhiFunction base = phi;
  return PhiFunction::analytic(
      [base, nodes, run](double t) {
        const auto it = std::upper_bound(nodes->begin(), nodes->end(), t);
        const std::size_t k = it == nodes->begin() ? 0 : static_cast<std::size_t>(it - nodes->begin()) - 1;
        return std::max((*run)[k], base(t));
      },
      phi.lo(), phi.hi(), "running max of " + phi.descriptor(), *nodes);
}

std::vector<std::pair<double, double>> sample_interval(const PhiFunction& phi, double a, double b,
                                                       const DynOptions& opts) {
  std::vector<std::pair<double, double>> pts;
  if (!(b >= a)) throw std::invalid_argument("sample_interval needs a <= b");
  const auto& nodes = phi.nodes();
  auto first = std::upper_bound(nodes.begin(), nodes.end(), a);
  auto last = std::lower_bound(nodes.begin(), nodes.end(), b);
  if (phi.is_tabulated()) {
    pts.emplace_back(a, phi(a));
    for (auto it = first; it != last; ++it) pts.emplace_back(*it, phi(*it));
    if (b > a) pts.emplace_back(b, phi(b));
    return pts;
  }
  std::size_t n = std::max<std::size_t>(opts.interval_samples, 2);
  if (opts.max_step > 0.0) {
    n = std::max(n, static_cast<std::size_t>(std::ceil((b - a) / opts.max_step)) + 1);
  }
  pts.reserve(n + static_cast<std::size_t>(last - first));
  for (std::size_t i = 0; i < n; ++i) {
    const double t = i + 1 == n ? b : a + (b - a) * static_cast<double>(i) / (n - 1);
    pts.emplace_back(t, phi(t));
  }
  for (auto it = first; it != last; ++it) pts.emplace_back(*it, phi(*it));
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](const auto& x, const auto& y) { return x.first == y.first; }),
            pts.end());
  refine_extrema(phi, pts, true, true);
  return pts;
}

}  // namespace minmod
