#include "minmod/growth_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdio>
#include <sstream>

namespace minmod {

std::string regime_name(Regime r) { return r == Regime::Sampled ? "sampled" : "extrapolated"; }

GrowthModel::GrowthModel(std::vector<double> ln_r, std::vector<double> ln_phi, std::string descriptor)
    : ln_r_(std::move(ln_r)), ln_phi_(std::move(ln_phi)), descriptor_(std::move(descriptor)) {
  if (ln_r_.size() != ln_phi_.size() || ln_r_.empty())
    throw std::invalid_argument("growth model table is empty or ragged");
  for (std::size_t i = 0; i < ln_r_.size(); ++i) {
    if (!std::isfinite(ln_r_[i]) || std::isnan(ln_phi_[i]))
      throw std::invalid_argument("growth model table has a non-finite entry");
    if (i > 0 && !(ln_r_[i] > ln_r_[i - 1]))
      throw std::invalid_argument("growth model table is not strictly increasing in ln r");
  }
  const double top = ln_r_.back() - std::log(10.0);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < ln_r_.size(); ++i) {
    if (ln_r_[i] < top || !(ln_phi_[i] > 0.0) || !std::isfinite(ln_phi_[i])) continue;
    const double x = ln_r_[i], y = std::log(ln_phi_[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n >= 2) {
    const double den = n * sxx - sx * sx;
    if (den > 0.0) {
      slope_ = (n * sxy - sx * sy) / den;
      intercept_ = (sy - slope_ * sx) / n;
      fit_ok_ = true;
    }
  }
}

GrowthModel GrowthModel::analytic(Analytic fn, std::string descriptor) {
  GrowthModel m;
  m.analytic_ = std::move(fn);
  m.descriptor_ = std::move(descriptor);
  return m;
}

GrowthValue GrowthModel::operator()(const ExtReal& r) const {
  if (analytic_) return {analytic_(r), Regime::Sampled};
  if (r.level() == 0 && r.residual() <= 0.0)
    throw GrowthRangeError(0, "growth model evaluated at a non-positive radius");
  const double x = r.ln_value();
  if (x < ln_r_.front()) throw GrowthRangeError(0, "radius below the growth model table");
  if (x <= ln_r_.back()) {
    if (ln_r_.size() == 1) return {ExtReal::from_log(ln_phi_[0]), Regime::Sampled};
    std::size_t hi = std::lower_bound(ln_r_.begin(), ln_r_.end(), x) - ln_r_.begin();
    hi = std::clamp<std::size_t>(hi, 1, ln_r_.size() - 1);
    const std::size_t lo = hi - 1;
    const double w = (x - ln_r_[lo]) / (ln_r_[hi] - ln_r_[lo]);
    const double y = ln_phi_[lo] + w * (ln_phi_[hi] - ln_phi_[lo]);
    return {ExtReal::from_log(y), Regime::Sampled};
  }
  if (!fit_ok_) throw GrowthRangeError(0, "radius above the growth model table and no extrapolation fit");
  // ln ln phi = slope * ln r + intercept
  ExtReal lln;
  if (std::isfinite(x)) {
    lln = ExtReal::from_value(slope_ * x + intercept_);
  } else if (slope_ > 0.0) {
    lln = r.log().mul_const(slope_);
    if (lln.level() == 0) lln = ExtReal::from_value(lln.residual() + intercept_);
  } else {
    lln = ExtReal::from_value(slope_ == 0.0 ? intercept_ : -std::numeric_limits<double>::infinity());
  }
  return {lln.exp().exp(), Regime::Extrapolated};
}

std::string GrowthModel::to_csv(int extra_decades) const {
  std::ostringstream out;
  out << "ln_r,ln_phi,regime\n";
  char buf[96];
  for (std::size_t i = 0; i < ln_r_.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,sampled\n", ln_r_[i], ln_phi_[i]);
    out << buf;
  }
  if (fit_ok_ && !ln_r_.empty()) {
    for (int d = 1; d <= extra_decades; ++d) {
      const double x = ln_r_.back() + d * std::log(10.0);
      const double y = std::exp(slope_ * x + intercept_);
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,extrapolated\n", x, y);
      out << buf;
    }
  }
  return out.str();
}

std::vector<GrowthValue> iterate_growth_map(const GrowthModel& model, const ExtReal& start,
                                            std::size_t steps) {
  std::vector<GrowthValue> out;
  out.reserve(steps + 1);
  out.push_back({start, Regime::Sampled});
  bool extrapolated = false;
  for (std::size_t k = 0; k < steps; ++k) {
    GrowthValue next;
    try {
      next = model(out.back().value);
    } catch (const GrowthRangeError& e) {
      throw GrowthRangeError(k, e.what());
    }
    extrapolated = extrapolated || next.regime == Regime::Extrapolated;
    if (extrapolated) next.regime = Regime::Extrapolated;
    out.push_back(next);
  }
  return out;
}

}  // namespace minmod
