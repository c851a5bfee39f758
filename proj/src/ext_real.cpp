#include "minmod/ext_real.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace minmod {

ExtReal ExtReal::tower(unsigned level, double residual) {
  if (std::isnan(residual)) throw std::invalid_argument("ExtReal residual is NaN");
  if (residual == std::numeric_limits<double>::infinity()) return infinity();
  for (;;) {
    if (level == kInfLevel) return infinity();
    if (residual >= kBandHigh) {
      residual = std::log(residual);
      ++level;
    } else if (level > 0 && residual < kBandLow) {
      residual = std::exp(residual);
      --level;
    } else {
      return ExtReal(level, residual);
    }
  }
}

ExtReal ExtReal::from_value(double v) { return tower(0, v); }

ExtReal ExtReal::from_log(double ln_value) {
  if (ln_value == -std::numeric_limits<double>::infinity()) return ExtReal(0, 0.0);
  return tower(1, ln_value);
}

ExtReal ExtReal::infinity() {
  return ExtReal(kInfLevel, std::numeric_limits<double>::infinity());
}

ExtReal ExtReal::log() const {
  if (is_infinite()) return *this;
  if (level_ == 0) {
    if (residual_ <= 0.0) throw std::domain_error("log of a non-positive ExtReal");
    return ExtReal(0, std::log(residual_));
  }
  return ExtReal(level_ - 1, residual_);
}

ExtReal ExtReal::exp() const {
  if (is_infinite()) return *this;
  return tower(level_ + 1, residual_);
}

ExtReal ExtReal::mul_const(double c) const {
  if (!(c > 0.0)) throw std::invalid_argument("mul_const needs a positive factor");
  if (is_infinite()) return *this;
  if (level_ == 0) return tower(0, residual_ * c);
  if (level_ == 1) return tower(1, residual_ + std::log(c));
  return *this;
}

double ExtReal::ln_value() const {
  if (level_ == 0) return std::log(residual_);
  if (level_ == 1) return residual_;
  return std::numeric_limits<double>::infinity();
}

double ExtReal::to_double() const {
  if (level_ == 0) return residual_;
  if (level_ == 1) return std::exp(residual_);
  return std::numeric_limits<double>::infinity();
}

std::string ExtReal::describe() const {
  if (is_infinite()) return "inf";
  char buf[64];
  if (level_ == 0) {
    std::snprintf(buf, sizeof buf, "%.17g", residual_);
  } else {
    std::snprintf(buf, sizeof buf, "exp^%u(%.17g)", level_, residual_);
  }
  return buf;
}

std::strong_ordering operator<=>(const ExtReal& a, const ExtReal& b) {
  if (a.level_ != b.level_) return a.level_ <=> b.level_;
  if (a.residual_ < b.residual_) return std::strong_ordering::less;
  if (a.residual_ > b.residual_) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

int ext_compare(const ExtReal& a, const ExtReal& b) {
  const auto c = a <=> b;
  return c < 0 ? -1 : (c > 0 ? 1 : 0);
}

}  // namespace minmod
