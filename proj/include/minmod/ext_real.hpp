// Positive values beyond double range, stored as an exponential tower.
#pragma once

#include <compare>
#include <limits>
#include <string>

namespace minmod {

/// value = exp^level(residual).
///
/// Canonical form: level 0 holds every value below 1e100 directly (the
/// residual is the value itself). Level k >= 1 keeps its residual in
/// [ln 1e100, 1e100), so the levels tile the positive axis without overlap.
class ExtReal {
 public:
  static constexpr double kBandLow = 230.25850929940458;  // ln 1e100
  static constexpr double kBandHigh = 1e100;

  ExtReal() = default;

  static ExtReal from_value(double v);
  static ExtReal from_log(double ln_value);
  /// Builds a canonical value from an arbitrary (level, residual) pair.
  static ExtReal tower(unsigned level, double residual);
  /// Larger than every finite tower; used for saturated entries.
  static ExtReal infinity();

  unsigned level() const { return level_; }
  double residual() const { return residual_; }
  bool is_infinite() const { return level_ == kInfLevel; }

  /// Natural log. Requires a positive value.
  ExtReal log() const;
  ExtReal exp() const;
  /// Multiplication by c > 0. Exact at levels 0 and 1; higher levels are
  /// returned unchanged (the factor is below their resolution).
  ExtReal mul_const(double c) const;

  /// ln of the value as a double; +inf from level 2 up.
  double ln_value() const;
  /// The value as a double; +inf when it does not fit.
  double to_double() const;

  std::string describe() const;

  friend std::strong_ordering operator<=>(const ExtReal& a, const ExtReal& b);
  friend bool operator==(const ExtReal& a, const ExtReal& b) {
    return a.level_ == b.level_ && a.residual_ == b.residual_;
  }

 private:
  static constexpr unsigned kInfLevel = std::numeric_limits<unsigned>::max();
  ExtReal(unsigned level, double residual) : level_(level), residual_(residual) {}

  unsigned level_ = 0;
  double residual_ = 0.0;
};

/// -1, 0 or 1.
int ext_compare(const ExtReal& a, const ExtReal& b);

}  // namespace minmod
