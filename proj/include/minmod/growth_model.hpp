// Growth models r -> phi(r) for iterating moduli past double range.
#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "minmod/ext_real.hpp"

namespace minmod {

enum class Regime { Sampled, Extrapolated };

std::string regime_name(Regime r);

struct GrowthValue {
  ExtReal value;
  Regime regime = Regime::Sampled;
};

/// Raised when a model is asked for a value below its table. `step()` is the
/// iteration index that hit the boundary (0 for a direct evaluation).
class GrowthRangeError : public std::out_of_range {
 public:
  GrowthRangeError(std::size_t step, const std::string& what)
      : std::out_of_range(what), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

class GrowthModel {
 public:
  /// Maps r to phi(r). Used for closed-form models; always reports Sampled.
  using Analytic = std::function<ExtReal(const ExtReal& r)>;

  /// Table of (ln r, ln phi(r)); ln r must be strictly increasing.
  /// The extrapolation line is fitted to ln ln phi against ln r over the top
  /// decade of the table, using rows with ln phi > 0.
  GrowthModel(std::vector<double> ln_r, std::vector<double> ln_phi, std::string descriptor = {});
  static GrowthModel analytic(Analytic fn, std::string descriptor);

  GrowthValue operator()(const ExtReal& r) const;

  const std::vector<double>& ln_r() const { return ln_r_; }
  const std::vector<double>& ln_phi() const { return ln_phi_; }
  bool is_analytic() const { return static_cast<bool>(analytic_); }
  bool can_extrapolate() const { return fit_ok_; }
  double fit_slope() const { return slope_; }
  double fit_intercept() const { return intercept_; }
  const std::string& descriptor() const { return descriptor_; }

  /// Columns ln_r, ln_phi, regime. `extra_decades` appends extrapolated rows
  /// at one-decade spacing beyond the table.
  std::string to_csv(int extra_decades = 0) const;

 private:
  GrowthModel() = default;

  std::vector<double> ln_r_;
  std::vector<double> ln_phi_;
  Analytic analytic_;
  bool fit_ok_ = false;
  double slope_ = 0.0;
  double intercept_ = 0.0;
  std::string descriptor_;
};

/// x_0 = start, x_{k+1} = model(x_k). Once a step is extrapolated every later
/// entry is flagged Extrapolated as well. Throws GrowthRangeError when an
/// iterate falls below the table.
std::vector<GrowthValue> iterate_growth_map(const GrowthModel& model, const ExtReal& start,
                                            std::size_t steps);

}  // namespace minmod
