// Growth, gap and escape-rate diagnostics for entire functions.
#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "minmod/growth_model.hpp"
#include "minmod/modulus.hpp"

namespace minmod {

class ClassifyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SlopeFit {
  double value = 0.0;
  /// RMS deviation of the fitted points from the line (for the type, the
  /// spread of ln M / r^rho over the fitted radii).
  double residual = 0.0;
  std::size_t points = 0;
};

struct OrderEstimate {
  SlopeFit order;
  SlopeFit lower_order;
  SlopeFit type;
  double r_lo = 0.0;  // fitted radii
  double r_hi = 0.0;
};

/// Order from the upper convex hull of (ln r, ln ln M) over the top decade,
/// lower order from the lower hull; each is the least-squares slope through
/// the hull vertices. Throws ClassifyError when the usable rows span less
/// than two decades.
OrderEstimate estimate_orders(const ModulusProfile& profile);

enum class GapVerdict { Consistent, Inconsistent, Inconclusive };
std::string gap_verdict_name(GapVerdict v);

struct GapReport {
  double zero_tol = 1e-12;
  double alpha = 2.5;
  std::vector<std::size_t> indices;  // n_k
  /// Least-squares slope of n_k / k over the top half, and that slope times
  /// the k-range divided by the mean ratio.
  double fabry_slope = 0.0;
  double fabry_statistic = 0.0;
  GapVerdict fabry = GapVerdict::Inconclusive;
  std::size_t hayman_tested = 0;
  std::size_t hayman_satisfied = 0;
  double hayman_fraction = 0.0;
};

/// |a_j| counts as zero when it is at most zero_tol times the largest |a_i|
/// with |i - j| <= 2. Throws ClassifyError below 10 nonzero coefficients.
GapReport gap_analysis(const std::vector<Complex>& coeffs, double zero_tol = 1e-12, double alpha = 2.5);

enum class MaxminStatus { Witness, Failure, CoverageGap };
std::string maxmin_status_name(MaxminStatus s);

struct MaxminEntry {
  double r = 0.0;
  double ln_M = 0.0;  // upper bracket at r
  MaxminStatus status = MaxminStatus::Failure;
  double s = 0.0;     // witness radius
  double ln_m = 0.0;  // lower bracket at s
};

struct MaxminReport {
  double C = 0.0;
  std::vector<MaxminEntry> entries;
  std::size_t witnesses = 0;
  std::size_t failures = 0;
  std::size_t gaps = 0;
  double pass_fraction = 0.0;
};

/// For each tested radius r, the least grid s in (r, r^C) whose lower m
/// bracket reaches the upper M bracket at r. Tested radii must be grid
/// points; by default every grid radius above 1 whose r^C lies inside the
/// profile is tested. Throws ClassifyError when nothing can be tested.
MaxminReport maxmin_check(const ModulusProfile& profile, double C, const std::vector<double>& radii = {});

struct IterateComparison {
  ExtReal m_n;
  ExtReal M_n;
  Regime m_regime = Regime::Sampled;
  Regime M_regime = Regime::Sampled;
  int compare = 0;
  /// ln m_n - ln M_n when both logs fit in a double.
  std::optional<double> ln_margin;
};

struct VaReport {
  std::size_t horizon = 0;
  bool found = false;
  double r = 0.0;
  double R = 0.0;
  std::vector<IterateComparison> margins;  // n = 1..horizon
  bool model_based = false;
  std::size_t pairs_tested = 0;
};

/// First grid pair (R, r), R ascending then r ascending from R, with
/// m^n(r) >= M^n(R) for n = 1..horizon. R is restricted to grid points from
/// which the envelope stays above the identity to the top of the profile
/// and where M^n(R) increases. Throws ClassifyError when no R admits a
/// single iteration of the M model.
VaReport va_check(const ModulusProfile& profile, const GrowthModel& model_m, const GrowthModel& model_M,
                  std::size_t horizon);

struct RegularityReport {
  double R = 0.0;
  double C = 0.0;
  std::size_t horizon = 0;
  bool feasible = false;
  std::vector<ExtReal> lower;    // M^n(R), n = 0..horizon
  std::vector<ExtReal> witness;  // r_n, n = 0..horizon
  std::vector<Regime> regimes;
  /// First n with r_{n+1} <= r_n in the minimal chain.
  std::optional<std::size_t> stall_step;
  bool model_based = false;
};

/// Minimal sequence with r_n >= M^n(R) and M(r_n) >= r_{n+1}^C, solved
/// backwards from r_horizon = M^horizon(R). The verdict is feasible when the
/// minimal chain increases strictly. Throws ClassifyError when the model
/// runs out of range.
RegularityReport regularity_check(const GrowthModel& model_M, double R, double C, std::size_t horizon);

/// log+ log+ |v_n| / n with n counted from 1.
std::vector<double> zip_rate(const std::vector<ExtReal>& orbit);

struct ClassificationReport {
  static constexpr int kSchemaVersion = 1;
  std::string descriptor;
  std::optional<OrderEstimate> orders;
  std::optional<GapReport> gaps;
  std::optional<MaxminReport> maxmin;
  std::optional<VaReport> va;
  std::optional<RegularityReport> regularity;
  std::optional<std::vector<double>> zip;
};

nlohmann::json to_json(const ExtReal& x);
nlohmann::json to_json(const OrderEstimate& o);
nlohmann::json to_json(const GapReport& g);
nlohmann::json to_json(const MaxminReport& m);
nlohmann::json to_json(const VaReport& v);
nlohmann::json to_json(const RegularityReport& r);
nlohmann::json to_json(const ClassificationReport& c);

}  // namespace minmod
