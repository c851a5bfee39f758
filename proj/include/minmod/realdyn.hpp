// Dynamics of a positive continuous function phi on a bounded window:
// running maxima, the escape test phi~(t) > t, and orbit certificates built
// by backward interval shooting.
#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "minmod/modulus.hpp"

namespace minmod {

class PhiFunction {
 public:
  using Fn = std::function<double(double)>;

  /// `fn` must be safe to call concurrently. `hints` are points that any
  /// sampling of the function must include.
  static PhiFunction analytic(Fn fn, double lo, double hi, std::string descriptor,
                              std::vector<double> hints = {});
  /// Piecewise-linear through (t[i], v[i]); t strictly increasing, v >= 0.
  static PhiFunction tabulated(std::vector<double> t, std::vector<double> v, std::string descriptor);

  /// Throws std::out_of_range outside the window.
  double operator()(double t) const;

  double lo() const { return lo_; }
  double hi() const { return hi_; }
  bool in_window(double t) const;
  bool is_tabulated() const { return !fn_; }
  /// Table nodes for tabulated functions; for analytic functions, extra
  /// points that sampling must include (may be empty).
  const std::vector<double>& nodes() const { return nodes_; }
  const std::vector<double>& values() const { return values_; }
  const std::string& descriptor() const { return descriptor_; }

 private:
  Fn fn_;
  double lo_ = 0.0;
  double hi_ = 0.0;
  std::vector<double> nodes_;
  std::vector<double> values_;
  std::string descriptor_;
};

struct DynOptions {
  /// Grid size for analytic functions when `max_step` is 0. The grid is
  /// geometric when the window spans more than two decades.
  std::size_t samples = 4096;
  /// Largest grid step for analytic functions (0: unused).
  double max_step = 0.0;
  /// Uniform samples per interval in orbit constructions.
  std::size_t interval_samples = 2048;
  /// Relative tolerance separating tangencies from failures in check_escape.
  double tol = 1e-9;
  /// check_escape holds only if every failure lies below
  /// lo * (hi / lo)^tail_fraction.
  double tail_fraction = 0.5;
  unsigned threads = 1;
};

/// phi built from a profile: the lower bracket of m, or the envelope.
PhiFunction phi_from_profile(const ModulusProfile& profile, ProfileSeries series);

/// Running maximum from the window start. Tabulated input gives an exact
/// piecewise-linear result; analytic input is sampled, local maxima are
/// refined by golden-section search, and the result evaluates
/// max(running max at the last node, phi(t)).
PhiFunction maximal_function(const PhiFunction& phi, const DynOptions& opts = {});

/// Sorted (t, phi(t)) samples of [a, b] including interior nodes and refined
/// local extrema.
std::vector<std::pair<double, double>> sample_interval(const PhiFunction& phi, double a, double b,
                                                       const DynOptions& opts);

enum class EscapeOutcome { HoldsOnWindow, Fails };

struct EscapeVerdict {
  EscapeOutcome outcome = EscapeOutcome::Fails;
  std::optional<double> threshold;       // T, when holds
  std::optional<double> counterexample;  // largest t with phi~(t) < t, when fails
  std::optional<double> margin;          // min of phi~(t) - t over grid points above T
  std::vector<double> tangencies;        // grid points with |phi~(t) - t| within tolerance
  std::size_t failure_points = 0;
  double window_lo = 0.0;
  double window_hi = 0.0;
  double tail_start = 0.0;
};

EscapeVerdict check_escape(const PhiFunction& phi, const DynOptions& opts = {});

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double t, double rel_tol) const;
};

struct CoveringEvidence {
  double u = 0.0;
  double phi_u = 0.0;
  double v = 0.0;
  double phi_v = 0.0;
};

struct OrbitCertificate {
  static constexpr int kSchemaVersion = 1;
  std::string kind;  // "fastest" or "slow"
  std::string phi_source;
  double window_lo = 0.0;
  double window_hi = 0.0;
  double T = 0.0;
  std::size_t requested_horizon = 0;
  std::size_t horizon = 0;
  /// E_0..E_N (fastest) or the chain F_0..F_N (slow).
  std::vector<Interval> intervals;
  /// Nested J_n subsets of intervals[n] with phi(J_n) inside J_{n+1}.
  std::vector<Interval> shooting;
  /// evidence[n]: u, v in intervals[n] with phi(u) <= left(intervals[n+1])
  /// and phi(v) >= right(intervals[n+1]).
  std::vector<CoveringEvidence> evidence;
  double witness = 0.0;
  /// Shadowing orbit: orbit[n] in shooting[n], phi(orbit[n]) ~ orbit[n+1].
  std::vector<double> orbit;
  /// |phi(orbit[n]) - orbit[n+1]| / max(1, |orbit[n+1]|).
  std::vector<double> residuals;

  // Slow orbits only.
  std::vector<std::size_t> chain;  // chain[m]: index n of E_n used as F_m
  std::vector<double> ladder;      // the points T, phi~(T), phi~^2(T), ...
  std::vector<std::size_t> pits;   // n(0), n(1), ...
  std::vector<std::size_t> waits;  // m(k): earliest start of the climb to pit n(k+1)
  std::vector<double> targets;
  std::size_t n_a = 0;
};

class CoveringError : public std::runtime_error {
 public:
  CoveringError(std::size_t step, const std::string& what) : std::runtime_error(what), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

/// The construction does not apply on this window (for slow orbits: no pit).
class InapplicableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

OrbitCertificate fastest_orbit(const PhiFunction& phi, double T, std::size_t horizon,
                               const DynOptions& opts = {});

/// `targets[n]` is a_n; needs at least horizon + 1 entries, increasing.
OrbitCertificate slow_orbit(const PhiFunction& phi, double T, const std::vector<double>& targets,
                            std::size_t horizon, const DynOptions& opts = {});

struct ReplayReport {
  bool ok = true;
  std::vector<std::string> failures;
  double max_residual = 0.0;
  double max_ladder_error = 0.0;
};

/// Re-evaluates every evidence inequality, membership and residual from
/// scratch, and recomputes the ladder phi~^n(T) from phi.
ReplayReport replay(const OrbitCertificate& cert, const PhiFunction& phi, const DynOptions& opts = {},
                    double rel_tol = 1e-6);

enum class OrbitExit { Completed, EscapedWindow };

struct PhiOrbit {
  std::vector<double> values;  // phi^1(t), phi^2(t), ... while in the window
  OrbitExit exit = OrbitExit::Completed;
};

PhiOrbit iterate_phi(const PhiFunction& phi, double t, std::size_t horizon);

nlohmann::json to_json(const EscapeVerdict& v);
nlohmann::json to_json(const OrbitCertificate& c);

}  // namespace minmod
