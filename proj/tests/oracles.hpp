// Independent reference computations shared by the unit and acceptance tests.
#pragma once

#include <cmath>
#include <complex>
#include <numbers>

#include "minmod/eval.hpp"

namespace oracle {

struct Brute {
  double min = 0.0;
  double max = 0.0;
  double argmin = 0.0;
  double argmax = 0.0;
  // Largest change of |f| between the extremal sample and its neighbours;
  // the grid value can sit this far from the true extremum.
  double min_spread = 0.0;
  double max_spread = 0.0;
};

// Uniform sampling of |f| on |z| = r at n points of the full circle.
inline Brute brute_circle(const minmod::CompiledExpr& f, double r, int n) {
  const double step = 2.0 * std::numbers::pi / n;
  auto g = [&](int k) { return std::abs(f(std::polar(r, step * ((k % n + n) % n))).value()); };
  Brute b;
  b.min = INFINITY;
  b.max = -INFINITY;
  int kmin = 0, kmax = 0;
  for (int k = 0; k < n; ++k) {
    const double v = g(k);
    if (v < b.min) { b.min = v; kmin = k; }
    if (v > b.max) { b.max = v; kmax = k; }
  }
  b.argmin = step * kmin;
  b.argmax = step * kmax;
  b.min_spread = std::max(std::abs(g(kmin - 1) - b.min), std::abs(g(kmin + 1) - b.min));
  b.max_spread = std::max(std::abs(g(kmax - 1) - b.max), std::abs(g(kmax + 1) - b.max));
  return b;
}

inline double brute_min(const minmod::CompiledExpr& f, double r, int n) { return brute_circle(f, r, n).min; }

// ln of the sampled minimum, safe past double range.
inline double brute_ln_min(const minmod::CompiledExpr& f, double r, int n) {
  double best = INFINITY;
  for (int k = 0; k < n; ++k) best = std::min(best, f.log_abs(std::polar(r, 2.0 * std::numbers::pi * k / n)));
  return best;
}

}  // namespace oracle
