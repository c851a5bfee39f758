#include <cmath>
#include <numbers>

#include "doctest.h"
#include "minmod/realdyn.hpp"
#include "oracles.hpp"

using namespace minmod;
using std::numbers::pi;

namespace {

PhiFunction linear2(double lo, double hi) {
  return PhiFunction::analytic([](double t) { return 2.0 * t; }, lo, hi, "2t");
}
PhiFunction square(double lo, double hi) {
  return PhiFunction::analytic([](double t) { return t * t; }, lo, hi, "t^2");
}
PhiFunction pit_function() {
  return PhiFunction::analytic([](double t) { return 2.0 * t * std::abs(std::cos(pi * t)) + 0.1; }, 0.5, 1e4,
                               "2t|cos(pi t)| + 0.1");
}

const ModulusProfile& fatou_profile() {
  static const ModulusProfile p = build_profile(parse("z+1+exp(-z)"), 1.0, 100.0, 2000);
  return p;
}

}  // namespace

TEST_CASE("tabulated phi interpolates and rejects points outside its window") {
  const PhiFunction p = PhiFunction::tabulated({0.0, 1.0, 3.0}, {1.0, 3.0, 2.0}, "table");
  CHECK(p(0.5) == doctest::Approx(2.0));
  CHECK(p(2.0) == doctest::Approx(2.5));
  CHECK(p(3.0) == 2.0);
  CHECK_THROWS_AS(p(3.5), std::out_of_range);
  CHECK_THROWS_AS(PhiFunction::tabulated({0.0, 1.0}, {1.0, -1.0}, "neg"), std::invalid_argument);
}

TEST_CASE("maximal_function of increasing functions is the function itself") {
  const PhiFunction lin = maximal_function(linear2(0.1, 100.0));
  for (double t : {0.1, 1.0, 17.3, 100.0}) CHECK(lin(t) == 2.0 * t);
  const PhiFunction sq = maximal_function(square(0.0, 2.0));
  for (double t : {0.0, 0.3, 1.0, 1.99}) CHECK(sq(t) == t * t);
}

TEST_CASE("maximal_function is non-decreasing, dominates phi and is idempotent") {
  const PhiFunction m = phi_from_profile(fatou_profile(), ProfileSeries::Min);
  const PhiFunction mf = maximal_function(m);
  REQUIRE(mf.is_tabulated());
  for (std::size_t i = 1; i < mf.nodes().size(); ++i) CHECK(mf.values()[i] >= mf.values()[i - 1]);
  for (double t : m.nodes()) CHECK(mf(t) >= m(t));
  const PhiFunction again = maximal_function(mf);
  CHECK(again.nodes() == mf.nodes());
  CHECK(again.values() == mf.values());

  const PhiFunction pf = maximal_function(pit_function(), DynOptions{.max_step = 0.05});
  double prev = 0.0;
  for (double t : pf.nodes()) {
    CHECK(pf(t) >= prev);
    prev = pf(t);
  }
}

TEST_CASE("running max of the tabulated m of z+1+exp(-z) has plateaus across the pits") {
  const PhiFunction m = phi_from_profile(fatou_profile(), ProfileSeries::Min);
  const PhiFunction mf = maximal_function(m);
  // Oracle: running maximum of brute-force circle minima on a dense grid.
  const CompiledExpr f(parse("z+1+exp(-z)"));
  double run = 0.0;
  std::vector<std::pair<double, double>> dense;
  for (int i = 0; i <= 20000; ++i) {
    const double r = std::pow(100.0, i / 20000.0);
    run = std::max(run, oracle::brute_min(f, r, 2048));
    dense.emplace_back(r, run);
  }
  for (int k = 2; k <= 4; ++k) {
    // pits of m sit close to (2k + 1/2) pi; the running max is flat across them
    const double c = (2 * k + 0.5) * pi;
    CHECK(mf(c - 0.5) == mf(c + 0.5));
    CHECK(m(c) < 0.25 * mf(c));
    CHECK(mf(c) < c);
  }
  for (const auto& [r, v] : dense) {
    if (r < 2.0) continue;
    INFO("r = " << r);
    CHECK(std::abs(mf(r) - v) <= 1e-2 * v);
  }
}

TEST_CASE("check_escape examples") {
  const EscapeVerdict a = check_escape(linear2(0.1, 100.0));
  CHECK(a.outcome == EscapeOutcome::HoldsOnWindow);
  CHECK(*a.threshold == 0.1);
  CHECK(a.margin.has_value());

  const EscapeVerdict b = check_escape(square(0.1, 100.0));
  CHECK(b.outcome == EscapeOutcome::HoldsOnWindow);
  CHECK(*b.threshold == doctest::Approx(1.0).epsilon(1e-5));

  const EscapeVerdict c = check_escape(phi_from_profile(fatou_profile(), ProfileSeries::Min));
  CHECK(c.outcome == EscapeOutcome::Fails);
  REQUIRE(c.counterexample.has_value());
  CHECK(*c.counterexample > 50.0);
  CHECK_FALSE(c.threshold.has_value());

  const EscapeVerdict d = check_escape(PhiFunction::analytic([](double t) { return 0.5 * t; }, 1.0, 10.0, "t/2"));
  CHECK(d.outcome == EscapeOutcome::Fails);
  CHECK_FALSE(d.margin.has_value());
}

TEST_CASE("a recorded sequence with phi(t_n) >= t_{n+1} forces escape from t_0") {
  const PhiFunction phi = PhiFunction::analytic([](double t) { return 0.5 * t * t; }, 0.1, 1e6, "t^2/2");
  std::vector<double> ts{3.0};
  while (phi(ts.back()) < 1e6) ts.push_back(phi(ts.back()));
  for (std::size_t n = 0; n + 1 < ts.size(); ++n) REQUIRE(phi(ts[n]) >= ts[n + 1]);
  const EscapeVerdict v = check_escape(phi);
  CHECK(v.outcome == EscapeOutcome::HoldsOnWindow);
  CHECK(*v.threshold <= ts[0]);
}

TEST_CASE("fastest_orbit for 2t") {
  const PhiFunction phi = linear2(0.1, 1e4);
  const OrbitCertificate c = fastest_orbit(phi, 1.0, 10);
  CHECK(c.horizon == 10);
  CHECK(c.witness >= 1.0);
  CHECK(c.witness <= 2.0);
  CHECK(c.witness == doctest::Approx(1.5));
  double x = c.witness;
  for (int n = 0; n <= 10; ++n) {
    CHECK(x >= std::ldexp(1.0, n));
    CHECK(x <= std::ldexp(1.0, n + 1));
    x = phi(x);
  }
  const ReplayReport r = replay(c, phi);
  CHECK(r.ok);
  for (double res : c.residuals) CHECK(res <= 1e-6);
  CHECK(to_json(c)["schema_version"] == 1);
}

TEST_CASE("fastest_orbit for t^2 from 1.5") {
  const PhiFunction phi = square(0.1, 1e6);
  const OrbitCertificate c = fastest_orbit(phi, 1.5, 4);
  REQUIRE(c.horizon == 4);
  double x = c.witness;
  for (int n = 0; n <= 4; ++n) {
    const double lo = std::pow(1.5, std::ldexp(1.0, n)), hi = std::pow(1.5, std::ldexp(1.0, n + 1));
    CHECK(c.intervals[n].lo == doctest::Approx(lo).epsilon(1e-12));
    CHECK(x >= lo * (1 - 1e-9));
    CHECK(x <= hi * (1 + 1e-9));
    x = phi(x);
  }
  CHECK(replay(c, phi).ok);
}

TEST_CASE("fastest_orbit on the tabulated envelope of 2z cos(sqrt z)") {
  const ModulusProfile p = build_profile(parse("2*z*cos(sqrt(z))"), 9 * pi * pi, 2e4, 600);
  const PhiFunction phi = phi_from_profile(p, ProfileSeries::Envelope);
  const EscapeVerdict v = check_escape(phi);
  REQUIRE(v.outcome == EscapeOutcome::HoldsOnWindow);
  const OrbitCertificate c = fastest_orbit(phi, 9 * pi * pi, 50);
  CHECK(c.horizon >= 4);
  CHECK(c.horizon < 50);
  const ReplayReport r = replay(c, phi);
  CHECK(r.ok);
  for (std::size_t n = 1; n < c.orbit.size(); ++n) CHECK(c.orbit[n] > c.orbit[n - 1]);
}

TEST_CASE("escape verdicts yield fastest orbits with increasing witnesses") {
  const std::vector<PhiFunction> phis = {linear2(0.1, 1e4), square(0.1, 1e8),
                                         phi_from_profile(build_profile(parse("2*z*(1+exp(-z))"), 1.0, 200.0, 800),
                                                          ProfileSeries::Min)};
  for (const PhiFunction& phi : phis) {
    INFO(phi.descriptor());
    const EscapeVerdict v = check_escape(phi);
    REQUIRE(v.outcome == EscapeOutcome::HoldsOnWindow);
    const double T = *v.threshold * (1 + 1e-6);
    const OrbitCertificate c = fastest_orbit(phi, T, 8);
    CHECK(replay(c, phi).ok);
    for (std::size_t n = 1; n < c.orbit.size(); ++n) CHECK(c.orbit[n] > c.orbit[n - 1]);
  }
}

TEST_CASE("slow_orbit on the pit function") {
  const PhiFunction phi = pit_function();
  const DynOptions opts{.max_step = 0.05};
  const EscapeVerdict v = check_escape(phi, opts);
  REQUIRE(v.outcome == EscapeOutcome::HoldsOnWindow);
  const double T = *v.threshold * (1 + 1e-6);
  std::vector<double> a;
  for (int n = 0; n <= 200; ++n) a.push_back(n + 10.0);
  const OrbitCertificate c = slow_orbit(phi, T, a, 200, opts);
  CHECK(c.horizon == 200);
  const ReplayReport r = replay(c, phi, opts);
  CHECK(r.ok);
  for (const auto& f : r.failures) INFO(f);
  for (std::size_t n = c.n_a; n <= 200; ++n) CHECK(c.orbit[n] <= a[n]);
  // the chain climbs to at least the second pit
  CHECK(c.pits.size() >= 2);
  bool reached = false;
  for (std::size_t idx : c.chain) reached = reached || idx == c.pits[1];
  CHECK(reached);

  // Oracle for the pits: phi dips to 0.1 exactly at half-integers, so E_n
  // is a pit iff it contains one and 0.1 lies below the reference level.
  const std::size_t n0 = c.pits[0];
  std::vector<std::size_t> expected;
  for (std::size_t n = n0 + 1; n + 1 < c.ladder.size(); ++n) {
    const double lo = c.ladder[n], hi = c.ladder[n + 1];
    const bool has_half = std::floor(hi - 0.5) >= std::ceil(lo - 0.5);
    if (has_half && 0.1 <= c.ladder[n0]) expected.push_back(n);
  }
  CHECK(std::vector<std::size_t>(c.pits.begin() + 1, c.pits.end()) == expected);
}

TEST_CASE("slow_orbit is inapplicable without pits") {
  std::vector<double> a;
  for (int n = 0; n <= 20; ++n) a.push_back(n + 10.0);
  CHECK_THROWS_AS(slow_orbit(linear2(0.1, 1e4), 1.0, a, 20), InapplicableError);
}

TEST_CASE("slow_orbit on the tabulated m of 2z(1+exp(-z))") {
  const PhiFunction phi = phi_from_profile(build_profile(parse("2*z*(1+exp(-z))"), 1.0, 200.0, 3000), ProfileSeries::Min);
  const EscapeVerdict v = check_escape(phi);
  REQUIRE(v.outcome == EscapeOutcome::HoldsOnWindow);
  std::vector<double> a;
  for (int n = 0; n <= 60; ++n) a.push_back(12.6 * std::pow(1.05, n));
  const OrbitCertificate c = slow_orbit(phi, *v.threshold * (1 + 1e-6), a, 60);
  CHECK(replay(c, phi).ok);
  for (std::size_t n = c.n_a; n <= 60; ++n) CHECK(c.orbit[n] <= a[n]);
  // pits sit where the circle passes through a zero i(2k+1)pi
  for (std::size_t k = 1; k < c.pits.size(); ++k) {
    const std::size_t n = c.pits[k];
    const double lo = c.ladder[n], hi = c.ladder[n + 1];
    CHECK(std::floor((hi / pi - 1) / 2) >= std::ceil((lo / pi - 1) / 2));
  }
}

TEST_CASE("iterate_phi") {
  const PhiOrbit o = iterate_phi(linear2(0.1, 1e4), 1.0, 5);
  CHECK(o.values == std::vector<double>{2, 4, 8, 16, 32});
  CHECK(o.exit == OrbitExit::Completed);

  const PhiFunction m81 = phi_from_profile(build_profile(parse("2*z*(1+exp(-z))"), 1.0, 1000.0, 2000), ProfileSeries::Min);
  const PhiOrbit p = iterate_phi(m81, 4 * pi, 20);
  CHECK(p.exit == OrbitExit::EscapedWindow);
  double prev = 4 * pi;
  for (double x : p.values) {
    CHECK(x > prev);
    prev = x;
  }

  const PhiFunction mf = phi_from_profile(fatou_profile(), ProfileSeries::Min);
  const double pit = 5 * pi - 0.02;
  CHECK(mf(pit) < pit);
  const PhiOrbit q = iterate_phi(mf, pit, 10);
  REQUIRE(!q.values.empty());
  CHECK(q.values[0] < pit);
}
