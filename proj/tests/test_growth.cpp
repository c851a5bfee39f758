#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "minmod/ext_real.hpp"
#include "minmod/growth_model.hpp"
#include "minmod/modulus.hpp"
#include "oracles.hpp"

using namespace minmod;

TEST_CASE("ext_from_log examples") {
  const ExtReal one = ExtReal::from_log(0.0);
  CHECK(one.level() == 0);
  CHECK(one.residual() == doctest::Approx(1.0).epsilon(1e-15));

  const ExtReal big = ExtReal::from_log(1e6);
  CHECK(big.level() == 1);
  CHECK(big.residual() == 1e6);
  CHECK(big.ln_value() == 1e6);

  const ExtReal two = ExtReal::from_log(std::log(2.0));
  CHECK(two.level() == 0);
  CHECK(two.residual() == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("canonical form tiles the levels") {
  CHECK(ExtReal::from_value(9.9e99).level() == 0);
  CHECK(ExtReal::from_value(1e100).level() == 1);
  const ExtReal huge = ExtReal::from_log(1e200);
  CHECK(huge.level() == 2);
  CHECK(huge.residual() == doctest::Approx(std::log(1e200)));
  CHECK(huge.exp().level() == 3);
  CHECK(huge.exp().log() == huge);
  // exp of a small level-0 value comes back down to level 0
  CHECK(ExtReal::from_value(3.0).exp().level() == 0);
  CHECK(ExtReal::from_value(3.0).exp().residual() == doctest::Approx(std::exp(3.0)));
  CHECK(ExtReal::from_value(300.0).exp().level() == 1);
}

TEST_CASE("ext_compare examples") {
  CHECK(ext_compare(ExtReal::from_value(5), ExtReal::from_value(7)) == -1);
  CHECK(ext_compare(ExtReal::from_log(1e6), ExtReal::from_value(1e300)) == 1);
  CHECK(ext_compare(ExtReal::from_log(1e6), ExtReal::from_log(1e6)) == 0);
  CHECK(ext_compare(ExtReal::infinity(), ExtReal::from_log(1e300)) == 1);
}

TEST_CASE("ext_compare is a total order consistent with values") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-5.0, 700.0);
  std::vector<ExtReal> xs;
  std::vector<double> logs;
  for (int i = 0; i < 200; ++i) {
    const double l = u(rng);
    xs.push_back(ExtReal::from_log(l));
    logs.push_back(l);
  }
  for (int i = 0; i < 40; ++i) xs.push_back(ExtReal::from_log(std::exp(u(rng))));
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t j = 0; j < xs.size(); ++j) {
      CHECK(ext_compare(xs[i], xs[j]) == -ext_compare(xs[j], xs[i]));
      if (i < logs.size() && j < logs.size() && logs[i] != logs[j]) {
        CHECK(ext_compare(xs[i], xs[j]) == (logs[i] < logs[j] ? -1 : 1));
      }
      for (std::size_t k = 0; k < xs.size(); k += 7) {
        if (ext_compare(xs[i], xs[j]) <= 0 && ext_compare(xs[j], xs[k]) <= 0) {
          CHECK(ext_compare(xs[i], xs[k]) <= 0);
        }
      }
    }
  }
}

TEST_CASE("from_log of ln is the identity at levels 0 and 1") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-50.0, 5000.0);
  for (int i = 0; i < 500; ++i) {
    const ExtReal x = ExtReal::from_log(u(rng));
    REQUIRE(x.level() <= 1);
    const ExtReal y = ExtReal::from_log(x.ln_value());
    CHECK(y.level() == x.level());
    CHECK(std::abs(y.residual() - x.residual()) <= 1e-12 * std::abs(x.residual()));
  }
}

TEST_CASE("mul_const at levels 0 and 1") {
  CHECK(ExtReal::from_value(3.0).mul_const(2.0).residual() == 6.0);
  const ExtReal x = ExtReal::from_log(1000.0).mul_const(std::exp(5.0));
  CHECK(x.ln_value() == doctest::Approx(1005.0));
  const ExtReal h = ExtReal::from_log(1e200);
  CHECK(h.mul_const(1e10) == h);
}

TEST_CASE("iterate_growth_map on closed-form models") {
  const GrowthModel exp_model = GrowthModel::analytic([](const ExtReal& r) { return r.exp(); }, "exp");
  const auto xs = iterate_growth_map(exp_model, ExtReal::from_value(1.0), 3);
  REQUIRE(xs.size() == 4);
  CHECK(xs[1].value.to_double() == doctest::Approx(std::numbers::e));
  CHECK(xs[2].value.to_double() == doctest::Approx(15.154262241479262));
  CHECK(xs[3].value.to_double() == doctest::Approx(3814279.1047602464));

  const GrowthModel square = GrowthModel::analytic(
      [](const ExtReal& r) { return ExtReal::from_log(2.0 * r.ln_value()); }, "r^2");
  const auto ys = iterate_growth_map(square, ExtReal::from_value(2.0), 4);
  const double expect[] = {2, 4, 16, 256, 65536};
  for (int i = 0; i < 5; ++i) CHECK(ys[i].value.to_double() == doctest::Approx(expect[i]).epsilon(1e-12));
}

TEST_CASE("table models interpolate, extrapolate with flags, and refuse below the table") {
  // ln phi = 2 ln r on [1, 1000]: phi(r) = r^2
  std::vector<double> x, y;
  for (int i = 0; i <= 60; ++i) {
    x.push_back(std::log(1000.0) * i / 60.0);
    y.push_back(2.0 * x.back());
  }
  const GrowthModel m(x, y);
  CHECK(m(ExtReal::from_value(10.0)).value.to_double() == doctest::Approx(100.0).epsilon(1e-9));
  CHECK(m(ExtReal::from_value(10.0)).regime == Regime::Sampled);
  const GrowthValue far = m(ExtReal::from_value(1e5));
  CHECK(far.regime == Regime::Extrapolated);
  CHECK_THROWS_AS(m(ExtReal::from_value(0.5)), GrowthRangeError);

  const auto seq = iterate_growth_map(m, ExtReal::from_value(3.0), 4);
  CHECK(seq[1].regime == Regime::Sampled);
  CHECK(seq[2].regime == Regime::Sampled);
  CHECK(seq[3].regime == Regime::Sampled);  // model(81)
  CHECK(seq[4].regime == Regime::Extrapolated);
  for (std::size_t i = 1; i < seq.size(); ++i) CHECK(seq[i - 1].value < seq[i].value);

  const GrowthModel shrink(x, std::vector<double>(x.size(), -1.0));
  try {
    iterate_growth_map(shrink, ExtReal::from_value(5.0), 3);
    FAIL("expected a range error");
  } catch (const GrowthRangeError& e) {
    CHECK(e.step() == 1);
  }

  const std::string csv = m.to_csv(2);
  CHECK(csv.rfind("ln_r,ln_phi,regime\n", 0) == 0);
  CHECK(csv.find("extrapolated") != std::string::npos);
}

TEST_CASE("extrapolation reaches past double range through the tower") {
  // ln ln phi = ln r, i.e. phi = exp(r)
  std::vector<double> x, y;
  for (int i = 0; i <= 40; ++i) {
    const double r = std::exp(std::log(100.0) * i / 40.0);
    x.push_back(std::log(r));
    y.push_back(r);
  }
  const GrowthModel m(x, y);
  CHECK(m.fit_slope() == doctest::Approx(1.0).epsilon(1e-9));
  const auto seq = iterate_growth_map(m, ExtReal::from_value(5.0), 4);
  CHECK(seq[1].value.ln_value() == doctest::Approx(5.0).epsilon(1e-3));
  CHECK(seq[2].regime == Regime::Extrapolated);
  CHECK(seq[4].value.level() >= 2);
  CHECK(seq[3].value < seq[4].value);
}

TEST_CASE("monotone model iteration from above the fixed point increases") {
  std::vector<double> x, y;
  for (int i = 0; i <= 100; ++i) {
    x.push_back(0.1 * i);
    y.push_back(1.5 * x.back());  // phi(r) = r^1.5, fixed point at 1
  }
  const GrowthModel m(x, y);
  const auto seq = iterate_growth_map(m, ExtReal::from_value(1.2), 12);
  for (std::size_t i = 1; i < seq.size(); ++i) CHECK(seq[i - 1].value < seq[i].value);
}

TEST_CASE("sampled envelope model of 2z cos(sqrt z) iterates upward") {
  const double pi2 = std::numbers::pi * std::numbers::pi;
  const Expr f = parse("2*z*cos(sqrt(z))");
  ModulusOptions opts;
  opts.tol = 1e-9;
  const ModulusProfile prof = build_profile(f, 9 * pi2, 1e4, 400, opts);
  const GrowthModel model = growth_model_from_profile(prof, ProfileSeries::Envelope);
  const auto seq = iterate_growth_map(model, ExtReal::from_value(9 * pi2), 5);
  REQUIRE(seq.size() == 6);

  // Oracle: envelope from brute-force circle minima on a dense radius grid.
  const CompiledExpr fc(f);
  std::vector<double> rs, env;
  double run = 0.0;
  for (int i = 0; i <= 3000; ++i) {
    const double r = 9 * pi2 * std::pow(4000.0 / (9 * pi2), i / 3000.0);
    run = std::max(run, oracle::brute_min(fc, r, 4096));
    rs.push_back(r);
    env.push_back(run);
  }
  auto dense_env = [&](double r) {
    std::size_t k = 0;
    while (k + 1 < rs.size() && rs[k + 1] <= r) ++k;
    return env[k];
  };
  for (std::size_t i = 1; i < seq.size(); ++i) {
    const double prev = seq[i - 1].value.to_double();
    const double cur = seq[i].value.to_double();
    CHECK(cur > prev);
    CHECK(seq[i].regime == Regime::Sampled);
    INFO("step " << i << " model " << cur << " oracle " << dense_env(prev));
    CHECK(std::abs(cur - dense_env(prev)) < 0.05 * cur);
  }
}
