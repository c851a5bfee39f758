#include <cmath>
#include <numbers>

#include "doctest.h"
#include "minmod/classify.hpp"
#include "oracles.hpp"

using namespace minmod;

namespace {

Expr quartic_factorial_series() {
  CoefficientList cl;
  for (int k = 0; k <= 400; ++k) cl.coeffs.emplace_back(std::exp(-4.0 * std::lgamma(k + 1.0)));
  return Expr::series(cl);
}

// Shared profile of sum z^k / (k!)^4 on [1, 1e17]; 10, 100 and every
// power of ten are grid points.
const ModulusProfile& quartic_profile() {
  static const ModulusProfile p = build_profile(quartic_factorial_series(), 1.0, 1e17, 17 * 30 + 1);
  return p;
}

double grid_point_near(const ModulusProfile& p, double r) {
  double best = p.radii[0];
  for (double x : p.radii) {
    if (std::abs(x - r) < std::abs(best - r)) best = x;
  }
  return best;
}

std::vector<Complex> coeffs_at(std::size_t len, const std::vector<std::size_t>& idx) {
  std::vector<Complex> c(len);
  for (std::size_t i : idx) c[i] = 1.0;
  return c;
}

}  // namespace

TEST_CASE("estimate_orders on closed-form maximum moduli") {
  const OrderEstimate e = estimate_orders(build_profile(parse("exp(z)"), 1.0, 1000.0, 200));
  CHECK(std::abs(e.order.value - 1.0) < 0.05);
  CHECK(std::abs(e.type.value - 1.0) < 0.05);
  CHECK(e.order.value >= e.lower_order.value - (e.order.residual + e.lower_order.residual + 1e-9));

  const OrderEstimate e2 = estimate_orders(build_profile(parse("exp(z^2)"), 0.2, 25.0, 200));
  CHECK(std::abs(e2.order.value - 2.0) < 0.05);
  CHECK(std::abs(e2.type.value - 1.0) < 0.05);

  const OrderEstimate c = estimate_orders(build_profile(parse("cos(sqrt(z))"), 1.0, 1e6, 300));
  CHECK(std::abs(c.order.value - 0.5) < 0.05);

  CHECK_THROWS_AS(estimate_orders(build_profile(parse("exp(z)"), 1.0, 50.0, 50)), ClassifyError);
}

TEST_CASE("estimate_orders on the truncated sum z^k/(k!)^4") {
  const OrderEstimate e = estimate_orders(build_profile(quartic_factorial_series(), 1.0, 1e6, 400));
  // Oracle: k ln k / ln(1/|a_k|) at the last coefficient of the truncation.
  const double k = 400.0;
  const double oracle = k * std::log(k) / (4.0 * std::lgamma(k + 1.0));
  CHECK(std::abs(e.order.value - 0.25) < 0.05);
  CHECK(std::abs(e.order.value - oracle) < 0.05);
  CHECK(e.order.value >= e.lower_order.value - (e.order.residual + e.lower_order.residual + 1e-9));
}

TEST_CASE("gap_analysis verdicts") {
  const TaylorResult t = taylor_coefficients(parse("exp(z)"), 40, 2.0);
  const GapReport g = gap_analysis(t.coeffs);
  CHECK(g.indices.size() == 40);
  CHECK(g.fabry == GapVerdict::Inconsistent);

  std::vector<std::size_t> sq, cube;
  for (std::size_t k = 0; k <= 40; ++k) sq.push_back(k * k);
  for (std::size_t k = 0; k <= 30; ++k) cube.push_back(k * k * k);
  const GapReport s = gap_analysis(coeffs_at(sq.back() + 1, sq));
  CHECK(s.indices == sq);
  CHECK(s.fabry == GapVerdict::Consistent);

  // sanity constant for the smallest tested k
  CHECK(1000.0 > 10.0 * std::log(10.0) * std::pow(std::log(std::log(10.0)), 2.5));
  const GapReport h = gap_analysis(coeffs_at(cube.back() + 1, cube), 1e-12, 2.5);
  CHECK(h.hayman_tested == 21);
  CHECK(h.hayman_fraction == 1.0);
  CHECK(h.fabry == GapVerdict::Consistent);

  std::vector<Complex> few(30);
  for (std::size_t k = 0; k < 9; ++k) few[3 * k] = 1.0;
  CHECK_THROWS_AS(gap_analysis(few), ClassifyError);
}

TEST_CASE("gap_analysis is invariant under scaling") {
  std::vector<Complex> c(2000);
  for (std::size_t k = 0; k * k * k / 4 < c.size(); ++k) c[k * k * k / 4] = std::pow(0.9, static_cast<double>(k));
  const TaylorResult t = taylor_coefficients(parse("exp(z)"), 40, 2.0);
  for (const auto& base : {c, t.coeffs}) {
    const GapReport a = gap_analysis(base);
    for (Complex s : {Complex(3e-7, 2.0), Complex(-1e5, 0.0)}) {
      std::vector<Complex> scaled = base;
      for (auto& x : scaled) x *= s;
      const GapReport b = gap_analysis(scaled);
      CHECK(b.indices == a.indices);
      CHECK(b.fabry == a.fabry);
      CHECK(b.hayman_satisfied == a.hayman_satisfied);
    }
  }
}

TEST_CASE("maxmin_check fails for exp") {
  const ModulusProfile p = build_profile(parse("exp(z)"), 1.0, 25.0, 301);
  const double r = grid_point_near(p, 5.0);
  REQUIRE(std::abs(r - 5.0) < 1e-9);
  const MaxminReport m = maxmin_check(p, 2.0, {r});
  REQUIRE(m.entries.size() == 1);
  CHECK(m.entries[0].status == MaxminStatus::Failure);
  CHECK(m.pass_fraction == 0.0);
  CHECK_THROWS_AS(maxmin_check(p, 2.0, {4.99}), std::invalid_argument);
}

TEST_CASE("maxmin_check finds witnesses for sum z^k/(k!)^4 with C = 8") {
  const ModulusProfile& p = quartic_profile();
  std::vector<double> radii;
  for (double r : p.radii) {
    if (r >= 10.0 * (1 - 1e-12) && r <= 100.0 * (1 + 1e-12)) radii.push_back(r);
  }
  REQUIRE(radii.size() >= 20);
  const MaxminReport m = maxmin_check(p, 8.0, radii);
  CHECK(m.witnesses == radii.size());
  const CompiledExpr f(quartic_factorial_series());
  const Expr e = quartic_factorial_series();
  for (const MaxminEntry& w : m.entries) {
    INFO("r = " << w.r);
    REQUIRE(w.status == MaxminStatus::Witness);
    CHECK(w.s > w.r);
    CHECK(std::log(w.s) < 8.0 * std::log(w.r));
    // re-validation against fresh brackets and a dense-sampling oracle
    CHECK(min_modulus(e, w.s, 1e-10).low >= max_modulus(e, w.r, 1e-10).high * (1 - 1e-9));
    CHECK(oracle::brute_circle(f, w.s, 4096).min >= oracle::brute_circle(f, w.r, 4096).max);
  }
}

TEST_CASE("maxmin_check fails for 2z cos(sqrt z) at r = 1000 with C = 2") {
  const ModulusProfile p = build_profile(parse("2*z*cos(sqrt(z))"), 10.0, 1e6, 801);
  const double r = grid_point_near(p, 1000.0);
  REQUIRE(std::abs(r - 1000.0) < 1e-9);
  const MaxminReport m = maxmin_check(p, 2.0, {r});
  CHECK(m.entries[0].status == MaxminStatus::Failure);
  // Oracle: dense sampling of m on (r, r^2) never reaches M(r).
  const CompiledExpr f(parse("2*z*cos(sqrt(z))"));
  const double ln_Mr = std::log(oracle::brute_circle(f, r, 4096).max);
  double best = -INFINITY;
  for (int i = 1; i < 3000; ++i) best = std::max(best, oracle::brute_ln_min(f, std::pow(r, 1.0 + i / 3000.0), 1024));
  CHECK(best < ln_Mr);
}

TEST_CASE("va_check finds no pair for cos(sqrt z) or exp") {
  const ModulusProfile c = build_profile(parse("cos(sqrt(z))"), 1.0, 1e4, 300);
  const VaReport a = va_check(c, growth_model_from_profile(c, ProfileSeries::Min),
                              growth_model_from_profile(c, ProfileSeries::Max), 3);
  CHECK_FALSE(a.found);
  const ModulusProfile e = build_profile(parse("exp(z)"), 1.0, 100.0, 200);
  const VaReport b = va_check(e, growth_model_from_profile(e, ProfileSeries::Min),
                              growth_model_from_profile(e, ProfileSeries::Max), 3);
  CHECK_FALSE(b.found);
}

TEST_CASE("va_check on sum z^k/(k!)^4 with horizon 3") {
  const ModulusProfile& p = quartic_profile();
  const GrowthModel mm = growth_model_from_profile(p, ProfileSeries::Min);
  const GrowthModel MM = growth_model_from_profile(p, ProfileSeries::Max);
  const VaReport v = va_check(p, mm, MM, 3);
  REQUIRE(v.found);
  CHECK(v.r >= v.R);
  CHECK_FALSE(v.model_based);
  REQUIRE(v.margins.size() == 3);
  for (const auto& c : v.margins) CHECK(c.compare >= 0);
  // the envelope stays above the identity from R to the top
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p.radii[i] >= v.R) CHECK(p.envelope[i] > p.radii[i]);
  }
  // Oracle: direct brackets at each iterated radius of the model.
  const Expr f = quartic_factorial_series();
  double m_prev = v.r, M_prev = v.R;
  for (std::size_t n = 0; n < 3; ++n) {
    const double lm = min_modulus(f, m_prev, 1e-10).ln_low;
    const double lM = max_modulus(f, M_prev, 1e-10).ln_high;
    INFO("n = " << n + 1);
    // the models interpolate ln m linearly in ln r at 30 nodes per decade
    CHECK(lm >= lM - 1e-3 * std::abs(lM));
    CHECK(std::abs(lm - v.margins[n].m_n.ln_value()) <= 3e-3 * std::abs(lm));
    CHECK(std::abs(lM - v.margins[n].M_n.ln_value()) <= 1e-3 * std::abs(lM));
    m_prev = v.margins[n].m_n.to_double();
    M_prev = v.margins[n].M_n.to_double();
    if (!std::isfinite(m_prev) || !std::isfinite(M_prev)) break;
  }
}

TEST_CASE("regularity_check on synthetic models") {
  const GrowthModel poly = GrowthModel::analytic([](const ExtReal& r) { return r.log().mul_const(2.0).exp(); }, "r^2");
  const RegularityReport a = regularity_check(poly, 2.0, 2.0, 5);
  CHECK_FALSE(a.feasible);
  CHECK(a.stall_step.has_value());

  // ln M = (ln r)^3
  const GrowthModel cubic = GrowthModel::analytic(
      [](const ExtReal& r) { return r.log().log().mul_const(3.0).exp().exp(); }, "exp((ln r)^3)");
  const double R = std::exp(2.0);
  const RegularityReport b = regularity_check(cubic, R, 2.0, 4);
  CHECK(b.feasible);
  REQUIRE(b.witness.size() == 5);
  // closed forms: ln M^n(R) = 2^(3^n); the sequence ln r_n = 2 ln M^n(R)
  // satisfies the bound because 8x^3 >= 4x^3.
  for (std::size_t n = 0; n <= 4; ++n) {
    const double lnln_lower = std::pow(3.0, n) * std::log(2.0);
    CHECK(b.lower[n].log().log().to_double() == doctest::Approx(lnln_lower).epsilon(1e-9));
  }
  for (std::size_t n = 0; n < 4; ++n) {
    const double x = std::pow(2.0, std::pow(3.0, n)), y = std::pow(2.0, std::pow(3.0, n + 1));
    CHECK(std::pow(2.0 * x, 3.0) >= 2.0 * (2.0 * y));
    // the minimal witness sits below the closed-form one and meets the bound
    const double lnln_w = b.witness[n].log().log().to_double();
    CHECK(lnln_w <= std::log(2.0 * x) + 1e-12);
    CHECK(3.0 * lnln_w >= std::log(2.0) + b.witness[n + 1].log().log().to_double() - 1e-9);
    CHECK(b.witness[n] >= b.lower[n]);
  }
}

TEST_CASE("regularity_check on sum z^k/(k!)^4 with C = 8") {
  const ModulusProfile& p = quartic_profile();
  const GrowthModel MM = growth_model_from_profile(p, ProfileSeries::Max);
  const RegularityReport r = regularity_check(MM, 200.0, 8.0, 3);
  CHECK(r.witness.size() == 4);
  CHECK(r.model_based);
  const Expr f = quartic_factorial_series();
  for (std::size_t n = 0; n < 3; ++n) {
    CHECK(r.witness[n] >= r.lower[n]);
    const double rn = r.witness[n].to_double(), rn1 = r.witness[n + 1].to_double();
    if (std::isfinite(rn) && std::isfinite(rn1) && rn <= p.radii.back()) {
      CHECK(max_modulus(f, rn, 1e-10).ln_high >= 8.0 * std::log(rn1) * (1 - 1e-3));
    }
  }
  CHECK_THROWS_AS(regularity_check(MM, 0.5, 8.0, 3), std::invalid_argument);
}

TEST_CASE("zip_rate") {
  std::vector<ExtReal> pow2;
  for (int n = 1; n <= 20; ++n) pow2.push_back(ExtReal::from_value(std::ldexp(1.0, n)));
  const std::vector<double> z = zip_rate(pow2);
  for (int n = 1; n <= 20; ++n) CHECK(z[n - 1] == doctest::Approx(std::max(0.0, std::log(n * std::log(2.0))) / n));
  CHECK(z.back() < 0.15);

  std::vector<ExtReal> tower{ExtReal::from_value(2.0)};
  for (int n = 0; n < 6; ++n) tower.push_back(tower.back().exp());
  const std::vector<double> t = zip_rate(tower);
  // finite rates grow; past four levels the rate is infinite
  for (std::size_t n = 3; n < t.size(); ++n) CHECK((t[n] > t[n - 1] || std::isinf(t[n])));
  CHECK(std::isinf(t.back()));

  const std::vector<double> b = zip_rate(std::vector<ExtReal>(200, ExtReal::from_value(5.0)));
  CHECK(b.back() < 0.01);
  CHECK(b.back() < b[10]);
}

TEST_CASE("classification report JSON") {
  ClassificationReport rep;
  rep.descriptor = "exp(z)";
  rep.orders = estimate_orders(build_profile(parse("exp(z)"), 1.0, 1000.0, 200));
  const nlohmann::json j = to_json(rep);
  CHECK(j["schema_version"] == 1);
  CHECK(j["orders"]["order"]["value"].get<double>() == doctest::Approx(1.0).epsilon(0.05));
  CHECK(j["va"].is_null());
}
