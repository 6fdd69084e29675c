#include <cmath>

#include "doctest.h"

#include "agefluct/errors.hpp"
#include "agefluct/ledger.hpp"
#include "agefluct/mvf_limit.hpp"

using namespace agefluct;

namespace {

RateModel splitting() {
  return classical_model(0.0, 1.0, OffspringLaw::deterministic(1), OffspringLaw::deterministic(2));
}

GridDensity uniform01(double dx, std::size_t cells) {
  std::vector<double> v(cells, 0.0);
  for (std::size_t j = 0; j < cells && (j + 0.5) * dx < 1.0; ++j) v[j] = 1.0;
  return GridDensity(dx, v);
}

double linf(const GridDensity& a, const GridDensity& b) {
  double e = 0;
  for (std::size_t j = 0; j < a.cells(); ++j) e = std::max(e, std::abs(a[j] - b[j]));
  return e;
}

}  // namespace

TEST_CASE("exp_difference is continuous across equal rates") {
  CHECK(exp_difference(1.0, 1.0, 2.0) == doctest::Approx(2.0 * std::exp(2.0)));
  CHECK(exp_difference(1.0 + 1e-10, 1.0, 2.0) == doctest::Approx(2.0 * std::exp(2.0)).epsilon(1e-8));
  CHECK(exp_difference(2.0, 0.5, 1.0) == doctest::Approx((std::exp(2.0) - std::exp(0.5)) / 1.5));
}

TEST_CASE("closed-form density integrates to the closed-form pairings") {
  const double dx = 1e-3, t = 0.8;
  const GridDensity a0 = uniform01(dx, 2000);
  const GridDensity at = classical_exact(a0, 0.0, 1.0, 2.0, 1.0, t);
  CHECK(at.mass() == doctest::Approx(std::exp(t)).epsilon(1e-5));
  for (double lam : {0.5, -1.0}) {
    const double p0 = a0.pair(TestFunction::exponential(lam));
    const double want = classical_exp_pairing(2.0, 1.0, lam, p0, a0.mass(), t);
    CHECK(at.pair(TestFunction::exponential(lam)) == doctest::Approx(want).epsilon(1e-5));
  }
}

TEST_CASE("limit solver is first order against the closed form") {
  std::vector<double> errs;
  for (double dt : {4e-3, 2e-3, 1e-3}) {
    const auto J = static_cast<std::size_t>(std::llround(2.0 / dt));
    const GridDensity a0 = uniform01(dt, J);
    const LimitSolution sol = solve_mvf(splitting(), a0, 1.0, dt);
    errs.push_back(linf(sol.frames.back(), classical_exact(a0, 0.0, 1.0, 2.0, 1.0, 1.0)));
    CHECK(sol.totals.back() == doctest::Approx(std::exp(1.0)).epsilon(0.01));
  }
  CHECK(errs[0] / errs[1] == doctest::Approx(2.0).epsilon(0.2));
  CHECK(errs[1] / errs[2] == doctest::Approx(2.0).epsilon(0.2));
}

TEST_CASE("pure transport is an exact shift") {
  const RateModel m = classical_model(0.0, 0.0, OffspringLaw::deterministic(1), OffspringLaw::deterministic(0));
  const double dt = 0.01;
  std::vector<double> v(200, 0.0);
  for (int j = 0; j < 50; ++j) v[j] = 1.0 + 0.01 * j;
  const GridDensity a0(dt, v);
  const LimitSolution sol = solve_mvf(m, a0, 1.0, dt);
  const GridDensity& end = sol.frames.back();
  for (int j = 0; j < 200; ++j) CHECK(end[j] == (j >= 100 && j < 150 ? v[j - 100] : 0.0));
}

TEST_CASE("limit solver guards its grid") {
  const GridDensity a0 = uniform01(1e-2, 150);
  CHECK_THROWS_AS(solve_mvf(splitting(), a0, 1.0, 1e-2), ConfigError);
  CHECK_THROWS_AS(solve_mvf(splitting(), uniform01(1e-2, 300), 1.0, 2e-2), ConfigError);
  CHECK_THROWS_AS(solve_mvf(splitting(), uniform01(1e-2, 300), 1.005, 1e-2), ConfigError);
}

TEST_CASE("logistic total mass") {
  RateModel m;
  m.family = Family::density_dependent;
  m.birth = RateForm{1.0, 0.0, 2.0, -1.0};
  m.death = RateForm::constant(1.0);
  m.birth_law = OffspringLaw::deterministic(1);
  m.death_law = OffspringLaw::deterministic(0);
  m.b_max = 2.0;
  m.h_max = 1.0;
  const auto X = solve_total_ode(m, 0.5, 1.0, 0.05);
  const double exact = 0.5 * std::exp(1.0) / (0.5 + 0.5 * std::exp(1.0));
  CHECK(X.back() == doctest::Approx(exact).epsilon(1e-7));
  CHECK(exact == doctest::Approx(0.731059).epsilon(1e-6));

  // the grid solver agrees with the ODE on the total mass
  const double dt = 2e-3;
  std::vector<double> v(1000, 0.0);
  for (int j = 0; j < 250; ++j) v[j] = 1.0;
  const GridDensity a0(dt, v);
  const LimitSolution sol = solve_mvf(m, a0, 1.0, dt);
  CHECK(sol.totals.back() == doctest::Approx(exact).epsilon(5e-3));
  CHECK_THROWS_AS(solve_total_ode(splitting(), 1.0, 1.0, 0.3), ConfigError);
}

TEST_CASE("gauss-legendre quadrature") {
  CHECK(integrate_gl5([](double x) { return std::exp(x); }, 0.0, 1.0) == doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-14));
  CHECK(integrate_gl5([](double x) { return x * x * x * x * x * x * x * x * x; }, 0.0, 0.05) ==
        doctest::Approx(std::pow(0.05, 10) / 10).epsilon(1e-13));
  CHECK(integrate_gl5([](double) { return 1.0; }, 1.0, 1.0) == 0.0);
}
