#include <cmath>
#include <filesystem>

#include "doctest.h"

#include "agefluct/errors.hpp"
#include "agefluct/measures.hpp"
#include "agefluct/test_function.hpp"

using namespace agefluct;

TEST_CASE("atomic measure pairs by summing weighted values") {
  const AtomicMeasure a({0.0, 0.5, 1.0}, 0.25, 2.0);
  CHECK(a.mass() == doctest::Approx(0.75));
  CHECK(a.pair(TestFunction::monomial(1)) == doctest::Approx(0.375));
  CHECK_THROWS_AS(AtomicMeasure({2.5}, 1.0, 2.0), DomainError);
  CHECK_THROWS_AS(AtomicMeasure({-0.1}, 1.0, 2.0), DomainError);
}

TEST_CASE("grid density uses the midpoint rule") {
  const std::size_t J = 1000;
  const GridDensity g(1e-3, std::vector<double>(J, 1.0));
  CHECK(g.mass() == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(g.pair(TestFunction::monomial(1)) == doctest::Approx(0.5).epsilon(1e-12));
  // midpoint error for x^2 is -dx^2/12 per unit length
  CHECK(g.pair(TestFunction::monomial(2)) == doctest::Approx(1.0 / 3.0 - 1e-6 / 12.0).epsilon(1e-12));
  CHECK(g.support_end() == J);
  CHECK_THROWS_AS(GridDensity(0.1, {1.0, -1.0}), DomainError);
  CHECK_NOTHROW(GridDensity(0.1, {1.0, -1.0}, true));
}

TEST_CASE("mixed measure mollifies atoms into their cells") {
  const MixedMeasure m(GridDensity::zeros(0.1, 10), {0.05, 0.55}, {1.0, 2.0});
  CHECK(m.pair(TestFunction::constant(1.0)) == doctest::Approx(3.0));
  const GridDensity g = m.mollified();
  CHECK(g[0] == doctest::Approx(10.0));
  CHECK(g[5] == doctest::Approx(20.0));
  CHECK(g.mass() == doctest::Approx(3.0));
}

TEST_CASE("signed difference is exact by construction") {
  const AtomicMeasure mu({0.25, 0.75}, 0.5, 1.0);
  const MixedMeasure rho(GridDensity(0.5, {1.0, 1.0}));
  const SignedPair z = signed_diff(mu, rho, 10.0);
  const TestFunction f = TestFunction::exponential(0.3);
  CHECK(z.pair(f) == doctest::Approx(10.0 * (mu.pair(f) - rho.pair(f))));
  CHECK(z.pair(f) == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("csv round trips") {
  const auto dir = std::filesystem::temp_directory_path() / "agefluct_unit_csv";
  const GridDensity g(0.25, {0.0, 1.5, -2.0, 1e-300}, true);
  write_csv(g, dir / "g.csv");
  const GridDensity h = read_grid_csv(dir / "g.csv", true);
  REQUIRE(h.cells() == g.cells());
  CHECK(h.dx() == g.dx());
  for (std::size_t j = 0; j < g.cells(); ++j) CHECK(h[j] == g[j]);

  const AtomicMeasure a({0.1, 0.2, 0.30000000000000004}, 0.01, 1.5);
  write_csv(a, dir / "a.csv");
  const AtomicMeasure b = read_atomic_csv(dir / "a.csv");
  CHECK(b.ages() == a.ages());
  CHECK(b.weight() == a.weight());
  CHECK(b.support_bound() == a.support_bound());
  std::filesystem::remove_all(dir);
}

TEST_CASE("test functions parse from their ids") {
  for (const char* spec : {"one", "const:2.5", "x", "x2", "mono:3", "exp:0.5", "exp:-1", "bump:0.2:0.8",
                           "gauss:0.5:0.1"}) {
    const TestFunction f = parse_test_function(spec);
    CHECK(parse_test_function(f.id()).id() == f.id());
    const double x = 0.43, h = 1e-6;
    CHECK(f.derivative(x) == doctest::Approx((f(x + h) - f(x - h)) / (2 * h)).epsilon(1e-6));
  }
  CHECK_THROWS_AS(parse_test_function("nope"), ConfigError);
  CHECK_THROWS_AS(parse_test_function("bump:0.8:0.2"), ConfigError);
  const TestFunction b = TestFunction::bump(0.2, 0.8);
  CHECK(b(0.5) == doctest::Approx(1.0));
  CHECK(b(0.2) == 0.0);
  CHECK(b(0.9) == 0.0);
  CHECK(TestFunction::exponential(0.0).kind() == TestFunction::Kind::constant);
  CHECK_FALSE(b.exp_poly().has_value());
  REQUIRE(TestFunction::monomial(2).exp_poly().has_value());
  CHECK(TestFunction::monomial(2).exp_poly()->power == 2);
}

TEST_CASE("two-variable catalogue derivatives") {
  const TwoVarFunction f{1.5, 2, -0.3, 1, 0.4};
  const double x = 0.7, s = 0.9, h = 1e-6;
  CHECK(f.d_age(x, s) == doctest::Approx((f.value(x + h, s) - f.value(x - h, s)) / (2 * h)).epsilon(1e-6));
  CHECK(f.d_time(x, s) == doctest::Approx((f.value(x, s + h) - f.value(x, s - h)) / (2 * h)).epsilon(1e-6));
}
