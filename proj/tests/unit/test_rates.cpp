#include <cmath>

#include "doctest.h"

#include "agefluct/errors.hpp"
#include "agefluct/rates.hpp"

using namespace agefluct;

TEST_CASE("rate form value and partial derivatives") {
  const RateForm q{1.3, 0.2, 0.5, 0.4, -0.1, 0.3, 0.2};
  const double x = 0.7, y = 1.1, z = 0.6, h = 1e-6;
  CHECK(q.value(x, y, z) == doctest::Approx(1.3 * std::exp(0.14) * (0.5 + 0.44 - 0.06) / (1 + 0.33 + 0.12)));
  CHECK(q.d_mass(x, y, z) == doctest::Approx((q.value(x, y + h, z) - q.value(x, y - h, z)) / (2 * h)).epsilon(1e-6));
  CHECK(q.d_kernel(x, y, z) == doctest::Approx((q.value(x, y, z + h) - q.value(x, y, z - h)) / (2 * h)).epsilon(1e-6));
  CHECK(q.value(x, y, z) == doctest::Approx(q.age_factor(x) * q.population_factor(y, z)));
  CHECK(RateForm::constant(2.0).value(5.0, 3.0, 1.0) == 2.0);
}

TEST_CASE("offspring laws") {
  const auto d = OffspringLaw::deterministic(2);
  CHECK(d.mean() == 2.0);
  CHECK(d.second_moment() == 4.0);
  CHECK(d.cap() == 2);
  const auto p = OffspringLaw::poisson(1.5);
  CHECK(p.mean() == doctest::Approx(1.5));
  CHECK(p.second_moment() == doctest::Approx(1.5 + 2.25));
  CHECK(p.cap() > 10);
  const auto t = OffspringLaw::two_point(0.25, 0, 4);
  CHECK(t.mean() == doctest::Approx(3.0));
  CHECK(t.second_moment() == doctest::Approx(12.0));

  StreamRng rng(11, StreamDomain::test, 0, 0);
  double s = 0, s2 = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double k = p.sample(rng);
    s += k;
    s2 += k * k;
  }
  CHECK(s / n == doctest::Approx(1.5).epsilon(0.02));
  CHECK(s2 / n == doctest::Approx(3.75).epsilon(0.03));
}

TEST_CASE("families restrict the rate form") {
  RateModel m = classical_model(1.0, 1.0, OffspringLaw::deterministic(1), OffspringLaw::deterministic(0));
  m.death.p1 = 0.5;
  CHECK_THROWS_AS(m.validate(), ModelError);
  m.family = Family::density_dependent;
  CHECK_NOTHROW(m.validate());
  m.death.kappa = 0.1;
  CHECK_THROWS_AS(m.validate(), ModelError);
  m.family = Family::age_density;
  CHECK_NOTHROW(m.validate());
  m.death.p2 = 0.1;
  CHECK_THROWS_AS(m.validate(), ModelError);
  m.family = Family::kernel_linear;
  CHECK_NOTHROW(m.validate());
  CHECK(parse_family(to_string(Family::age_density)) == Family::age_density);
  CHECK_THROWS(parse_family("bogus"));
}

TEST_CASE("evaluate enforces the declared bounds") {
  RateModel m = classical_model(1.0, 1.0, OffspringLaw::deterministic(1), OffspringLaw::deterministic(0));
  m.family = Family::density_dependent;
  m.birth = RateForm{1.0, 0.0, 2.0, -1.0};
  m.b_max = 2.0;
  CHECK(m.evaluate(0.0, 0.5, 0.0).b == doctest::Approx(1.5));
  CHECK_THROWS_AS(m.evaluate(0.0, 2.5, 0.0), ModelError);
  CHECK_THROWS_AS(m.evaluate(0.0, -0.5, 0.0), ModelError);
}

TEST_CASE("combined rates and Frechet coefficients") {
  RateModel m;
  m.family = Family::kernel_linear;
  m.birth = RateForm{1.0, -0.2, 1.0, 0.3, 0.2, 0.1, 0.0};
  m.death = RateForm{0.5, 0.1, 1.0, 0.0, 0.4, 0.0, 0.2};
  m.birth_law = OffspringLaw::poisson(1.2);
  m.death_law = OffspringLaw::two_point(0.5, 0, 2);
  m.kernel = Kernel{Kernel::Kind::exp_decay, 1.0};
  m.b_max = 10;
  m.h_max = 10;
  const double x = 0.4, y = 1.2, z = 0.7, h = 1e-6;
  const RateRecord r = m.evaluate(x, y, z);
  CHECK(r.n == doctest::Approx(r.b * 1.2 + r.h * 1.0));
  CHECK(r.w == doctest::Approx(r.b * (1.2 + 1.44) + r.h * 2.0));
  const auto fn = frechet_coefficients(m, RateChannel::n, x, y, z);
  CHECK(fn.d_mass == doctest::Approx((m.evaluate(x, y + h, z).n - m.evaluate(x, y - h, z).n) / (2 * h)).epsilon(1e-6));
  CHECK(fn.d_kernel == doctest::Approx((m.evaluate(x, y, z + h).n - m.evaluate(x, y, z - h).n) / (2 * h)).epsilon(1e-6));
  const auto fh = frechet_coefficients(m, RateChannel::h, x, y, z);
  CHECK(fh.d_mass == 0.0);
  CHECK(fh.d_kernel == doctest::Approx(m.death.d_kernel(x, y, z)));
}

TEST_CASE("kernels") {
  const Kernel c{Kernel::Kind::constant, 2.0};
  CHECK(c.value(0.3, 0.9) == 2.0);
  const Kernel e{Kernel::Kind::exp_decay, 1.5};
  CHECK(e.value(0.3, 0.4) == doctest::Approx(std::exp(-0.6)));
  CHECK(e.at(0.3)(0.4) == doctest::Approx(e.value(0.3, 0.4)));
  const Kernel g{Kernel::Kind::gaussian, 0.2};
  CHECK_FALSE(g.age_independent());
  CHECK(g.value(0.5, 0.5) == doctest::Approx(1.0));
  CHECK(g.at(0.5)(0.7) == doctest::Approx(g.value(0.5, 0.7)));
}
