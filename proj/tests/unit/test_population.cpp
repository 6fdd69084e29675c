#include <cmath>
#include <vector>

#include "doctest.h"

#include "agefluct/population.hpp"

using namespace agefluct;

namespace {

double brute(const std::vector<double>& taus, double t, int power, double rate) {
  double s = 0;
  for (double tau : taus) s += std::pow(t - tau, power) * std::exp(rate * (t - tau));
  return s;
}

}  // namespace

TEST_CASE("moment bank reproduces direct age sums under add and remove") {
  MomentBank bank;
  const auto c0 = bank.track(3, -0.7);
  const auto c1 = bank.track(1, 0.4);
  std::vector<double> taus;
  StreamRng r(4, StreamDomain::test, 0, 0);
  for (int i = 0; i < 200; ++i) {
    const double tau = -r.uniform() + 2.0 * r.uniform();
    taus.push_back(tau);
    bank.add(tau);
  }
  for (int i = 0; i < 80; ++i) {
    bank.remove(taus.back());
    taus.pop_back();
  }
  const double t = 2.5;
  for (int p = 0; p <= 3; ++p) {
    CHECK(bank.age_sum(c0, t, p) == doctest::Approx(brute(taus, t, p, -0.7)).epsilon(1e-10));
  }
  CHECK(bank.age_sum(c1, t, 1) == doctest::Approx(brute(taus, t, 1, 0.4)).epsilon(1e-10));
  CHECK(bank.sum(ExpPoly{2.0, 2, -0.7}, t) == doctest::Approx(2.0 * brute(taus, t, 2, -0.7)).epsilon(1e-10));
  REQUIRE(bank.find(0.4).has_value());
  CHECK(*bank.find(0.4) == c1);
  CHECK_FALSE(bank.find(0.5).has_value());

  const auto c2 = bank.track(2, 0.4);
  CHECK(c2 == c1);
  bank.rebuild(taus);
  CHECK(bank.age_sum(c1, t, 2) == doctest::Approx(brute(taus, t, 2, 0.4)).epsilon(1e-10));
}

TEST_CASE("population applies births and deaths with exact bookkeeping") {
  Population pop(std::vector<double>{0.0, 0.5, 1.0}, 10);
  CHECK(pop.size() == 3);
  CHECK(pop.mass() == doctest::Approx(0.3));
  pop.set_time(0.25);
  CHECK(pop.age(1) == doctest::Approx(0.75));

  Event birth;
  birth.time = 0.25;
  birth.kind = EventKind::birth;
  birth.individual = 0;
  birth.tau = pop.birth_times()[0];
  birth.age = 0.25;
  birth.offspring = 2;
  pop.apply(birth);
  CHECK(pop.size() == 5);
  CHECK(pop.births_living() == 2);

  pop.set_time(0.5);
  Event death;
  death.time = 0.5;
  death.kind = EventKind::death;
  death.individual = 1;
  death.tau = pop.birth_times()[1];
  death.age = pop.age(1);
  death.offspring = 1;
  pop.apply(death);
  CHECK(pop.size() == 5);
  CHECK(pop.deaths() == 1);
  CHECK(pop.births_split() == 1);
  CHECK(pop.bookkeeping_exact());
  REQUIRE(pop.death_log().size() == 1);
  CHECK(pop.death_log()[0].lifespan == doctest::Approx(1.0));
}

TEST_CASE("thinning produces no events when both rates vanish") {
  const RateModel m = classical_model(0.0, 0.0, OffspringLaw::deterministic(1), OffspringLaw::deterministic(0));
  Population pop(std::vector<double>{0.1, 0.2}, 2);
  const RateContext ctx(m, pop);
  StreamRng r(1, StreamDomain::test, 0, 0);
  CHECK_FALSE(next_event(pop, ctx, r, 3.0).has_value());
  CHECK(pop.time() == doctest::Approx(3.0));
}

TEST_CASE("kernel pairings from the bank match direct sums") {
  RateModel m;
  m.family = Family::kernel_linear;
  m.birth = RateForm{1.0, 0.0, 1.0, 0.0, 0.5};
  m.death = RateForm::constant(1.0);
  m.kernel = Kernel{Kernel::Kind::exp_decay, 0.8};
  m.b_max = 10;
  m.h_max = 1;
  const std::vector<double> ages{0.1, 0.4, 0.9, 1.3};
  Population pop(ages, 4);
  const RateContext ctx(m, pop);
  pop.set_time(0.5);
  double direct = 0;
  for (double a : ages) direct += std::exp(-0.8 * (a + 0.5)) / 4.0;
  CHECK(ctx.kernel_pair(0.0, 0.5) == doctest::Approx(direct).epsilon(1e-12));
  CHECK(ctx.at(0.3, 0.5).b == doctest::Approx(1.0 + 0.5 * direct).epsilon(1e-12));
}
