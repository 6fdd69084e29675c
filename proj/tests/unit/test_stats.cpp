#include <cmath>
#include <random>

#include "doctest.h"

#include "agefluct/stats.hpp"

using namespace agefluct;

TEST_CASE("moments of a small sample") {
  const std::vector<double> x{1.0, 2.0, 3.0, 4.0};
  const Moments m = moments(x);
  CHECK(m.n == 4);
  CHECK(m.mean == doctest::Approx(2.5));
  CHECK(m.var == doctest::Approx(5.0 / 3.0));
  CHECK(m.se == doctest::Approx(std::sqrt(5.0 / 12.0)));
  CHECK(m.skew == doctest::Approx(0.0));
  CHECK(m.kurt == doctest::Approx(1.64 - 3.0));
}

TEST_CASE("covariance") {
  const std::vector<double> x{1, 2, 3, 4, 5}, y{2, 4, 6, 8, 10};
  CHECK(covariance(x, y).cov == doctest::Approx(5.0));
  CHECK(covariance(x, x).cov == doctest::Approx(moments(x).var));
  CHECK_THROWS(covariance(x, std::vector<double>{1.0}));
}

TEST_CASE("jarque-bera rejection rate on normal samples") {
  std::mt19937_64 gen(11);
  std::normal_distribution<double> nd;
  int rejected = 0;
  const int batches = 400;
  std::vector<double> x(10000);
  for (int b = 0; b < batches; ++b) {
    for (auto& v : x) v = nd(gen);
    if (jarque_bera(x).p_value < 0.01) ++rejected;
  }
  CHECK(static_cast<double>(rejected) / batches <= 0.02);

  std::exponential_distribution<double> ed;
  for (auto& v : x) v = ed(gen);
  CHECK(jarque_bera(x).p_value < 1e-10);
}

TEST_CASE("kolmogorov-smirnov against an exponential law") {
  std::mt19937_64 gen(3);
  std::exponential_distribution<double> ed(2.0);
  std::vector<double> x(5000);
  for (auto& v : x) v = ed(gen);
  CHECK(ks_exponential(x, 2.0).p_value > 0.001);
  CHECK(ks_exponential(x, 1.5).p_value < 1e-6);
  CHECK(ks_exponential({0.5}, 1.0).statistic == doctest::Approx(std::exp(-0.5)));
}

TEST_CASE("total variation and binomial law") {
  double s = 0;
  for (unsigned k = 0; k <= 7; ++k) s += binomial_pmf(7, k, 0.3);
  CHECK(s == doctest::Approx(1.0));
  CHECK(binomial_pmf(3, 2, 0.5) == doctest::Approx(0.375));
  CHECK(binomial_pmf(3, 4, 0.5) == 0.0);
  const std::vector<double> p{0.5, 0.5}, q{0.25, 0.25, 0.5};
  CHECK(total_variation(p, q) == doctest::Approx(0.5));
  CHECK(total_variation(p, p) == 0.0);
}

TEST_CASE("line fit") {
  const std::vector<double> x{0, 1, 2, 3}, y{1, 3, 5, 7};
  const LineFit f = fit_line(x, y);
  CHECK(f.slope == doctest::Approx(2.0));
  CHECK(f.intercept == doctest::Approx(1.0));
}
