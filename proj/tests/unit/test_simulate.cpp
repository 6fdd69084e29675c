#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"

#include "agefluct/errors.hpp"
#include "agefluct/pathwise.hpp"
#include "agefluct/simulate.hpp"
#include "agefluct/stats.hpp"

using namespace agefluct;

namespace {

RateModel splitting() {
  return classical_model(0.0, 1.0, OffspringLaw::deterministic(1), OffspringLaw::deterministic(2));
}

AtomicMeasure spread(std::size_t n, double a_star) {
  std::vector<double> ages;
  for (std::size_t i = 0; i < n; ++i) ages.push_back(a_star * (static_cast<double>(i) + 0.5) / static_cast<double>(n));
  return AtomicMeasure(ages, 1.0, a_star);
}

}  // namespace

TEST_CASE("output times cover the horizon") {
  const auto t = output_times(1.0, 0.25);
  REQUIRE(t.size() == 5);
  CHECK(t.back() == doctest::Approx(1.0));
}

TEST_CASE("without births or deaths the population only ages") {
  const RateModel m = classical_model(0.0, 0.0, OffspringLaw::deterministic(1), OffspringLaw::deterministic(0));
  SimulationOptions opt;
  opt.horizon = 1.0;
  opt.dt_out = 0.5;
  opt.panel = {TestFunction::monomial(1), TestFunction::constant(1.0)};
  const Trajectory tr = simulate(m, spread(10, 1.0), 10, opt, 1);
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    CHECK(tr.pairings[k][0] == doctest::Approx(0.5 + tr.times[k]).epsilon(1e-14));
    CHECK(tr.pairings[k][1] == doctest::Approx(1.0));
    CHECK(tr.martingale[k][0] == 0.0);
  }
}

TEST_CASE("trajectories are reproducible from the seed") {
  SimulationOptions opt;
  opt.panel = {TestFunction::constant(1.0), TestFunction::exponential(-1.0)};
  const Trajectory a = simulate(splitting(), spread(50, 1.0), 50, opt, 9, 3);
  const Trajectory b = simulate(splitting(), spread(50, 1.0), 50, opt, 9, 3);
  const Trajectory c = simulate(splitting(), spread(50, 1.0), 50, opt, 9, 4);
  CHECK(a.pairings == b.pairings);
  CHECK(a.martingale == b.martingale);
  CHECK(a.pairings != c.pairings);
}

TEST_CASE("pathwise identity holds for every catalogue function") {
  SimulationOptions opt;
  opt.record_events = true;
  opt.keep_snapshots = true;
  opt.panel = {TestFunction::constant(1.0)};
  const Trajectory tr = simulate(splitting(), spread(60, 1.0), 60, opt, 2);
  CHECK(tr.events.size() > 10);
  for (const auto& f : pathwise_catalogue()) {
    const PathwiseResult r = check_pathwise(tr, f);
    CHECK(r.max_relative <= 1e-9);
  }
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    CHECK(tr.sizes[k] + tr.deaths[k] == tr.initial_size + tr.births[k]);
    for (double a : tr.snapshots[k].ages()) CHECK(a <= tr.times[k] + opt.a_star);
  }
}

TEST_CASE("martingale equals jumps minus compensator and is centred") {
  SimulationOptions opt;
  opt.panel = {TestFunction::constant(1.0)};
  double sum = 0.0, sum2 = 0.0;
  const int M = 300;
  for (int rep = 0; rep < M; ++rep) {
    const Trajectory tr = simulate(splitting(), AtomicMeasure({0.0}, 1.0, 1.0), 1, opt, 5, rep);
    const double m = tr.martingale.back()[0];
    sum += m;
    sum2 += m * m;
    // for f = 1 the jumps are the net size change
    CHECK(tr.martingale.back()[0] + tr.compensator.back()[0] ==
          doctest::Approx(static_cast<double>(tr.sizes.back()) - 1.0));
  }
  const double mean = sum / M;
  const double se = std::sqrt((sum2 / M - mean * mean) / M);
  CHECK(std::abs(mean) < 4.0 * se);
}

TEST_CASE("single lifetimes are exponential") {
  const RateModel m = classical_model(0.0, 2.0, OffspringLaw::deterministic(1), OffspringLaw::deterministic(0));
  SimulationOptions opt;
  opt.horizon = 8.0;
  opt.dt_out = 8.0;
  opt.a_star = 0.0;
  opt.record_events = true;
  opt.panel = {TestFunction::constant(1.0)};
  std::vector<double> life;
  for (int rep = 0; rep < 2000; ++rep) {
    const Trajectory tr = simulate(m, AtomicMeasure({0.0}, 1.0, 0.0), 1, opt, 3, rep);
    if (!tr.events.empty()) life.push_back(tr.events.front().age);
  }
  CHECK(life.size() > 1990);
  CHECK(ks_exponential(life, 2.0).p_value > 0.001);
}

TEST_CASE("population cap raises a resource error") {
  SimulationOptions opt;
  opt.population_cap = 120;
  opt.horizon = 3.0;
  opt.panel = {TestFunction::constant(1.0)};
  CHECK_THROWS_AS(simulate(splitting(), spread(100, 1.0), 100, opt, 1), ResourceError);
}

TEST_CASE("initial ages beyond a* are rejected") {
  SimulationOptions opt;
  opt.a_star = 0.5;
  CHECK_THROWS_AS(simulate(splitting(), AtomicMeasure({0.8}, 1.0, 1.0), 1, opt, 1), DomainError);
}

TEST_CASE("event and ledger csv headers") {
  SimulationOptions opt;
  opt.record_events = true;
  opt.panel = {TestFunction::constant(1.0)};
  const Trajectory tr = simulate(splitting(), spread(5, 1.0), 5, opt, 1);
  const auto dir = std::filesystem::temp_directory_path() / "agefluct_unit_sim";
  write_events_csv(tr, dir / "e.csv");
  write_ledger_csv(tr, dir / "l.csv");
  std::ifstream e(dir / "e.csv"), l(dir / "l.csv");
  std::string he, hl;
  std::getline(e, he);
  std::getline(l, hl);
  CHECK(he == "t,kind,age,offspring");
  CHECK(hl == "t,f_id,M_value,compensator");
  std::filesystem::remove_all(dir);
}
