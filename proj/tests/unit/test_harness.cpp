#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"

#include "agefluct/config.hpp"
#include "agefluct/errors.hpp"
#include "agefluct/harness.hpp"
#include "agefluct/initial.hpp"
#include "agefluct/report.hpp"

using namespace agefluct;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("agefluct_unit_" + name);
  fs::remove_all(p);
  return p;
}

ExperimentConfig frozen() {
  ExperimentConfig c;
  c.model = classical_model(0.0, 0.0, OffspringLaw::deterministic(1), OffspringLaw::deterministic(0));
  c.initial = MeasureSpec::uniform(0.0, 1.0, 1.0);
  c.K = {100, 400};
  c.replicates = 8;
  c.T = 0.5;
  c.dt = 1e-2;
  c.workers = 1;
  return c;
}

}  // namespace

TEST_CASE("initial condition without perturbation") {
  const std::vector<TestFunction> panel{TestFunction::constant(1.0)};
  const MixedMeasure abar(GridDensity::zeros(0.01, 200), {0.0}, {1.0});
  const InitialCondition ic = build_initial(abar, MixedMeasure(GridDensity::zeros(0.01, 200, true), {}, {}), 100,
                                            2.0, panel);
  CHECK(ic.A0.count() == 100);
  CHECK(std::abs(ic.z0_pairings[0]) <= 1.0 / std::sqrt(100.0));
}

TEST_CASE("initial condition with an atomic perturbation") {
  const std::vector<TestFunction> panel{TestFunction::constant(1.0)};
  const MixedMeasure abar(GridDensity::zeros(0.01, 200), {0.0}, {1.0});
  const MixedMeasure B(GridDensity::zeros(0.01, 200, true), {0.5}, {1.0});
  const InitialCondition ic = build_initial(abar, B, 100, 2.0, panel);
  CHECK(ic.A0.count() == 110);
  std::size_t at_half = 0;
  for (double a : ic.A0.ages()) at_half += a == 0.5;
  CHECK(at_half == 10);
  CHECK(ic.z0_pairings[0] == doctest::Approx(1.0));
  CHECK(ic.Z0.pair(TestFunction::constant(1.0)) == doctest::Approx(1.0));

  const MixedMeasure bad(GridDensity::zeros(0.01, 200, true), {0.0}, {-20.0});
  CHECK_THROWS_AS(build_initial(abar, bad, 100, 2.0, panel), InfeasibleError);
}

TEST_CASE("rounding keeps the total and spreads fractional cells") {
  ExperimentConfig c;
  c.initial = MeasureSpec::uniform(0.0, 1.0, 1.0);
  c.dt = 0.01;
  const InitialCondition ic = build_initial(c, 1234);
  CHECK(ic.A0.count() == 1234);
  CHECK(std::abs(ic.Z0.pair(TestFunction::constant(1.0))) <= 1.0 / std::sqrt(1234.0));
}

TEST_CASE("config round trip and rejection") {
  ExperimentConfig c = frozen();
  c.panel = {"one", "exp:-0.5", "x"};
  c.seed = 99;
  const ExperimentConfig d = parse_config(to_json(c));
  CHECK(to_json(d) == to_json(c));
  CHECK(d.cells() == c.cells());

  nlohmann::json j = to_json(c);
  j["dt"] = -1.0;
  CHECK_THROWS_AS(parse_config(j).validate(), ConfigError);
  j = to_json(c);
  j["panel"] = {"nonsense"};
  CHECK_THROWS_AS(parse_config(j).validate(), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/agefluct.json"), ConfigError);
}

TEST_CASE("emit writes headers, rows and manifest") {
  const fs::path out = scratch("emit");
  Report r;
  r.command = "test";
  emit(r, out, {{"seed", 1}});
  CHECK(slurp(out / "summary.csv") == "K,t,f_id,stat,value,target,tolerance,pass\n");
  CHECK(slurp(out / "samples.csv") == "K,replicate,t,f_id,value\n");
  CHECK(fs::exists(out / "manifest.json"));

  r.check(10, 1.0, "one", "mean", 1.05, 1.0, 0.1);
  r.check(10, 1.0, "one", "var", 2.0, 1.0, 0.1);
  emit(r, out, {{"seed", 1}});
  const std::string s = slurp(out / "summary.csv");
  CHECK(s.find(",true\n") != std::string::npos);
  CHECK(s.find(",false\n") != std::string::npos);
  CHECK_FALSE(r.all_pass());
  CHECK(r.failures() == 1);
  const auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
  CHECK(manifest["all_pass"] == false);
  fs::remove_all(out);

  const fs::path blocked = scratch("emit_blocked");
  std::ofstream(blocked) << "file";
  CHECK_THROWS_AS(emit(r, blocked / "sub", {}), ResourceError);
  fs::remove(blocked);
}

TEST_CASE("frozen populations are exact") {
  ExperimentConfig c = frozen();
  const Report lln = run_lln(c);
  CHECK(lln.all_pass());
  CHECK(lln.find("rms_error_exact") != nullptr);

  c.panel = {"x"};
  const Report clt = run_clt(c);
  CHECK(clt.all_pass());
  for (const auto& row : clt.summary) {
    if (row.stat == "var") CHECK(row.value == doctest::Approx(0.0).scale(1.0));
  }

  c.panel = {"one", "x"};
  const Report qv = run_qv_check(c);
  CHECK(qv.all_pass());
  for (const auto& s : qv.samples) CHECK(s.value == 0.0);

  const Report conv = run_convergence(c);
  CHECK(conv.find("exact") != nullptr);
}

TEST_CASE("logistic law of large numbers") {
  ExperimentConfig c;
  c.model.family = Family::density_dependent;
  c.model.birth = RateForm{1.0, 0.0, 2.0, -1.0};
  c.model.death = RateForm::constant(1.0);
  c.model.birth_law = OffspringLaw::deterministic(1);
  c.model.death_law = OffspringLaw::deterministic(0);
  c.model.b_max = 2.0;
  c.model.h_max = 1.0;
  c.initial = MeasureSpec::atoms({0.0}, {0.5});
  c.K = {1000};
  c.replicates = 40;
  c.dt = 2e-3;
  c.workers = 1;
  const Report r = run_lln(c);
  const SummaryRow* row = r.find("mean", 1000, "one");
  REQUIRE(row != nullptr);
  CHECK(row->target == doctest::Approx(0.731059).epsilon(1e-4));
  CHECK(row->pass);
}

TEST_CASE("outputs do not depend on workers") {
  ExperimentConfig c;
  c.K = {100};
  c.replicates = 6;
  c.T = 0.5;
  c.dt = 1e-2;
  const fs::path a = scratch("workers_a"), b = scratch("workers_b");
  c.workers = 1;
  emit(run_simulate(c), a, {});
  c.workers = 3;
  emit(run_simulate(c), b, {});
  CHECK(slurp(a / "samples.csv") == slurp(b / "samples.csv"));
  CHECK(slurp(a / "samples.csv").size() > 100);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("affine total mass") {
  CHECK(affine_total_exact(1.0, 0.0, 2.0, 1.0) == doctest::Approx(2.0 * std::exp(1.0)));
  CHECK(affine_total_exact(1.0, -1.0, 0.5, 1.0) == doctest::Approx(0.731059).epsilon(1e-6));
  CHECK(affine_total_exact(0.0, 0.0, 3.0, 5.0) == 3.0);
  const auto g = affine_growth(classical_model(0.0, 1.0, OffspringLaw::deterministic(1),
                                               OffspringLaw::deterministic(2)));
  REQUIRE(g.has_value());
  CHECK(g->first == doctest::Approx(1.0));
  CHECK(g->second == 0.0);
}
