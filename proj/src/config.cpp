#include "agefluct/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "agefluct/errors.hpp"
#include "agefluct/test_function.hpp"

namespace agefluct {

using nlohmann::json;

namespace {

bool divides(double small, double big) {
  const double r = big / small;
  return std::abs(r - std::round(r)) <= 1e-9 * std::max(1.0, r);
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

RateForm parse_form(const json& j) {
  if (j.is_number()) return RateForm::constant(j.get<double>());
  if (!j.is_object()) throw ConfigError("a rate must be a number or an object");
  RateForm f;
  f.c = get_or(j, "c", 0.0);
  f.kappa = get_or(j, "kappa", 0.0);
  f.p0 = get_or(j, "p0", 1.0);
  f.p1 = get_or(j, "p1", 0.0);
  f.p2 = get_or(j, "p2", 0.0);
  f.r1 = get_or(j, "r1", 0.0);
  f.r2 = get_or(j, "r2", 0.0);
  return f;
}

json form_json(const RateForm& f) {
  return {{"c", f.c}, {"kappa", f.kappa}, {"p0", f.p0}, {"p1", f.p1}, {"p2", f.p2}, {"r1", f.r1}, {"r2", f.r2}};
}

OffspringLaw parse_law(const json& j) {
  if (j.is_number_unsigned() || j.is_number_integer()) {
    const auto k = j.get<long long>();
    if (k < 0) throw ConfigError("offspring number must be non-negative");
    return OffspringLaw::deterministic(static_cast<unsigned>(k));
  }
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "deterministic") return OffspringLaw::deterministic(j.at("k").get<unsigned>());
  if (kind == "poisson") return OffspringLaw::poisson(j.at("mean").get<double>());
  if (kind == "two_point") {
    return OffspringLaw::two_point(j.at("p").get<double>(), j.at("k1").get<unsigned>(), j.at("k2").get<unsigned>());
  }
  throw ConfigError("unknown offspring law '" + kind + "'");
}

json law_json(const OffspringLaw& law) {
  switch (law.kind()) {
    case OffspringLaw::Kind::deterministic:
      return {{"kind", "deterministic"}, {"k", law.k1()}};
    case OffspringLaw::Kind::poisson:
      return {{"kind", "poisson"}, {"mean", law.p()}};
    case OffspringLaw::Kind::two_point:
      return {{"kind", "two_point"}, {"p", law.p()}, {"k1", law.k1()}, {"k2", law.k2()}};
  }
  return {};
}

Kernel parse_kernel(const json& j) {
  Kernel k;
  const std::string kind = get_or<std::string>(j, "kind", "constant");
  if (kind == "constant") {
    k.kind = Kernel::Kind::constant;
  } else if (kind == "exp_decay") {
    k.kind = Kernel::Kind::exp_decay;
  } else if (kind == "gaussian") {
    k.kind = Kernel::Kind::gaussian;
  } else {
    throw ConfigError("unknown kernel '" + kind + "'");
  }
  k.param = get_or(j, "param", 1.0);
  return k;
}

const char* kernel_name(Kernel::Kind k) {
  switch (k) {
    case Kernel::Kind::constant:
      return "constant";
    case Kernel::Kind::exp_decay:
      return "exp_decay";
    case Kernel::Kind::gaussian:
      return "gaussian";
  }
  return "constant";
}

/// Upper bound of a rate over ages in [0, T*] when it does not depend on
/// the population; otherwise the bound must be given.
double default_bound(const RateForm& f, double T_star, const char* which) {
  if (f.mass_dependent() || f.kernel_dependent()) {
    throw ConfigError(std::string(which) + " depends on the population; give an explicit bound");
  }
  return std::max(f.value(0.0, 0.0, 0.0), f.value(T_star, 0.0, 0.0));
}

RateModel parse_model(const json& j, double T_star) {
  RateModel m;
  m.family = parse_family(get_or<std::string>(j, "family", "classical"));
  m.birth = parse_form(j.contains("birth") ? j.at("birth") : json(0.0));
  m.death = parse_form(j.contains("death") ? j.at("death") : json(0.0));
  if (j.contains("birth_law")) m.birth_law = parse_law(j.at("birth_law"));
  if (j.contains("death_law")) m.death_law = parse_law(j.at("death_law"));
  if (j.contains("kernel")) m.kernel = parse_kernel(j.at("kernel"));
  m.b_max = j.contains("b_max") ? j.at("b_max").get<double>() : default_bound(m.birth, T_star, "birth rate");
  m.h_max = j.contains("h_max") ? j.at("h_max").get<double>() : default_bound(m.death, T_star, "death rate");
  m.validate();
  return m;
}

MeasureSpec parse_measure(const json& j) {
  MeasureSpec s;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "zero") {
    s.kind = MeasureSpec::Kind::zero;
  } else if (kind == "atoms") {
    s.kind = MeasureSpec::Kind::atoms;
    s.ages = j.at("ages").get<std::vector<double>>();
    s.masses = j.contains("masses") ? j.at("masses").get<std::vector<double>>()
                                    : std::vector<double>(s.ages.size(), 1.0 / static_cast<double>(s.ages.size()));
    if (s.ages.size() != s.masses.size()) throw ConfigError("atoms need as many masses as ages");
  } else if (kind == "uniform") {
    s.kind = MeasureSpec::Kind::uniform;
    s.l = get_or(j, "l", 0.0);
    s.r = get_or(j, "r", 1.0);
    s.height = get_or(j, "height", 1.0);
    if (!(s.r > s.l) || s.l < 0.0) throw ConfigError("uniform measure needs 0 <= l < r");
  } else if (kind == "grid") {
    s.kind = MeasureSpec::Kind::grid;
    s.dx = j.at("dx").get<double>();
    s.values = j.at("values").get<std::vector<double>>();
  } else if (kind == "csv") {
    s.kind = MeasureSpec::Kind::csv;
    s.path = j.at("path").get<std::string>();
  } else {
    throw ConfigError("unknown measure kind '" + kind + "'");
  }
  return s;
}

json measure_json(const MeasureSpec& s) {
  switch (s.kind) {
    case MeasureSpec::Kind::zero:
      return {{"kind", "zero"}};
    case MeasureSpec::Kind::atoms:
      return {{"kind", "atoms"}, {"ages", s.ages}, {"masses", s.masses}};
    case MeasureSpec::Kind::uniform:
      return {{"kind", "uniform"}, {"l", s.l}, {"r", s.r}, {"height", s.height}};
    case MeasureSpec::Kind::grid:
      return {{"kind", "grid"}, {"dx", s.dx}, {"values", s.values}};
    case MeasureSpec::Kind::csv:
      return {{"kind", "csv"}, {"path", s.path}};
  }
  return {};
}

}  // namespace

MeasureSpec MeasureSpec::atoms(std::vector<double> ages, std::vector<double> masses) {
  MeasureSpec s;
  s.kind = Kind::atoms;
  s.ages = std::move(ages);
  s.masses = std::move(masses);
  return s;
}

MeasureSpec MeasureSpec::uniform(double l, double r, double height) {
  MeasureSpec s;
  s.kind = Kind::uniform;
  s.l = l;
  s.r = r;
  s.height = height;
  return s;
}

MixedMeasure MeasureSpec::realise(double grid_dx, std::size_t cells, bool is_signed) const {
  std::vector<double> v(cells, 0.0);
  auto resample = [&](const GridDensity& src) {
    for (std::size_t j = 0; j < cells; ++j) {
      const double x = (static_cast<double>(j) + 0.5) * grid_dx;
      const auto k = static_cast<std::size_t>(std::floor(x / src.dx()));
      if (k < src.cells()) v[j] = src[k];
    }
  };
  switch (kind) {
    case Kind::zero:
      break;
    case Kind::atoms:
      return MixedMeasure(GridDensity(grid_dx, std::move(v), is_signed), ages, masses);
    case Kind::uniform:
      for (std::size_t j = 0; j < cells; ++j) {
        const double a = static_cast<double>(j) * grid_dx, b = a + grid_dx;
        const double overlap = std::max(0.0, std::min(b, r) - std::max(a, l));
        v[j] = height * overlap / grid_dx;
      }
      break;
    case Kind::grid:
      resample(GridDensity(dx, values, true));
      break;
    case Kind::csv:
      resample(read_grid_csv(path, true));
      break;
  }
  return MixedMeasure(GridDensity(grid_dx, std::move(v), is_signed));
}

std::size_t ExperimentConfig::cells() const {
  return static_cast<std::size_t>(std::llround(T_star() / dt));
}

std::vector<TestFunction> ExperimentConfig::panel_functions() const {
  std::vector<TestFunction> out;
  for (const auto& s : panel) out.push_back(parse_test_function(s));
  return out;
}

void ExperimentConfig::validate() const {
  model.validate();
  if (!(T > 0.0)) throw ConfigError("T must be positive");
  if (!(a_star >= 0.0)) throw ConfigError("a_star must be non-negative");
  if (!(dt > 0.0) || !(dt_out > 0.0)) throw ConfigError("dt and dt_out must be positive");
  if (!divides(dt, dt_out)) throw ConfigError("dt must divide dt_out");
  if (!divides(dt_out, T)) throw ConfigError("dt_out must divide T");
  if (!divides(dt, T_star())) throw ConfigError("dt must divide T + a_star");
  if (K.empty()) throw ConfigError("need at least one K");
  for (auto k : K) {
    if (k == 0) throw ConfigError("K values must be positive integers");
  }
  if (replicates < 2) throw ConfigError("need at least 2 replicates");
  if (panel.empty()) throw ConfigError("the test-function panel is empty");
  panel_functions();
  if (initial.kind == MeasureSpec::Kind::atoms) {
    for (double a : initial.ages) {
      if (a < 0.0 || a > a_star) throw ConfigError("initial ages must lie in [0, a_star]");
    }
    for (double m : initial.masses) {
      if (m < 0.0) throw ConfigError("initial masses must be non-negative");
    }
  }
  if (initial.kind == MeasureSpec::Kind::uniform && initial.r > a_star + 1e-12) {
    throw ConfigError("initial density must vanish beyond a_star");
  }
  if (perturbation.kind == MeasureSpec::Kind::uniform && perturbation.r > a_star + 1e-12) {
    throw ConfigError("perturbation must vanish beyond a_star");
  }
  if (perturbation.kind == MeasureSpec::Kind::atoms) {
    for (double a : perturbation.ages) {
      if (a < 0.0 || a > a_star) throw ConfigError("perturbation ages must lie in [0, a_star]");
    }
  }
  for (double h : convergence_dts) {
    if (!(h > 0.0)) throw ConfigError("convergence dts must be positive");
  }
  for (double h : ode_dts) {
    if (!(h > 0.0)) throw ConfigError("ode dts must be positive");
  }
}

ExperimentConfig parse_config(const json& j) {
  try {
    ExperimentConfig c;
    c.name = get_or<std::string>(j, "name", c.name);
    c.a_star = get_or(j, "a_star", c.a_star);
    c.T = get_or(j, "T", c.T);
    c.dt = get_or(j, "dt", c.dt);
    c.dt_out = get_or(j, "dt_out", c.dt_out);
    if (j.contains("model")) c.model = parse_model(j.at("model"), c.T_star());
    if (j.contains("initial")) c.initial = parse_measure(j.at("initial"));
    if (j.contains("perturbation")) c.perturbation = parse_measure(j.at("perturbation"));
    if (j.contains("K")) {
      const json& k = j.at("K");
      c.K = k.is_array() ? k.get<std::vector<std::uint64_t>>() : std::vector<std::uint64_t>{k.get<std::uint64_t>()};
    }
    c.replicates = get_or(j, "replicates", c.replicates);
    c.panel = get_or(j, "panel", c.panel);
    c.seed = get_or(j, "seed", c.seed);
    c.output = get_or(j, "output", c.output);
    c.emit_events = get_or(j, "emit_events", c.emit_events);
    c.emit_fields = get_or(j, "emit_fields", c.emit_fields);
    c.workers = get_or(j, "workers", c.workers);
    c.population_cap = get_or(j, "population_cap", c.population_cap);
    c.spde_paths = get_or(j, "spde_paths", c.spde_paths);
    c.convergence_dts = get_or(j, "convergence_dts", c.convergence_dts);
    c.ode_dts = get_or(j, "ode_dts", c.ode_dts);
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config: ") + e.what());
  }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

json to_json(const RateModel& m) {
  return {{"family", to_string(m.family)},
          {"birth", form_json(m.birth)},
          {"death", form_json(m.death)},
          {"birth_law", law_json(m.birth_law)},
          {"death_law", law_json(m.death_law)},
          {"kernel", {{"kind", kernel_name(m.kernel.kind)}, {"param", m.kernel.param}}},
          {"b_max", m.b_max},
          {"h_max", m.h_max}};
}

json to_json(const ExperimentConfig& c) {
  return {{"name", c.name},
          {"model", to_json(c.model)},
          {"initial", measure_json(c.initial)},
          {"perturbation", measure_json(c.perturbation)},
          {"a_star", c.a_star},
          {"K", c.K},
          {"replicates", c.replicates},
          {"T", c.T},
          {"dt", c.dt},
          {"dt_out", c.dt_out},
          {"panel", c.panel},
          {"seed", c.seed},
          {"output", c.output},
          {"emit_events", c.emit_events},
          {"emit_fields", c.emit_fields},
          {"workers", c.workers},
          {"population_cap", c.population_cap},
          {"spde_paths", c.spde_paths},
          {"convergence_dts", c.convergence_dts},
          {"ode_dts", c.ode_dts}};
}

}  // namespace agefluct
