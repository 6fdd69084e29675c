#include "agefluct/simulate.hpp"

#include <cmath>

#include "agefluct/csv.hpp"
#include "agefluct/errors.hpp"

namespace agefluct {

std::vector<double> output_times(double horizon, double dt_out) {
  if (!(horizon >= 0.0) || !(dt_out > 0.0)) throw ConfigError("horizon must be >= 0 and dt_out > 0");
  const double ratio = horizon / dt_out;
  const auto n = static_cast<std::size_t>(std::llround(ratio));
  if (std::abs(ratio - static_cast<double>(n)) > 1e-9 * std::max(1.0, ratio)) {
    throw ConfigError("dt_out must divide the horizon");
  }
  std::vector<double> t(n + 1);
  for (std::size_t k = 0; k <= n; ++k) t[k] = n == 0 ? 0.0 : horizon * static_cast<double>(k) / static_cast<double>(n);
  return t;
}

Trajectory simulate(const RateModel& model, const AtomicMeasure& A0, std::uint64_t K, const SimulationOptions& opt,
                    StreamRng& rng) {
  Population pop(A0.ages(), K);
  for (double x : A0.ages()) {
    if (x > opt.a_star) throw DomainError("initial age exceeds a*");
  }
  RateContext ctx(model, pop);
  MartingaleLedger ledger(opt.panel, ctx, pop);

  Trajectory tr;
  tr.K = K;
  tr.times = output_times(opt.horizon, opt.dt_out);
  tr.initial_size = pop.size();
  for (const auto& f : opt.panel) tr.f_ids.push_back(f.id());
  const double inv_K = 1.0 / static_cast<double>(K);

  auto record = [&](double t) {
    const double bound = t + opt.a_star;
    std::vector<double> ages(pop.size());
    for (std::size_t i = 0; i < ages.size(); ++i) {
      ages[i] = t - pop.birth_times()[i];
      if (ages[i] < 0.0 || ages[i] > bound) throw InternalError("age outside [0, t + a*] at an output time");
    }
    if (!pop.bookkeeping_exact()) throw InternalError("population bookkeeping mismatch");
    std::vector<double> pairs(opt.panel.size()), mart(opt.panel.size()), comp(opt.panel.size());
    for (std::size_t i = 0; i < opt.panel.size(); ++i) {
      double acc = 0.0;
      for (double x : ages) acc += opt.panel[i](x);
      pairs[i] = acc * inv_K;
      mart[i] = ledger.value(i);
      comp[i] = ledger.compensator(i);
    }
    tr.pairings.push_back(std::move(pairs));
    tr.martingale.push_back(std::move(mart));
    tr.compensator.push_back(std::move(comp));
    tr.sizes.push_back(pop.size());
    tr.births.push_back(pop.births_living() + pop.births_split());
    tr.deaths.push_back(pop.deaths());
    if (opt.keep_snapshots) tr.snapshots.emplace_back(std::move(ages), inv_K, bound);
  };

  record(0.0);
  for (std::size_t k = 1; k < tr.times.size(); ++k) {
    const double t_out = tr.times[k];
    while (auto ev = next_event(pop, ctx, rng, t_out)) {
      ledger.advance(pop, ctx, ev->time);
      ledger.on_event(*ev);
      if (opt.record_events) tr.events.push_back({ev->time, ev->kind, ev->age, ev->tau, ev->offspring});
      pop.apply(*ev);
      if (pop.size() > opt.population_cap) {
        throw ResourceError("population exceeded the cap of " + std::to_string(opt.population_cap) + " atoms at t = " +
                            format_double(ev->time));
      }
    }
    ledger.advance(pop, ctx, t_out);
    record(t_out);
  }
  return tr;
}

Trajectory simulate(const RateModel& model, const AtomicMeasure& A0, std::uint64_t K, const SimulationOptions& opt,
                    std::uint64_t seed, std::uint64_t replicate) {
  StreamRng rng = replicate_stream(seed, StreamDomain::simulation, K, replicate);
  return simulate(model, A0, K, opt, rng);
}

void write_events_csv(const Trajectory& traj, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "t,kind,age,offspring\n";
  for (const auto& e : traj.events) {
    out << format_double(e.t) << ',' << (e.kind == EventKind::birth ? "birth" : "death") << ','
        << format_double(e.age) << ',' << e.offspring << '\n';
  }
}

void write_ledger_csv(const Trajectory& traj, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "t,f_id,M_value,compensator\n";
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    for (std::size_t i = 0; i < traj.f_ids.size(); ++i) {
      out << format_double(traj.times[k]) << ',' << traj.f_ids[i] << ',' << format_double(traj.martingale[k][i])
          << ',' << format_double(traj.compensator[k][i]) << '\n';
    }
  }
}

}  // namespace agefluct
