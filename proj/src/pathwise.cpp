#include "agefluct/pathwise.hpp"

#include <algorithm>
#include <cmath>

#include "agefluct/errors.hpp"

namespace agefluct {

namespace {

/// Neumaier summation.
struct Accumulator {
  double sum = 0.0;
  double c = 0.0;
  double peak = 0.0;
  void add(double v) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      c += (sum - t) + v;
    } else {
      c += (v - t) + sum;
    }
    sum = t;
    peak = std::max(peak, std::abs(value()));
  }
  double value() const { return sum + c; }
};

}  // namespace

PathwiseResult check_pathwise(const Trajectory& traj, const TwoVarFunction& f) {
  if (traj.snapshots.size() != traj.times.size()) throw ConfigError("pathwise check needs kept snapshots");
  if (traj.events.empty() && traj.sizes.size() > 1 && traj.births.back() + traj.deaths.back() > 0) {
    throw ConfigError("pathwise check needs a recorded event log");
  }
  std::vector<double> taus;
  Accumulator initial, drift, births, deaths;
  for (double x : traj.snapshots[0].ages()) {
    taus.push_back(-x);
    initial.add(f.value(x, 0.0));
  }
  auto integrand = [&](double s) {
    Accumulator acc;
    for (double tau : taus) acc.add(f.d_age(s - tau, s) + f.d_time(s - tau, s));
    return acc.value();
  };

  PathwiseResult res;
  std::size_t e = 0;
  double t_prev = 0.0;
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    const double t_out = traj.times[k];
    while (e < traj.events.size() && traj.events[e].t <= t_out) {
      const EventRecord& ev = traj.events[e++];
      drift.add(integrate_gl5(integrand, t_prev, ev.t));
      t_prev = ev.t;
      if (ev.kind == EventKind::death) {
        auto it = std::find(taus.begin(), taus.end(), ev.tau);
        if (it == taus.end()) throw InternalError("event log refers to an individual that is not alive");
        *it = taus.back();
        taus.pop_back();
        deaths.add(f.value(ev.t - ev.tau, ev.t));
      }
      for (unsigned i = 0; i < ev.offspring; ++i) {
        taus.push_back(ev.t);
        births.add(f.value(0.0, ev.t));
      }
    }
    drift.add(integrate_gl5(integrand, t_prev, t_out));
    t_prev = t_out;

    Accumulator lhs;
    for (double x : traj.snapshots[k].ages()) lhs.add(f.value(x, t_out));
    const double rhs = initial.value() + drift.value() + births.value() - deaths.value();
    const double residual = std::abs(lhs.value() - rhs);
    const double scale = std::max({lhs.peak, initial.peak, drift.peak, births.peak, deaths.peak});
    res.residuals.push_back(residual);
    res.scales.push_back(scale);
    res.max_residual = std::max(res.max_residual, residual);
    res.max_relative = std::max(res.max_relative, residual / std::max(scale, 1.0));
  }
  return res;
}

std::vector<TwoVarFunction> pathwise_catalogue() {
  return {
      {1.0, 0, 0.0, 0, 0.0},   // 1
      {1.0, 1, 0.0, 0, 0.0},   // x
      {1.0, 0, 1.0, 0, -1.0},  // e^{x - s}
      {1.0, 1, 0.0, 0, 0.5},   // x e^{s/2}
      {1.0, 2, -0.3, 0, 0.0},  // x^2 e^{-0.3 x}
      {1.0, 0, 0.4, 1, 0.0},   // e^{0.4 x} s
  };
}

}  // namespace agefluct
