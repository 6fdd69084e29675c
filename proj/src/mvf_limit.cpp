#include "agefluct/mvf_limit.hpp"

#include <cmath>

#include "agefluct/csv.hpp"
#include "agefluct/errors.hpp"

namespace agefluct {

namespace {

std::size_t step_count(double T, double dt) {
  if (!(dt > 0.0) || !(T >= 0.0)) throw ConfigError("need dt > 0 and T >= 0");
  const double ratio = T / dt;
  const auto n = static_cast<std::size_t>(std::llround(ratio));
  if (std::abs(ratio - static_cast<double>(n)) > 1e-9 * std::max(1.0, ratio)) {
    throw ConfigError("dt must divide the horizon");
  }
  return n;
}

}  // namespace

FrameRates::FrameRates(const RateModel& model, std::span<const double> values, double dx)
    : model_(&model), values_(values), dx_(dx) {
  for (double v : values) mass_ += v;
  mass_ *= dx;
  if (model.uses_kernel() && model.kernel.age_independent()) z_ = kernel_pair(0.0);
  uniform_ = !model.age_dependent() && model.kernel.age_independent();
  if (uniform_) cached_ = model.evaluate(0.0, mass_, z_);
}

double FrameRates::kernel_pair(double x) const {
  const TestFunction g = model_->kernel.at(x);
  double acc = 0.0;
  for (std::size_t j = 0; j < values_.size(); ++j) {
    if (values_[j] != 0.0) acc += g((static_cast<double>(j) + 0.5) * dx_) * values_[j];
  }
  return acc * dx_;
}

double FrameRates::kernel_at(double x) const {
  if (!model_->uses_kernel()) return 0.0;
  return model_->kernel.age_independent() ? z_ : kernel_pair(x);
}

RateRecord FrameRates::at(double x) const {
  if (uniform_) return cached_;
  return model_->evaluate(x, mass_, kernel_at(x));
}

FrechetCoefficients FrameRates::frechet(RateChannel which, double x) const {
  return frechet_coefficients(*model_, which, x, mass_, kernel_at(x));
}

std::size_t LimitSolution::step_of(double t) const {
  const double r = t / dt;
  const auto n = static_cast<std::size_t>(std::llround(r));
  if (std::abs(r - static_cast<double>(n)) > 1e-6 || n >= frames.size()) {
    throw DomainError("time is not on the limit solution's grid");
  }
  return n;
}

LimitSolution solve_mvf(const RateModel& model, const GridDensity& a0, double T, double dt) {
  const double dx = a0.dx();
  if (std::abs(dx - dt) > 1e-12 * dt) throw ConfigError("the limit solver needs dx == dt");
  const std::size_t N = step_count(T, dt);
  const std::size_t J = a0.cells();
  if (a0.support_end() + N > J) throw ConfigError("grid too short for the horizon: needs J >= support + T/dt");

  LimitSolution sol;
  sol.dt = dt;
  sol.frames.reserve(N + 1);
  sol.frames.push_back(a0);
  sol.times.push_back(0.0);
  sol.totals.push_back(a0.mass());

  std::vector<double> cur(a0.values().begin(), a0.values().end());
  std::vector<double> pred(J), next(J), avg(J);

  auto advance = [&](auto&& rate_at, std::vector<double>& out) {
    for (std::size_t j = J - 1; j >= 1; --j) {
      const double x = static_cast<double>(j) * dx;  // age midpoint of the step
      out[j] = cur[j - 1] * std::exp(-rate_at(x).h * dt);
    }
  };
  auto renewal = [&](auto&& rate_at, const std::vector<double>& v) {
    double acc = 0.0;
    for (std::size_t j = 1; j < J; ++j) {
      if (v[j] != 0.0) acc += rate_at((static_cast<double>(j) + 0.5) * dx).n * v[j];
    }
    return acc * dx;
  };

  for (std::size_t n = 0; n < N; ++n) {
    if (cur[J - 1] != 0.0) throw InternalError("limit density reached the end of the grid");
    const FrameRates s0(model, cur, dx);
    advance([&](double x) { return s0.at(x); }, pred);
    pred[0] = renewal([&](double x) { return s0.at(x); }, pred);

    const FrameRates s1(model, pred, dx);
    const bool age_kernel = model.uses_kernel() && !model.kernel.age_independent();
    if (age_kernel) {
      for (std::size_t j = 0; j < J; ++j) avg[j] = 0.5 * (cur[j] + pred[j]);
    }
    const FrameRates savg_grid(model, age_kernel ? avg : cur, dx);
    const double y_avg = 0.5 * (s0.mass() + s1.mass());
    const double z_avg = 0.5 * (s0.z() + s1.z());
    auto corrected = [&](double x) {
      if (age_kernel) return model.evaluate(x, y_avg, savg_grid.kernel_pair(x));
      return model.evaluate(x, y_avg, z_avg);
    };
    std::optional<RateRecord> uniform;
    if (!model.age_dependent() && !age_kernel) uniform = corrected(0.0);
    auto rate_c = [&](double x) { return uniform ? *uniform : corrected(x); };
    advance(rate_c, next);
    next[0] = renewal(rate_c, next);

    for (double v : next) {
      if (v < 0.0 || !std::isfinite(v)) throw InternalError("limit density became negative or non-finite");
    }
    cur.swap(next);
    sol.frames.emplace_back(dx, cur);
    sol.times.push_back(static_cast<double>(n + 1) * dt);
    sol.totals.push_back(sol.frames.back().mass());
  }
  return sol;
}

GridDensity classical_exact(const GridDensity& a0, double b, double h, double m_death, double m_birth, double t) {
  const double n = b * m_birth + h * m_death;
  const double X0 = a0.mass();
  const double dx = a0.dx();
  std::vector<double> v(a0.cells(), 0.0);
  for (std::size_t j = 0; j < v.size(); ++j) {
    const double x = a0.center(j);
    if (x > t) {
      const auto src = static_cast<std::size_t>(std::floor((x - t) / dx));
      if (src < a0.cells()) v[j] = a0[src] * std::exp(-h * t);
    } else {
      v[j] = n * X0 * std::exp((n - h) * (t - x)) * std::exp(-h * x);
    }
  }
  return GridDensity(dx, std::move(v), a0.is_signed());
}

double exp_difference(double a, double c, double t) {
  const double d = a - c;
  if (std::abs(d * t) < 1e-8) return t * std::exp(c * t) * (1.0 + 0.5 * d * t);
  return std::exp(c * t) * std::expm1(d * t) / d;
}

double classical_exp_pairing(double n, double h, double lambda, double pair_lambda0, double mass0, double t) {
  return std::exp(-h * t) * (std::exp(lambda * t) * pair_lambda0 + n * exp_difference(n, lambda, t) * mass0);
}

std::vector<double> solve_total_ode(const RateModel& model, double X0, double T, double dt) {
  if (model.age_dependent() || model.uses_kernel()) {
    throw ModelError("the total-mass ODE needs rates that depend on the total mass only");
  }
  const std::size_t N = step_count(T, dt);
  auto rhs = [&](double X) {
    const RateRecord r = model.evaluate(0.0, X, 0.0);
    return (r.n - r.h) * X;
  };
  std::vector<double> X(N + 1);
  X[0] = X0;
  for (std::size_t k = 0; k < N; ++k) {
    const double x = X[k];
    const double k1 = rhs(x);
    const double k2 = rhs(x + 0.5 * dt * k1);
    const double k3 = rhs(x + 0.5 * dt * k2);
    const double k4 = rhs(x + dt * k3);
    X[k + 1] = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return X;
}

void write_totals_csv(const LimitSolution& sol, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "t,X\n";
  for (std::size_t k = 0; k < sol.times.size(); ++k) {
    out << format_double(sol.times[k]) << ',' << format_double(sol.totals[k]) << '\n';
  }
}

}  // namespace agefluct
