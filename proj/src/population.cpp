#include "agefluct/population.hpp"

#include <cmath>

#include "agefluct/errors.hpp"

namespace agefluct {

namespace {

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace

// MomentBank -----------------------------------------------------------------

std::size_t MomentBank::track(int max_power, double rate) {
  if (max_power < 0) throw InternalError("negative power in moment bank");
  if (auto id = find(rate)) {
    Channel& c = channels_[*id];
    if (max_power > c.max_power) {
      c.max_power = max_power;
      c.s.assign(static_cast<std::size_t>(max_power) + 1, 0.0);
    }
    return *id;
  }
  channels_.push_back({rate, max_power, std::vector<double>(static_cast<std::size_t>(max_power) + 1, 0.0)});
  return channels_.size() - 1;
}

std::optional<std::size_t> MomentBank::find(double rate) const {
  for (std::size_t i = 0; i < channels_.size(); ++i) {
    if (channels_[i].rate == rate) return i;
  }
  return std::nullopt;
}

void MomentBank::add_to(Channel& c, double tau, double sign) const {
  double term = sign * (c.rate == 0.0 ? 1.0 : std::exp(-c.rate * tau));
  for (double& s : c.s) {
    s += term;
    term *= tau;
  }
}

void MomentBank::add(double tau) {
  for (auto& c : channels_) add_to(c, tau, 1.0);
}

void MomentBank::remove(double tau) {
  for (auto& c : channels_) add_to(c, tau, -1.0);
}

void MomentBank::rebuild(std::span<const double> taus) {
  for (auto& c : channels_) {
    std::fill(c.s.begin(), c.s.end(), 0.0);
    for (double tau : taus) add_to(c, tau, 1.0);
  }
}

double MomentBank::age_sum(std::size_t channel, double t, int power) const {
  const Channel& c = channels_[channel];
  if (power > c.max_power) throw InternalError("moment bank power not tracked");
  // (t - tau)^k = sum_j C(k, j) t^{k-j} (-tau)^j
  double acc = 0.0;
  double sign = 1.0;
  for (int j = 0; j <= power; ++j) {
    acc += binomial(power, j) * std::pow(t, power - j) * sign * c.s[static_cast<std::size_t>(j)];
    sign = -sign;
  }
  return c.rate == 0.0 ? acc : acc * std::exp(c.rate * t);
}

double MomentBank::sum(const ExpPoly& f, double t) const {
  auto id = find(f.rate);
  if (!id) throw InternalError("moment bank rate not tracked");
  return f.coeff * age_sum(*id, t, f.power);
}

// Population -----------------------------------------------------------------

Population::Population(std::span<const double> initial_ages, std::uint64_t K) : K_(K) {
  if (K == 0) throw ConfigError("K must be positive");
  taus_.reserve(initial_ages.size());
  for (double x : initial_ages) {
    if (!(x >= 0.0)) throw DomainError("negative initial age");
    taus_.push_back(-x);
  }
  initial_ = taus_.size();
}

void Population::add_newborns(unsigned k) {
  for (unsigned i = 0; i < k; ++i) {
    taus_.push_back(t_);
    bank_.add(t_);
  }
}

void Population::apply(const Event& ev) {
  t_ = ev.time;
  if (ev.kind == EventKind::birth) {
    births_living_ += ev.offspring;
  } else {
    const double tau = taus_[ev.individual];
    taus_[ev.individual] = taus_.back();
    taus_.pop_back();
    deaths_.push_back({ev.time - tau, ev.time});
    births_split_ += ev.offspring;
    if (bank_.channels() > 0) {
      if (++removals_since_rebuild_ > std::max<std::size_t>(taus_.size(), 4096)) {
        // Subtraction leaves rounding residue; recompute occasionally.
        bank_.rebuild(taus_);
        removals_since_rebuild_ = 0;
      } else {
        bank_.remove(tau);
      }
    }
  }
  add_newborns(ev.offspring);
}

// RateContext ----------------------------------------------------------------

RateContext::RateContext(const RateModel& model, Population& pop) : model_(&model), pop_(&pop) {
  if (model.uses_kernel() && model.kernel.kind == Kernel::Kind::exp_decay) {
    kernel_channel_ = pop.bank().track(0, -model.kernel.param);
    pop.bank().rebuild(pop.birth_times());
  }
}

double RateContext::kernel_pair(double x, double t) const {
  const Kernel& g = model_->kernel;
  const double K = static_cast<double>(pop_->K());
  switch (g.kind) {
    case Kernel::Kind::constant:
      return g.param * pop_->mass();
    case Kernel::Kind::exp_decay:
      return pop_->bank().age_sum(*kernel_channel_, t, 0) / K;
    case Kernel::Kind::gaussian: {
      const TestFunction gx = g.at(x);
      double acc = 0.0;
      for (double tau : pop_->birth_times()) acc += gx(t - tau);
      return acc / K;
    }
  }
  return 0.0;
}

RateRecord RateContext::at(double x, double t) const {
  const double z = model_->uses_kernel() ? kernel_pair(x, t) : 0.0;
  RateRecord r = model_->evaluate(x, pop_->mass(), z);
  if (model_->k_perturbation) model_->k_perturbation(x, pop_->K(), r);
  return r;
}

std::optional<Event> next_event(Population& pop, const RateContext& ctx, StreamRng& rng, double t_limit) {
  const RateModel& model = ctx.model();
  const double bound = model.b_max + model.h_max;
  while (true) {
    const std::size_t N = pop.size();
    if (N == 0 || bound == 0.0) {
      pop.set_time(t_limit);
      return std::nullopt;
    }
    const double tc = pop.time() + rng.exponential(static_cast<double>(N) * bound);
    if (tc > t_limit) {
      // Memorylessness lets the clock restart at t_limit.
      pop.set_time(t_limit);
      return std::nullopt;
    }
    pop.set_time(tc);
    const std::size_t i = rng.below(N);
    const double x = pop.age(i);
    const RateRecord r = ctx.at(x, tc);
    if (r.b + r.h > bound * (1.0 + 1e-12)) throw ModelError("rate exceeds the thinning bound b* + h*");
    const double u = rng.uniform() * bound;
    Event ev;
    ev.time = tc;
    ev.individual = i;
    ev.age = x;
    ev.tau = pop.birth_times()[i];
    if (u < r.b) {
      ev.kind = EventKind::birth;
      ev.offspring = model.birth_law.sample(rng);
      return ev;
    }
    if (u < r.b + r.h) {
      ev.kind = EventKind::death;
      ev.offspring = model.death_law.sample(rng);
      return ev;
    }
  }
}

}  // namespace agefluct
