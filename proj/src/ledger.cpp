#include "agefluct/ledger.hpp"

#include <cmath>

namespace agefluct {

MartingaleLedger::MartingaleLedger(std::vector<TestFunction> panel, const RateContext& ctx, Population& pop)
    : t_(pop.time()) {
  const RateModel& model = ctx.model();
  const bool exact_rates = !model.k_perturbation && model.kernel.kind != Kernel::Kind::gaussian;
  MomentBank& bank = pop.bank();
  ch_b_ = bank.track(0, model.birth.kappa);
  ch_h_ = bank.track(0, model.death.kappa);
  for (auto& f : panel) {
    Entry e{f, 0.0, Mode::brute, ExpPoly{}, 0, 0, 0.0, 0.0};
    e.f0 = f(0.0);
    const auto ep = f.exp_poly();
    if (exact_rates && ep) {
      e.ep = *ep;
      e.ch_f = bank.track(ep->power, ep->rate);
      e.ch_hf = bank.track(ep->power, ep->rate + model.death.kappa);
      e.mode = (model.constant_between_events() && ep->power == 0) ? Mode::closed : Mode::bank;
    }
    entries_.push_back(std::move(e));
  }
  bank.rebuild(pop.birth_times());
}

double MartingaleLedger::integrand_bank(const Entry& e, const Population& pop, const RateContext& ctx,
                                        double s) const {
  const RateModel& m = ctx.model();
  const MomentBank& bank = pop.bank();
  const double y = pop.mass();
  const double z = m.uses_kernel() ? ctx.kernel_pair(0.0, s) : 0.0;
  const double pb = m.birth.population_factor(y, z);
  const double ph = m.death.population_factor(y, z);
  double sum_n = 0.0;
  if (pb != 0.0) sum_n += m.birth_law.mean() * pb * bank.age_sum(ch_b_, s, 0);
  if (ph != 0.0) sum_n += m.death_law.mean() * ph * bank.age_sum(ch_h_, s, 0);
  double sum_hf = 0.0;
  if (ph != 0.0) sum_hf = ph * e.ep.coeff * bank.age_sum(e.ch_hf, s, e.ep.power);
  return e.f0 * sum_n - sum_hf;
}

double MartingaleLedger::integrand_brute(const Entry& e, const Population& pop, const RateContext& ctx,
                                         double s) const {
  double acc = 0.0;
  for (double tau : pop.birth_times()) {
    const double x = s - tau;
    const RateRecord r = ctx.at(x, s);
    acc += e.f0 * r.n - r.h * e.f(x);
  }
  return acc;
}

void MartingaleLedger::advance(const Population& pop, const RateContext& ctx, double t) {
  const double t0 = t_;
  const double dt = t - t0;
  t_ = t;
  if (!(dt > 0.0) || pop.size() == 0) return;
  const double N = static_cast<double>(pop.size());
  std::optional<RateRecord> constant_rates;
  for (auto& e : entries_) {
    switch (e.mode) {
      case Mode::closed: {
        if (!constant_rates) constant_rates = ctx.at(0.0, t0);
        const RateRecord& r = *constant_rates;
        double inc = e.f0 * r.n * N * dt;
        if (r.h != 0.0) {
          const double lam = e.ep.rate;
          const double factor = lam == 0.0 ? dt : std::expm1(lam * dt) / lam;
          inc -= r.h * e.ep.coeff * pop.bank().age_sum(e.ch_f, t0, 0) * factor;
        }
        e.comp += inc;
        break;
      }
      case Mode::bank:
        e.comp += integrate_gl5([&](double s) { return integrand_bank(e, pop, ctx, s); }, t0, t);
        break;
      case Mode::brute:
        e.comp += integrate_gl5([&](double s) { return integrand_brute(e, pop, ctx, s); }, t0, t);
        break;
    }
  }
}

void MartingaleLedger::on_event(const Event& ev) {
  for (auto& e : entries_) {
    double jump = e.f0 * ev.offspring;
    if (ev.kind == EventKind::death) jump -= e.f(ev.age);
    e.jumps += jump;
  }
}

}  // namespace agefluct
