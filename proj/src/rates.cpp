#include "agefluct/rates.hpp"

#include <cmath>
#include <sstream>

#include "agefluct/errors.hpp"

namespace agefluct {

// RateForm -------------------------------------------------------------------

double RateForm::age_factor(double x) const { return kappa == 0.0 ? 1.0 : std::exp(kappa * x); }

double RateForm::population_factor(double y, double z) const {
  const double den = 1.0 + r1 * y + r2 * z;
  if (!(den > 0.0)) throw ModelError("rate denominator 1 + r1 y + r2 z is not positive");
  return c * (p0 + p1 * y + p2 * z) / den;
}

double RateForm::value(double x, double y, double z) const {
  const double pf = population_factor(y, z);
  return kappa == 0.0 ? pf : pf * std::exp(kappa * x);
}

double RateForm::d_mass(double x, double y, double z) const {
  const double den = 1.0 + r1 * y + r2 * z;
  const double num = p0 + p1 * y + p2 * z;
  return c * age_factor(x) * (p1 * den - num * r1) / (den * den);
}

double RateForm::d_kernel(double x, double y, double z) const {
  const double den = 1.0 + r1 * y + r2 * z;
  const double num = p0 + p1 * y + p2 * z;
  return c * age_factor(x) * (p2 * den - num * r2) / (den * den);
}

// Kernel ---------------------------------------------------------------------

TestFunction Kernel::at(double x) const {
  switch (kind) {
    case Kind::constant:
      return TestFunction::constant(param);
    case Kind::exp_decay:
      return TestFunction::exponential(-param);
    case Kind::gaussian:
      return TestFunction::gaussian(x, param);
  }
  throw InternalError("unknown kernel kind");
}

double Kernel::value(double x, double y) const { return at(x)(y); }

// OffspringLaw ---------------------------------------------------------------

OffspringLaw OffspringLaw::deterministic(unsigned k) {
  OffspringLaw law;
  law.kind_ = Kind::deterministic;
  law.k1_ = law.k2_ = k;
  law.mean_ = k;
  law.second_ = static_cast<double>(k) * k;
  law.cap_ = k;
  return law;
}

OffspringLaw OffspringLaw::poisson(double mean) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) throw ModelError("poisson mean must be finite and >= 0");
  OffspringLaw law;
  law.kind_ = Kind::poisson;
  law.p_ = mean;
  law.mean_ = mean;
  law.second_ = mean + mean * mean;
  // Smallest k with P(X > k) < 1e-18.
  double pmf = std::exp(-mean), cdf = pmf;
  unsigned k = 0;
  while (1.0 - cdf >= 1e-18 && k < 10000) {
    ++k;
    pmf *= mean / k;
    cdf += pmf;
    if (pmf < 1e-300 && cdf > 1.0 - 1e-15) break;
  }
  law.cap_ = k;
  return law;
}

OffspringLaw OffspringLaw::two_point(double p, unsigned k1, unsigned k2) {
  if (!(p >= 0.0 && p <= 1.0)) throw ModelError("two_point probability outside [0, 1]");
  OffspringLaw law;
  law.kind_ = Kind::two_point;
  law.p_ = p;
  law.k1_ = k1;
  law.k2_ = k2;
  law.mean_ = p * k1 + (1.0 - p) * k2;
  law.second_ = p * k1 * static_cast<double>(k1) + (1.0 - p) * k2 * static_cast<double>(k2);
  law.cap_ = std::max(k1, k2);
  return law;
}

unsigned OffspringLaw::sample(StreamRng& rng) const {
  switch (kind_) {
    case Kind::deterministic:
      return k1_;
    case Kind::two_point:
      return rng.uniform() < p_ ? k1_ : k2_;
    case Kind::poisson: {
      const double u = rng.uniform();
      double pmf = std::exp(-p_), cdf = pmf;
      unsigned k = 0;
      while (u > cdf && k < cap_) {
        ++k;
        pmf *= p_ / k;
        cdf += pmf;
      }
      return k;
    }
  }
  return 0;
}

std::string OffspringLaw::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case Kind::deterministic:
      os << "deterministic(" << k1_ << ")";
      break;
    case Kind::poisson:
      os << "poisson(" << p_ << ")";
      break;
    case Kind::two_point:
      os << "two_point(" << p_ << "," << k1_ << "," << k2_ << ")";
      break;
  }
  return os.str();
}

unsigned sample_offspring(const OffspringLaw& law, StreamRng& rng) { return law.sample(rng); }

// Families -------------------------------------------------------------------

Family parse_family(const std::string& name) {
  if (name == "classical") return Family::classical;
  if (name == "density_dependent") return Family::density_dependent;
  if (name == "age_density") return Family::age_density;
  if (name == "kernel_linear") return Family::kernel_linear;
  throw ConfigError("unknown model family '" + name + "'");
}

std::string to_string(Family f) {
  switch (f) {
    case Family::classical:
      return "classical";
    case Family::density_dependent:
      return "density_dependent";
    case Family::age_density:
      return "age_density";
    case Family::kernel_linear:
      return "kernel_linear";
  }
  return "?";
}

void RateModel::validate() const {
  auto check = [&](const RateForm& q, const char* name) {
    const bool classical_ok = !q.age_dependent() && !q.mass_dependent() && !q.kernel_dependent();
    const bool density_ok = !q.age_dependent() && !q.kernel_dependent();
    const bool age_density_ok = !q.kernel_dependent();
    bool ok = true;
    switch (family) {
      case Family::classical:
        ok = classical_ok;
        break;
      case Family::density_dependent:
        ok = density_ok;
        break;
      case Family::age_density:
        ok = age_density_ok;
        break;
      case Family::kernel_linear:
        break;
    }
    if (!ok) {
      throw ModelError(std::string(name) + " rate has a dependence not allowed in family " + to_string(family));
    }
  };
  check(birth, "birth");
  check(death, "death");
  if (!(b_max >= 0.0) || !std::isfinite(b_max)) throw ModelError("b_max must be finite and >= 0");
  if (!(h_max >= 0.0) || !std::isfinite(h_max)) throw ModelError("h_max must be finite and >= 0");
  if (kernel.kind == Kernel::Kind::gaussian && !(kernel.param > 0.0)) {
    throw ModelError("gaussian kernel needs sigma > 0");
  }
}

RateRecord RateModel::evaluate(double x, double mass, double kernel_pair) const {
  RateRecord r;
  r.b = birth.value(x, mass, kernel_pair);
  r.h = death.value(x, mass, kernel_pair);
  constexpr double slack = 1e-12;
  if (r.b < 0.0 || r.b > b_max * (1.0 + slack)) {
    std::ostringstream os;
    os << "birth rate " << r.b << " outside [0, b_max=" << b_max << "] at age " << x << ", mass " << mass;
    throw ModelError(os.str());
  }
  if (r.h < 0.0 || r.h > h_max * (1.0 + slack)) {
    std::ostringstream os;
    os << "death rate " << r.h << " outside [0, h_max=" << h_max << "] at age " << x << ", mass " << mass;
    throw ModelError(os.str());
  }
  r.m_birth = birth_law.mean();
  r.m_death = death_law.mean();
  r.v_birth = birth_law.second_moment();
  r.v_death = death_law.second_moment();
  r.n = r.b * r.m_birth + r.h * r.m_death;
  r.w = r.b * r.v_birth + r.h * r.v_death;
  return r;
}

RateModel classical_model(double b, double h, OffspringLaw birth_law, OffspringLaw death_law) {
  RateModel m;
  m.family = Family::classical;
  m.birth = RateForm::constant(b);
  m.death = RateForm::constant(h);
  m.birth_law = birth_law;
  m.death_law = death_law;
  m.b_max = b;
  m.h_max = h;
  m.validate();
  return m;
}

FrechetCoefficients frechet_coefficients(const RateModel& model, RateChannel which, double x, double mass,
                                         double kernel_pair) {
  auto of = [&](const RateForm& q) {
    return FrechetCoefficients{q.d_mass(x, mass, kernel_pair),
                               model.uses_kernel() ? q.d_kernel(x, mass, kernel_pair) : 0.0};
  };
  switch (which) {
    case RateChannel::b:
      return of(model.birth);
    case RateChannel::h:
      return of(model.death);
    case RateChannel::n: {
      const auto db = of(model.birth);
      const auto dh = of(model.death);
      const double mb = model.birth_law.mean();
      const double md = model.death_law.mean();
      return {mb * db.d_mass + md * dh.d_mass, mb * db.d_kernel + md * dh.d_kernel};
    }
  }
  throw ModelError("unsupported Frechet channel");
}

}  // namespace agefluct
