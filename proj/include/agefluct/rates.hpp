#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "agefluct/measures.hpp"
#include "agefluct/rng.hpp"

namespace agefluct {

/// q(x, y, z) = c e^{kappa x} (p0 + p1 y + p2 z) / (1 + r1 y + r2 z),
/// with y = |A| and z = (g(x, .), A). Every built-in family is a restriction
/// of this form, which keeps the partial derivatives in closed form.
struct RateForm {
  double c = 0.0;
  double kappa = 0.0;
  double p0 = 1.0;
  double p1 = 0.0;
  double p2 = 0.0;
  double r1 = 0.0;
  double r2 = 0.0;

  static RateForm constant(double value) { return RateForm{value}; }

  double value(double x, double y, double z) const;
  double d_mass(double x, double y, double z) const;    ///< partial in y
  double d_kernel(double x, double y, double z) const;  ///< partial in z
  double age_factor(double x) const;
  /// c (p0 + p1 y + p2 z) / (1 + r1 y + r2 z), so value = e^{kappa x} * this.
  double population_factor(double y, double z) const;

  bool age_dependent() const noexcept { return kappa != 0.0; }
  bool mass_dependent() const noexcept { return p1 != 0.0 || r1 != 0.0; }
  bool kernel_dependent() const noexcept { return p2 != 0.0 || r2 != 0.0; }
};

/// Interaction kernel g(x, y) used by the kernel-linear family.
struct Kernel {
  enum class Kind { constant, exp_decay, gaussian };
  Kind kind = Kind::constant;
  double param = 1.0;  ///< c, alpha or sigma

  /// g(x, .) as a test function of the second argument.
  TestFunction at(double x) const;
  double value(double x, double y) const;
  /// True when g(x, .) does not depend on x.
  bool age_independent() const noexcept { return kind != Kind::gaussian; }
};

/// Offspring-number law of one reproduction channel.
class OffspringLaw {
 public:
  enum class Kind { deterministic, poisson, two_point };

  static OffspringLaw deterministic(unsigned k);
  static OffspringLaw poisson(double mean);
  /// k1 with probability p, k2 otherwise.
  static OffspringLaw two_point(double p, unsigned k1, unsigned k2);

  Kind kind() const noexcept { return kind_; }
  double mean() const noexcept { return mean_; }
  double second_moment() const noexcept { return second_; }
  /// Support bound Xi_max; Poisson laws are cut at a point whose tail mass is
  /// below 1e-18.
  unsigned cap() const noexcept { return cap_; }
  double p() const noexcept { return p_; }
  unsigned k1() const noexcept { return k1_; }
  unsigned k2() const noexcept { return k2_; }
  unsigned sample(StreamRng& rng) const;
  std::string describe() const;

 private:
  Kind kind_ = Kind::deterministic;
  double p_ = 1.0;
  unsigned k1_ = 0, k2_ = 0;
  double mean_ = 0.0, second_ = 0.0;
  unsigned cap_ = 0;
};

enum class Family { classical, density_dependent, age_density, kernel_linear };

Family parse_family(const std::string& name);
std::string to_string(Family f);

/// b, h, breve m, hat m, breve v, hat v and the combined rates.
struct RateRecord {
  double b = 0.0, h = 0.0;
  double m_birth = 0.0, m_death = 0.0;
  double v_birth = 0.0, v_death = 0.0;
  double n = 0.0;  ///< b m_birth + h m_death
  double w = 0.0;  ///< b v_birth + h v_death
};

/// Additive K-dependent correction to the finite-K rates. The built-in
/// experiments never set one; it exists for perturbations of size o(1/sqrt K).
using KPerturbation = std::function<void(double x, std::uint64_t K, RateRecord&)>;

struct RateModel {
  Family family = Family::classical;
  RateForm birth;
  RateForm death;
  OffspringLaw birth_law = OffspringLaw::deterministic(1);
  OffspringLaw death_law = OffspringLaw::deterministic(0);
  Kernel kernel;
  double b_max = 0.0;
  double h_max = 0.0;
  KPerturbation k_perturbation;

  /// Checks that the forms are restrictions of the declared family and that
  /// the bounds are non-negative. Throws ModelError.
  void validate() const;

  /// Rates at age x given |A| and (g(x, .), A); checks 0 <= b <= b_max and
  /// 0 <= h <= h_max.
  RateRecord evaluate(double x, double mass, double kernel_pair) const;

  bool uses_kernel() const noexcept { return birth.kernel_dependent() || death.kernel_dependent(); }
  bool age_dependent() const noexcept { return birth.age_dependent() || death.age_dependent(); }
  /// Rates constant in time whenever the population is frozen: no age or
  /// kernel dependence.
  bool constant_between_events() const noexcept { return !age_dependent() && !uses_kernel(); }
};

/// Convenience constructor for constant-parameter models.
RateModel classical_model(double b, double h, OffspringLaw birth_law, OffspringLaw death_law);

template <Measure M>
double kernel_pair(const RateModel& model, double x, const M& abar) {
  if (!model.uses_kernel()) return 0.0;
  return abar.pair(model.kernel.at(x));
}

/// Finite-K rates at age x for the normalised population abar.
template <Measure M>
RateRecord eval_rates(const RateModel& model, double x, const M& abar, std::uint64_t K) {
  RateRecord r = model.evaluate(x, abar.pair(TestFunction::constant(1.0)), kernel_pair(model, x, abar));
  if (model.k_perturbation) model.k_perturbation(x, K, r);
  return r;
}

/// Limit rates; the built-in families do not depend on K.
template <Measure M>
RateRecord eval_limit_rates(const RateModel& model, double x, const M& abar) {
  return model.evaluate(x, abar.pair(TestFunction::constant(1.0)), kernel_pair(model, x, abar));
}

enum class RateChannel { b, h, n };

/// Directional derivative coefficients: d q = d_mass * (1, B) + d_kernel * (g(x,.), B).
struct FrechetCoefficients {
  double d_mass = 0.0;
  double d_kernel = 0.0;
};

FrechetCoefficients frechet_coefficients(const RateModel& model, RateChannel which, double x, double mass,
                                         double kernel_pair);

/// Frechet derivative of the limit rate `which` at abar0 in direction B,
/// evaluated at age x.
template <Measure A, Measure B>
double frechet(const RateModel& model, RateChannel which, const A& abar0, const B& direction, double x) {
  const auto c = frechet_coefficients(model, which, x, abar0.pair(TestFunction::constant(1.0)),
                                      kernel_pair(model, x, abar0));
  double d = 0.0;
  if (c.d_mass != 0.0) d += c.d_mass * direction.pair(TestFunction::constant(1.0));
  if (c.d_kernel != 0.0) d += c.d_kernel * direction.pair(model.kernel.at(x));
  return d;
}

/// x -> f'(x) - h(x) f(x) + f(0) n(x) at the population abar. For the
/// gaussian kernel the returned callable keeps a reference to abar.
template <Measure M>
std::function<double(double)> apply_generator(const RateModel& model, const TestFunction& f, const M& abar) {
  const double mass = abar.pair(TestFunction::constant(1.0));
  if (!model.uses_kernel() || model.kernel.age_independent()) {
    const double z = model.uses_kernel() ? abar.pair(model.kernel.at(0.0)) : 0.0;
    return [model, f, mass, z](double x) {
      const RateRecord r = model.evaluate(x, mass, z);
      return f.derivative(x) - r.h * f(x) + f(0.0) * r.n;
    };
  }
  return [model, f, mass, &abar](double x) {
    const RateRecord r = model.evaluate(x, mass, abar.pair(model.kernel.at(x)));
    return f.derivative(x) - r.h * f(x) + f(0.0) * r.n;
  };
}

unsigned sample_offspring(const OffspringLaw& law, StreamRng& rng);

}  // namespace agefluct
