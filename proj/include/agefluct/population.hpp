#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "agefluct/rates.hpp"
#include "agefluct/rng.hpp"

namespace agefluct {

/// Running sums S(j, mu) = sum_i tau_i^j e^{-mu tau_i} over a multiset of birth
/// times. Sums of c x^k e^{mu x} over the current ages x_i = t - tau_i follow
/// from a binomial expansion in O(k).
class MomentBank {
 public:
  /// Registers (max_power, rate) and returns the channel id. Registering a
  /// known rate again widens its power range. New or widened channels start
  /// empty; call rebuild afterwards.
  std::size_t track(int max_power, double rate);
  std::optional<std::size_t> find(double rate) const;
  std::size_t channels() const noexcept { return channels_.size(); }

  void add(double tau);
  void remove(double tau);
  void rebuild(std::span<const double> taus);

  /// sum_i (t - tau_i)^power e^{rate (t - tau_i)}.
  double age_sum(std::size_t channel, double t, int power) const;
  /// sum_i f(t - tau_i); the rate of f must be tracked with enough powers.
  double sum(const ExpPoly& f, double t) const;

 private:
  struct Channel {
    double rate;
    int max_power;
    std::vector<double> s;
  };
  void add_to(Channel& c, double tau, double sign) const;
  std::vector<Channel> channels_;
};

enum class EventKind : std::uint8_t { birth, death };

struct Event {
  double time = 0.0;
  EventKind kind = EventKind::birth;
  std::size_t individual = 0;
  double age = 0.0;  ///< age of the mother, or lifespan at death
  double tau = 0.0;  ///< birth time of the acting individual
  unsigned offspring = 0;
};

struct DeathRecord {
  double lifespan;
  double time;
};

/// Live individuals stored by birth time. Ancestors of age x have tau = -x.
class Population {
 public:
  Population(std::span<const double> initial_ages, std::uint64_t K);

  double time() const noexcept { return t_; }
  void set_time(double t) noexcept { t_ = t; }
  std::uint64_t K() const noexcept { return K_; }
  std::size_t size() const noexcept { return taus_.size(); }
  double mass() const noexcept { return static_cast<double>(taus_.size()) / static_cast<double>(K_); }
  std::span<const double> birth_times() const noexcept { return taus_; }
  double age(std::size_t i) const noexcept { return t_ - taus_[i]; }

  MomentBank& bank() noexcept { return bank_; }
  const MomentBank& bank() const noexcept { return bank_; }

  /// Applies an accepted event at its time.
  void apply(const Event& ev);

  std::uint64_t initial_size() const noexcept { return initial_; }
  std::uint64_t births_living() const noexcept { return births_living_; }
  std::uint64_t births_split() const noexcept { return births_split_; }
  std::uint64_t deaths() const noexcept { return deaths_.size(); }
  const std::vector<DeathRecord>& death_log() const noexcept { return deaths_; }
  /// |A_t| == |A_0| + births - deaths.
  bool bookkeeping_exact() const noexcept {
    return static_cast<std::uint64_t>(taus_.size()) + deaths_.size() == initial_ + births_living_ + births_split_;
  }

 private:
  void add_newborns(unsigned k);

  double t_ = 0.0;
  std::uint64_t K_;
  std::vector<double> taus_;
  MomentBank bank_;
  std::uint64_t initial_ = 0;
  std::uint64_t births_living_ = 0;
  std::uint64_t births_split_ = 0;
  std::vector<DeathRecord> deaths_;
  std::size_t removals_since_rebuild_ = 0;
};

/// Rates of the normalised population A/K at a given age and time, evaluated
/// from the moment bank when the kernel allows it.
class RateContext {
 public:
  /// Registers the bank channels the kernel needs.
  RateContext(const RateModel& model, Population& pop);

  const RateModel& model() const noexcept { return *model_; }
  /// (g(x, .), A_t / K) with ages taken at time t.
  double kernel_pair(double x, double t) const;
  RateRecord at(double x, double t) const;

 private:
  const RateModel* model_;
  const Population* pop_;
  std::optional<std::size_t> kernel_channel_;
};

/// Thinning step: draws candidates at total rate N (b* + h*) until one is
/// accepted or the next candidate would pass t_limit. On acceptance the
/// population clock is moved to the event time, otherwise to t_limit. The
/// event is returned unapplied.
std::optional<Event> next_event(Population& pop, const RateContext& ctx, StreamRng& rng, double t_limit);

}  // namespace agefluct
