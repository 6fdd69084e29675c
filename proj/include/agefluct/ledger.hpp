#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "agefluct/population.hpp"

namespace agefluct {

/// Pathwise martingales M^f_t = (jump terms) - int_0^t (f(0) n - h f, A_s) ds
/// for a panel of test functions, on the unnormalised population A.
///
/// The compensator is integrated over each interval on which the live set is
/// frozen: in closed form for age-independent rates and exponential f, from
/// the moment bank with 5-point Gauss-Legendre otherwise, and by summing over
/// individuals when neither applies (non exponential-polynomial f, gaussian
/// kernel, K-dependent perturbations).
class MartingaleLedger {
 public:
  /// Registers the bank channels it needs and rebuilds the bank.
  MartingaleLedger(std::vector<TestFunction> panel, const RateContext& ctx, Population& pop);

  /// Integrates the compensator from the last time to t with the current live set.
  void advance(const Population& pop, const RateContext& ctx, double t);
  /// Adds the jump of an accepted event; call after advance(ev.time), before applying it.
  void on_event(const Event& ev);

  double time() const noexcept { return t_; }
  std::size_t size() const noexcept { return entries_.size(); }
  const TestFunction& function(std::size_t i) const { return entries_[i].f; }
  double jumps(std::size_t i) const { return entries_[i].jumps; }
  double compensator(std::size_t i) const { return entries_[i].comp; }
  double value(std::size_t i) const { return entries_[i].jumps - entries_[i].comp; }

 private:
  enum class Mode { closed, bank, brute };
  struct Entry {
    TestFunction f;
    double f0 = 0.0;
    Mode mode = Mode::brute;
    ExpPoly ep;
    std::size_t ch_f = 0;   // rate lambda
    std::size_t ch_hf = 0;  // rate lambda + kappa_h
    double jumps = 0.0;
    double comp = 0.0;
  };

  double integrand_bank(const Entry& e, const Population& pop, const RateContext& ctx, double s) const;
  double integrand_brute(const Entry& e, const Population& pop, const RateContext& ctx, double s) const;

  std::vector<Entry> entries_;
  std::size_t ch_b_ = 0;  // rate kappa_b
  std::size_t ch_h_ = 0;  // rate kappa_h
  double t_ = 0.0;
};

/// Nodes and weights of 5-point Gauss-Legendre on [0, 1].
struct GaussLegendre5 {
  static constexpr double node[5] = {0.04691007703066800, 0.23076534494715845, 0.5, 0.76923465505284155,
                                     0.95308992296933200};
  static constexpr double weight[5] = {0.11846344252809454, 0.23931433524968324, 0.28444444444444444,
                                       0.23931433524968324, 0.11846344252809454};
};

/// Applies GL-5 on [a, b], split into pieces no longer than max_piece.
template <class F>
double integrate_gl5(F&& f, double a, double b, double max_piece = 0.05) {
  if (!(b > a)) return 0.0;
  const auto pieces = static_cast<std::size_t>(std::ceil((b - a) / max_piece));
  const double h = (b - a) / static_cast<double>(pieces);
  double total = 0.0;
  for (std::size_t p = 0; p < pieces; ++p) {
    const double lo = a + h * static_cast<double>(p);
    double acc = 0.0;
    for (int q = 0; q < 5; ++q) acc += GaussLegendre5::weight[q] * f(lo + h * GaussLegendre5::node[q]);
    total += h * acc;
  }
  return total;
}

}  // namespace agefluct
