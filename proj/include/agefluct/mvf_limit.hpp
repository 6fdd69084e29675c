#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "agefluct/measures.hpp"
#include "agefluct/rates.hpp"

namespace agefluct {

/// Rates of the normalised population given by a grid density, looked up
/// at arbitrary ages. Keeps a view of the values.
class FrameRates {
 public:
  FrameRates(const RateModel& model, std::span<const double> values, double dx);

  double mass() const noexcept { return mass_; }
  /// (g(., .), A) for an age-independent kernel, 0 without a kernel.
  double z() const noexcept { return z_; }
  double kernel_pair(double x) const;  ///< (g(x, .), A) by midpoint rule
  double kernel_at(double x) const;    ///< kernel argument of the rates at age x
  RateRecord at(double x) const;
  FrechetCoefficients frechet(RateChannel which, double x) const;

 private:
  const RateModel* model_;
  std::span<const double> values_;
  double dx_;
  double mass_ = 0.0;
  double z_ = 0.0;
  bool uniform_ = false;
  RateRecord cached_;
};

/// Density frames of the deterministic limit on a grid with dx = dt.
struct LimitSolution {
  double dt = 0.0;
  std::vector<double> times;
  std::vector<GridDensity> frames;  ///< one per step, frames[0] is the initial density
  std::vector<double> totals;       ///< (1, frame)

  std::size_t steps() const noexcept { return frames.empty() ? 0 : frames.size() - 1; }
  /// Frame index for time t (t must be a multiple of dt).
  std::size_t step_of(double t) const;
};

/// Transport-death equation with renewal boundary, one exact shift per step.
/// The death rate is evaluated at the step's age midpoint with a Heun-type
/// predictor-corrector on the population summaries; the boundary cell takes
/// the renewal integral at the corrected state. a0.dx() must equal dt and the
/// grid must be long enough to hold the support after T / dt shifts.
LimitSolution solve_mvf(const RateModel& model, const GridDensity& a0, double T, double dt);

/// Constant-parameter solution evaluated at the cell centres of a0's grid:
/// a0(x - t) e^{-h t} for x > t, n X0 e^{(n-h)(t-x)} e^{-h x} for x <= t.
GridDensity classical_exact(const GridDensity& a0, double b, double h, double m_death, double m_birth, double t);

/// (e^{a t} - e^{c t}) / (a - c), continuous at a == c.
double exp_difference(double a, double c, double t);

/// (f_lambda, A_t) for constant parameters from (f_lambda, A_0) and (1, A_0).
double classical_exp_pairing(double n, double h, double lambda, double pair_lambda0, double mass0, double t);

/// RK4 for X' = (n(X) - h(X)) X; returns X at 0, dt, ..., T.
std::vector<double> solve_total_ode(const RateModel& model, double X0, double T, double dt);

/// Totals as CSV `t,X`.
void write_totals_csv(const LimitSolution& sol, const std::filesystem::path& path);

}  // namespace agefluct
