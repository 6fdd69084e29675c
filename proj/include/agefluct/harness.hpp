#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "agefluct/config.hpp"
#include "agefluct/initial.hpp"
#include "agefluct/mvf_limit.hpp"
#include "agefluct/report.hpp"
#include "agefluct/simulate.hpp"
#include "agefluct/spde.hpp"

namespace agefluct {

/// Replicates [first, first + count) of A^K on `workers` threads. The result
/// is ordered by replicate id; a failing replicate raises ReplicateError.
std::vector<Trajectory> run_replicates(const RateModel& model, const AtomicMeasure& A0, std::uint64_t K,
                                       const SimulationOptions& opt, std::uint64_t seed, std::size_t first,
                                       std::size_t count, unsigned workers);

/// True when no rate depends on age or on the population.
bool constant_rates(const RateModel& model);

/// Rate record of a constant-rate model.
RateRecord constant_record(const RateModel& model);

/// X(t) for X' = (alpha + beta X) X.
double affine_total_exact(double alpha, double beta, double X0, double t);

/// (alpha, beta) when n(X) - h(X) is affine in the total mass and nothing
/// else; empty otherwise.
std::optional<std::pair<double, double>> affine_growth(const RateModel& model);

/// Deterministic limit of one experiment, with closed forms used where they
/// exist: constant rates with exponential test functions, and affine
/// total-mass models with f = const. Everything else reads the grid.
class LimitReference {
 public:
  LimitReference(const ExperimentConfig& cfg, const MixedMeasure& abar0);

  const LimitSolution& grid() const { return grid_; }
  double pairing(const TestFunction& f, double t) const;
  /// int_0^t (f(0) g(0) w + h f g - h m_death (f(0) g + g(0) f), Abar_s) ds
  double covariation(const TestFunction& f, const TestFunction& g, double t) const;

 private:
  const ExperimentConfig* cfg_;
  MixedMeasure abar0_;
  LimitSolution grid_;
};

/// sqrt(K) (Abar^K_0 - Abar^inf_0) binned onto the grid.
GridDensity mollify(const SignedPair& z, double dx, std::size_t cells);

/// E (f, Z_t) from the realised Z_0: closed form for constant rates and
/// exponential f, otherwise the noise-free field evolution.
class MeanReference {
 public:
  /// exact_z0, when given, supplies the closed forms with exact Z_0 pairings.
  MeanReference(const ExperimentConfig& cfg, const LimitSolution& bg, const GridDensity& z0,
                std::function<double(const TestFunction&)> exact_z0 = {});
  double pairing(const TestFunction& f, double t) const;
  const std::vector<GridDensity>& frames() const { return frames_; }

 private:
  const ExperimentConfig* cfg_;
  GridDensity z0_;
  std::vector<GridDensity> frames_;
  double dt_ = 0.0;
  std::function<double(const TestFunction&)> exact_z0_;
};

Report run_simulate(const ExperimentConfig& cfg);
Report run_limit(const ExperimentConfig& cfg);
Report run_fluctuate(const ExperimentConfig& cfg);
Report run_qv_check(const ExperimentConfig& cfg);
Report run_lln(const ExperimentConfig& cfg);
Report run_clt(const ExperimentConfig& cfg);
Report run_convergence(const ExperimentConfig& cfg);

}  // namespace agefluct
