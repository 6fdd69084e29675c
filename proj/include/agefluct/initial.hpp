#pragma once

#include <cstdint>
#include <vector>

#include "agefluct/config.hpp"
#include "agefluct/measures.hpp"

namespace agefluct {

/// A^K_0 with unit weights and the matching fluctuation Z^K_0.
struct InitialCondition {
  std::uint64_t K = 1;
  AtomicMeasure A0;
  MixedMeasure reference;     ///< Abar^inf_0
  MixedMeasure perturbation;  ///< B
  SignedPair Z0;              ///< sqrt(K) (A0 / K - Abar^inf_0), from the realised atoms
  std::vector<double> z0_pairings;
};

/// Atoms of K abar + sqrt(K) B with integer counts. Grid cells contribute
/// atoms at their centres, atoms keep their ages. Counts come from rounding
/// the cumulative target in age order, so each count is the floor or ceiling
/// of its target, the total is the rounded total mass, and fractional cells
/// are spread evenly. Throws InfeasibleError if any target count is negative.
InitialCondition build_initial(const MixedMeasure& abar, const MixedMeasure& B, std::uint64_t K,
                               double support_bound, const std::vector<TestFunction>& panel);

/// Shortcut from a config: realises both specs on the config grid.
InitialCondition build_initial(const ExperimentConfig& cfg, std::uint64_t K);

}  // namespace agefluct
