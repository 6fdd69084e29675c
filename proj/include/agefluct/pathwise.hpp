#pragma once

#include <vector>

#include "agefluct/simulate.hpp"

namespace agefluct {

/// Both sides of the pathwise identity
///   (f(., t), A_t) = (f(., 0), A_0) + int_0^t (d_x f + d_s f)(., s), A_s) ds
///                    + sum_births f(0, s) - sum_deaths f(lifespan, s)
/// at every output time of a trajectory.
struct PathwiseResult {
  std::vector<double> residuals;  ///< |lhs - rhs| per output time
  std::vector<double> scales;     ///< largest term magnitude per output time
  double max_residual = 0.0;
  double max_relative = 0.0;  ///< max residual / max(scale, 1)
};

/// Replays the event log (needs record_events and keep_snapshots) with the
/// drift integral done by 5-point Gauss-Legendre on every inter-event interval.
PathwiseResult check_pathwise(const Trajectory& traj, const TwoVarFunction& f);

/// The catalogue used by the acceptance checks.
std::vector<TwoVarFunction> pathwise_catalogue();

}  // namespace agefluct
