#include "agefluct/initial.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "agefluct/errors.hpp"

namespace agefluct {

InitialCondition build_initial(const MixedMeasure& abar, const MixedMeasure& B, std::uint64_t K,
                               double support_bound, const std::vector<TestFunction>& panel) {
  const double k = static_cast<double>(K);
  const double sk = std::sqrt(k);
  const GridDensity& ga = abar.density();
  const GridDensity& gb = B.density();
  if (ga.cells() > 0 && gb.cells() > 0 && (ga.cells() != gb.cells() || ga.dx() != gb.dx())) {
    throw ConfigError("reference and perturbation grids differ");
  }
  const GridDensity& grid = ga.cells() > 0 ? ga : gb;

  std::vector<double> ages;
  std::vector<double> target;
  for (std::size_t j = 0; j < grid.cells(); ++j) {
    const double a = ga.cells() > 0 ? ga[j] : 0.0;
    const double b = gb.cells() > 0 ? gb[j] : 0.0;
    if (a == 0.0 && b == 0.0) continue;
    ages.push_back(grid.center(j));
    target.push_back((k * a + sk * b) * grid.dx());
  }
  std::map<double, double> atoms;
  for (std::size_t i = 0; i < abar.atom_ages().size(); ++i) atoms[abar.atom_ages()[i]] += k * abar.atom_masses()[i];
  for (std::size_t i = 0; i < B.atom_ages().size(); ++i) atoms[B.atom_ages()[i]] += sk * B.atom_masses()[i];
  for (const auto& [age, c] : atoms) {
    ages.push_back(age);
    target.push_back(c);
  }

  for (std::size_t i = 0; i < target.size(); ++i) {
    if (target[i] < -1e-9 * std::max(1.0, k)) {
      throw InfeasibleError("perturbation makes the initial count negative at age " + std::to_string(ages[i]) +
                            " for K = " + std::to_string(K));
    }
    target[i] = std::max(0.0, target[i]);
  }
  std::vector<std::size_t> order(target.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ages[a] < ages[b]; });
  std::vector<std::uint64_t> counts(target.size());
  double cum = 0.0;
  std::uint64_t assigned = 0;
  for (std::size_t i : order) {
    cum += target[i];
    const auto upto = static_cast<std::uint64_t>(std::llround(cum));
    counts[i] = upto - assigned;
    assigned = upto;
  }
  const std::uint64_t want = assigned;

  std::vector<double> atom_ages;
  atom_ages.reserve(want);
  for (std::size_t i = 0; i < counts.size(); ++i) atom_ages.insert(atom_ages.end(), counts[i], ages[i]);

  InitialCondition ic{K,
                      AtomicMeasure(atom_ages, 1.0, support_bound),
                      abar,
                      B,
                      SignedPair(AtomicMeasure(atom_ages, 1.0 / k, support_bound), abar, sk),
                      {}};
  for (const auto& f : panel) ic.z0_pairings.push_back(ic.Z0.pair(f));
  return ic;
}

InitialCondition build_initial(const ExperimentConfig& cfg, std::uint64_t K) {
  const std::size_t J = cfg.cells();
  return build_initial(cfg.initial.realise(cfg.dt, J, false), cfg.perturbation.realise(cfg.dt, J, true), K,
                       cfg.a_star, cfg.panel_functions());
}

}  // namespace agefluct
