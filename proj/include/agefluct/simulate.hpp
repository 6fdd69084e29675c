#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "agefluct/ledger.hpp"
#include "agefluct/measures.hpp"
#include "agefluct/population.hpp"

namespace agefluct {

struct SimulationOptions {
  double horizon = 1.0;
  double dt_out = 0.1;
  double a_star = 1.0;  ///< ancestors are at most this old; ages never exceed t + a_star
  std::size_t population_cap = 10'000'000;
  std::vector<TestFunction> panel;  ///< pairings and ledger entries
  bool record_events = false;
  bool keep_snapshots = false;
};

struct EventRecord {
  double t;
  EventKind kind;
  double age;  ///< mother's age at a birth, lifespan at a death
  double tau;  ///< birth time of the acting individual
  unsigned offspring;
};

struct Trajectory {
  std::uint64_t K = 1;
  std::vector<double> times;
  /// pairings[k][i] = (f_i, A^K_{t_k} / K)
  std::vector<std::vector<double>> pairings;
  /// martingale[k][i] = M^{f_i}_{t_k} for the unnormalised population
  std::vector<std::vector<double>> martingale;
  std::vector<std::vector<double>> compensator;
  std::vector<std::size_t> sizes;
  std::vector<std::uint64_t> births;
  std::vector<std::uint64_t> deaths;
  std::uint64_t initial_size = 0;
  std::vector<EventRecord> events;
  std::vector<AtomicMeasure> snapshots;  ///< weight 1/K, one per output time
  std::vector<std::string> f_ids;
};

/// Output times 0, dt_out, ..., horizon.
std::vector<double> output_times(double horizon, double dt_out);

/// Simulates A^K from the unit-weight initial atoms. Checks integer mass
/// bookkeeping and the support bound at every output time (InternalError)
/// and the population cap (ResourceError).
Trajectory simulate(const RateModel& model, const AtomicMeasure& A0, std::uint64_t K, const SimulationOptions& opt,
                    StreamRng& rng);

/// Same, with the replicate stream derived from (seed, K, replicate).
Trajectory simulate(const RateModel& model, const AtomicMeasure& A0, std::uint64_t K, const SimulationOptions& opt,
                    std::uint64_t seed, std::uint64_t replicate = 0);

/// Event log as CSV `t,kind,age,offspring`.
void write_events_csv(const Trajectory& traj, const std::filesystem::path& path);
/// Ledger paths as CSV `t,f_id,M_value,compensator`.
void write_ledger_csv(const Trajectory& traj, const std::filesystem::path& path);

}  // namespace agefluct
