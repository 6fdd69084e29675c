#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "agefluct/measures.hpp"
#include "agefluct/rates.hpp"

namespace agefluct {

/// An initial reference measure or a perturbation, in one of several forms.
struct MeasureSpec {
  enum class Kind { zero, atoms, uniform, grid, csv };
  Kind kind = Kind::zero;
  std::vector<double> ages;    ///< atoms
  std::vector<double> masses;  ///< atoms
  double l = 0.0, r = 1.0, height = 1.0;  ///< uniform density height on [l, r)
  double dx = 0.0;                        ///< grid
  std::vector<double> values;             ///< grid, densities at cell centres
  std::string path;                       ///< csv in `x,value` form

  static MeasureSpec zero() { return {}; }
  static MeasureSpec atoms(std::vector<double> ages, std::vector<double> masses);
  static MeasureSpec uniform(double l, double r, double height);

  /// The measure on a grid of `cells` cells of width dx. Grid and csv forms
  /// are resampled by cell-centre lookup; atoms stay atoms.
  MixedMeasure realise(double grid_dx, std::size_t cells, bool is_signed) const;
};

struct ExperimentConfig {
  std::string name = "experiment";
  RateModel model = classical_model(0.0, 1.0, OffspringLaw::deterministic(1), OffspringLaw::deterministic(2));
  MeasureSpec initial = MeasureSpec::atoms({0.0}, {1.0});
  MeasureSpec perturbation;
  double a_star = 1.0;
  std::vector<std::uint64_t> K{1000};
  std::size_t replicates = 100;
  double T = 1.0;
  double dt = 1e-3;
  double dt_out = 0.1;
  std::vector<std::string> panel{"one"};
  std::uint64_t seed = 1;
  std::string output = "out";
  bool emit_events = false;
  bool emit_fields = false;
  unsigned workers = 0;
  std::size_t population_cap = 10'000'000;
  std::size_t spde_paths = 10000;
  std::vector<double> convergence_dts{4e-3, 2e-3, 1e-3};
  std::vector<double> ode_dts{0.1, 0.05, 0.025};

  double T_star() const { return T + a_star; }
  /// Cells of the age grid on [0, T*] with dx = dt.
  std::size_t cells() const;
  std::vector<TestFunction> panel_functions() const;
  /// Throws ConfigError or ModelError.
  void validate() const;
};

ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const ExperimentConfig& cfg);
nlohmann::json to_json(const RateModel& model);

}  // namespace agefluct
