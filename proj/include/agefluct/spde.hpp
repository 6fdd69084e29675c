#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "agefluct/mvf_limit.hpp"
#include "agefluct/rng.hpp"

namespace agefluct {

/// Gaussian increments of one step on a background frame: independent death
/// increments dD_j ~ N(0, sigma_j^2) per cell and a birth increment
/// dB = sum_j m_death dD_j + N(0, sigma_b^2).
struct NoiseChannel {
  double dx = 0.0;
  double dt = 0.0;
  double m_death = 0.0;
  std::vector<double> sigma;  ///< sqrt(h a dx dt) per cell
  double sigma_b = 0.0;       ///< sqrt(dt (b v_birth + h (v_death - m_death^2), A))
};

NoiseChannel noise_channel(const RateModel& model, const GridDensity& frame, double dt);

/// Covariance of f(0) dB - sum_j f(x_j) dD_j with the same for g, from the
/// channel's construction.
double construction_covariance(const NoiseChannel& ch, const TestFunction& f, const TestFunction& g);

/// dt (f(0) g(0) w + h f g - h m_death (f(0) g + g(0) f), A) by midpoint rule.
double formula_covariance(const RateModel& model, const GridDensity& frame, const TestFunction& f,
                          const TestFunction& g, double dt);

/// Draws `draws` samples of the f-noise for every panel function; result[i][d].
std::vector<std::vector<double>> sample_noise(const NoiseChannel& ch, const std::vector<TestFunction>& panel,
                                              std::size_t draws, std::uint64_t seed);

/// Reference Euler-Maruyama step of the fluctuation field from background
/// step n to n + 1: shift, survival, drift deposits and boundary influx from
/// the pre-step pairings, then noise. `normals` holds one value per cell
/// (cells 0..J-2 feed the death increments, entry J-1 the birth residual);
/// an empty span gives the noise-free step.
std::vector<double> step_z(std::span<const double> z, const RateModel& model, const LimitSolution& bg,
                           std::size_t n, std::span<const double> normals = {});

/// Noise-free evolution of E[Z_t]; one signed frame per background step.
std::vector<GridDensity> evolve_mean(const RateModel& model, const GridDensity& nu0, const LimitSolution& bg);

/// Constant-parameter mean density:
/// e^{-h t} z0(x - t) for x > t, n E1Z0 e^{(n-h) t} e^{-n x} for x <= t.
GridDensity classical_mean_exact(const GridDensity& z0, double b, double h, double m_death, double m_birth,
                                 double E1Z0, double t);

/// Var (f_lambda, Z_t) for constant parameters by Ito isometry: the solution
/// is a deterministic-kernel integral against dM^lambda and dM^0, and the
/// bracket densities come from closed-form limit pairings.
/// pair0(mu) must return (f_mu, A_0).
double ito_variance_classical(double n, double h, double w, double m_death,
                              const std::function<double(double)>& pair0, double lambda, double t);

struct EnsembleOptions {
  std::size_t paths = 10000;
  std::vector<TestFunction> panel;
  std::vector<double> output_times;  ///< multiples of dt; empty means the final time only
  std::uint64_t seed = 1;
  unsigned workers = 1;
  std::size_t batch = 16;
  bool keep_first_fields = false;
};

struct EnsembleResult {
  std::vector<double> times;
  std::vector<std::string> f_ids;
  /// values[k][i][p] = (f_i, Z_{t_k}) on path p
  std::vector<std::vector<std::vector<double>>> values;
  std::vector<GridDensity> first_path_fields;
};

/// Independent noise paths started at z0. Path p uses its own stream derived
/// from (seed, p), so results do not depend on batching or worker count.
EnsembleResult run_spde_ensemble(const RateModel& model, const LimitSolution& bg, const GridDensity& z0,
                                 const EnsembleOptions& opt);

/// CSV `t,f_id,mean,var,n_paths`.
void write_path_stats_csv(const EnsembleResult& res, const std::filesystem::path& path);

}  // namespace agefluct
