#pragma once

#include <concepts>
#include <filesystem>
#include <span>
#include <vector>

#include "agefluct/test_function.hpp"

namespace agefluct {

/// Anything that can be paired with a test function: (f, mu) = \int f dmu.
template <class M>
concept Measure = requires(const M& m, const TestFunction& f) {
  { m.pair(f) } -> std::convertible_to<double>;
};

/// Equal-weight point masses at the given ages, all inside [0, support_bound].
class AtomicMeasure {
 public:
  AtomicMeasure() = default;
  /// Throws DomainError if an age lies outside [0, support_bound].
  AtomicMeasure(std::vector<double> ages, double weight, double support_bound);

  const std::vector<double>& ages() const noexcept { return ages_; }
  double weight() const noexcept { return weight_; }
  double support_bound() const noexcept { return support_bound_; }
  std::size_t count() const noexcept { return ages_.size(); }
  double mass() const noexcept { return weight_ * static_cast<double>(ages_.size()); }

  double pair(const TestFunction& f) const;

 private:
  std::vector<double> ages_;
  double weight_ = 1.0;
  double support_bound_ = 0.0;
};

/// Cell-centred density on [0, T*]: values[j] is the density at (j + 1/2) dx.
class GridDensity {
 public:
  GridDensity() = default;
  /// Unsigned by default; negative values are rejected unless is_signed.
  GridDensity(double dx, std::vector<double> values, bool is_signed = false);
  /// A zero density with J cells of width dx.
  static GridDensity zeros(double dx, std::size_t cells, bool is_signed = false);

  double dx() const noexcept { return dx_; }
  std::size_t cells() const noexcept { return values_.size(); }
  double support_bound() const noexcept { return dx_ * static_cast<double>(values_.size()); }
  bool is_signed() const noexcept { return signed_; }
  double center(std::size_t j) const noexcept { return (static_cast<double>(j) + 0.5) * dx_; }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t j) const { return values_[j]; }

  /// Midpoint rule: dx * sum_j f(x_j) values_j.
  double pair(const TestFunction& f) const;
  double pair(std::span<const double> f_at_centers) const;
  double mass() const;

  /// Index one past the last non-zero cell.
  std::size_t support_end() const;

 private:
  double dx_ = 1.0;
  std::vector<double> values_;
  bool signed_ = false;
};

/// f evaluated at every cell centre of a grid with the given spacing.
std::vector<double> tabulate(const TestFunction& f, double dx, std::size_t cells);

/// A grid density plus weighted point masses. Used for reference measures
/// whose initial law is (partly) atomic, e.g. all ancestors at age 0.
class MixedMeasure {
 public:
  MixedMeasure() = default;
  explicit MixedMeasure(GridDensity density) : density_(std::move(density)) {}
  MixedMeasure(GridDensity density, std::vector<double> atom_ages, std::vector<double> atom_masses);

  const GridDensity& density() const noexcept { return density_; }
  const std::vector<double>& atom_ages() const noexcept { return atom_ages_; }
  const std::vector<double>& atom_masses() const noexcept { return atom_masses_; }

  double pair(const TestFunction& f) const;

  /// The density with every point mass moved into the cell containing it.
  GridDensity mollified() const;

 private:
  GridDensity density_;
  std::vector<double> atom_ages_;
  std::vector<double> atom_masses_;
};

/// scale * (mu - rho), kept lazy so the pairing identity is exact.
class SignedPair {
 public:
  SignedPair(AtomicMeasure mu, MixedMeasure rho, double scale);

  double pair(const TestFunction& f) const { return scale_ * (mu_.pair(f) - rho_.pair(f)); }
  double scale() const noexcept { return scale_; }
  const AtomicMeasure& atomic() const noexcept { return mu_; }
  const MixedMeasure& reference() const noexcept { return rho_; }

 private:
  AtomicMeasure mu_;
  MixedMeasure rho_;
  double scale_;
};

SignedPair signed_diff(AtomicMeasure mu, MixedMeasure rho, double scale);

template <Measure M>
double pair(const TestFunction& f, const M& mu) {
  return mu.pair(f);
}

// CSV round trips -----------------------------------------------------------

/// Header `x,value`, one row per cell centre.
void write_csv(const GridDensity& g, const std::filesystem::path& path);
GridDensity read_grid_csv(const std::filesystem::path& path, bool is_signed = false);

/// `age` column in `path`, plus `<path>.json` holding {"weight": w, "support_bound": T*}.
void write_csv(const AtomicMeasure& a, const std::filesystem::path& path);
AtomicMeasure read_atomic_csv(const std::filesystem::path& path);

}  // namespace agefluct
