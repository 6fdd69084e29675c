#include "agefluct/measures.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include "json.hpp"
#include <sstream>

#include "agefluct/csv.hpp"
#include "agefluct/errors.hpp"
#include "agefluct/simd/kernels.hpp"

namespace agefluct {

AtomicMeasure::AtomicMeasure(std::vector<double> ages, double weight, double support_bound)
    : ages_(std::move(ages)), weight_(weight), support_bound_(support_bound) {
  if (!(weight_ > 0.0)) throw DomainError("atomic measure weight must be positive");
  for (double a : ages_) {
    if (!(a >= 0.0 && a <= support_bound_)) {
      std::ostringstream os;
      os << "age " << a << " outside [0, " << support_bound_ << "]";
      throw DomainError(os.str());
    }
  }
}

double AtomicMeasure::pair(const TestFunction& f) const {
  if (f.kind() == TestFunction::Kind::constant) return mass() * f.value(0.0);
  double s = 0.0;
  for (double a : ages_) s += f(a);
  return weight_ * s;
}

GridDensity::GridDensity(double dx, std::vector<double> values, bool is_signed)
    : dx_(dx), values_(std::move(values)), signed_(is_signed) {
  if (!(dx_ > 0.0)) throw DomainError("grid spacing must be positive");
  for (double v : values_) {
    if (!std::isfinite(v)) throw DomainError("grid density has a non-finite value");
    if (!signed_ && v < 0.0) throw DomainError("negative value in an unsigned grid density");
  }
}

GridDensity GridDensity::zeros(double dx, std::size_t cells, bool is_signed) {
  return GridDensity(dx, std::vector<double>(cells, 0.0), is_signed);
}

double GridDensity::pair(const TestFunction& f) const {
  if (f.kind() == TestFunction::Kind::constant) return f.value(0.0) * mass();
  return pair(tabulate(f, dx_, values_.size()));
}

double GridDensity::pair(std::span<const double> f_at_centers) const {
  if (f_at_centers.size() != values_.size()) throw DomainError("tabulated test function has wrong size");
  return dx_ * simd::kernels().dot(f_at_centers.data(), values_.data(), values_.size());
}

double GridDensity::mass() const {
  return dx_ * simd::kernels().sum(values_.data(), values_.size());
}

std::size_t GridDensity::support_end() const {
  std::size_t end = values_.size();
  while (end > 0 && values_[end - 1] == 0.0) --end;
  return end;
}

std::vector<double> tabulate(const TestFunction& f, double dx, std::size_t cells) {
  std::vector<double> out(cells);
  for (std::size_t j = 0; j < cells; ++j) out[j] = f((static_cast<double>(j) + 0.5) * dx);
  return out;
}

MixedMeasure::MixedMeasure(GridDensity density, std::vector<double> atom_ages,
                           std::vector<double> atom_masses)
    : density_(std::move(density)), atom_ages_(std::move(atom_ages)), atom_masses_(std::move(atom_masses)) {
  if (atom_ages_.size() != atom_masses_.size()) throw DomainError("atom ages/masses size mismatch");
  for (double a : atom_ages_) {
    if (!(a >= 0.0 && a <= density_.support_bound())) throw DomainError("atom outside grid support");
  }
}

double MixedMeasure::pair(const TestFunction& f) const {
  double s = density_.cells() > 0 ? density_.pair(f) : 0.0;
  for (std::size_t i = 0; i < atom_ages_.size(); ++i) s += atom_masses_[i] * f(atom_ages_[i]);
  return s;
}

GridDensity MixedMeasure::mollified() const {
  std::vector<double> v(density_.values().begin(), density_.values().end());
  const double dx = density_.dx();
  for (std::size_t i = 0; i < atom_ages_.size(); ++i) {
    auto j = static_cast<std::size_t>(std::floor(atom_ages_[i] / dx));
    if (j >= v.size()) j = v.size() - 1;
    v[j] += atom_masses_[i] / dx;
  }
  return GridDensity(dx, std::move(v), density_.is_signed());
}

SignedPair::SignedPair(AtomicMeasure mu, MixedMeasure rho, double scale)
    : mu_(std::move(mu)), rho_(std::move(rho)), scale_(scale) {
  if (!(scale_ > 0.0)) throw DomainError("signed_diff scale must be positive");
}

SignedPair signed_diff(AtomicMeasure mu, MixedMeasure rho, double scale) {
  return SignedPair(std::move(mu), std::move(rho), scale);
}

// CSV ------------------------------------------------------------------------

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out = open_output(path);
  out << std::setprecision(17);
  return out;
}

std::vector<std::vector<double>> read_rows(const std::filesystem::path& path, std::size_t columns,
                                           std::string_view header) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != header) {
    throw ConfigError(path.string() + ": expected header '" + std::string(header) + "'");
  }
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (row.size() != columns) throw ConfigError(path.string() + ": bad row '" + line + "'");
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

void write_csv(const GridDensity& g, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "x,value\n";
  for (std::size_t j = 0; j < g.cells(); ++j) out << g.center(j) << ',' << g[j] << '\n';
}

GridDensity read_grid_csv(const std::filesystem::path& path, bool is_signed) {
  auto rows = read_rows(path, 2, "x,value");
  if (rows.empty()) throw ConfigError(path.string() + ": empty grid");
  const double dx = rows.size() > 1 ? rows[1][0] - rows[0][0] : 2.0 * rows[0][0];
  std::vector<double> values;
  values.reserve(rows.size());
  for (const auto& r : rows) values.push_back(r[1]);
  return GridDensity(dx, std::move(values), is_signed);
}

void write_csv(const AtomicMeasure& a, const std::filesystem::path& path) {
  {
    auto out = open_out(path);
    out << "age\n";
    for (double x : a.ages()) out << x << '\n';
  }
  nlohmann::json side{{"weight", a.weight()}, {"support_bound", a.support_bound()}};
  auto out = open_out(path.string() + ".json");
  out << side.dump(2) << '\n';
}

AtomicMeasure read_atomic_csv(const std::filesystem::path& path) {
  auto rows = read_rows(path, 1, "age");
  std::ifstream side(path.string() + ".json");
  if (!side) throw ConfigError("missing sidecar " + path.string() + ".json");
  auto j = nlohmann::json::parse(side);
  std::vector<double> ages;
  ages.reserve(rows.size());
  for (const auto& r : rows) ages.push_back(r[0]);
  return AtomicMeasure(std::move(ages), j.at("weight").get<double>(), j.at("support_bound").get<double>());
}

}  // namespace agefluct
