#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

namespace agefluct {

struct SummaryRow {
  std::uint64_t K = 0;  ///< 0 for rows that are not tied to one K
  double t = 0.0;
  std::string f_id;
  std::string stat;
  double value = 0.0;
  double target = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct SampleRow {
  std::uint64_t K = 0;
  std::size_t replicate = 0;
  double t = 0.0;
  std::string f_id;
  double value = 0.0;
};

/// Long-format table destined for plotdata/<name>.csv.
struct PlotTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row) { rows.push_back(std::move(row)); }
};

struct Report {
  std::string command;
  nlohmann::json config;
  std::vector<SummaryRow> summary;
  std::vector<SampleRow> samples;
  std::map<std::string, PlotTable> plots;
  std::vector<std::string> notes;
  std::vector<std::filesystem::path> extra_files;
  double wall_seconds = 0.0;

  /// Adds a row whose verdict is |value - target| <= tolerance.
  SummaryRow& check(std::uint64_t K, double t, std::string f_id, std::string stat, double value, double target,
                    double tolerance);
  /// Adds a row whose verdict is value in [lo, hi]; target is the midpoint,
  /// tolerance the half-width.
  SummaryRow& check_range(std::uint64_t K, double t, std::string f_id, std::string stat, double value, double lo,
                          double hi);
  PlotTable& plot(const std::string& name, std::vector<std::string> columns);

  bool all_pass() const;
  std::size_t failures() const;
  /// Appends the multiple-testing note when more than 5% of the checks fail.
  void add_family_note();
  /// First row with the given stat (and K / f_id when given), or nullptr.
  const SummaryRow* find(const std::string& stat, std::uint64_t K = 0, const std::string& f_id = "") const;
};

std::string fmt(double v);

/// Writes manifest.json, summary.csv, samples.csv and plotdata/*.csv.
/// Throws ResourceError when the directory cannot be written.
void emit(const Report& report, const std::filesystem::path& outdir, const nlohmann::json& run_info);

}  // namespace agefluct
