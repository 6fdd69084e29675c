#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "agefluct/report.hpp"

namespace agefluct {

struct Criterion {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
};

struct AcceptanceOptions {
  std::uint64_t seed = 271828;
  unsigned workers = 0;
  /// Scratch space for the byte-identity check.
  std::filesystem::path scratch = std::filesystem::temp_directory_path() / "agefluct_acceptance";
  /// Called as soon as a criterion has been decided.
  std::function<void(const Criterion&)> on_result;
};

struct AcceptanceResult {
  std::vector<Criterion> criteria;
  Report report;
  bool all_pass() const;
};

/// Runs the eight acceptance criteria with their pinned sizes and tolerances.
AcceptanceResult run_acceptance(const AcceptanceOptions& opt);

/// "PASS [3] name: detail"
std::string format_criterion(const Criterion& c);

}  // namespace agefluct
