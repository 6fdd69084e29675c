#include "agefluct/report.hpp"

#include <cmath>
#include <fstream>

#include "agefluct/csv.hpp"
#include "agefluct/errors.hpp"
#include "agefluct/simd/kernels.hpp"

namespace agefluct {

std::string fmt(double v) { return format_double(v); }

SummaryRow& Report::check(std::uint64_t K, double t, std::string f_id, std::string stat, double value,
                          double target, double tolerance) {
  const bool pass = std::isfinite(value) && std::abs(value - target) <= tolerance;
  summary.push_back({K, t, std::move(f_id), std::move(stat), value, target, tolerance, pass});
  return summary.back();
}

SummaryRow& Report::check_range(std::uint64_t K, double t, std::string f_id, std::string stat, double value,
                                double lo, double hi) {
  const bool pass = std::isfinite(value) && value >= lo && value <= hi;
  summary.push_back({K, t, std::move(f_id), std::move(stat), value, 0.5 * (lo + hi), 0.5 * (hi - lo), pass});
  return summary.back();
}

PlotTable& Report::plot(const std::string& name, std::vector<std::string> columns) {
  PlotTable& p = plots[name];
  if (p.columns.empty()) p.columns = std::move(columns);
  return p;
}

bool Report::all_pass() const { return failures() == 0; }

std::size_t Report::failures() const {
  std::size_t n = 0;
  for (const auto& r : summary) n += r.pass ? 0 : 1;
  return n;
}

void Report::add_family_note() {
  if (summary.empty()) return;
  const double rate = static_cast<double>(failures()) / static_cast<double>(summary.size());
  if (rate > 0.05) {
    notes.push_back(std::to_string(failures()) + " of " + std::to_string(summary.size()) +
                    " checks failed, more than the 5% expected from 3-sigma bands alone");
  }
}

const SummaryRow* Report::find(const std::string& stat, std::uint64_t K, const std::string& f_id) const {
  for (const auto& r : summary) {
    if (r.stat == stat && (K == 0 || r.K == K) && (f_id.empty() || r.f_id == f_id)) return &r;
  }
  return nullptr;
}

void emit(const Report& report, const std::filesystem::path& outdir, const nlohmann::json& run_info) {
  std::error_code ec;
  std::filesystem::create_directories(outdir / "plotdata", ec);
  if (ec) throw ResourceError("cannot create output directory " + outdir.string() + ": " + ec.message());

  {
    auto out = open_output(outdir / "summary.csv");
    out << "K,t,f_id,stat,value,target,tolerance,pass\n";
    for (const auto& r : report.summary) {
      out << r.K << ',' << fmt(r.t) << ',' << r.f_id << ',' << r.stat << ',' << fmt(r.value) << ','
          << fmt(r.target) << ',' << fmt(r.tolerance) << ',' << (r.pass ? "true" : "false") << '\n';
    }
  }
  {
    auto out = open_output(outdir / "samples.csv");
    out << "K,replicate,t,f_id,value\n";
    for (const auto& s : report.samples) {
      out << s.K << ',' << s.replicate << ',' << fmt(s.t) << ',' << s.f_id << ',' << fmt(s.value) << '\n';
    }
  }
  nlohmann::json files = nlohmann::json::array({"summary.csv", "samples.csv"});
  for (const auto& [name, table] : report.plots) {
    auto out = open_output(outdir / "plotdata" / (name + ".csv"));
    for (std::size_t c = 0; c < table.columns.size(); ++c) out << (c ? "," : "") << table.columns[c];
    out << '\n';
    for (const auto& row : table.rows) {
      for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << row[c];
      out << '\n';
    }
    files.push_back("plotdata/" + name + ".csv");
  }
  for (const auto& p : report.extra_files) files.push_back(p.generic_string());

  nlohmann::json manifest = run_info;
  manifest["command"] = report.command;
  manifest["config"] = report.config;
  manifest["simd"] = simd::kernels().name;
  manifest["checks"] = report.summary.size();
  manifest["failures"] = report.failures();
  manifest["all_pass"] = report.all_pass();
  manifest["notes"] = report.notes;
  manifest["wall_seconds"] = report.wall_seconds;
  manifest["files"] = files;
  auto out = open_output(outdir / "manifest.json");
  out << manifest.dump(2) << '\n';
}

}  // namespace agefluct
