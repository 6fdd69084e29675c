#include <chrono>
#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "agefluct/acceptance.hpp"
#include "agefluct/config.hpp"
#include "agefluct/errors.hpp"
#include "agefluct/harness.hpp"
#include "agefluct/simd/kernels.hpp"

using namespace agefluct;

namespace {

struct Flags {
  std::string config;
  std::string out = "out";
  std::uint64_t seed = 0;
  bool seed_set = false;
  unsigned workers = 0;
  bool emit_events = false;
  bool emit_fields = false;
};

void print_failures(const Report& r) {
  for (const auto& row : r.summary) {
    if (row.pass) continue;
    std::cout << "  failed: K=" << row.K << " t=" << row.t << " " << row.f_id << " " << row.stat
              << " value=" << row.value << " target=" << row.target << " tol=" << row.tolerance << "\n";
  }
  for (const auto& n : r.notes) std::cout << "  note: " << n << "\n";
}

nlohmann::json run_info(const Flags& f, std::uint64_t seed, unsigned workers) {
  return {{"program", "agefluct"},
          {"version", "0.1.0"},
          {"seed", seed},
          {"workers", workers},
          {"config_path", f.config}};
}

int run_experiment(const std::string& command, const Flags& f) {
  ExperimentConfig cfg = f.config.empty() ? ExperimentConfig{} : load_config(f.config);
  if (f.seed_set) cfg.seed = f.seed;
  if (f.workers > 0) cfg.workers = f.workers;
  cfg.output = f.out;
  cfg.emit_events = cfg.emit_events || f.emit_events;
  cfg.emit_fields = cfg.emit_fields || f.emit_fields;
  cfg.validate();

  const auto t0 = std::chrono::steady_clock::now();
  Report r;
  if (command == "simulate") {
    r = run_simulate(cfg);
  } else if (command == "limit") {
    r = run_limit(cfg);
  } else if (command == "fluctuate") {
    r = run_fluctuate(cfg);
  } else if (command == "qv") {
    r = run_qv_check(cfg);
  } else if (command == "lln") {
    r = run_lln(cfg);
  } else if (command == "clt") {
    r = run_clt(cfg);
  } else {
    r = run_convergence(cfg);
  }
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  emit(r, f.out, run_info(f, cfg.seed, cfg.workers));
  std::cout << command << ": " << r.summary.size() - r.failures() << "/" << r.summary.size()
            << " checks passed, output in " << f.out << "\n";
  print_failures(r);
  return r.all_pass() ? 0 : 1;
}

int run_validate(const Flags& f) {
  AcceptanceOptions opt;
  if (f.seed_set) opt.seed = f.seed;
  opt.workers = f.workers;
  opt.on_result = [](const Criterion& c) { std::cout << format_criterion(c) << std::endl; };
  const auto t0 = std::chrono::steady_clock::now();
  AcceptanceResult res = run_acceptance(opt);
  res.report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  emit(res.report, f.out, run_info(f, opt.seed, opt.workers));
  std::cout << (res.all_pass() ? "all criteria passed" : "some criteria failed") << " (" << res.report.wall_seconds
            << " s, kernels: " << simd::kernels().name << ")\n";
  return res.all_pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Age-structured branching populations: simulation, limits and fluctuations"};
  app.require_subcommand(1);
  app.fallthrough();
  Flags f;
  app.add_option("--config", f.config, "Experiment config (JSON)")->check(CLI::ExistingFile);
  app.add_option("--out", f.out, "Output directory");
  auto* seed = app.add_option("--seed", f.seed, "Master seed");
  app.add_option("--workers", f.workers, "Worker threads (0 = all cores)");
  app.add_flag("--emit-events", f.emit_events, "Write event logs and martingale ledgers");
  app.add_flag("--emit-fields", f.emit_fields, "Write measure and field snapshots");

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"simulate", "Simulate the particle system and check the pathwise identity"},
      {"limit", "Solve the deterministic limit"},
      {"fluctuate", "Run fluctuation-field paths"},
      {"qv", "Check martingale quadratic variations"},
      {"lln", "Law of large numbers study over K"},
      {"clt", "Central limit study over K"},
      {"converge", "Solver refinement studies"},
      {"validate", "Run the acceptance suite"},
  };
  for (const auto& [name, help] : commands) app.add_subcommand(name, help);

  CLI11_PARSE(app, argc, argv);
  f.seed_set = seed->count() > 0;
  const std::string command = app.get_subcommands().front()->get_name();
  try {
    if (command == "validate") return run_validate(f);
    return run_experiment(command, f);
  } catch (const ReplicateError& e) {
    std::cerr << "error in replicate " << e.replicate() << ": " << e.what() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
  }
  return 2;
}
