#include <cstdlib>
#include <iostream>
#include <string>

#include "agefluct/acceptance.hpp"
#include "agefluct/simd/kernels.hpp"

int main(int argc, char** argv) {
  agefluct::AcceptanceOptions opt;
  if (argc > 1) opt.workers = static_cast<unsigned>(std::stoul(argv[1]));
  opt.on_result = [](const agefluct::Criterion& c) { std::cout << agefluct::format_criterion(c) << std::endl; };
  const auto res = agefluct::run_acceptance(opt);
  for (const auto& n : res.report.notes) std::cout << "note: " << n << "\n";
  std::cout << "kernels: " << agefluct::simd::kernels().name << "\n";
  return res.all_pass() ? EXIT_SUCCESS : EXIT_FAILURE;
}
