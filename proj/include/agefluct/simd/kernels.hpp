#pragma once

// Data-parallel inner loops. Every kernel has a scalar reference version and,
// on x86-64, an AVX2+FMA version chosen at runtime. Both follow the same
// lane-blocked operation order, so they agree bit for bit; the equivalence
// tests hold them to that.

#include <cstddef>
#include <cstdint>

namespace agefluct::simd {

/// Four independent xoshiro256+ generators laid out word-major:
/// s[w][l] is state word w of lane l.
struct GaussianLanes {
  std::uint64_t s[4][4];
};

/// One sweep over a block of grid cells:
///   z_j <- z_j * survival_j + drift_scale * drift_j - sigma_j * normals_j * inv_dx
/// drift and normals (with sigma) may be null. The sweep also accumulates
/// pairings of the updated cells with the optional weight vectors.
struct SweepArgs {
  double* z = nullptr;
  const double* survival = nullptr;
  const double* drift = nullptr;
  double drift_scale = 0.0;
  const double* sigma = nullptr;
  const double* normals = nullptr;
  double inv_dx = 1.0;
  const double* weight_a = nullptr;
  const double* weight_b = nullptr;
  std::size_t n = 0;
};

struct SweepSums {
  double noise = 0.0;  ///< sum_j sigma_j * normals_j
  double mass = 0.0;   ///< sum_j z_j (updated)
  double wa = 0.0;     ///< sum_j weight_a_j * z_j (updated)
  double wb = 0.0;
};

struct KernelTable {
  const char* name;
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*sum)(const double* a, std::size_t n);
  /// Writes n standard normals (n a multiple of 8) by Box-Muller.
  void (*fill_normals)(GaussianLanes& lanes, double* out, std::size_t n);
  SweepSums (*sweep)(const SweepArgs& args);
};

const KernelTable& scalar_kernels();
/// nullptr when the AVX2 variant was not built or the CPU lacks AVX2/FMA.
const KernelTable* avx2_kernels();

/// The dispatched table: AVX2 when available, scalar otherwise. Setting the
/// environment variable AGEFLUCT_SIMD=scalar forces the reference kernels.
const KernelTable& kernels();

}  // namespace agefluct::simd
