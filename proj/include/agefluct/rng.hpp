#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <vector>

#include "agefluct/simd/kernels.hpp"

namespace agefluct {

/// Philox4x32-10 block function (Salmon et al., SC'11).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

std::uint64_t splitmix64(std::uint64_t& state);

/// Purpose tags keep the streams of different consumers disjoint.
enum class StreamDomain : std::uint32_t {
  simulation = 1,
  spde_noise = 2,
  test = 3,
};

/// Counter-based random stream. The stream identity (master seed, domain,
/// two 32-bit ids) fixes the Philox key and the upper counter words, so any
/// replicate's stream can be built independently of every other one.
class StreamRng {
 public:
  using result_type = std::uint32_t;

  StreamRng(std::uint64_t master_seed, StreamDomain domain, std::uint32_t id_hi, std::uint32_t id_lo);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()();

  /// Uniform on (0, 1) with 53 random bits.
  double uniform();
  /// Exponential with the given rate.
  double exponential(double rate);
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  double normal();

  /// Seeds four xoshiro256+ lanes for bulk Gaussian generation.
  simd::GaussianLanes gaussian_lanes();

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::uint32_t id_hi_;
  std::uint32_t id_lo_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Per-replicate stream for (master seed, K, replicate index).
StreamRng replicate_stream(std::uint64_t master_seed, StreamDomain domain, std::uint64_t K,
                           std::uint64_t replicate);

/// Buffered standard normals drawn with the dispatched SIMD kernel.
class NormalStream {
 public:
  explicit NormalStream(simd::GaussianLanes lanes) : lanes_(lanes) {}
  /// Fills out[0..n) with standard normals. Internally rounds n up to a
  /// multiple of 8 and discards the rest, so the stream position depends
  /// only on the sequence of requested sizes.
  void fill(double* out, std::size_t n);
  double next();

 private:
  simd::GaussianLanes lanes_;
  std::vector<double> scratch_;
};

}  // namespace agefluct
