#include "agefluct/rng.hpp"

#include <cmath>
#include <numbers>

namespace agefluct {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
    mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kPhiloxW0;
    key[1] += kPhiloxW1;
  }
  return ctr;
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

StreamRng::StreamRng(std::uint64_t master_seed, StreamDomain domain, std::uint32_t id_hi, std::uint32_t id_lo)
    : id_hi_(id_hi), id_lo_(id_lo) {
  std::uint64_t s = master_seed ^ (static_cast<std::uint64_t>(domain) << 56);
  const std::uint64_t k = splitmix64(s);
  key_ = {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
}

void StreamRng::refill() {
  buffer_ = philox4x32({static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32), id_lo_, id_hi_},
                       key_);
  ++block_;
  used_ = 0;
}

StreamRng::result_type StreamRng::operator()() {
  if (used_ == 4) refill();
  return buffer_[used_++];
}

double StreamRng::uniform() {
  const std::uint64_t hi = (*this)() >> 5;  // 27 bits
  const std::uint64_t lo = (*this)() >> 6;  // 26 bits
  return (static_cast<double>((hi << 26) | lo) + 0.5) * 0x1p-53;
}

double StreamRng::exponential(double rate) { return -std::log(uniform()) / rate; }

std::uint64_t StreamRng::below(std::uint64_t n) {
  auto k = static_cast<std::uint64_t>(uniform() * static_cast<double>(n));
  return k < n ? k : n - 1;
}

double StreamRng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double r = std::sqrt(-2.0 * std::log(uniform()));
  const double theta = 2.0 * std::numbers::pi * uniform();
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

simd::GaussianLanes StreamRng::gaussian_lanes() {
  simd::GaussianLanes g{};
  for (auto& word : g.s) {
    for (auto& lane : word) {
      const std::uint64_t hi = (*this)();
      lane = (hi << 32) | (*this)();
    }
  }
  for (int l = 0; l < 4; ++l) {
    if ((g.s[0][l] | g.s[1][l] | g.s[2][l] | g.s[3][l]) == 0) g.s[0][l] = 0x9E3779B97F4A7C15ULL;
  }
  return g;
}

StreamRng replicate_stream(std::uint64_t master_seed, StreamDomain domain, std::uint64_t K,
                           std::uint64_t replicate) {
  // K and the replicate index share the upper counter words; both comfortably
  // fit in 32 bits for every supported experiment.
  return StreamRng(master_seed, domain, static_cast<std::uint32_t>(K), static_cast<std::uint32_t>(replicate));
}

void NormalStream::fill(double* out, std::size_t n) {
  const std::size_t padded = (n + 7) / 8 * 8;
  if (padded == n) {
    simd::kernels().fill_normals(lanes_, out, n);
    return;
  }
  scratch_.resize(padded);
  simd::kernels().fill_normals(lanes_, scratch_.data(), padded);
  std::copy(scratch_.begin(), scratch_.begin() + static_cast<std::ptrdiff_t>(n), out);
}

double NormalStream::next() {
  double v[8];
  simd::kernels().fill_normals(lanes_, v, 8);
  return v[0];
}

}  // namespace agefluct
