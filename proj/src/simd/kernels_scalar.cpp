#include <bit>
#include <cmath>

#include "agefluct/simd/kernels.hpp"
#include "constants.hpp"

namespace agefluct::simd {

namespace {

using namespace detail;

// Horizontal reduction order shared with the AVX2 kernels.
double reduce4(const double l[4]) { return (l[0] + l[2]) + (l[1] + l[3]); }

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc[16] = {};
  const std::size_t n16 = n - n % 16;
  for (std::size_t i = 0; i < n16; i += 16) {
    for (int k = 0; k < 16; ++k) acc[k] = std::fma(a[i + k], b[i + k], acc[k]);
  }
  double l[4];
  for (int k = 0; k < 4; ++k) l[k] = (acc[k] + acc[4 + k]) + (acc[8 + k] + acc[12 + k]);
  double r = reduce4(l);
  for (std::size_t i = n16; i < n; ++i) r = std::fma(a[i], b[i], r);
  return r;
}

double sum_scalar(const double* a, std::size_t n) {
  double acc[16] = {};
  const std::size_t n16 = n - n % 16;
  for (std::size_t i = 0; i < n16; i += 16) {
    for (int k = 0; k < 16; ++k) acc[k] += a[i + k];
  }
  double l[4];
  for (int k = 0; k < 4; ++k) l[k] = (acc[k] + acc[4 + k]) + (acc[8 + k] + acc[12 + k]);
  double r = reduce4(l);
  for (std::size_t i = n16; i < n; ++i) r += a[i];
  return r;
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

std::uint64_t next_lane(GaussianLanes& g, int l) {
  const std::uint64_t result = g.s[0][l] + g.s[3][l];
  const std::uint64_t t = g.s[1][l] << 17;
  g.s[2][l] ^= g.s[0][l];
  g.s[3][l] ^= g.s[1][l];
  g.s[1][l] ^= g.s[2][l];
  g.s[0][l] ^= g.s[3][l];
  g.s[2][l] ^= t;
  g.s[3][l] = rotl(g.s[3][l], 45);
  return result;
}

double to_uniform(std::uint64_t x) {
  return std::bit_cast<double>((x >> 12) | kOneBits) - kUniformOffset;
}

double log_unit(double u) {
  const auto bits = std::bit_cast<std::uint64_t>(u);
  double e = std::bit_cast<double>((bits >> 52) | kTwo52Bits) - kTwo52;
  e = e - 1023.0;
  double m = std::bit_cast<double>((bits & kMantissaMask) | kOneBits);
  if (m > kSqrt2) {
    m = m * 0.5;
    e = e + 1.0;
  }
  const double s = (m - 1.0) / (m + 1.0);
  const double s2 = s * s;
  double p = kLogCoef[0];
  for (int k = 1; k < 9; ++k) p = std::fma(p, s2, kLogCoef[k]);
  const double lm = (s + s) * p;
  return std::fma(e, kLn2Hi, std::fma(e, kLn2Lo, lm));
}

void sincos_turn(double u, double& sn, double& cs) {
  const double v = u - 0.5;
  const double q = std::nearbyint(v * 4.0);
  const double r = (v - q * 0.25) * kTwoPi;
  const double r2 = r * r;
  double ps = kSinCoef[0];
  for (int k = 1; k < 8; ++k) ps = std::fma(ps, r2, kSinCoef[k]);
  double pc = kCosCoef[0];
  for (int k = 1; k < 9; ++k) pc = std::fma(pc, r2, kCosCoef[k]);
  const double s = r * ps;
  const double c = pc;
  const double k = q - 4.0 * std::floor(q * 0.25);
  const bool odd = (k == 1.0) || (k == 3.0);
  sn = odd ? c : s;
  cs = odd ? s : c;
  if (k == 2.0 || k == 3.0) sn = -sn;
  if (k == 1.0 || k == 2.0) cs = -cs;
}

void fill_normals_scalar(GaussianLanes& g, double* out, std::size_t n) {
  for (std::size_t base = 0; base < n; base += 8) {
    double u1[4], u2[4];
    for (int l = 0; l < 4; ++l) u1[l] = to_uniform(next_lane(g, l));
    for (int l = 0; l < 4; ++l) u2[l] = to_uniform(next_lane(g, l));
    for (int l = 0; l < 4; ++l) {
      const double rho = std::sqrt(-2.0 * log_unit(u1[l]));
      double sn, cs;
      sincos_turn(u2[l], sn, cs);
      out[base + l] = rho * cs;
      out[base + 4 + l] = rho * sn;
    }
  }
}

SweepSums sweep_scalar(const SweepArgs& a) {
  double noise[4] = {}, mass[4] = {}, wa[4] = {}, wb[4] = {};
  const std::size_t n4 = a.n - a.n % 4;
  auto cell = [&](std::size_t j, double& acc_noise, double& acc_mass, double& acc_wa, double& acc_wb) {
    double t = a.z[j] * a.survival[j];
    if (a.drift) t = std::fma(a.drift_scale, a.drift[j], t);
    if (a.normals) {
      const double d = a.sigma[j] * a.normals[j];
      t = std::fma(-d, a.inv_dx, t);
      acc_noise += d;
    }
    a.z[j] = t;
    acc_mass += t;
    if (a.weight_a) acc_wa = std::fma(a.weight_a[j], t, acc_wa);
    if (a.weight_b) acc_wb = std::fma(a.weight_b[j], t, acc_wb);
  };
  for (std::size_t j = 0; j < n4; j += 4) {
    for (int l = 0; l < 4; ++l) cell(j + l, noise[l], mass[l], wa[l], wb[l]);
  }
  SweepSums s{reduce4(noise), reduce4(mass), reduce4(wa), reduce4(wb)};
  for (std::size_t j = n4; j < a.n; ++j) cell(j, s.noise, s.mass, s.wa, s.wb);
  return s;
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{"scalar", dot_scalar, sum_scalar, fill_normals_scalar, sweep_scalar};
  return table;
}

}  // namespace agefluct::simd
