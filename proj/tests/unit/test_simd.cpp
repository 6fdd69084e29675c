#include <cmath>
#include <string>
#include <cstdlib>
#include <cstring>
#include <vector>

#include "doctest.h"

#include "agefluct/rng.hpp"
#include "agefluct/simd/kernels.hpp"

using namespace agefluct;

namespace {

std::vector<double> randoms(std::size_t n, std::uint32_t id, double lo = -1.0, double hi = 1.0) {
  StreamRng r(5, StreamDomain::test, 10, id);
  std::vector<double> v(n);
  for (auto& x : v) x = lo + (hi - lo) * r.uniform();
  return v;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

}  // namespace

TEST_SUITE("simd") {
  TEST_CASE("dispatch honours the override") {
    const char* env = std::getenv("AGEFLUCT_SIMD");
    if (env && std::string(env) == "scalar") {
      CHECK(std::string(simd::kernels().name) == "scalar");
    } else if (simd::avx2_kernels()) {
      CHECK(&simd::kernels() == simd::avx2_kernels());
    }
  }

  TEST_CASE("scalar kernels match naive loops") {
    const auto& k = simd::scalar_kernels();
    for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 8u, 33u, 1001u}) {
      const auto a = randoms(n, 1), b = randoms(n, 2);
      double d = 0, s = 0;
      for (std::size_t i = 0; i < n; ++i) {
        d += a[i] * b[i];
        s += a[i];
      }
      CHECK(k.dot(a.data(), b.data(), n) == doctest::Approx(d).epsilon(1e-12));
      CHECK(k.sum(a.data(), n) == doctest::Approx(s).epsilon(1e-12));
    }
  }

  TEST_CASE("sweep matches its definition") {
    const auto& k = simd::scalar_kernels();
    const std::size_t n = 37;
    auto z = randoms(n, 3);
    const auto z0 = z;
    const auto surv = randoms(n, 4, 0.9, 1.0), drift = randoms(n, 5), sigma = randoms(n, 6, 0.0, 0.1),
               normals = randoms(n, 7), wa = randoms(n, 8), wb = randoms(n, 9);
    simd::SweepArgs args;
    args.z = z.data();
    args.survival = surv.data();
    args.drift = drift.data();
    args.drift_scale = -0.7;
    args.sigma = sigma.data();
    args.normals = normals.data();
    args.inv_dx = 100.0;
    args.weight_a = wa.data();
    args.weight_b = wb.data();
    args.n = n;
    const simd::SweepSums s = k.sweep(args);
    double noise = 0, mass = 0, sa = 0, sb = 0;
    for (std::size_t j = 0; j < n; ++j) {
      const double v = z0[j] * surv[j] - 0.7 * drift[j] - sigma[j] * normals[j] * 100.0;
      CHECK(z[j] == doctest::Approx(v).epsilon(1e-13));
      noise += sigma[j] * normals[j];
      mass += v;
      sa += wa[j] * v;
      sb += wb[j] * v;
    }
    CHECK(s.noise == doctest::Approx(noise).epsilon(1e-12));
    CHECK(s.mass == doctest::Approx(mass).epsilon(1e-12));
    CHECK(s.wa == doctest::Approx(sa).epsilon(1e-12));
    CHECK(s.wb == doctest::Approx(sb).epsilon(1e-12));
  }

  TEST_CASE("avx2 kernels agree with the scalar reference bit for bit") {
    const simd::KernelTable* v = simd::avx2_kernels();
    if (!v) {
      MESSAGE("AVX2 variant unavailable on this machine");
      return;
    }
    const auto& s = simd::scalar_kernels();
    for (std::size_t n : {0u, 1u, 2u, 5u, 8u, 15u, 16u, 17u, 63u, 1000u, 2001u}) {
      const auto a = randoms(n, 11), b = randoms(n, 12);
      CHECK(same_bits(s.dot(a.data(), b.data(), n), v->dot(a.data(), b.data(), n)));
      CHECK(same_bits(s.sum(a.data(), n), v->sum(a.data(), n)));

      for (int variant = 0; variant < 3; ++variant) {
        auto z1 = randoms(n, 13), z2 = z1;
        const auto surv = randoms(n, 14, 0.9, 1.0), drift = randoms(n, 15), sigma = randoms(n, 16, 0.0, 0.2),
                   normals = randoms(n, 17), wa = randoms(n, 18), wb = randoms(n, 19);
        simd::SweepArgs args;
        args.survival = surv.data();
        args.drift = variant == 1 ? nullptr : drift.data();
        args.drift_scale = 0.3;
        args.sigma = variant == 2 ? nullptr : sigma.data();
        args.normals = variant == 2 ? nullptr : normals.data();
        args.inv_dx = 500.0;
        args.weight_a = wa.data();
        args.weight_b = variant == 0 ? wb.data() : nullptr;
        args.n = n;
        args.z = z1.data();
        const auto r1 = s.sweep(args);
        args.z = z2.data();
        const auto r2 = v->sweep(args);
        for (std::size_t j = 0; j < n; ++j) REQUIRE(same_bits(z1[j], z2[j]));
        CHECK(same_bits(r1.noise, r2.noise));
        CHECK(same_bits(r1.mass, r2.mass));
        CHECK(same_bits(r1.wa, r2.wa));
        CHECK(same_bits(r1.wb, r2.wb));
      }
    }
    for (std::size_t n : {8u, 16u, 1024u}) {
      auto lanes = StreamRng(77, StreamDomain::test, 0, 0).gaussian_lanes();
      auto lanes2 = lanes;
      std::vector<double> x(n), y(n);
      s.fill_normals(lanes, x.data(), n);
      v->fill_normals(lanes2, y.data(), n);
      for (std::size_t i = 0; i < n; ++i) REQUIRE(same_bits(x[i], y[i]));
      CHECK(std::memcmp(&lanes, &lanes2, sizeof lanes) == 0);
    }
  }

  TEST_CASE("bulk normals are standard normal") {
    auto lanes = StreamRng(78, StreamDomain::test, 0, 0).gaussian_lanes();
    const std::size_t n = 1 << 18;
    std::vector<double> x(n);
    simd::kernels().fill_normals(lanes, x.data(), n);
    double m = 0, m2 = 0, m4 = 0;
    for (double v : x) {
      m += v;
      m2 += v * v;
      m4 += v * v * v * v;
    }
    m /= n;
    m2 /= n;
    m4 /= n;
    CHECK(std::abs(m) < 0.01);
    CHECK(m2 == doctest::Approx(1.0).epsilon(0.01));
    CHECK(m4 == doctest::Approx(3.0).epsilon(0.03));
  }
}
