#include <immintrin.h>

#include <cmath>

#include "agefluct/simd/kernels.hpp"
#include "constants.hpp"

namespace agefluct::simd {

namespace {

using namespace detail;

inline double reduce4(__m256d v) {
  // (l0 + l2) + (l1 + l3), matching the scalar reference.
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(s) + _mm_cvtsd_f64(_mm_unpackhi_pd(s, s));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd(), acc1 = _mm256_setzero_pd();
  __m256d acc2 = _mm256_setzero_pd(), acc3 = _mm256_setzero_pd();
  const std::size_t n16 = n - n % 16;
  for (std::size_t i = 0; i < n16; i += 16) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    acc2 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 8), _mm256_loadu_pd(b + i + 8), acc2);
    acc3 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 12), _mm256_loadu_pd(b + i + 12), acc3);
  }
  double r = reduce4(_mm256_add_pd(_mm256_add_pd(acc0, acc1), _mm256_add_pd(acc2, acc3)));
  for (std::size_t i = n16; i < n; ++i) r = std::fma(a[i], b[i], r);
  return r;
}

double sum_avx2(const double* a, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd(), acc1 = _mm256_setzero_pd();
  __m256d acc2 = _mm256_setzero_pd(), acc3 = _mm256_setzero_pd();
  const std::size_t n16 = n - n % 16;
  for (std::size_t i = 0; i < n16; i += 16) {
    acc0 = _mm256_add_pd(_mm256_loadu_pd(a + i), acc0);
    acc1 = _mm256_add_pd(_mm256_loadu_pd(a + i + 4), acc1);
    acc2 = _mm256_add_pd(_mm256_loadu_pd(a + i + 8), acc2);
    acc3 = _mm256_add_pd(_mm256_loadu_pd(a + i + 12), acc3);
  }
  double r = reduce4(_mm256_add_pd(_mm256_add_pd(acc0, acc1), _mm256_add_pd(acc2, acc3)));
  for (std::size_t i = n16; i < n; ++i) r += a[i];
  return r;
}

struct LaneState {
  __m256i s0, s1, s2, s3;

  explicit LaneState(const GaussianLanes& g)
      : s0(_mm256_loadu_si256(reinterpret_cast<const __m256i*>(g.s[0]))),
        s1(_mm256_loadu_si256(reinterpret_cast<const __m256i*>(g.s[1]))),
        s2(_mm256_loadu_si256(reinterpret_cast<const __m256i*>(g.s[2]))),
        s3(_mm256_loadu_si256(reinterpret_cast<const __m256i*>(g.s[3]))) {}

  void store(GaussianLanes& g) const {
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(g.s[0]), s0);
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(g.s[1]), s1);
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(g.s[2]), s2);
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(g.s[3]), s3);
  }

  __m256i next() {
    const __m256i result = _mm256_add_epi64(s0, s3);
    const __m256i t = _mm256_slli_epi64(s1, 17);
    s2 = _mm256_xor_si256(s2, s0);
    s3 = _mm256_xor_si256(s3, s1);
    s1 = _mm256_xor_si256(s1, s2);
    s0 = _mm256_xor_si256(s0, s3);
    s2 = _mm256_xor_si256(s2, t);
    s3 = _mm256_or_si256(_mm256_slli_epi64(s3, 45), _mm256_srli_epi64(s3, 19));
    return result;
  }
};

inline __m256d to_uniform(__m256i x) {
  const __m256i bits =
      _mm256_or_si256(_mm256_srli_epi64(x, 12), _mm256_set1_epi64x(static_cast<long long>(kOneBits)));
  return _mm256_sub_pd(_mm256_castsi256_pd(bits), _mm256_set1_pd(kUniformOffset));
}

inline __m256d log_unit(__m256d u) {
  const __m256i bits = _mm256_castpd_si256(u);
  const __m256i ebits = _mm256_or_si256(_mm256_srli_epi64(bits, 52),
                                        _mm256_set1_epi64x(static_cast<long long>(kTwo52Bits)));
  __m256d e = _mm256_sub_pd(_mm256_castsi256_pd(ebits), _mm256_set1_pd(kTwo52));
  e = _mm256_sub_pd(e, _mm256_set1_pd(1023.0));
  const __m256i mbits =
      _mm256_or_si256(_mm256_and_si256(bits, _mm256_set1_epi64x(static_cast<long long>(kMantissaMask))),
                      _mm256_set1_epi64x(static_cast<long long>(kOneBits)));
  __m256d m = _mm256_castsi256_pd(mbits);
  const __m256d big = _mm256_cmp_pd(m, _mm256_set1_pd(kSqrt2), _CMP_GT_OQ);
  m = _mm256_blendv_pd(m, _mm256_mul_pd(m, _mm256_set1_pd(0.5)), big);
  e = _mm256_blendv_pd(e, _mm256_add_pd(e, _mm256_set1_pd(1.0)), big);
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d s = _mm256_div_pd(_mm256_sub_pd(m, one), _mm256_add_pd(m, one));
  const __m256d s2 = _mm256_mul_pd(s, s);
  __m256d p = _mm256_set1_pd(kLogCoef[0]);
  for (int k = 1; k < 9; ++k) p = _mm256_fmadd_pd(p, s2, _mm256_set1_pd(kLogCoef[k]));
  const __m256d lm = _mm256_mul_pd(_mm256_add_pd(s, s), p);
  return _mm256_fmadd_pd(e, _mm256_set1_pd(kLn2Hi), _mm256_fmadd_pd(e, _mm256_set1_pd(kLn2Lo), lm));
}

inline void sincos_turn(__m256d u, __m256d& sn, __m256d& cs) {
  const __m256d v = _mm256_sub_pd(u, _mm256_set1_pd(0.5));
  const __m256d q =
      _mm256_round_pd(_mm256_mul_pd(v, _mm256_set1_pd(4.0)), _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  const __m256d r = _mm256_mul_pd(_mm256_sub_pd(v, _mm256_mul_pd(q, _mm256_set1_pd(0.25))),
                                  _mm256_set1_pd(kTwoPi));
  const __m256d r2 = _mm256_mul_pd(r, r);
  __m256d ps = _mm256_set1_pd(kSinCoef[0]);
  for (int k = 1; k < 8; ++k) ps = _mm256_fmadd_pd(ps, r2, _mm256_set1_pd(kSinCoef[k]));
  __m256d pc = _mm256_set1_pd(kCosCoef[0]);
  for (int k = 1; k < 9; ++k) pc = _mm256_fmadd_pd(pc, r2, _mm256_set1_pd(kCosCoef[k]));
  const __m256d s = _mm256_mul_pd(r, ps);
  const __m256d c = pc;
  const __m256d k = _mm256_sub_pd(
      q, _mm256_mul_pd(_mm256_set1_pd(4.0), _mm256_floor_pd(_mm256_mul_pd(q, _mm256_set1_pd(0.25)))));
  const __m256d k1 = _mm256_cmp_pd(k, _mm256_set1_pd(1.0), _CMP_EQ_OQ);
  const __m256d k2 = _mm256_cmp_pd(k, _mm256_set1_pd(2.0), _CMP_EQ_OQ);
  const __m256d k3 = _mm256_cmp_pd(k, _mm256_set1_pd(3.0), _CMP_EQ_OQ);
  const __m256d odd = _mm256_or_pd(k1, k3);
  const __m256d sign = _mm256_set1_pd(-0.0);
  sn = _mm256_blendv_pd(s, c, odd);
  cs = _mm256_blendv_pd(c, s, odd);
  sn = _mm256_xor_pd(sn, _mm256_and_pd(_mm256_or_pd(k2, k3), sign));
  cs = _mm256_xor_pd(cs, _mm256_and_pd(_mm256_or_pd(k1, k2), sign));
}

void fill_normals_avx2(GaussianLanes& g, double* out, std::size_t n) {
  LaneState st(g);
  const __m256d minus_two = _mm256_set1_pd(-2.0);
  for (std::size_t base = 0; base < n; base += 8) {
    const __m256d u1 = to_uniform(st.next());
    const __m256d u2 = to_uniform(st.next());
    const __m256d rho = _mm256_sqrt_pd(_mm256_mul_pd(minus_two, log_unit(u1)));
    __m256d sn, cs;
    sincos_turn(u2, sn, cs);
    _mm256_storeu_pd(out + base, _mm256_mul_pd(rho, cs));
    _mm256_storeu_pd(out + base + 4, _mm256_mul_pd(rho, sn));
  }
  st.store(g);
}

SweepSums sweep_avx2(const SweepArgs& a) {
  __m256d noise = _mm256_setzero_pd(), mass = _mm256_setzero_pd();
  __m256d wa = _mm256_setzero_pd(), wb = _mm256_setzero_pd();
  const std::size_t n4 = a.n - a.n % 4;
  const __m256d drift_scale = _mm256_set1_pd(a.drift_scale);
  const __m256d inv_dx = _mm256_set1_pd(a.inv_dx);
  const __m256d sign = _mm256_set1_pd(-0.0);
  for (std::size_t j = 0; j < n4; j += 4) {
    __m256d t = _mm256_mul_pd(_mm256_loadu_pd(a.z + j), _mm256_loadu_pd(a.survival + j));
    if (a.drift) t = _mm256_fmadd_pd(drift_scale, _mm256_loadu_pd(a.drift + j), t);
    if (a.normals) {
      const __m256d d = _mm256_mul_pd(_mm256_loadu_pd(a.sigma + j), _mm256_loadu_pd(a.normals + j));
      t = _mm256_fmadd_pd(_mm256_xor_pd(d, sign), inv_dx, t);
      noise = _mm256_add_pd(noise, d);
    }
    _mm256_storeu_pd(a.z + j, t);
    mass = _mm256_add_pd(mass, t);
    if (a.weight_a) wa = _mm256_fmadd_pd(_mm256_loadu_pd(a.weight_a + j), t, wa);
    if (a.weight_b) wb = _mm256_fmadd_pd(_mm256_loadu_pd(a.weight_b + j), t, wb);
  }
  SweepSums s{reduce4(noise), reduce4(mass), reduce4(wa), reduce4(wb)};
  for (std::size_t j = n4; j < a.n; ++j) {
    double t = a.z[j] * a.survival[j];
    if (a.drift) t = std::fma(a.drift_scale, a.drift[j], t);
    if (a.normals) {
      const double d = a.sigma[j] * a.normals[j];
      t = std::fma(-d, a.inv_dx, t);
      s.noise += d;
    }
    a.z[j] = t;
    s.mass += t;
    if (a.weight_a) s.wa = std::fma(a.weight_a[j], t, s.wa);
    if (a.weight_b) s.wb = std::fma(a.weight_b[j], t, s.wb);
  }
  return s;
}

}  // namespace

const KernelTable* avx2_kernels_impl() {
  static const KernelTable table{"avx2", dot_avx2, sum_avx2, fill_normals_avx2, sweep_avx2};
  return &table;
}

}  // namespace agefluct::simd
