#pragma once

// Polynomial coefficients shared by the scalar and AVX2 kernels. Both
// variants must use exactly these values in exactly the same order.

#include <cstdint>

namespace agefluct::simd::detail {

inline constexpr std::uint64_t kOneBits = 0x3FF0000000000000ULL;
inline constexpr std::uint64_t kMantissaMask = 0x000FFFFFFFFFFFFFULL;
inline constexpr std::uint64_t kTwo52Bits = 0x4330000000000000ULL;
inline constexpr double kTwo52 = 4503599627370496.0;
inline constexpr double kUniformOffset = 1.0 - 0x1p-53;
inline constexpr double kSqrt2 = 1.4142135623730951;
inline constexpr double kLn2Hi = 6.93147180369123816490e-01;
inline constexpr double kLn2Lo = 1.90821492927058770002e-10;
inline constexpr double kTwoPi = 6.283185307179586;

// log(m) = 2 s (1 + s^2/3 + s^4/5 + ... + s^16/17),  s = (m-1)/(m+1).
inline constexpr double kLogCoef[9] = {1.0 / 17, 1.0 / 15, 1.0 / 13, 1.0 / 11, 1.0 / 9,
                                       1.0 / 7,  1.0 / 5,  1.0 / 3,  1.0};

// Taylor coefficients of sin(r)/r and cos(r) in r^2, highest degree first.
inline constexpr double kSinCoef[8] = {
    -1.0 / 1307674368000.0, 1.0 / 6227020800.0, -1.0 / 39916800.0, 1.0 / 362880.0,
    -1.0 / 5040.0,          1.0 / 120.0,        -1.0 / 6.0,        1.0};
inline constexpr double kCosCoef[9] = {
    1.0 / 20922789888000.0, -1.0 / 87178291200.0, 1.0 / 479001600.0, -1.0 / 3628800.0,
    1.0 / 40320.0,          -1.0 / 720.0,         1.0 / 24.0,        -1.0 / 2.0,
    1.0};

}  // namespace agefluct::simd::detail
