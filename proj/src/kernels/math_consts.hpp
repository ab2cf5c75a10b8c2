#pragma once

// Constants shared by the scalar and AVX2 kernels. Changing one side without
// the other breaks the bitwise equivalence tests.

#include <cstdint>

namespace fkpde::kernels::detail {

inline constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
inline constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
inline constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
inline constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline constexpr double kTwo52 = 4503599627370496.0;            // 2^52
inline constexpr double kRoundMagic = 6755399441055744.0;       // 1.5 * 2^52
inline constexpr std::uint64_t kTwo52Bits = 0x4330000000000000ull;
inline constexpr double kInvTwo52 = 1.0 / 4503599627370496.0;

inline constexpr double kTwoPi = 6.283185307179586476925286766559;
inline constexpr double kSqrt2 = 1.4142135623730950488;
inline constexpr double kLog2e = 1.4426950408889634074;
// Cody-Waite split of ln 2; the high part has trailing zero bits so k*hi is exact.
inline constexpr double kLn2Hi = 6.93147180369123816490e-01;
inline constexpr double kLn2Lo = 1.90821492927058770002e-10;
inline constexpr double kExpClamp = 700.0;

// log: 2 atanh(s) = 2 s sum s^(2k) / (2k+1), k = 0..10
inline constexpr double kLogC[11] = {1.0,       1.0 / 3,  1.0 / 5,  1.0 / 7,  1.0 / 9, 1.0 / 11,
                                     1.0 / 13,  1.0 / 15, 1.0 / 17, 1.0 / 19, 1.0 / 21};

// exp on |r| <= ln2/2: Taylor to r^13; kExpC[k] = 1/k!
inline constexpr double kExpC[14] = {1.0,
                                     1.0,
                                     1.0 / 2,
                                     1.0 / 6,
                                     1.0 / 24,
                                     1.0 / 120,
                                     1.0 / 720,
                                     1.0 / 5040,
                                     1.0 / 40320,
                                     1.0 / 362880,
                                     1.0 / 3628800,
                                     1.0 / 39916800,
                                     1.0 / 479001600,
                                     1.0 / 6227020800};

// sin(a) = a + a z P(z), P = sum_{k>=1} (-1)^k z^(k-1) / (2k+1)!, k = 1..9
inline constexpr double kSinC[9] = {-1.0 / 6,
                                    1.0 / 120,
                                    -1.0 / 5040,
                                    1.0 / 362880,
                                    -1.0 / 39916800,
                                    1.0 / 6227020800,
                                    -1.0 / 1307674368000,
                                    1.0 / 355687428096000,
                                    -1.0 / 121645100408832000};
// cos(a) = 1 + z Q(z), Q = sum_{k>=1} (-1)^k z^(k-1) / (2k)!, k = 1..9
inline constexpr double kCosC[9] = {-1.0 / 2,
                                    1.0 / 24,
                                    -1.0 / 720,
                                    1.0 / 40320,
                                    -1.0 / 3628800,
                                    1.0 / 479001600,
                                    -1.0 / 87178291200,
                                    1.0 / 20922789888000,
                                    -1.0 / 6402373705728000};

inline constexpr std::uint64_t kMantMask = 0x000FFFFFFFFFFFFFull;
inline constexpr std::uint64_t kOneBits = 0x3FF0000000000000ull;

}  // namespace fkpde::kernels::detail
