#pragma once

// Scalar element routines. Included by both kernel translation units: the
// AVX2 side uses them for loop tails, so they must stay header-inline.

#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>

#include "fkpde/kernels.hpp"
#include "math_consts.hpp"

namespace fkpde::kernels::detail {

inline void philox_block(const std::uint32_t ctr_in[4], const std::uint32_t key_in[2], std::uint32_t out[4]) {
    std::uint32_t c0 = ctr_in[0], c1 = ctr_in[1], c2 = ctr_in[2], c3 = ctr_in[3];
    std::uint32_t k0 = key_in[0], k1 = key_in[1];
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = static_cast<std::uint64_t>(kPhiloxM0) * c0;
        const std::uint64_t p1 = static_cast<std::uint64_t>(kPhiloxM1) * c2;
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
        c0 = hi1 ^ c1 ^ k0;
        c1 = lo1;
        c2 = hi0 ^ c3 ^ k1;
        c3 = lo0;
        k0 += kPhiloxW0;
        k1 += kPhiloxW1;
    }
    out[0] = c0;
    out[1] = c1;
    out[2] = c2;
    out[3] = c3;
}

// 52 random bits -> (m + 1/2) 2^-52, strictly inside (0,1).
inline double unit_open(std::uint64_t w) {
    const double m = std::bit_cast<double>(kTwo52Bits | (w >> 12)) - kTwo52;
    return (m + 0.5) * kInvTwo52;
}

inline double log_one(double x) {
    const auto bits = std::bit_cast<std::uint64_t>(x);
    double e = std::bit_cast<double>(kTwo52Bits | (bits >> 52)) - kTwo52;
    e = e - 1023.0;
    double m = std::bit_cast<double>((bits & kMantMask) | kOneBits);
    const bool big = m > kSqrt2;
    m = big ? m * 0.5 : m;
    e = e + (big ? 1.0 : 0.0);
    const double f = m - 1.0;
    const double s = f / (2.0 + f);
    const double z = s * s;
    double p = kLogC[10];
    for (int k = 9; k >= 0; --k) p = p * z + kLogC[k];
    const double r = s * p;
    const double lm = r + r;
    return e * kLn2Hi + (lm + e * kLn2Lo);
}

inline double exp_one(double x) {
    double y = (-kExpClamp > x) ? -kExpClamp : x;
    y = (kExpClamp < y) ? kExpClamp : y;
    const double t = y * kLog2e + kRoundMagic;
    const double kd = t - kRoundMagic;
    const std::int64_t ki = std::bit_cast<std::int64_t>(t) - std::bit_cast<std::int64_t>(kRoundMagic);
    const double r = (y - kd * kLn2Hi) - kd * kLn2Lo;
    double p = kExpC[13];
    for (int k = 12; k >= 0; --k) p = p * r + kExpC[k];
    const double scale = std::bit_cast<double>(static_cast<std::uint64_t>(ki + 1023) << 52);
    return p * scale;
}

inline void sincos2pi_one(double u, double& s_out, double& c_out) {
    const double t = u * 4.0 + kRoundMagic;
    const double qd = t - kRoundMagic;
    const std::uint64_t q = std::bit_cast<std::uint64_t>(t) & 3u;
    const double r = u - qd * 0.25;
    const double a = r * kTwoPi;
    const double z = a * a;
    double ps = kSinC[8];
    for (int k = 7; k >= 0; --k) ps = ps * z + kSinC[k];
    const double sn = a + (a * z) * ps;
    double pc = kCosC[8];
    for (int k = 7; k >= 0; --k) pc = pc * z + kCosC[k];
    const double cs = 1.0 + z * pc;
    const bool swap = (q & 1u) != 0;
    const double bs = swap ? cs : sn;
    const double bc = swap ? sn : cs;
    const bool neg_s = (q & 2u) != 0;
    const bool neg_c = ((q ^ (q >> 1)) & 1u) != 0;
    s_out = neg_s ? -bs : bs;
    c_out = neg_c ? -bc : bc;
}

inline double wrap_one(double x) {
    const double w = x - std::floor(x);
    return (w >= 1.0) ? 0.0 : w;
}

inline void normal_pairs_ref(const PhiloxBatch& b, std::uint32_t first, std::size_t n, double* z0, double* z1) {
    const std::uint32_t key[2] = {b.key0, b.key1};
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint32_t ctr[4] = {first + static_cast<std::uint32_t>(i), b.word1, b.word2, b.word3};
        std::uint32_t o[4];
        philox_block(ctr, key, o);
        const double ua = unit_open(static_cast<std::uint64_t>(o[0]) | (static_cast<std::uint64_t>(o[1]) << 32));
        const double ub = unit_open(static_cast<std::uint64_t>(o[2]) | (static_cast<std::uint64_t>(o[3]) << 32));
        const double rad = std::sqrt(log_one(ua) * -2.0);
        double s, c;
        sincos2pi_one(ub, s, c);
        z0[i] = rad * c;
        z1[i] = rad * s;
    }
}

inline void interp_ref(const double* table, std::size_t nodes, const double* xw, std::size_t begin, std::size_t end,
                       double* out) {
    const double nd = static_cast<double>(nodes);
    for (std::size_t i = begin; i < end; ++i) {
        const double p = xw[i] * nd;
        double fl = std::floor(p);
        fl = (fl >= nd) ? fl - nd : fl;
        fl = (fl >= 0.0 && fl < nd) ? fl : 0.0;
        const double f = p - fl;
        double fl1 = fl + 1.0;
        fl1 = (fl1 >= nd) ? 0.0 : fl1;
        const double v0 = table[static_cast<std::size_t>(fl)];
        const double v1 = table[static_cast<std::size_t>(fl1)];
        out[i] = v0 + f * (v1 - v0);
    }
}

inline double sum_ref(const double* x, std::size_t n) {
    double l0 = 0.0, l1 = 0.0, l2 = 0.0, l3 = 0.0;
    const std::size_t body = n - n % 4;
    for (std::size_t i = 0; i < body; i += 4) {
        l0 = l0 + x[i];
        l1 = l1 + x[i + 1];
        l2 = l2 + x[i + 2];
        l3 = l3 + x[i + 3];
    }
    double total = (l0 + l1) + (l2 + l3);
    for (std::size_t i = body; i < n; ++i) total = total + x[i];
    return total;
}

inline double centered_sumsq_ref(const double* x, double mean, std::size_t n) {
    double l0 = 0.0, l1 = 0.0, l2 = 0.0, l3 = 0.0;
    const std::size_t body = n - n % 4;
    for (std::size_t i = 0; i < body; i += 4) {
        const double d0 = x[i] - mean, d1 = x[i + 1] - mean, d2 = x[i + 2] - mean, d3 = x[i + 3] - mean;
        l0 = l0 + d0 * d0;
        l1 = l1 + d1 * d1;
        l2 = l2 + d2 * d2;
        l3 = l3 + d3 * d3;
    }
    double total = (l0 + l1) + (l2 + l3);
    for (std::size_t i = body; i < n; ++i) {
        const double d = x[i] - mean;
        total = total + d * d;
    }
    return total;
}

}  // namespace fkpde::kernels::detail
