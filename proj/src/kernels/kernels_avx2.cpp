// AVX2 variants. Compiled with -mavx2 -mno-fma; each routine mirrors the scalar
// reference operation for operation and falls back to it for loop tails.

#include <immintrin.h>

#include "fkpde/kernels.hpp"
#include "kernels_scalar_inl.hpp"

namespace fkpde::kernels::avx2 {
namespace {

using namespace detail;

inline __m256d bits_pd(std::uint64_t b) { return _mm256_castsi256_pd(_mm256_set1_epi64x(static_cast<long long>(b))); }

inline __m256d log4(__m256d x) {
    const __m256i bits = _mm256_castpd_si256(x);
    const __m256i eb = _mm256_srli_epi64(bits, 52);
    const __m256d two52 = _mm256_set1_pd(kTwo52);
    __m256d e = _mm256_sub_pd(_mm256_castsi256_pd(_mm256_or_si256(_mm256_set1_epi64x(kTwo52Bits), eb)), two52);
    e = _mm256_sub_pd(e, _mm256_set1_pd(1023.0));
    __m256d m = _mm256_castsi256_pd(_mm256_or_si256(_mm256_and_si256(bits, _mm256_set1_epi64x(kMantMask)),
                                                    _mm256_set1_epi64x(kOneBits)));
    const __m256d big = _mm256_cmp_pd(m, _mm256_set1_pd(kSqrt2), _CMP_GT_OQ);
    m = _mm256_blendv_pd(m, _mm256_mul_pd(m, _mm256_set1_pd(0.5)), big);
    e = _mm256_add_pd(e, _mm256_and_pd(big, _mm256_set1_pd(1.0)));
    const __m256d f = _mm256_sub_pd(m, _mm256_set1_pd(1.0));
    const __m256d s = _mm256_div_pd(f, _mm256_add_pd(_mm256_set1_pd(2.0), f));
    const __m256d z = _mm256_mul_pd(s, s);
    __m256d p = _mm256_set1_pd(kLogC[10]);
    for (int k = 9; k >= 0; --k) p = _mm256_add_pd(_mm256_mul_pd(p, z), _mm256_set1_pd(kLogC[k]));
    const __m256d r = _mm256_mul_pd(s, p);
    const __m256d lm = _mm256_add_pd(r, r);
    return _mm256_add_pd(_mm256_mul_pd(e, _mm256_set1_pd(kLn2Hi)),
                         _mm256_add_pd(lm, _mm256_mul_pd(e, _mm256_set1_pd(kLn2Lo))));
}

inline __m256d exp4(__m256d x) {
    __m256d y = _mm256_max_pd(_mm256_set1_pd(-kExpClamp), x);
    y = _mm256_min_pd(_mm256_set1_pd(kExpClamp), y);
    const __m256d magic = _mm256_set1_pd(kRoundMagic);
    const __m256d t = _mm256_add_pd(_mm256_mul_pd(y, _mm256_set1_pd(kLog2e)), magic);
    const __m256d kd = _mm256_sub_pd(t, magic);
    const __m256i ki = _mm256_sub_epi64(_mm256_castpd_si256(t), _mm256_castpd_si256(magic));
    const __m256d r = _mm256_sub_pd(_mm256_sub_pd(y, _mm256_mul_pd(kd, _mm256_set1_pd(kLn2Hi))),
                                    _mm256_mul_pd(kd, _mm256_set1_pd(kLn2Lo)));
    __m256d p = _mm256_set1_pd(kExpC[13]);
    for (int k = 12; k >= 0; --k) p = _mm256_add_pd(_mm256_mul_pd(p, r), _mm256_set1_pd(kExpC[k]));
    const __m256i sb = _mm256_slli_epi64(_mm256_add_epi64(ki, _mm256_set1_epi64x(1023)), 52);
    return _mm256_mul_pd(p, _mm256_castsi256_pd(sb));
}

inline void sincos4(__m256d u, __m256d& s_out, __m256d& c_out) {
    const __m256d magic = _mm256_set1_pd(kRoundMagic);
    const __m256d t = _mm256_add_pd(_mm256_mul_pd(u, _mm256_set1_pd(4.0)), magic);
    const __m256d qd = _mm256_sub_pd(t, magic);
    const __m256i q = _mm256_and_si256(_mm256_castpd_si256(t), _mm256_set1_epi64x(3));
    const __m256d r = _mm256_sub_pd(u, _mm256_mul_pd(qd, _mm256_set1_pd(0.25)));
    const __m256d a = _mm256_mul_pd(r, _mm256_set1_pd(kTwoPi));
    const __m256d z = _mm256_mul_pd(a, a);
    __m256d ps = _mm256_set1_pd(kSinC[8]);
    for (int k = 7; k >= 0; --k) ps = _mm256_add_pd(_mm256_mul_pd(ps, z), _mm256_set1_pd(kSinC[k]));
    const __m256d sn = _mm256_add_pd(a, _mm256_mul_pd(_mm256_mul_pd(a, z), ps));
    __m256d pc = _mm256_set1_pd(kCosC[8]);
    for (int k = 7; k >= 0; --k) pc = _mm256_add_pd(_mm256_mul_pd(pc, z), _mm256_set1_pd(kCosC[k]));
    const __m256d cs = _mm256_add_pd(_mm256_set1_pd(1.0), _mm256_mul_pd(z, pc));

    const __m256i one = _mm256_set1_epi64x(1);
    const __m256i two = _mm256_set1_epi64x(2);
    const __m256d swap = _mm256_castsi256_pd(_mm256_cmpeq_epi64(_mm256_and_si256(q, one), one));
    const __m256d neg_s = _mm256_castsi256_pd(_mm256_cmpeq_epi64(_mm256_and_si256(q, two), two));
    const __m256i qx = _mm256_and_si256(_mm256_xor_si256(q, _mm256_srli_epi64(q, 1)), one);
    const __m256d neg_c = _mm256_castsi256_pd(_mm256_cmpeq_epi64(qx, one));
    const __m256d bs = _mm256_blendv_pd(sn, cs, swap);
    const __m256d bc = _mm256_blendv_pd(cs, sn, swap);
    const __m256d sign = bits_pd(0x8000000000000000ull);
    s_out = _mm256_xor_pd(bs, _mm256_and_pd(neg_s, sign));
    c_out = _mm256_xor_pd(bc, _mm256_and_pd(neg_c, sign));
}

inline __m256d unit_open4(__m256i lo32, __m256i hi32) {
    const __m256i w = _mm256_or_si256(lo32, _mm256_slli_epi64(hi32, 32));
    const __m256i m = _mm256_or_si256(_mm256_srli_epi64(w, 12), _mm256_set1_epi64x(kTwo52Bits));
    const __m256d md = _mm256_sub_pd(_mm256_castsi256_pd(m), _mm256_set1_pd(kTwo52));
    return _mm256_mul_pd(_mm256_add_pd(md, _mm256_set1_pd(0.5)), _mm256_set1_pd(kInvTwo52));
}

void normal_pairs(const PhiloxBatch& b, std::uint32_t first, std::size_t n, double* z0, double* z1) {
    const __m256i mask32 = _mm256_set1_epi64x(0xFFFFFFFFll);
    const __m256i m0 = _mm256_set1_epi64x(kPhiloxM0);
    const __m256i m1 = _mm256_set1_epi64x(kPhiloxM1);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const std::uint32_t base = first + static_cast<std::uint32_t>(i);
        __m256i c0 = _mm256_set_epi64x(static_cast<std::uint32_t>(base + 3), static_cast<std::uint32_t>(base + 2),
                                       static_cast<std::uint32_t>(base + 1), base);
        __m256i c1 = _mm256_set1_epi64x(b.word1);
        __m256i c2 = _mm256_set1_epi64x(b.word2);
        __m256i c3 = _mm256_set1_epi64x(b.word3);
        std::uint32_t k0 = b.key0, k1 = b.key1;
        for (int round = 0; round < 10; ++round) {
            const __m256i p0 = _mm256_mul_epu32(c0, m0);
            const __m256i p1 = _mm256_mul_epu32(c2, m1);
            const __m256i hi0 = _mm256_srli_epi64(p0, 32), lo0 = _mm256_and_si256(p0, mask32);
            const __m256i hi1 = _mm256_srli_epi64(p1, 32), lo1 = _mm256_and_si256(p1, mask32);
            c0 = _mm256_xor_si256(_mm256_xor_si256(hi1, c1), _mm256_set1_epi64x(k0));
            c1 = lo1;
            c2 = _mm256_xor_si256(_mm256_xor_si256(hi0, c3), _mm256_set1_epi64x(k1));
            c3 = lo0;
            k0 += kPhiloxW0;
            k1 += kPhiloxW1;
        }
        const __m256d ua = unit_open4(c0, c1);
        const __m256d ub = unit_open4(c2, c3);
        const __m256d rad = _mm256_sqrt_pd(_mm256_mul_pd(log4(ua), _mm256_set1_pd(-2.0)));
        __m256d s, c;
        sincos4(ub, s, c);
        _mm256_storeu_pd(z0 + i, _mm256_mul_pd(rad, c));
        _mm256_storeu_pd(z1 + i, _mm256_mul_pd(rad, s));
    }
    if (i < n) normal_pairs_ref(b, first + static_cast<std::uint32_t>(i), n - i, z0 + i, z1 + i);
}

void sincos2pi(const double* u, std::size_t n, double* s, double* c) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d sv, cv;
        sincos4(_mm256_loadu_pd(u + i), sv, cv);
        _mm256_storeu_pd(s + i, sv);
        _mm256_storeu_pd(c + i, cv);
    }
    for (; i < n; ++i) sincos2pi_one(u[i], s[i], c[i]);
}

void exp_k(const double* x, std::size_t n, double* out) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) _mm256_storeu_pd(out + i, exp4(_mm256_loadu_pd(x + i)));
    for (; i < n; ++i) out[i] = exp_one(x[i]);
}

void log_k(const double* x, std::size_t n, double* out) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) _mm256_storeu_pd(out + i, log4(_mm256_loadu_pd(x + i)));
    for (; i < n; ++i) out[i] = log_one(x[i]);
}

void wrap_unit(const double* x, std::size_t n, double* out) {
    std::size_t i = 0;
    const __m256d one = _mm256_set1_pd(1.0);
    for (; i + 4 <= n; i += 4) {
        const __m256d v = _mm256_loadu_pd(x + i);
        const __m256d w = _mm256_sub_pd(v, _mm256_floor_pd(v));
        const __m256d ge = _mm256_cmp_pd(w, one, _CMP_GE_OQ);
        _mm256_storeu_pd(out + i, _mm256_andnot_pd(ge, w));
    }
    for (; i < n; ++i) out[i] = wrap_one(x[i]);
}

void em_update(double* x, const double* drift, const double* sigma, const double* xi, std::size_t n, double dt,
               double sqdt) {
    std::size_t i = 0;
    const __m256d dtv = _mm256_set1_pd(dt), sqv = _mm256_set1_pd(sqdt);
    for (; i + 4 <= n; i += 4) {
        const __m256d inc = _mm256_add_pd(_mm256_mul_pd(_mm256_loadu_pd(drift + i), dtv),
                                          _mm256_mul_pd(_mm256_loadu_pd(sigma + i),
                                                        _mm256_mul_pd(_mm256_loadu_pd(xi + i), sqv)));
        _mm256_storeu_pd(x + i, _mm256_add_pd(_mm256_loadu_pd(x + i), inc));
    }
    for (; i < n; ++i) x[i] = x[i] + (drift[i] * dt + sigma[i] * (xi[i] * sqdt));
}

void axpy(double* y, const double* x, double a, std::size_t n) {
    std::size_t i = 0;
    const __m256d av = _mm256_set1_pd(a);
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), _mm256_mul_pd(_mm256_loadu_pd(x + i), av)));
    for (; i < n; ++i) y[i] = y[i] + x[i] * a;
}

void axpy_prod(double* y, const double* x1, const double* x2, double a, std::size_t n) {
    std::size_t i = 0;
    const __m256d av = _mm256_set1_pd(a);
    for (; i + 4 <= n; i += 4) {
        const __m256d pr = _mm256_mul_pd(_mm256_loadu_pd(x1 + i), _mm256_loadu_pd(x2 + i));
        _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), _mm256_mul_pd(pr, av)));
    }
    for (; i < n; ++i) y[i] = y[i] + (x1[i] * x2[i]) * a;
}

void interp_periodic(const double* table, std::size_t nodes, const double* xw, std::size_t n, double* out) {
    const double ndv = static_cast<double>(nodes);
    const __m256d nd = _mm256_set1_pd(ndv);
    const __m256d zero = _mm256_setzero_pd(), one = _mm256_set1_pd(1.0);
    const __m256d two52 = _mm256_set1_pd(kTwo52);
    const __m256i two52b = _mm256_set1_epi64x(kTwo52Bits);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d p = _mm256_mul_pd(_mm256_loadu_pd(xw + i), nd);
        __m256d fl = _mm256_floor_pd(p);
        fl = _mm256_blendv_pd(fl, _mm256_sub_pd(fl, nd), _mm256_cmp_pd(fl, nd, _CMP_GE_OQ));
        const __m256d ok = _mm256_and_pd(_mm256_cmp_pd(fl, zero, _CMP_GE_OQ), _mm256_cmp_pd(fl, nd, _CMP_LT_OQ));
        fl = _mm256_and_pd(ok, fl);
        const __m256d f = _mm256_sub_pd(p, fl);
        __m256d fl1 = _mm256_add_pd(fl, one);
        fl1 = _mm256_andnot_pd(_mm256_cmp_pd(fl1, nd, _CMP_GE_OQ), fl1);
        const __m256i i0 = _mm256_sub_epi64(_mm256_castpd_si256(_mm256_add_pd(fl, two52)), two52b);
        const __m256i i1 = _mm256_sub_epi64(_mm256_castpd_si256(_mm256_add_pd(fl1, two52)), two52b);
        const __m256d v0 = _mm256_i64gather_pd(table, i0, 8);
        const __m256d v1 = _mm256_i64gather_pd(table, i1, 8);
        _mm256_storeu_pd(out + i, _mm256_add_pd(v0, _mm256_mul_pd(f, _mm256_sub_pd(v1, v0))));
    }
    interp_ref(table, nodes, xw, i, n, out);
}

double sum(const double* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    const std::size_t body = n - n % 4;
    for (std::size_t i = 0; i < body; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
    alignas(32) double l[4];
    _mm256_store_pd(l, acc);
    double total = (l[0] + l[1]) + (l[2] + l[3]);
    for (std::size_t i = body; i < n; ++i) total = total + x[i];
    return total;
}

double centered_sumsq(const double* x, double mean, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    const __m256d mv = _mm256_set1_pd(mean);
    const std::size_t body = n - n % 4;
    for (std::size_t i = 0; i < body; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i), mv);
        acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
    }
    alignas(32) double l[4];
    _mm256_store_pd(l, acc);
    double total = (l[0] + l[1]) + (l[2] + l[3]);
    for (std::size_t i = body; i < n; ++i) {
        const double d = x[i] - mean;
        total = total + d * d;
    }
    return total;
}

}  // namespace

const Table kTable{"avx2",    normal_pairs, sincos2pi, exp_k, log_k,          wrap_unit,
                   em_update, axpy,         axpy_prod, interp_periodic, sum, centered_sumsq};

const Table& table() { return kTable; }

}  // namespace fkpde::kernels::avx2
