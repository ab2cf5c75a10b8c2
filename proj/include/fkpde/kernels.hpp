#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

// Batch arithmetic used on the particle hot path.
//
// Every kernel has a scalar reference implementation and, on x86-64, an AVX2
// variant picked at runtime. Both follow the same operation order (no FMA,
// fixed 4-lane reductions), so results agree bit for bit.
namespace fkpde::kernels {

/// Counter words shared by a batch; word 0 is the particle index.
struct PhiloxBatch {
    std::uint32_t key0 = 0, key1 = 0;
    std::uint32_t word1 = 0, word2 = 0, word3 = 0;
};

struct Table {
    const char* name;

    /// Standard normal pairs for particles first..first+n-1 (Philox4x32-10 + Box-Muller).
    void (*normal_pairs)(const PhiloxBatch& b, std::uint32_t first, std::size_t n, double* z0, double* z1);
    /// s = sin(2 pi u), c = cos(2 pi u).
    void (*sincos2pi)(const double* u, std::size_t n, double* s, double* c);
    /// out = exp(x), argument clamped to [-700, 700], NaN propagates.
    void (*exp)(const double* x, std::size_t n, double* out);
    /// out = log(x) for finite positive x.
    void (*log)(const double* x, std::size_t n, double* out);
    /// x - floor(x), folded into [0,1).
    void (*wrap_unit)(const double* x, std::size_t n, double* out);
    /// x += drift*dt + sigma*(xi*sqdt)
    void (*em_update)(double* x, const double* drift, const double* sigma, const double* xi, std::size_t n,
                      double dt, double sqdt);
    /// y += x*a
    void (*axpy)(double* y, const double* x, double a, std::size_t n);
    /// y += (x1*x2)*a
    void (*axpy_prod)(double* y, const double* x1, const double* x2, double a, std::size_t n);
    /// Linear interpolation of a periodic table of `nodes` values at wrapped points.
    void (*interp_periodic)(const double* table, std::size_t nodes, const double* xw, std::size_t n, double* out);
    /// Sum in four interleaved lanes, tail added last.
    double (*sum)(const double* x, std::size_t n);
    /// Sum of (x - mean)^2 with the same lane contract.
    double (*centered_sumsq)(const double* x, double mean, std::size_t n);
};

const Table& scalar_table();
/// nullptr when the CPU or the build lacks AVX2.
const Table* avx2_table();
/// Selected once: FKPDE_KERNELS=scalar|avx2 overrides, otherwise the widest supported.
const Table& active();

/// Raw Philox4x32-10 block, exposed for known-answer tests.
void philox4x32_10(const std::uint32_t ctr_in[4], const std::uint32_t key_in[2], std::uint32_t out[4]);

}  // namespace fkpde::kernels
