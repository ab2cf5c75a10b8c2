#include "fkpde/kernels.hpp"

#include <bit>
#include <cmath>

#include "kernels_scalar_inl.hpp"

namespace fkpde::kernels {

void philox4x32_10(const std::uint32_t ctr_in[4], const std::uint32_t key_in[2], std::uint32_t out[4]) {
    detail::philox_block(ctr_in, key_in, out);
}

namespace {

void normal_pairs(const PhiloxBatch& b, std::uint32_t first, std::size_t n, double* z0, double* z1) {
    detail::normal_pairs_ref(b, first, n, z0, z1);
}

void sincos2pi(const double* u, std::size_t n, double* s, double* c) {
    for (std::size_t i = 0; i < n; ++i) detail::sincos2pi_one(u[i], s[i], c[i]);
}

void exp_k(const double* x, std::size_t n, double* out) {
    for (std::size_t i = 0; i < n; ++i) out[i] = detail::exp_one(x[i]);
}

void log_k(const double* x, std::size_t n, double* out) {
    for (std::size_t i = 0; i < n; ++i) out[i] = detail::log_one(x[i]);
}

void wrap_unit(const double* x, std::size_t n, double* out) {
    for (std::size_t i = 0; i < n; ++i) out[i] = detail::wrap_one(x[i]);
}

void em_update(double* x, const double* drift, const double* sigma, const double* xi, std::size_t n, double dt,
               double sqdt) {
    for (std::size_t i = 0; i < n; ++i) x[i] = x[i] + (drift[i] * dt + sigma[i] * (xi[i] * sqdt));
}

void axpy(double* y, const double* x, double a, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = y[i] + x[i] * a;
}

void axpy_prod(double* y, const double* x1, const double* x2, double a, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = y[i] + (x1[i] * x2[i]) * a;
}

void interp_periodic(const double* table, std::size_t nodes, const double* xw, std::size_t n, double* out) {
    detail::interp_ref(table, nodes, xw, 0, n, out);
}

double sum(const double* x, std::size_t n) { return detail::sum_ref(x, n); }

double centered_sumsq(const double* x, double mean, std::size_t n) { return detail::centered_sumsq_ref(x, mean, n); }

const Table kScalar{"scalar",  normal_pairs, sincos2pi, exp_k, log_k,          wrap_unit,
                    em_update, axpy,         axpy_prod, interp_periodic, sum, centered_sumsq};

}  // namespace

const Table& scalar_table() { return kScalar; }

}  // namespace fkpde::kernels
