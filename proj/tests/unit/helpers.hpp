#pragma once

#include <cmath>
#include <cstring>
#include <numbers>
#include <vector>

#include "fkpde/problem.hpp"

namespace fkpde::test {

/// Heat problem on the d-torus: a = diff*I, u0 = amp*sin(2 pi x0), everything else zero.
inline ProblemSpec heat(int d = 1, double T = 0.1, double diff = 0.5, double amp = 1.0) {
    ProblemSpec s;
    s.name = "test-heat";
    s.dim_d = d;
    s.horizon_T = T;
    s.diffusion_constant = true;
    s.diffusion_a = [d, diff](double, const Points& x, std::span<double> out) {
        std::fill(out.begin(), out.end(), 0.0);
        for (int i = 0; i < d; ++i)
            for (std::size_t p = 0; p < x.count; ++p) out[(i * d + i) * x.count + p] = diff;
    };
    s.initial_u0 = [amp](const Points& x, std::span<double> out) {
        for (std::size_t p = 0; p < x.count; ++p) out[p] = amp * std::sin(2 * std::numbers::pi * x(0, p));
    };
    return s;
}

inline ScalarCoef constant_scalar(double c) {
    return [c](double, const Points&, std::span<double> out) { std::fill(out.begin(), out.end(), c); };
}

inline InitialCoef constant_u0(double c) {
    return [c](const Points&, std::span<double> out) { std::fill(out.begin(), out.end(), c); };
}

inline SourceCoef constant_g(double c) {
    return [c](double, const Points&, std::span<const double>, std::span<const double>, std::span<const double>,
               std::span<double> out) { std::fill(out.begin(), out.end(), c); };
}

inline bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() && (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace fkpde::test
